//! Constructive probes of two metric properties underpinning the
//! almost-additivity of the relative word length:
//!
//! * bounded distortion: for any `x, y` there is a short connector
//!   `sigma` with `l(x sigma y) >= l(x) + l(y) - c`;
//! * selection: fixed connectors `sigma_1 .. sigma_{k-1}` and an event
//!   `E_k` of product measure at least `|B(e,C)|^-(k-1)` on which the
//!   k-fold spliced product loses at most `(k-1) c` of additivity.
//!
//! Scans are exhaustive and deterministic; measures are exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "rayon")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::par::if_rayon;
use crate::util::{DetHashMap, DetHashSet};

/// Additivity loss of the spliced product:
/// `l(x) + l(y) - l(x sigma y)`. Negative when the connector overshoots.
fn defect(spec: &GroupSpec, x: &GroupElement, sigma: &GroupElement, y: &GroupElement) -> i64 {
    let mut prod = x.clone();
    spec.append(&mut prod, sigma);
    spec.append(&mut prod, y);
    spec.word_length(x) as i64 + spec.word_length(y) as i64 - spec.word_length(&prod) as i64
}

fn sigma_in_pool<'a>(
    spec: &GroupSpec,
    x: &GroupElement,
    y: &GroupElement,
    pool: &'a [GroupElement],
    c: u64,
) -> Option<(usize, &'a GroupElement, i64)> {
    pool.iter()
        .enumerate()
        .map(|(i, s)| (i, s, defect(spec, x, s, y)))
        .find(|&(_, _, d)| d <= c as i64)
}

/// First `sigma` in the deterministic enumeration of `ball(C)` (identity
/// first, then by length, then the structural order) satisfying
/// `l(x sigma y) >= l(x) + l(y) - c`; `None` if no enumerated connector
/// works.
pub fn find_sigma(
    spec: &GroupSpec,
    x: &GroupElement,
    y: &GroupElement,
    big_c: u64,
    c: u64,
    truncation: Option<u64>,
) -> Result<Option<GroupElement>> {
    let pool = spec.ball(big_c, truncation)?;
    Ok(sigma_in_pool(spec, x, y, &pool, c).map(|(_, s, _)| s.clone()))
}

/// Best connector found for one ordered pair of ball elements.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistortionWitness {
    /// Indices into the report's `elements`.
    pub x: u32,
    pub y: u32,
    /// Index into the report's `sigma_pool`.
    pub sigma: u32,
    /// The pair's minimal defect (with the recorded connector).
    pub defect: i64,
}

/// Outcome of the exhaustive pair scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub radius: u64,
    pub c_max: u64,
    /// Connector radius the witness table refers to (`= c_max`).
    pub c_used: u64,
    pub truncation: Option<u64>,
    /// `c_curve[C]` is the minimal `c` covering every pair with
    /// connectors from `ball(C)`, for `C = 0 ..= c_max`.
    pub c_curve: Vec<u64>,
    /// `c_curve` at `c_used`.
    pub c_min: u64,
    pub pairs_scanned: u64,
    pub elements: Vec<GroupElement>,
    pub sigma_pool: Vec<GroupElement>,
    pub witnesses: Vec<DistortionWitness>,
}

/// For each `C <= c_max`, finds the minimal `c` such that every ordered
/// pair from `ball(radius)^2` admits a connector in `ball(C)`; exhaustive
/// and deterministic, parallel over the pair grid.
pub fn estimate_constants(
    spec: &GroupSpec,
    radius: u64,
    c_max: u64,
    truncation: Option<u64>,
    budget: usize,
) -> Result<DistortionReport> {
    let elements = spec.ball(radius, truncation)?;
    if elements.len() > budget {
        return Err(Error::BudgetExceeded { reached: elements.len(), budget });
    }
    let pool = spec.ball(c_max, truncation)?;
    // ball(C) is a by-length prefix of ball(c_max).
    let prefix_len: Vec<usize> = (0..=c_max)
        .map(|c| pool.iter().take_while(|s| spec.word_length(s) <= c).count())
        .collect();
    let lengths: Vec<u64> = elements.iter().map(|g| spec.word_length(g)).collect();
    let scan_pair = |(xi, yi): (usize, usize)| -> (Vec<i64>, DistortionWitness) {
        let (x, y) = (&elements[xi], &elements[yi]);
        // Running prefix minima of the defect along the pool order.
        let mut best = i64::MAX;
        let mut best_at: Vec<i64> = Vec::with_capacity(prefix_len.len());
        let mut witness = (0u32, i64::MAX);
        for (i, s) in pool.iter().enumerate() {
            let mut prod = x.clone();
            spec.append(&mut prod, s);
            spec.append(&mut prod, y);
            let d = lengths[xi] as i64 + lengths[yi] as i64 - spec.word_length(&prod) as i64;
            if d < witness.1 {
                witness = (i as u32, d);
            }
            best = best.min(d);
            while best_at.len() < prefix_len.len() && prefix_len[best_at.len()] == i + 1 {
                best_at.push(best);
            }
        }
        while best_at.len() < prefix_len.len() {
            best_at.push(best);
        }
        (
            best_at,
            DistortionWitness { x: xi as u32, y: yi as u32, sigma: witness.0, defect: witness.1 },
        )
    };
    let pairs: Vec<(usize, usize)> = (0..elements.len())
        .flat_map(|xi| (0..elements.len()).map(move |yi| (xi, yi)))
        .collect();
    let scanned: Vec<(Vec<i64>, DistortionWitness)> = if_rayon!(
        pairs.par_iter().map(|&p| scan_pair(p)).collect(),
        pairs.iter().map(|&p| scan_pair(p)).collect()
    );
    let mut c_curve_signed = vec![i64::MIN; prefix_len.len()];
    let mut witnesses = Vec::with_capacity(scanned.len());
    for (best_at, w) in scanned {
        for (c, &b) in best_at.iter().enumerate() {
            c_curve_signed[c] = c_curve_signed[c].max(b);
        }
        witnesses.push(w);
    }
    let c_curve: Vec<u64> = c_curve_signed.iter().map(|&v| v.max(0) as u64).collect();
    let c_min = *c_curve.last().expect("c_max >= 0");
    Ok(DistortionReport {
        radius,
        c_max,
        c_used: c_max,
        truncation,
        c_curve,
        c_min,
        pairs_scanned: witnesses.len() as u64,
        elements,
        sigma_pool: pool,
        witnesses,
    })
}

/// One level of the selection construction: the connector chosen by the
/// pigeonhole step, the selected pair set, and the measure it was chosen
/// under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionLevel {
    /// Pairs `(prefix product, next element)` forming the level's
    /// selected set; level 2 pairs are base tuples directly.
    pub pairs: Vec<(GroupElement, GroupElement)>,
    /// The measure on prefix products this level selected under
    /// (the base measure at level 2, a normalized pushforward afterwards).
    pub prev_measure: Vec<(GroupElement, BigRational)>,
    /// `(prev_measure x base)(pairs)`, at least `1 / |B(e,C)|`.
    pub mass: BigRational,
}

/// Certificate produced by [`build_selection`]: everything needed to
/// re-verify both guarantees independently, with exact rational masses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionCertificate {
    pub k: usize,
    pub c: u64,
    pub big_c: u64,
    pub truncation: Option<u64>,
    pub ball_size: usize,
    pub base: Vec<(GroupElement, BigRational)>,
    /// Connectors `sigma_1 .. sigma_{k-1}`.
    pub sigmas: Vec<GroupElement>,
    /// Levels `2 ..= k`, in order.
    pub levels: Vec<SelectionLevel>,
    /// `nu^k(E_k)`: the product of the level masses.
    pub total_mass: BigRational,
    /// `(k - 1) * c`.
    pub defect_bound: u64,
}

fn validate_measure(spec: &GroupSpec, nu: &[(GroupElement, BigRational)]) -> Result<()> {
    if nu.is_empty() {
        return Err(Error::Probe("empty measure support".into()));
    }
    let mut seen = DetHashSet::default();
    let mut total = BigRational::zero();
    for (g, w) in nu {
        spec.validate_element(g)?;
        if *w <= BigRational::zero() {
            return Err(Error::Probe("measure weights must be positive".into()));
        }
        if !seen.insert(g.clone()) {
            return Err(Error::Probe("duplicate support element".into()));
        }
        total += w;
    }
    if !total.is_one() {
        return Err(Error::Probe(format!("measure mass is {total}, expected 1")));
    }
    Ok(())
}

/// Runs the iterative pigeonhole construction: at each level, every pair
/// is assigned its first working connector from `ball(C)`, the connector
/// class of maximal product mass is selected (ties broken by enumeration
/// order), and the restricted normalized measure is pushed forward
/// through `(p, g) -> p sigma g`.
pub fn build_selection(
    spec: &GroupSpec,
    nu: &[(GroupElement, BigRational)],
    k: usize,
    c: u64,
    big_c: u64,
    truncation: Option<u64>,
) -> Result<SelectionCertificate> {
    if k < 2 {
        return Err(Error::Probe("selection needs k >= 2".into()));
    }
    validate_measure(spec, nu)?;
    let pool = spec.ball(big_c, truncation)?;
    let mut sigmas = Vec::with_capacity(k - 1);
    let mut levels = Vec::with_capacity(k - 1);
    let mut total_mass = BigRational::one();
    let mut current: Vec<(GroupElement, BigRational)> = nu.to_vec();
    for _level in 2..=k {
        // Bucket every pair by its connector's pool index.
        let mut buckets: Vec<(Vec<(usize, usize)>, BigRational)> =
            vec![(Vec::new(), BigRational::zero()); pool.len()];
        for (pi, (p, wp)) in current.iter().enumerate() {
            for (gi, (g, wg)) in nu.iter().enumerate() {
                let (si, _, _) =
                    sigma_in_pool(spec, p, g, &pool, c).ok_or_else(|| {
                        Error::Probe(format!(
                            "no connector in ball({big_c}) with defect <= {c} for the pair \
                             ({}, {}); enlarge C or c",
                            spec.element_text(p),
                            spec.element_text(g)
                        ))
                    })?;
                buckets[si].0.push((pi, gi));
                buckets[si].1 += wp * wg;
            }
        }
        let (best, _) = buckets
            .iter()
            .enumerate()
            .max_by(|(i, (_, ma)), (j, (_, mb))| ma.cmp(mb).then(j.cmp(i)))
            .expect("pool not empty");
        let (pair_indices, mass) = buckets.swap_remove(best);
        let sigma = pool[best].clone();
        // Pushforward of the restricted, normalized measure through
        // (p, g) -> p sigma g.
        let mut push: std::collections::BTreeMap<GroupElement, BigRational> =
            std::collections::BTreeMap::new();
        let mut pairs = Vec::with_capacity(pair_indices.len());
        for (pi, gi) in pair_indices {
            let (p, wp) = &current[pi];
            let (g, wg) = &nu[gi];
            let mut prod = p.clone();
            spec.append(&mut prod, &sigma);
            spec.append(&mut prod, g);
            let w = wp * wg / &mass;
            push.entry(prod).and_modify(|acc| *acc += &w).or_insert(w);
            pairs.push((p.clone(), g.clone()));
        }
        total_mass *= &mass;
        levels.push(SelectionLevel { pairs, prev_measure: current.clone(), mass });
        sigmas.push(sigma);
        current = push.into_iter().collect();
    }
    Ok(SelectionCertificate {
        k,
        c,
        big_c,
        truncation,
        ball_size: pool.len(),
        base: nu.to_vec(),
        sigmas,
        levels,
        total_mass,
        defect_bound: (k as u64 - 1) * c,
    })
}

/// The lemma's lower bound `|B(e,C)|^-(k-1)` as an exact rational.
pub fn selection_mass_bound(ball_size: usize, k: usize) -> BigRational {
    let b = BigInt::from(ball_size as u64);
    BigRational::new(BigInt::one(), b.pow(k as u32 - 1))
}

/// Why a certificate failed verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum VerifyFailure {
    /// A spliced tuple dips below `sum l(g_i) - (k-1) c`.
    DefectViolation { tuple: Vec<GroupElement>, spliced_length: u64, required: i64 },
    /// A level pair violates `l(p sigma g) >= l(p) + l(g) - c`.
    LevelViolation { level: usize, pair: (GroupElement, GroupElement) },
    /// `nu^k(E_k)` is below `|B(e,C)|^-(k-1)`.
    MassBound { total_mass: BigRational, required: BigRational },
    /// Internal bookkeeping does not re-derive (tampered or corrupted).
    Inconsistent(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub failure: Option<VerifyFailure>,
    pub tuples_checked: usize,
    /// Whether tuple checking enumerated all of `E_k` or sampled it.
    pub full_coverage: bool,
}

impl VerifyReport {
    fn fail(failure: VerifyFailure) -> Self {
        VerifyReport { pass: false, failure: Some(failure), tuples_checked: 0, full_coverage: false }
    }
}

/// Re-checks a certificate from scratch: connector lengths, every level
/// inequality, exact masses and their product, the lemma's lower bound,
/// and the defect of explicit tuples (all of `E_k` up to `tuple_budget`,
/// random membership-guided samples beyond it).
pub fn verify_certificate(
    spec: &GroupSpec,
    cert: &SelectionCertificate,
    tuple_budget: usize,
    sample_seed: u64,
) -> Result<VerifyReport> {
    validate_measure(spec, &cert.base)?;
    if cert.sigmas.len() != cert.k - 1 || cert.levels.len() != cert.k - 1 {
        return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(
            "level or connector count does not match k".into(),
        )));
    }
    let pool = spec.ball(cert.big_c, cert.truncation)?;
    if pool.len() != cert.ball_size {
        return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(format!(
            "|B(e,{})| is {}, certificate says {}",
            cert.big_c,
            pool.len(),
            cert.ball_size
        ))));
    }
    for sigma in &cert.sigmas {
        if spec.word_length(sigma) > cert.big_c {
            return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(format!(
                "connector {} lies outside ball({})",
                spec.element_text(sigma),
                cert.big_c
            ))));
        }
    }
    let base_lookup: DetHashMap<&GroupElement, &BigRational> =
        cert.base.iter().map(|(g, w)| (g, w)).collect();
    let mut expected_prev = cert.base.clone();
    let mut total = BigRational::one();
    for (i, level) in cert.levels.iter().enumerate() {
        let sigma = &cert.sigmas[i];
        // The recorded selection measure must re-derive from the previous
        // level (sorted comparison: pushforwards are stored in order).
        let mut a = level.prev_measure.clone();
        let mut b = expected_prev.clone();
        a.sort();
        b.sort();
        if a != b {
            return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(format!(
                "level {} selection measure does not re-derive",
                i + 2
            ))));
        }
        let prev_lookup: DetHashMap<&GroupElement, &BigRational> =
            level.prev_measure.iter().map(|(g, w)| (g, w)).collect();
        let mut mass = BigRational::zero();
        let mut push: std::collections::BTreeMap<GroupElement, BigRational> =
            std::collections::BTreeMap::new();
        let mut seen_pairs = DetHashSet::default();
        for (p, g) in &level.pairs {
            if !seen_pairs.insert((p.clone(), g.clone())) {
                return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(
                    "duplicate level pair".into(),
                )));
            }
            let (Some(wp), Some(wg)) = (prev_lookup.get(p), base_lookup.get(g)) else {
                return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(
                    "level pair outside the measure supports".into(),
                )));
            };
            if defect(spec, p, sigma, g) > cert.c as i64 {
                return Ok(VerifyReport::fail(VerifyFailure::LevelViolation {
                    level: i + 2,
                    pair: (p.clone(), g.clone()),
                }));
            }
            let mut prod = p.clone();
            spec.append(&mut prod, sigma);
            spec.append(&mut prod, g);
            let w = *wp * *wg;
            mass += &w;
            push.entry(prod).and_modify(|acc| *acc += &w).or_insert(w);
        }
        if mass != level.mass {
            return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(format!(
                "level {} mass recomputes to {mass}, certificate says {}",
                i + 2,
                level.mass
            ))));
        }
        total *= &mass;
        expected_prev = push.into_iter().map(|(g, w)| (g, w / &mass)).collect();
    }
    if total != cert.total_mass {
        return Ok(VerifyReport::fail(VerifyFailure::Inconsistent(format!(
            "total mass recomputes to {total}, certificate says {}",
            cert.total_mass
        ))));
    }
    let required = selection_mass_bound(cert.ball_size, cert.k);
    if total < required {
        return Ok(VerifyReport::fail(VerifyFailure::MassBound {
            total_mass: total,
            required,
        }));
    }
    // Tuple defects over E_k: full enumeration within budget, sampled
    // membership-guided walks beyond it.
    let level_sets: Vec<DetHashSet<(&GroupElement, &GroupElement)>> = cert
        .levels
        .iter()
        .map(|l| l.pairs.iter().map(|(p, g)| (p, g)).collect())
        .collect();
    let check_tuple = |tuple: &[GroupElement]| -> Option<VerifyFailure> {
        let mut spliced = tuple[0].clone();
        for (g, sigma) in tuple[1..].iter().zip(&cert.sigmas) {
            spec.append(&mut spliced, sigma);
            spec.append(&mut spliced, g);
        }
        let total_len: u64 = tuple.iter().map(|g| spec.word_length(g)).sum();
        let required = total_len as i64 - cert.defect_bound as i64;
        let spliced_length = spec.word_length(&spliced);
        if (spliced_length as i64) < required {
            Some(VerifyFailure::DefectViolation {
                tuple: tuple.to_vec(),
                spliced_length,
                required,
            })
        } else {
            None
        }
    };
    let mut tuples: Vec<Vec<GroupElement>> = Vec::new();
    let mut overflow = false;
    // E_2 is the first level's pair set; extend tuple prefixes level by
    // level through the membership sets.
    for (p, g) in &cert.levels[0].pairs {
        tuples.push(vec![p.clone(), g.clone()]);
        if tuples.len() > tuple_budget {
            overflow = true;
            break;
        }
    }
    if !overflow {
        for i in 1..cert.levels.len() {
            let mut next = Vec::new();
            for tuple in &tuples {
                let mut prefix = tuple[0].clone();
                for (g, sigma) in tuple[1..].iter().zip(&cert.sigmas) {
                    spec.append(&mut prefix, sigma);
                    spec.append(&mut prefix, g);
                }
                for (g, _) in &cert.base {
                    if level_sets[i].contains(&(&prefix, g)) {
                        let mut t = tuple.clone();
                        t.push(g.clone());
                        next.push(t);
                        if next.len() > tuple_budget {
                            overflow = true;
                            break;
                        }
                    }
                }
                if overflow {
                    break;
                }
            }
            if overflow {
                break;
            }
            tuples = next;
        }
    }
    let (tuples_checked, full_coverage, violation) = if !overflow {
        let v = tuples.iter().find_map(|t| check_tuple(t));
        (tuples.len(), true, v)
    } else {
        // Sample tuples by walking the levels, guided by membership.
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let sample_count = tuple_budget.max(1);
        let mut violation = None;
        let mut checked = 0;
        'sampling: for _ in 0..sample_count {
            let start = &cert.levels[0].pairs
                [rng.random_range(0..cert.levels[0].pairs.len())];
            let mut tuple = vec![start.0.clone(), start.1.clone()];
            for i in 1..cert.levels.len() {
                let mut prefix = tuple[0].clone();
                for (g, sigma) in tuple[1..].iter().zip(&cert.sigmas) {
                    spec.append(&mut prefix, sigma);
                    spec.append(&mut prefix, g);
                }
                let continuations: Vec<&GroupElement> = cert
                    .base
                    .iter()
                    .map(|(g, _)| g)
                    .filter(|g| level_sets[i].contains(&(&prefix, *g)))
                    .collect();
                if continuations.is_empty() {
                    continue 'sampling;
                }
                let g = continuations[rng.random_range(0..continuations.len())];
                tuple.push(g.clone());
            }
            if tuple.len() == cert.k {
                checked += 1;
                if let Some(v) = check_tuple(&tuple) {
                    violation = Some(v);
                    break;
                }
            }
        }
        (checked, false, violation)
    };
    if let Some(v) = violation {
        return Ok(VerifyReport { pass: false, failure: Some(v), tuples_checked, full_coverage });
    }
    Ok(VerifyReport { pass: true, failure: None, tuples_checked, full_coverage })
}
