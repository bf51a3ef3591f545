//! Step distributions and Monte Carlo simulation of the right random walk
//! `Y_n = X_1 ... X_n`, together with exact finite-time length
//! distributions used as oracles by the estimators.

mod exact;
mod sampler;

pub use exact::{
    exact_length_distribution, exact_length_distribution_rational,
    rational_length_distributions, rationals_to_f64, RationalAtoms,
};
pub use sampler::StepSampler;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "rayon")]
use rayon::prelude::*;
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::group::{FactorKind, GroupElement, GroupSpec};
use crate::par::if_rayon;
use crate::util::DetHashSet;

const MASS_TOLERANCE: f64 = 1e-12;

/// Tail family for the designated infinite-cyclic factor: mass on `z^k`,
/// `k != 0`, proportional to `ratio^|k|` or `|k|^-exponent`.
#[derive(Debug, Clone, PartialEq)]
pub enum TailLaw {
    Geometric { ratio: f64 },
    Polynomial { exponent: f64 },
}

/// Optional heavy tail riding on one infinite-cyclic factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSpec {
    pub factor: usize,
    pub law: TailLaw,
    pub mass: f64,
}

/// A finitely supported step distribution, optionally extended by a tail
/// on a single infinite-cyclic factor.
///
/// Whether tail increments make the walk long depends on the factor's
/// peripheral flag: a peripheral syllable `z^k` has length 1 no matter how
/// large `k` is, so only a tail on a non-peripheral factor produces
/// unbounded step lengths (and a nontrivial exponential-moment threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    atoms: Vec<(GroupElement, f64)>,
    tail: Option<TailSpec>,
}

impl StepDistribution {
    pub fn new(
        spec: &GroupSpec,
        atoms: Vec<(GroupElement, f64)>,
        tail: Option<TailSpec>,
    ) -> Result<Self> {
        if atoms.is_empty() && tail.is_none() {
            return Err(Error::InvalidMeasure("no atoms and no tail".into()));
        }
        let mut seen = DetHashSet::default();
        for (g, w) in &atoms {
            spec.validate_element(g)?;
            if !(*w > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {w} is not strictly positive"
                )));
            }
            if !seen.insert(g.clone()) {
                return Err(Error::InvalidMeasure(format!(
                    "duplicate atom {}",
                    spec.element_text(g)
                )));
            }
        }
        let mut total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if let Some(t) = &tail {
            match spec.factor(t.factor).map(|f| &f.kind) {
                Some(FactorKind::InfiniteCyclic) => {}
                _ => {
                    return Err(Error::InvalidMeasure(format!(
                        "tail factor {} is not infinite-cyclic",
                        t.factor
                    )))
                }
            }
            match t.law {
                TailLaw::Geometric { ratio } => {
                    if !(ratio > 0.0 && ratio < 1.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "geometric tail ratio must lie in (0,1), got {ratio}"
                        )));
                    }
                }
                TailLaw::Polynomial { exponent } => {
                    if !(exponent > 1.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "polynomial tail exponent must exceed 1, got {exponent}"
                        )));
                    }
                }
            }
            if !(t.mass > 0.0) {
                return Err(Error::InvalidMeasure("tail mass must be positive".into()));
            }
            total += t.mass;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total} differs from 1 by more than {MASS_TOLERANCE}"
            )));
        }
        Ok(StepDistribution { atoms, tail })
    }

    /// Uniform distribution on the given elements.
    pub fn uniform(spec: &GroupSpec, elements: Vec<GroupElement>) -> Result<Self> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let w = 1.0 / n as f64;
        StepDistribution::new(spec, elements.into_iter().map(|g| (g, w)).collect(), None)
    }

    /// Uniform distribution on the whole one-step generating set.
    pub fn uniform_generators(spec: &GroupSpec, truncation: Option<u64>) -> Result<Self> {
        StepDistribution::uniform(spec, spec.one_step_generators(truncation)?)
    }

    /// Point mass at a single element.
    pub fn delta(spec: &GroupSpec, g: GroupElement) -> Result<Self> {
        StepDistribution::new(spec, vec![(g, 1.0)], None)
    }

    pub fn atoms(&self) -> &[(GroupElement, f64)] {
        &self.atoms
    }

    pub fn tail(&self) -> Option<&TailSpec> {
        self.tail.as_ref()
    }

    /// Maximum step length over the support; `None` when a tail on a
    /// non-peripheral factor makes steps unbounded.
    pub fn max_step(&self, spec: &GroupSpec) -> Option<u64> {
        let atom_max = self.atoms.iter().map(|(g, _)| spec.word_length(g)).max().unwrap_or(0);
        match &self.tail {
            None => Some(atom_max),
            Some(t) => {
                if spec.factors()[t.factor].peripheral {
                    Some(atom_max.max(1))
                } else {
                    None
                }
            }
        }
    }

    /// Exact-weight copy of the atom part: weights are converted from
    /// their binary floating-point values and renormalized to total mass
    /// exactly 1. Errors if a tail is present.
    pub fn rational_atoms(&self) -> Result<RationalAtoms> {
        if self.tail.is_some() {
            return Err(Error::InvalidMeasure(
                "exact rational weights require finite support".into(),
            ));
        }
        let mut out: RationalAtoms = Vec::with_capacity(self.atoms.len());
        let mut total = BigRational::zero();
        for (g, w) in &self.atoms {
            let r = BigRational::from_float(*w)
                .ok_or_else(|| Error::InvalidMeasure(format!("weight {w} is not finite")))?;
            total += &r;
            out.push((g.clone(), r));
        }
        for (_, r) in &mut out {
            *r /= &total;
        }
        Ok(out)
    }

    /// Sum of `mu(g) * exp(tau * l(g))` over the support, with the closed
    /// form for geometric tails and an explicit infinity where the sum
    /// diverges. At `tau = 0` this is the total mass.
    pub fn exp_moment(&self, spec: &GroupSpec, tau: f64) -> f64 {
        let mut sum: f64 = self
            .atoms
            .iter()
            .map(|(g, w)| w * (tau * spec.word_length(g) as f64).exp())
            .sum();
        if let Some(t) = &self.tail {
            let peripheral = spec.factors()[t.factor].peripheral;
            sum += t.mass
                * if peripheral {
                    // Every tail increment is one whole peripheral syllable.
                    tau.exp()
                } else {
                    match t.law {
                        TailLaw::Geometric { ratio } => {
                            let x = ratio * tau.exp();
                            if x < 1.0 {
                                (1.0 - ratio) * tau.exp() / (1.0 - x)
                            } else {
                                return f64::INFINITY;
                            }
                        }
                        TailLaw::Polynomial { exponent } => {
                            if tau > 0.0 {
                                return f64::INFINITY;
                            } else if tau == 0.0 {
                                1.0
                            } else {
                                // Converges for tau < 0; direct summation.
                                polynomial_tail_moment(exponent, tau)
                            }
                        }
                    }
                };
        }
        sum
    }
}

/// `E[exp(tau |K|)] / normalizer` for `P(|K| = j) ~ j^-p`, `tau < 0`.
fn polynomial_tail_moment(p: f64, tau: f64) -> f64 {
    let mut zeta = 0.0;
    let mut moment = 0.0;
    for j in 1..=2_000_000u64 {
        let term = (j as f64).powf(-p);
        zeta += term;
        let m = term * (tau * j as f64).exp();
        moment += m;
        if m < 1e-18 * moment && term < 1e-12 * zeta {
            // Finish the normalizer with the integral tail estimate.
            zeta += (j as f64).powf(1.0 - p) / (p - 1.0);
            break;
        }
    }
    moment / zeta
}

/// Verdict of the depth-bounded admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    /// The bounded semigroup closure of the support covers the whole
    /// (truncated) generating set.
    Admissible,
    /// The closure stabilized without covering it.
    NotAdmissible,
    /// Depth exhausted while the closure was still growing.
    Inconclusive,
}

/// Computes products of support elements up to the given depth and
/// compares the closure against the generating set. Admissibility is only
/// semi-decidable, hence the explicit `Inconclusive` verdict.
pub fn check_admissible(
    spec: &GroupSpec,
    mu: &StepDistribution,
    depth: usize,
    truncation: Option<u64>,
) -> Result<Admissibility> {
    if depth == 0 {
        return Err(Error::Estimator("admissibility depth must be >= 1".into()));
    }
    let mut basis: Vec<GroupElement> = mu.atoms.iter().map(|(g, _)| g.clone()).collect();
    if let Some(t) = &mu.tail {
        let t_max = truncation.ok_or_else(|| {
            Error::TruncationRequired(
                "tail support is infinite; supply a truncation for the \
                 admissibility check"
                    .into(),
            )
        })?;
        for k in 1..=t_max as i64 {
            for sign in [1, -1] {
                basis.push(spec.power_element(t.factor, &BigInt::from(sign * k))?);
            }
        }
    }
    let target: DetHashSet<GroupElement> =
        spec.one_step_generators(truncation)?.into_iter().collect();
    let mut all: DetHashSet<GroupElement> = basis.iter().cloned().collect();
    let mut frontier: Vec<GroupElement> = basis.clone();
    let covered = |all: &DetHashSet<GroupElement>| target.iter().all(|g| all.contains(g));
    for _level in 1..depth {
        if covered(&all) {
            return Ok(Admissibility::Admissible);
        }
        let mut next = Vec::new();
        for g in &frontier {
            for s in &basis {
                let prod = spec.multiply(g, s);
                if all.insert(prod.clone()) {
                    next.push(prod);
                }
            }
        }
        if next.is_empty() {
            return Ok(if covered(&all) {
                Admissibility::Admissible
            } else {
                Admissibility::NotAdmissible
            });
        }
        frontier = next;
    }
    Ok(if covered(&all) {
        Admissibility::Admissible
    } else {
        Admissibility::Inconclusive
    })
}

/// Lengths `l(Y_n)` of many independent walks, recorded at a shared list
/// of checkpoint times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthTrace {
    pub checkpoints: Vec<usize>,
    /// One row per sample, one entry per checkpoint.
    pub lengths: Vec<Vec<u64>>,
    pub seed: u64,
}

impl LengthTrace {
    /// Column of lengths at a given checkpoint time.
    pub fn column(&self, n: usize) -> Result<Vec<u64>> {
        let idx = self
            .checkpoints
            .iter()
            .position(|&c| c == n)
            .ok_or_else(|| Error::Estimator(format!("{n} is not a checkpoint")))?;
        Ok(self.lengths.iter().map(|row| row[idx]).collect())
    }
}

/// Walks one sample: draws i.i.d. increments, maintains `Y_n` by in-place
/// multiplication, and records `l(Y_n)` at each checkpoint.
pub fn sample_walk(
    spec: &GroupSpec,
    sampler: &StepSampler,
    checkpoints: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<u64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut state = GroupElement::identity();
    let mut next_cp = 0;
    let last = *checkpoints.last().unwrap_or(&0);
    for n in 1..=last {
        sampler.sample_append(spec, &mut state, rng);
        if next_cp < checkpoints.len() && checkpoints[next_cp] == n {
            out.push(spec.word_length(&state));
            next_cp += 1;
        }
    }
    out
}

fn validate_run(checkpoints: &[usize], samples: usize) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Estimator("no checkpoints".into()));
    }
    if checkpoints[0] == 0 {
        return Err(Error::Estimator("checkpoints must start at n >= 1".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Estimator("checkpoints must be strictly increasing".into()));
    }
    if samples == 0 {
        return Err(Error::Estimator("need at least one sample".into()));
    }
    Ok(())
}

fn stream_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    // One independent, deterministically derived stream per sample index,
    // so batches can run in any order or in parallel.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// Simulates `samples` independent walks; parallel when the `rayon`
/// feature is enabled, with output identical to [`simulate_seq`].
pub fn simulate(
    spec: &GroupSpec,
    mu: &StepDistribution,
    checkpoints: &[usize],
    samples: usize,
    seed: u64,
) -> Result<LengthTrace> {
    validate_run(checkpoints, samples)?;
    let sampler = StepSampler::new(spec, mu, 0.0)?;
    let lengths = if_rayon!(
        (0..samples)
            .into_par_iter()
            .map(|i| sample_walk(spec, &sampler, checkpoints, &mut stream_rng(seed, i)))
            .collect(),
        (0..samples)
            .map(|i| sample_walk(spec, &sampler, checkpoints, &mut stream_rng(seed, i)))
            .collect()
    );
    Ok(LengthTrace { checkpoints: checkpoints.to_vec(), lengths, seed })
}

/// Sequential reference implementation of [`simulate`].
pub fn simulate_seq(
    spec: &GroupSpec,
    mu: &StepDistribution,
    checkpoints: &[usize],
    samples: usize,
    seed: u64,
) -> Result<LengthTrace> {
    validate_run(checkpoints, samples)?;
    let sampler = StepSampler::new(spec, mu, 0.0)?;
    let lengths = (0..samples)
        .map(|i| sample_walk(spec, &sampler, checkpoints, &mut stream_rng(seed, i)))
        .collect();
    Ok(LengthTrace { checkpoints: checkpoints.to_vec(), lengths, seed })
}

/// Rayon-parallel batch sampling; exposed for the benchmark comparison.
#[cfg(feature = "rayon")]
pub fn simulate_par(
    spec: &GroupSpec,
    mu: &StepDistribution,
    checkpoints: &[usize],
    samples: usize,
    seed: u64,
) -> Result<LengthTrace> {
    validate_run(checkpoints, samples)?;
    let sampler = StepSampler::new(spec, mu, 0.0)?;
    let lengths = (0..samples)
        .into_par_iter()
        .map(|i| sample_walk(spec, &sampler, checkpoints, &mut stream_rng(seed, i)))
        .collect();
    Ok(LengthTrace { checkpoints: checkpoints.to_vec(), lengths, seed })
}

/// Sample mean and normal-approximation confidence interval of
/// `l(Y_N) / N` at the largest checkpoint `N`.
#[derive(Debug, Clone, Copy)]
pub struct EscapeRateEstimate {
    pub lambda_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub samples: usize,
    pub confidence: f64,
}

pub fn escape_rate_estimate(trace: &LengthTrace, confidence: f64) -> Result<EscapeRateEstimate> {
    let n = *trace
        .checkpoints
        .last()
        .ok_or_else(|| Error::Estimator("trace has no checkpoints".into()))?;
    let values = trace.column(n)?;
    if values.len() < 2 {
        return Err(Error::Estimator(
            "escape rate estimate needs at least 2 samples".into(),
        ));
    }
    let k = values.len() as f64;
    let scaled: Vec<f64> = values.iter().map(|&v| v as f64 / n as f64).collect();
    let mean = scaled.iter().sum::<f64>() / k;
    let var = scaled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let z = statrs::distribution::Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + confidence / 2.0);
    let half = z * (var / k).sqrt();
    Ok(EscapeRateEstimate {
        lambda_hat: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        n,
        samples: values.len(),
        confidence,
    })
}

impl GroupSpec {
    /// `z^k` on the given infinite-cyclic factor.
    pub fn power_element(&self, factor: usize, k: &BigInt) -> Result<GroupElement> {
        if k.is_zero() {
            return Ok(GroupElement::identity());
        }
        match self.factor(factor).map(|f| &f.kind) {
            Some(FactorKind::InfiniteCyclic) => self.element(vec![crate::group::Syllable {
                factor,
                payload: crate::group::Payload::Power(k.clone()),
            }]),
            _ => Err(Error::InvalidElement(format!(
                "factor {factor} is not infinite-cyclic"
            ))),
        }
    }
}

/// Exact rational uniform measure on the given elements.
pub fn rational_uniform(elements: &[GroupElement]) -> RationalAtoms {
    let w = BigRational::new(BigInt::one(), BigInt::from(elements.len() as i64));
    elements.iter().map(|g| (g.clone(), w.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FactorSpec;

    fn f2() -> GroupSpec {
        GroupSpec::free_rank(2).unwrap()
    }

    fn f2_uniform(spec: &GroupSpec) -> StepDistribution {
        StepDistribution::uniform_generators(spec, None).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        let spec = GroupSpec::z2_star_z3();
        let a = spec.parse_element("a1").unwrap();
        let b = spec.parse_element("b1").unwrap();

        // Support {a} only: closure {a, e} stabilizes without covering b.
        let mu = StepDistribution::delta(&spec, a.clone()).unwrap();
        assert_eq!(
            check_admissible(&spec, &mu, 6, None).unwrap(),
            Admissibility::NotAdmissible
        );

        // Uniform on {a, b}: b^2 = b b and e = a^2 appear at depth 2.
        let mu = StepDistribution::uniform(&spec, vec![a, b]).unwrap();
        assert_eq!(
            check_admissible(&spec, &mu, 2, None).unwrap(),
            Admissibility::Admissible
        );
        assert_eq!(
            check_admissible(&spec, &mu, 1, None).unwrap(),
            Admissibility::Inconclusive
        );

        let free = f2();
        let mu = f2_uniform(&free);
        assert_eq!(
            check_admissible(&free, &mu, 1, None).unwrap(),
            Admissibility::Admissible
        );
    }

    #[test]
    fn degenerate_walks() {
        let spec = f2();
        let mu = StepDistribution::delta(&spec, GroupElement::identity()).unwrap();
        let trace = simulate(&spec, &mu, &[5, 10], 4, 7).unwrap();
        assert!(trace.lengths.iter().all(|row| row.iter().all(|&l| l == 0)));
        let est = escape_rate_estimate(&trace, 0.99).unwrap();
        assert_eq!(est.lambda_hat, 0.0);
        assert_eq!((est.ci_low, est.ci_high), (0.0, 0.0));

        let x = spec.parse_element("a1").unwrap();
        let mu = StepDistribution::delta(&spec, x).unwrap();
        let trace = simulate(&spec, &mu, &[5, 10], 4, 7).unwrap();
        for row in &trace.lengths {
            assert_eq!(row, &vec![5, 10]);
        }
        let est = escape_rate_estimate(&trace, 0.99).unwrap();
        assert_eq!(est.lambda_hat, 1.0);
    }

    #[test]
    fn identical_seed_reproduces_traces() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let t1 = simulate(&spec, &mu, &[10, 50], 32, 99).unwrap();
        let t2 = simulate(&spec, &mu, &[10, 50], 32, 99).unwrap();
        assert_eq!(t1, t2);
        let t3 = simulate(&spec, &mu, &[10, 50], 32, 100).unwrap();
        assert_ne!(t1, t3);
    }

    #[cfg(feature = "rayon")]
    #[test]
    fn parallel_matches_sequential() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let par = simulate_par(&spec, &mu, &[25, 50], 64, 5).unwrap();
        let seq = simulate_seq(&spec, &mu, &[25, 50], 64, 5).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn checkpoint_deltas_respect_max_step() {
        let spec = f2();
        let mu = StepDistribution::uniform(
            &spec,
            vec![
                spec.parse_element("a1").unwrap(),
                spec.parse_element("a-1").unwrap(),
                spec.parse_element("b2").unwrap(),
            ],
        )
        .unwrap();
        let maxstep = mu.max_step(&spec).unwrap();
        assert_eq!(maxstep, 2);
        let trace = simulate(&spec, &mu, &[5, 9, 20], 64, 3).unwrap();
        for row in &trace.lengths {
            let mut prev = (0usize, 0u64);
            for (cp, &l) in trace.checkpoints.iter().zip(row) {
                let dn = (cp - prev.0) as u64;
                assert!(l.abs_diff(prev.1) <= dn * maxstep);
                prev = (*cp, l);
            }
        }
    }

    #[test]
    fn exact_distribution_small_cases() {
        let spec = f2();
        let mu = f2_uniform(&spec);

        // n = 1: the pushforward of mu under l, exactly.
        let d1 = exact_length_distribution(&spec, &mu, 1, 1 << 20).unwrap();
        assert_eq!(d1, vec![0.0, 1.0]);

        // n = 2: 4 of the 16 two-step products cancel to e.
        let d2 = exact_length_distribution(&spec, &mu, 2, 1 << 20).unwrap();
        assert_eq!(d2, vec![4.0 / 16.0, 0.0, 12.0 / 16.0]);

        // n = 3: frozen from the 64-product enumeration.
        let d3 = exact_length_distribution(&spec, &mu, 3, 1 << 20).unwrap();
        assert_eq!(d3, vec![0.0, 28.0 / 64.0, 0.0, 36.0 / 64.0]);

        let total: f64 = exact_length_distribution(&spec, &mu, 9, 1 << 20)
            .unwrap()
            .iter()
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_distribution_budget_error() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        match exact_length_distribution(&spec, &mu, 6, 100) {
            Err(Error::BudgetExceeded { reached, budget }) => {
                assert!(reached > 100);
                assert_eq!(budget, 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn rational_matches_float_dp() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let atoms = rational_uniform(&spec.one_step_generators(None).unwrap());
        for n in [1usize, 2, 3, 5] {
            let exact = exact_length_distribution_rational(&spec, &atoms, n, 1 << 20).unwrap();
            let float = exact_length_distribution(&spec, &mu, n, 1 << 20).unwrap();
            let exact_f = rationals_to_f64(&exact);
            assert_eq!(exact_f.len(), float.len());
            for (a, b) in exact_f.iter().zip(&float) {
                assert!((a - b).abs() < 1e-12);
            }
            let total: BigRational = exact.iter().sum();
            assert!(total.is_one());
        }
    }

    #[test]
    fn exp_moment_basics() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        assert!((mu.exp_moment(&spec, 0.0) - 1.0).abs() < 1e-12);
        // Finite support: finite at every tau.
        let m = mu.exp_moment(&spec, 5.0);
        assert!(m.is_finite());
        assert!((m - (5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn exp_moment_geometric_threshold() {
        // Z * Z/2 with Z *in the finite generating set*, so l(z^k) = |k|
        // and the geometric tail has threshold -log(ratio).
        let spec = GroupSpec::new(vec![
            FactorSpec::infinite_cyclic(false),
            FactorSpec::finite_cyclic(2),
        ])
        .unwrap();
        let a = spec.parse_element("b1").unwrap();
        let q: f64 = 0.5;
        let mu = StepDistribution::new(
            &spec,
            vec![(a, 0.5)],
            Some(TailSpec { factor: 0, law: TailLaw::Geometric { ratio: q }, mass: 0.5 }),
        )
        .unwrap();
        let threshold = -q.ln();
        assert!(mu.exp_moment(&spec, threshold - 1e-6).is_finite());
        assert!(mu.exp_moment(&spec, threshold + 1e-6).is_infinite());
        assert!((mu.exp_moment(&spec, 0.0) - 1.0).abs() < 1e-12);

        // Closed form vs direct partial sums at some tau below threshold.
        let tau = 0.3;
        let closed = mu.exp_moment(&spec, tau);
        let c = (1.0 - q) / (2.0 * q);
        let mut direct = 0.5 * tau.exp(); // the atom b
        for k in 1..200 {
            direct += 0.5 * 2.0 * c * q.powi(k) * (tau * k as f64).exp();
        }
        assert!((closed - direct).abs() < 1e-12);
    }

    #[test]
    fn exp_moment_polynomial_tail() {
        let spec = GroupSpec::new(vec![
            FactorSpec::infinite_cyclic(false),
            FactorSpec::finite_cyclic(2),
        ])
        .unwrap();
        let a = spec.parse_element("b1").unwrap();
        let mu = StepDistribution::new(
            &spec,
            vec![(a, 0.5)],
            Some(TailSpec { factor: 0, law: TailLaw::Polynomial { exponent: 3.0 }, mass: 0.5 }),
        )
        .unwrap();
        // Exponential growth beats polynomial decay at any tau > 0.
        assert!(mu.exp_moment(&spec, 0.1).is_infinite());
        assert!((mu.exp_moment(&spec, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peripheral_tail_has_all_moments() {
        // Same tail on a peripheral factor: every z^k costs 1, so the
        // moment generating function is finite everywhere.
        let spec = GroupSpec::new(vec![
            FactorSpec::infinite_cyclic(true),
            FactorSpec::finite_cyclic(2),
        ])
        .unwrap();
        let a = spec.parse_element("b1").unwrap();
        let mu = StepDistribution::new(
            &spec,
            vec![(a, 0.5)],
            Some(TailSpec { factor: 0, law: TailLaw::Geometric { ratio: 0.5 }, mass: 0.5 }),
        )
        .unwrap();
        for tau in [0.5, 2.0, 10.0] {
            assert!(mu.exp_moment(&spec, tau).is_finite());
        }
        assert_eq!(mu.max_step(&spec), Some(1));
    }

    #[test]
    fn measure_validation() {
        let spec = GroupSpec::z2_star_z3();
        let a = spec.parse_element("a1").unwrap();
        // Mass off by more than the tolerance.
        assert!(StepDistribution::new(&spec, vec![(a.clone(), 0.9)], None).is_err());
        // Nonpositive weight.
        assert!(StepDistribution::new(&spec, vec![(a.clone(), 0.0), (a.clone(), 1.0)], None)
            .is_err());
        // Duplicate atom.
        assert!(
            StepDistribution::new(&spec, vec![(a.clone(), 0.5), (a.clone(), 0.5)], None).is_err()
        );
        // Tail on a finite factor.
        assert!(StepDistribution::new(
            &spec,
            vec![(a, 0.5)],
            Some(TailSpec { factor: 1, law: TailLaw::Geometric { ratio: 0.5 }, mass: 0.5 }),
        )
        .is_err());
    }

    #[test]
    fn tail_walk_runs_and_respects_truncation_requirement() {
        let spec = GroupSpec::new(vec![
            FactorSpec::infinite_cyclic(true),
            FactorSpec::finite_cyclic(2),
        ])
        .unwrap();
        let b = spec.parse_element("b1").unwrap();
        let mu = StepDistribution::new(
            &spec,
            vec![(b, 0.5)],
            Some(TailSpec { factor: 0, law: TailLaw::Geometric { ratio: 0.5 }, mass: 0.5 }),
        )
        .unwrap();
        assert!(matches!(
            check_admissible(&spec, &mu, 3, None),
            Err(Error::TruncationRequired(_))
        ));
        assert_eq!(
            check_admissible(&spec, &mu, 3, Some(2)).unwrap(),
            Admissibility::Admissible
        );
        let trace = simulate(&spec, &mu, &[50], 16, 11).unwrap();
        assert_eq!(trace.lengths.len(), 16);
    }
}
