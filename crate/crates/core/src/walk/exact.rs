//! Exact finite-time length distributions by n-fold convolution over
//! group elements. The state space is the set of reachable normal forms,
//! so this is a small-n oracle, guarded by an explicit state budget.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::StepDistribution;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::util::DetHashMap;

/// Exact weights for the rational-arithmetic variants.
pub type RationalAtoms = Vec<(GroupElement, BigRational)>;

/// Distribution of `l(Y_n)` as a probability vector over
/// `{0, ..., n * maxstep}`.
///
/// Requires finite support; the budget caps the reachable-element count.
pub fn exact_length_distribution(
    spec: &GroupSpec,
    mu: &StepDistribution,
    n: usize,
    budget: usize,
) -> Result<Vec<f64>> {
    if mu.tail().is_some() {
        return Err(Error::InvalidMeasure(
            "exact length distribution requires finite support".into(),
        ));
    }
    let maxstep = mu.max_step(spec).expect("finite support") as usize;
    let mut states: DetHashMap<GroupElement, f64> = DetHashMap::default();
    states.insert(GroupElement::identity(), 1.0);
    for _ in 0..n {
        let mut next: DetHashMap<GroupElement, f64> = DetHashMap::default();
        for (g, p) in &states {
            for (x, w) in mu.atoms() {
                let h = spec.multiply(g, x);
                *next.entry(h).or_insert(0.0) += p * w;
            }
        }
        if next.len() > budget {
            return Err(Error::BudgetExceeded { reached: next.len(), budget });
        }
        states = next;
    }
    let mut out = vec![0.0; n * maxstep + 1];
    for (g, p) in &states {
        out[spec.word_length(g) as usize] += p;
    }
    Ok(out)
}

/// Rational-arithmetic variant of [`exact_length_distribution`]; weights
/// must be strictly positive and sum to exactly 1.
pub fn exact_length_distribution_rational(
    spec: &GroupSpec,
    atoms: &RationalAtoms,
    n: usize,
    budget: usize,
) -> Result<Vec<BigRational>> {
    let mut dists = rational_length_distributions(spec, atoms, &[n], budget)?;
    Ok(dists.pop().expect("one requested time"))
}

/// Runs the rational convolution once up to `max(ns)` and records the
/// length distribution at each requested time, in the order given.
pub fn rational_length_distributions(
    spec: &GroupSpec,
    atoms: &RationalAtoms,
    ns: &[usize],
    budget: usize,
) -> Result<Vec<Vec<BigRational>>> {
    validate_rational_atoms(spec, atoms)?;
    let maxstep = atoms
        .iter()
        .map(|(g, _)| spec.word_length(g))
        .max()
        .unwrap_or(0) as usize;
    let last = ns.iter().copied().max().unwrap_or(0);
    let mut recorded: DetHashMap<usize, Vec<BigRational>> = DetHashMap::default();
    let mut states: DetHashMap<GroupElement, BigRational> = DetHashMap::default();
    states.insert(GroupElement::identity(), BigRational::one());
    let record = |states: &DetHashMap<GroupElement, BigRational>, n: usize| {
        let mut out = vec![BigRational::zero(); n * maxstep + 1];
        for (g, p) in states {
            out[spec.word_length(g) as usize] += p;
        }
        out
    };
    if ns.contains(&0) {
        recorded.insert(0, record(&states, 0));
    }
    for step in 1..=last {
        let mut next: DetHashMap<GroupElement, BigRational> = DetHashMap::default();
        for (g, p) in &states {
            for (x, w) in atoms {
                let h = spec.multiply(g, x);
                let term = p * w;
                next.entry(h)
                    .and_modify(|acc| *acc += &term)
                    .or_insert(term);
            }
        }
        if next.len() > budget {
            return Err(Error::BudgetExceeded { reached: next.len(), budget });
        }
        states = next;
        if ns.contains(&step) {
            recorded.insert(step, record(&states, step));
        }
    }
    Ok(ns
        .iter()
        .map(|n| recorded.get(n).expect("recorded above").clone())
        .collect())
}

fn validate_rational_atoms(spec: &GroupSpec, atoms: &RationalAtoms) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidMeasure("empty support".into()));
    }
    let mut total = BigRational::zero();
    for (g, w) in atoms {
        spec.validate_element(g)?;
        if *w <= BigRational::zero() {
            return Err(Error::InvalidMeasure(
                "rational atom weight is not strictly positive".into(),
            ));
        }
        total += w;
    }
    if total != BigRational::one() {
        return Err(Error::InvalidMeasure(format!(
            "rational weights sum to {total}, expected exactly 1"
        )));
    }
    Ok(())
}

/// Rational vector as f64s, for comparisons against floating pipelines.
pub fn rationals_to_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
}
