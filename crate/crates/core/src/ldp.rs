//! Estimators for the large-deviation behavior of the renormalized length
//! process `l(Y_n) / n`: windowed empirical rate functions with exact
//! binomial confidence bounds, exponentially tilted rare-event estimation,
//! log moment generating functions (exact and Monte Carlo), a subadditivity
//! check in exact rational arithmetic, and a midpoint convexity audit.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "rayon")]
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::convex::GridFunction;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::par::if_rayon;
use crate::walk::{
    rational_length_distributions, LengthTrace, RationalAtoms, StepDistribution, StepSampler,
};

/// Window `(x - delta, x + delta)` scaled to length space at time `n`.
/// Shared by the estimator and by every oracle comparing against it, so
/// boundary arithmetic is identical on both sides.
pub fn window_bounds(n: usize, x: f64, delta: f64) -> (f64, f64) {
    (n as f64 * (x - delta), n as f64 * (x + delta))
}

/// Windowed empirical rate values on a grid, with exact binomial
/// (Clopper-Pearson) confidence bounds mapped through `-log / n`.
#[derive(Debug, Clone)]
pub struct RateEstimate {
    pub n: usize,
    pub delta: f64,
    pub grid: Vec<f64>,
    /// `-(1/n) log(count / samples)`; `+inf` where the count is zero.
    pub rate: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: usize,
    pub confidence: f64,
}

impl RateEstimate {
    /// The rate curve as a grid function (for hull and conjugation work).
    pub fn to_grid_function(&self) -> Result<GridFunction> {
        GridFunction::new(self.grid.clone(), self.rate.clone())
    }

    /// Confidence-interval width at a grid index; `None` when the upper
    /// bound is infinite (zero-count window).
    pub fn ci_width(&self, i: usize) -> Option<f64> {
        let w = self.ci_high[i] - self.ci_low[i];
        w.is_finite().then_some(w)
    }
}

/// Exact binomial confidence bounds for `k` hits out of `n` trials.
fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let lower = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .expect("valid shape")
            .inverse_cdf(alpha / 2.0)
    };
    let upper = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .expect("valid shape")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// `I_hat(x) = -(1/n) log P_hat(l(Y_n)/n in (x - delta, x + delta))` over
/// the grid, from the trace column at checkpoint `n`. Zero-count windows
/// report `+inf` with a finite lower confidence bound only.
pub fn empirical_rate(
    trace: &LengthTrace,
    n: usize,
    grid: &[f64],
    delta: f64,
    confidence: f64,
) -> Result<RateEstimate> {
    if !(delta > 0.0) {
        return Err(Error::Estimator("delta must be positive".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Estimator("confidence must lie in (0,1)".into()));
    }
    let lengths = trace.column(n)?;
    let samples = lengths.len();
    // Histogram once; every window count is then an integer-range sum.
    let max_len = lengths.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max_len + 1];
    for &l in &lengths {
        hist[l as usize] += 1;
    }
    let prefix: Vec<u64> = hist
        .iter()
        .scan(0u64, |acc, &h| {
            *acc += h;
            Some(*acc)
        })
        .collect();
    let count_in = |lo: f64, hi: f64| -> u64 {
        // Integers l with lo < l < hi.
        let first = (lo.floor() as i64 + 1).max(0) as usize;
        let last = (hi.ceil() as i64 - 1).min(max_len as i64);
        if last < first as i64 {
            return 0;
        }
        let last = last as usize;
        prefix[last] - if first == 0 { 0 } else { prefix[first - 1] }
    };
    let inv_n = 1.0 / n as f64;
    let mut rate = Vec::with_capacity(grid.len());
    let mut ci_low = Vec::with_capacity(grid.len());
    let mut ci_high = Vec::with_capacity(grid.len());
    let mut counts = Vec::with_capacity(grid.len());
    for &x in grid {
        let (lo, hi) = window_bounds(n, x, delta);
        let k = count_in(lo, hi);
        let (p_lo, p_hi) = clopper_pearson(k, samples as u64, confidence);
        let to_rate = |p: f64| {
            if p <= 0.0 {
                f64::INFINITY
            } else {
                (-p.ln() * inv_n).max(0.0)
            }
        };
        rate.push(to_rate(k as f64 / samples as f64));
        // Larger probability -> smaller rate, so the bounds swap.
        ci_low.push(to_rate(p_hi));
        ci_high.push(to_rate(p_lo));
        counts.push(k);
    }
    Ok(RateEstimate {
        n,
        delta,
        grid: grid.to_vec(),
        rate,
        ci_low,
        ci_high,
        counts,
        samples,
        confidence,
    })
}

/// Result of the importance-sampling window estimator.
#[derive(Debug, Clone, Copy)]
pub struct TiltedEstimate {
    /// Unbiased estimate of `P(l(Y_n) in n (x - delta, x + delta))`.
    pub p_hat: f64,
    /// Estimated variance of `p_hat` itself.
    pub variance: f64,
    pub samples: usize,
    pub theta: f64,
}

/// Samples increments from the tilted law
/// `mu_theta(g) ~ exp(theta l(g)) mu(g)` and reweights by
/// `Z(theta)^n exp(-theta sum_i l(X_i))`, which makes the window estimate
/// unbiased for the plain walk. At `theta = 0` this reduces to plain
/// Monte Carlo on the same random number stream, bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn tilted_estimate(
    spec: &GroupSpec,
    mu: &StepDistribution,
    theta: f64,
    n: usize,
    x: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<TiltedEstimate> {
    if samples == 0 || n == 0 {
        return Err(Error::Estimator("need n >= 1 and samples >= 1".into()));
    }
    let sampler = StepSampler::new(spec, mu, theta)?;
    let (lo, hi) = window_bounds(n, x, delta);
    let log_z = sampler.z_theta().ln();
    let one_sample = |i: usize| -> f64 {
        let mut rng = stream_rng(seed, i);
        let mut state = GroupElement::identity();
        let mut sum_incr = 0u64;
        for _ in 0..n {
            sum_incr += sampler.sample_append(spec, &mut state, &mut rng);
        }
        let length = spec.word_length(&state) as f64;
        if length > lo && length < hi {
            (n as f64 * log_z - theta * sum_incr as f64).exp()
        } else {
            0.0
        }
    };
    let values: Vec<f64> = if_rayon!(
        (0..samples).into_par_iter().map(one_sample).collect(),
        (0..samples).map(one_sample).collect()
    );
    // Sequential reduction keeps results independent of thread scheduling.
    let k = samples as f64;
    let mean = values.iter().sum::<f64>() / k;
    let variance = if samples < 2 {
        f64::NAN
    } else {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k
    };
    Ok(TiltedEstimate { p_hat: mean, variance, samples, theta })
}

fn stream_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// How `log_mgf` evaluates expectations.
#[derive(Debug, Clone, Copy)]
pub enum LogMgfMode {
    /// Exact rational length distributions (finite support only); the
    /// state budget bounds the reachable-set size.
    Exact { budget: usize },
    /// Monte Carlo with one trace shared across the time list.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Scaled log moment generating functions
/// `lambda_n(theta) = (1/n) log E[exp(theta l(Y_n))]` over a theta grid
/// and a list of times, plus the per-theta minimum over the list (a valid
/// upper bound for the limit at theta >= 0, by subadditivity).
#[derive(Debug, Clone)]
pub struct MgfEstimate {
    pub thetas: Vec<f64>,
    pub ns: Vec<usize>,
    /// `lambda[i][j]` is `lambda_{ns[i]}(thetas[j])`.
    pub lambda: Vec<Vec<f64>>,
    pub fekete_bound: Vec<f64>,
}

impl MgfEstimate {
    /// Row for one time as a grid function over theta.
    pub fn row(&self, n: usize) -> Result<GridFunction> {
        let i = self
            .ns
            .iter()
            .position(|&m| m == n)
            .ok_or_else(|| Error::Estimator(format!("{n} is not in the time list")))?;
        GridFunction::new(self.thetas.clone(), self.lambda[i].clone())
    }
}

pub fn log_mgf(
    spec: &GroupSpec,
    mu: &StepDistribution,
    thetas: &[f64],
    ns: &[usize],
    mode: LogMgfMode,
) -> Result<MgfEstimate> {
    if ns.is_empty() || thetas.is_empty() {
        return Err(Error::Estimator("empty theta grid or time list".into()));
    }
    if ns.iter().any(|&n| n == 0) {
        return Err(Error::Estimator("times must be >= 1".into()));
    }
    let lambda: Vec<Vec<f64>> = match mode {
        LogMgfMode::Exact { budget } => {
            let atoms = mu.rational_atoms()?;
            let dists = rational_length_distributions(spec, &atoms, ns, budget)?;
            ns.iter()
                .zip(&dists)
                .map(|(&n, dist)| {
                    thetas
                        .iter()
                        .map(|&theta| exact_lambda_n(dist, n, theta))
                        .collect()
                })
                .collect()
        }
        LogMgfMode::MonteCarlo { samples, seed } => {
            let mut sorted = ns.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            let trace = crate::walk::simulate(spec, mu, &sorted, samples, seed)?;
            ns.iter()
                .map(|&n| {
                    let lengths = trace.column(n)?;
                    Ok(thetas
                        .iter()
                        .map(|&theta| {
                            let log_mean = log_sum_exp(
                                lengths.iter().map(|&l| theta * l as f64),
                            ) - (samples as f64).ln();
                            log_mean / n as f64
                        })
                        .collect())
                })
                .collect::<Result<_>>()?
        }
    };
    let fekete_bound = (0..thetas.len())
        .map(|j| lambda.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(MgfEstimate { thetas: thetas.to_vec(), ns: ns.to_vec(), lambda, fekete_bound })
}

/// `(1/n) log sum_l p_l exp(theta l)` with the moment evaluated in exact
/// rational arithmetic at `t = exp(theta)` (as a binary float, converted
/// exactly). At `theta = 0` the moment is exactly 1 and the result is
/// exactly 0.
fn exact_lambda_n(dist: &[BigRational], n: usize, theta: f64) -> f64 {
    let t = BigRational::from_float(theta.exp()).expect("finite exp");
    moment_polynomial(dist, &t).to_f64().unwrap_or(f64::INFINITY).ln() / n as f64
}

/// `sum_l p_l t^l` in exact rational arithmetic.
pub fn moment_polynomial(dist: &[BigRational], t: &BigRational) -> BigRational {
    let mut power = BigRational::one();
    let mut acc = BigRational::zero();
    for (l, p) in dist.iter().enumerate() {
        if l > 0 {
            power *= t;
        }
        if !p.is_zero() {
            acc += p * &power;
        }
    }
    acc
}

/// `(1/n) log E[exp(theta l)]` from a floating length distribution, with
/// log-sum-exp stabilization. Used to evaluate oracle distributions.
pub fn log_mgf_from_lengths(dist: &[f64], n: usize, theta: f64) -> f64 {
    let log_terms = dist
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(l, &p)| p.ln() + theta * l as f64);
    log_sum_exp(log_terms) / n as f64
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// One pair's outcome in the subadditivity check of
/// `a_n = log E[exp(theta l(Y_n))]`.
#[derive(Debug, Clone, Copy)]
pub struct FeketePair {
    pub n: usize,
    pub m: usize,
    /// `a_{n+m} - a_n - a_m` as a float (for reporting).
    pub violation: f64,
    /// Exact rational verdict of `violation <= 0`.
    pub nonpositive: bool,
}

#[derive(Debug, Clone)]
pub struct FeketeReport {
    pub pairs: Vec<FeketePair>,
    pub max_violation: f64,
    /// True when every pair satisfied the inequality in exact arithmetic.
    pub all_nonpositive: bool,
}

/// Verifies `a_{n+m} <= a_n + a_m` exactly, where
/// `a_n = log E[t^{l(Y_n)}]` and `t = exp(theta)` is taken as the exact
/// rational value of the binary float. Sign decisions are exact; the
/// reported violations are float logs of exact ratios.
pub fn fekete_check(
    spec: &GroupSpec,
    atoms: &RationalAtoms,
    theta: f64,
    pairs: &[(usize, usize)],
    budget: usize,
) -> Result<FeketeReport> {
    if theta < 0.0 {
        return Err(Error::Estimator(
            "the subadditivity argument needs theta >= 0".into(),
        ));
    }
    let mut needed: Vec<usize> = pairs
        .iter()
        .flat_map(|&(n, m)| [n, m, n + m])
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let dists = rational_length_distributions(spec, atoms, &needed, budget)?;
    let moments: std::collections::BTreeMap<usize, BigRational> = {
        let t = BigRational::from_float(theta.exp()).expect("finite exp");
        needed
            .iter()
            .zip(&dists)
            .map(|(&n, dist)| (n, moment_polynomial(dist, &t)))
            .collect()
    };
    Ok(fekete_report_from_moments(&moments, pairs))
}

/// The comparison core, usable with externally computed exact moments.
pub fn fekete_report_from_moments(
    moments: &std::collections::BTreeMap<usize, BigRational>,
    pairs: &[(usize, usize)],
) -> FeketeReport {
    let mut out = Vec::with_capacity(pairs.len());
    let mut max_violation = f64::NEG_INFINITY;
    let mut all_nonpositive = true;
    for &(n, m) in pairs {
        let ratio = &moments[&(n + m)] / (&moments[&n] * &moments[&m]);
        let nonpositive = ratio <= BigRational::one();
        let violation = ratio.to_f64().map_or(f64::INFINITY, f64::ln);
        all_nonpositive &= nonpositive;
        max_violation = max_violation.max(violation);
        out.push(FeketePair { n, m, violation, nonpositive });
    }
    FeketeReport { pairs: out, max_violation, all_nonpositive }
}

/// Maximum midpoint convexity violation
/// `f(x_i) - (f(x_{i-1}) + f(x_{i+1})) / 2` over interior points whose
/// triple is finite; requires a uniform grid. Returns `-inf` when no
/// finite triple exists. Nonpositive values mean the sampled function is
/// midpoint convex on the grid.
pub fn convexity_audit(f: &GridFunction) -> Result<f64> {
    f.uniform_step()?;
    let v = f.values();
    let mut max = f64::NEG_INFINITY;
    for i in 1..v.len().saturating_sub(1) {
        if v[i - 1].is_finite() && v[i].is_finite() && v[i + 1].is_finite() {
            max = max.max(v[i] - (v[i - 1] + v[i + 1]) / 2.0);
        }
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{
        exact_length_distribution, rational_uniform, simulate, Admissibility,
    };

    fn f2() -> GroupSpec {
        GroupSpec::free_rank(2).unwrap()
    }

    fn f2_uniform(spec: &GroupSpec) -> StepDistribution {
        StepDistribution::uniform_generators(spec, None).unwrap()
    }

    #[test]
    fn rate_of_degenerate_walks() {
        let spec = f2();
        // Point mass at e: all mass at x = 0.
        let mu = StepDistribution::delta(&spec, GroupElement::identity()).unwrap();
        let trace = simulate(&spec, &mu, &[20], 100, 1).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let est = empirical_rate(&trace, 20, &grid, 0.05, 0.99).unwrap();
        assert_eq!(est.rate[0], 0.0);
        for i in 1..grid.len() {
            assert!(est.rate[i].is_infinite());
            assert!(est.ci_low[i].is_finite());
            assert!(est.ci_high[i].is_infinite());
        }

        // Deterministic one-letter walk: l(Y_n) = n.
        let mu = StepDistribution::delta(&spec, spec.parse_element("a1").unwrap()).unwrap();
        let trace = simulate(&spec, &mu, &[20], 100, 1).unwrap();
        let est = empirical_rate(&trace, 20, &grid, 0.1, 0.99).unwrap();
        assert_eq!(est.rate[4], 0.0);
        assert!(est.rate[2].is_infinite());
    }

    #[test]
    fn rate_is_monotone_in_delta() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let trace = simulate(&spec, &mu, &[40], 2000, 3).unwrap();
        let grid: Vec<f64> = GridFunction::uniform_grid(0.0, 0.05, 21);
        let narrow = empirical_rate(&trace, 40, &grid, 0.04, 0.99).unwrap();
        let wide = empirical_rate(&trace, 40, &grid, 0.08, 0.99).unwrap();
        for i in 0..grid.len() {
            assert!(wide.rate[i] <= narrow.rate[i]);
            assert!(wide.counts[i] >= narrow.counts[i]);
        }
    }

    #[test]
    fn rate_matches_exact_window_probability() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let n = 30;
        let trace = simulate(&spec, &mu, &[n], 200_000, 17).unwrap();
        let exact = exact_length_distribution(&spec, &mu, n, 1 << 22).unwrap();
        for x in [0.4, 0.5, 0.6] {
            let est = empirical_rate(&trace, n, &[x], 0.05, 0.99).unwrap();
            let (lo, hi) = window_bounds(n, x, 0.05);
            let p: f64 = exact
                .iter()
                .enumerate()
                .filter(|(l, _)| (*l as f64) > lo && (*l as f64) < hi)
                .map(|(_, &p)| p)
                .sum();
            let exact_rate = -p.ln() / n as f64;
            assert!(
                est.ci_low[0] <= exact_rate && exact_rate <= est.ci_high[0],
                "x={x}: exact {exact_rate} outside [{}, {}]",
                est.ci_low[0],
                est.ci_high[0]
            );
        }
    }

    #[test]
    fn tilted_at_zero_matches_plain_bit_for_bit() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let (n, x, delta, samples, seed) = (24, 0.5, 0.1, 500, 9);
        let tilted = tilted_estimate(&spec, &mu, 0.0, n, x, delta, samples, seed).unwrap();
        // Plain estimator on the same streams.
        let trace = simulate(&spec, &mu, &[n], samples, seed).unwrap();
        let (lo, hi) = window_bounds(n, x, delta);
        let count = trace
            .column(n)
            .unwrap()
            .iter()
            .filter(|&&l| (l as f64) > lo && (l as f64) < hi)
            .count();
        assert_eq!(tilted.p_hat, count as f64 / samples as f64);
    }

    #[test]
    fn tilted_weights_collapse_for_deterministic_walk() {
        let spec = f2();
        let mu = StepDistribution::delta(&spec, spec.parse_element("a1").unwrap()).unwrap();
        // Z(theta) = e^theta, every weight is exactly 1, the estimate is
        // the indicator.
        for theta in [0.3, 1.0] {
            let hit = tilted_estimate(&spec, &mu, theta, 10, 1.0, 0.05, 50, 2).unwrap();
            assert_eq!(hit.p_hat, 1.0);
            let miss = tilted_estimate(&spec, &mu, theta, 10, 0.5, 0.05, 50, 2).unwrap();
            assert_eq!(miss.p_hat, 0.0);
        }
    }

    #[test]
    fn tilted_is_unbiased_by_enumeration() {
        // Expectation over all increment tuples of the weighted estimator
        // equals the exact window probability.
        let spec = f2();
        let mu = f2_uniform(&spec);
        let (n, theta, x, delta) = (3usize, 0.8f64, 1.0f64, 0.1f64);
        let z = mu.exp_moment(&spec, theta);
        let atoms = mu.atoms();
        let (lo, hi) = window_bounds(n, x, delta);
        let mut expectation = 0.0;
        let k = atoms.len();
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            let mut state = GroupElement::identity();
            let mut tilted_prob = 1.0;
            let mut sum_incr = 0u64;
            for _ in 0..n {
                let (g, w) = &atoms[c % k];
                c /= k;
                let l = spec.word_length(g);
                tilted_prob *= w * (theta * l as f64).exp() / z;
                sum_incr += l;
                spec.append(&mut state, g);
            }
            let length = spec.word_length(&state) as f64;
            if length > lo && length < hi {
                let weight = (n as f64 * z.ln() - theta * sum_incr as f64).exp();
                expectation += tilted_prob * weight;
            }
        }
        // P(l(Y_3) = 3) = 36/64 from the exact distribution.
        let exact = exact_length_distribution(&spec, &mu, n, 1 << 16).unwrap();
        let p: f64 = exact
            .iter()
            .enumerate()
            .filter(|(l, _)| (*l as f64) > lo && (*l as f64) < hi)
            .map(|(_, &p)| p)
            .sum();
        assert!((expectation - p).abs() < 1e-12, "{expectation} vs {p}");
        assert!((p - 36.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn tilted_agrees_with_exact_at_n_12() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let n = 12;
        // P(l(Y_12) = 12) = (3/4)^11: never cancel after the first step.
        let exact = exact_length_distribution(&spec, &mu, n, 1 << 22).unwrap();
        let p12 = exact[12];
        assert!((p12 - 0.75f64.powi(11)).abs() < 1e-15);
        let est = tilted_estimate(&spec, &mu, 1.0, n, 1.0, 0.02, 20_000, 11).unwrap();
        let sigma = est.variance.sqrt();
        assert!(
            (est.p_hat - p12).abs() <= 3.0 * sigma,
            "estimate {} vs exact {p12}, sigma {sigma}",
            est.p_hat
        );
    }

    #[test]
    fn tilted_requires_finite_moment() {
        let spec = GroupSpec::new(vec![
            crate::group::FactorSpec::infinite_cyclic(false),
            crate::group::FactorSpec::finite_cyclic(2),
        ])
        .unwrap();
        let mu = StepDistribution::new(
            &spec,
            vec![(spec.parse_element("b1").unwrap(), 0.5)],
            Some(crate::walk::TailSpec {
                factor: 0,
                law: crate::walk::TailLaw::Geometric { ratio: 0.5 },
                mass: 0.5,
            }),
        )
        .unwrap();
        // Threshold is ln 2; tilting beyond it must refuse.
        assert!(tilted_estimate(&spec, &mu, 1.0, 5, 0.5, 0.1, 10, 1).is_err());
        assert!(tilted_estimate(&spec, &mu, 0.5, 5, 0.5, 0.1, 10, 1).is_ok());
    }

    #[test]
    fn log_mgf_exact_values() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let est = log_mgf(
            &spec,
            &mu,
            &[0.0, 0.5],
            &[4, 8, 12],
            LogMgfMode::Exact { budget: 1 << 22 },
        )
        .unwrap();
        // lambda_n(0) = 0 exactly in exact mode.
        for row in &est.lambda {
            assert_eq!(row[0], 0.0);
        }
        // Doubling subadditivity: lambda_8 <= lambda_4 at theta >= 0.
        assert!(est.lambda[1][1] <= est.lambda[0][1]);
        assert_eq!(est.fekete_bound[1], est.lambda[2][1].min(est.lambda[1][1]));
    }

    #[test]
    fn log_mgf_deterministic_walk_is_linear() {
        let spec = f2();
        let mu = StepDistribution::delta(&spec, spec.parse_element("a1").unwrap()).unwrap();
        let thetas = [0.0, 0.25, 1.0];
        let est = log_mgf(
            &spec,
            &mu,
            &thetas,
            &[3, 7],
            LogMgfMode::Exact { budget: 1 << 10 },
        )
        .unwrap();
        for row in &est.lambda {
            for (l, theta) in row.iter().zip(&thetas) {
                assert!((l - theta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_mgf_monte_carlo_tracks_exact() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let thetas = [0.0, 0.5, 1.0];
        let exact = log_mgf(
            &spec,
            &mu,
            &thetas,
            &[8],
            LogMgfMode::Exact { budget: 1 << 22 },
        )
        .unwrap();
        let mc = log_mgf(
            &spec,
            &mu,
            &thetas,
            &[8],
            LogMgfMode::MonteCarlo { samples: 200_000, seed: 5 },
        )
        .unwrap();
        for (a, b) in exact.lambda[0].iter().zip(&mc.lambda[0]) {
            assert!((a - b).abs() < 5e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn fekete_degenerate_and_deterministic() {
        let spec = f2();
        let pairs = [(1usize, 1usize), (1, 2), (2, 2)];
        // Point mass at e: a_n = 0, violation exactly 0.
        let e = rational_uniform(&[GroupElement::identity()]);
        let report = fekete_check(&spec, &e, 0.7, &pairs, 1 << 10).unwrap();
        assert!(report.all_nonpositive);
        assert_eq!(report.max_violation, 0.0);
        // Deterministic walk: a_n = n theta, equality.
        let x = rational_uniform(&[spec.parse_element("a1").unwrap()]);
        let report = fekete_check(&spec, &x, 1.0, &pairs, 1 << 10).unwrap();
        assert!(report.all_nonpositive);
        assert_eq!(report.max_violation, 0.0);
    }

    #[test]
    fn fekete_f2_small_range() {
        let spec = f2();
        let atoms = rational_uniform(&spec.one_step_generators(None).unwrap());
        let mut pairs = Vec::new();
        for n in 1..=5 {
            for m in n..=5 {
                pairs.push((n, m));
            }
        }
        let report = fekete_check(&spec, &atoms, 1.0, &pairs, 1 << 22).unwrap();
        assert!(report.all_nonpositive, "violations: {:?}", report.pairs);
        assert!(report.max_violation <= 0.0);
    }

    #[test]
    fn fekete_rejects_negative_theta() {
        let spec = f2();
        let atoms = rational_uniform(&[spec.parse_element("a1").unwrap()]);
        assert!(fekete_check(&spec, &atoms, -0.5, &[(1, 1)], 1 << 10).is_err());
    }

    #[test]
    fn convexity_audit_quadratics() {
        let xs = GridFunction::uniform_grid(-1.0, 0.1, 21);
        let h = 0.1;
        let convex =
            GridFunction::new(xs.clone(), xs.iter().map(|x| x * x).collect()).unwrap();
        let v = convexity_audit(&convex).unwrap();
        assert!((v - (-h * h)).abs() < 1e-12);

        let concave =
            GridFunction::new(xs.clone(), xs.iter().map(|x| -x * x).collect()).unwrap();
        let v = convexity_audit(&concave).unwrap();
        assert!((v - h * h).abs() < 1e-12);

        // Non-uniform grids are rejected.
        let f = GridFunction::new(vec![0.0, 0.3, 1.0], vec![0.0; 3]).unwrap();
        assert!(convexity_audit(&f).is_err());
    }

    #[test]
    fn mgf_rows_are_midpoint_convex() {
        let spec = f2();
        let mu = f2_uniform(&spec);
        let thetas: Vec<f64> = GridFunction::uniform_grid(-1.0, 0.25, 9);
        let est = log_mgf(
            &spec,
            &mu,
            &thetas,
            &[6],
            LogMgfMode::Exact { budget: 1 << 20 },
        )
        .unwrap();
        let row = est.row(6).unwrap();
        assert!(convexity_audit(&row).unwrap() <= 1e-12);
    }

    #[test]
    fn admissibility_gate_is_checkable_here() {
        // Sanity link between modules: the measures used in this file are
        // admissible.
        let spec = f2();
        let mu = f2_uniform(&spec);
        assert_eq!(
            crate::walk::check_admissible(&spec, &mu, 1, None).unwrap(),
            Admissibility::Admissible
        );
    }
}
