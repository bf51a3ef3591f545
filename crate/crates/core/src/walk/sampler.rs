use num_bigint::BigInt;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Geometric, Zeta};

use super::{StepDistribution, TailLaw};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

/// Draws increments from `mu_theta(g) ~ exp(theta * l(g)) * mu(g)`.
///
/// At `theta = 0` this is the plain sampler for `mu`, drawing the same
/// stream of increments bit for bit. `z_theta` is the normalizer
/// `Z(theta) = exp_moment(mu, theta)` used in likelihood weights.
#[derive(Debug, Clone)]
pub struct StepSampler {
    atoms: Vec<GroupElement>,
    atom_lengths: Vec<u64>,
    picker: WeightedIndex<f64>,
    /// Tail slot, if any, sits at index `atoms.len()` of the picker.
    tail: Option<TiltedTail>,
    z_theta: f64,
    theta: f64,
}

#[derive(Debug, Clone)]
enum TiltedTail {
    Geometric { factor: usize, magnitude: Geometric },
    Polynomial { factor: usize, magnitude: Zeta<f64> },
}

impl StepSampler {
    pub fn new(spec: &GroupSpec, mu: &StepDistribution, theta: f64) -> Result<Self> {
        let z_theta = mu.exp_moment(spec, theta);
        if !z_theta.is_finite() {
            return Err(Error::InfiniteMoment(format!(
                "exp_moment is infinite at theta = {theta}; tilting undefined"
            )));
        }
        let atoms: Vec<GroupElement> = mu.atoms().iter().map(|(g, _)| g.clone()).collect();
        let atom_lengths: Vec<u64> = atoms.iter().map(|g| spec.word_length(g)).collect();
        let mut weights: Vec<f64> = mu
            .atoms()
            .iter()
            .zip(&atom_lengths)
            .map(|((_, w), &l)| w * (theta * l as f64).exp())
            .collect();
        let tail = match mu.tail() {
            None => None,
            Some(t) => {
                let peripheral = spec.factors()[t.factor].peripheral;
                let geometric = |ratio: f64| {
                    // P(|k| = j) ~ ratio^j for j >= 1; the library counts
                    // failures before the first success, hence the shift
                    // applied at sampling time.
                    Geometric::new(1.0 - ratio).expect("ratio in (0,1)")
                };
                let (tilted_mass, tail) = if peripheral {
                    // Whole syllables of length 1: tilting rescales the
                    // tail mass only, the conditional law is unchanged.
                    let tail = match t.law {
                        TailLaw::Geometric { ratio } => TiltedTail::Geometric {
                            factor: t.factor,
                            magnitude: geometric(ratio),
                        },
                        TailLaw::Polynomial { exponent } => TiltedTail::Polynomial {
                            factor: t.factor,
                            magnitude: Zeta::new(exponent).expect("exponent > 1"),
                        },
                    };
                    (t.mass * theta.exp(), tail)
                } else {
                    match t.law {
                        TailLaw::Geometric { ratio } => {
                            // exp(theta k) q^k is again geometric.
                            let tilted_ratio = ratio * theta.exp();
                            debug_assert!(tilted_ratio < 1.0, "guarded by exp_moment above");
                            let mass =
                                t.mass * (1.0 - ratio) * theta.exp() / (1.0 - tilted_ratio);
                            (
                                mass,
                                TiltedTail::Geometric {
                                    factor: t.factor,
                                    magnitude: geometric(tilted_ratio),
                                },
                            )
                        }
                        TailLaw::Polynomial { exponent } => {
                            if theta != 0.0 {
                                return Err(Error::InfiniteMoment(
                                    "polynomial tails admit no exponential tilting".into(),
                                ));
                            }
                            (
                                t.mass,
                                TiltedTail::Polynomial {
                                    factor: t.factor,
                                    magnitude: Zeta::new(exponent).expect("exponent > 1"),
                                },
                            )
                        }
                    }
                };
                weights.push(tilted_mass);
                Some(tail)
            }
        };
        let picker = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidMeasure(format!("bad sampling weights: {e}")))?;
        Ok(StepSampler { atoms, atom_lengths, picker, tail, z_theta, theta })
    }

    pub fn z_theta(&self) -> f64 {
        self.z_theta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Draws one increment, multiplies it into `state` in place, and
    /// returns the increment's own word length (which the tilted
    /// estimator accumulates for the likelihood weight).
    pub fn sample_append(
        &self,
        spec: &GroupSpec,
        state: &mut GroupElement,
        rng: &mut ChaCha8Rng,
    ) -> u64 {
        let idx = self.picker.sample(rng);
        if idx < self.atoms.len() {
            spec.append(state, &self.atoms[idx]);
            return self.atom_lengths[idx];
        }
        let g = self.sample_tail(spec, rng);
        let l = spec.word_length(&g);
        spec.append(state, &g);
        l
    }

    /// One increment as an owned element.
    pub fn sample(&self, spec: &GroupSpec, rng: &mut ChaCha8Rng) -> GroupElement {
        let idx = self.picker.sample(rng);
        if idx < self.atoms.len() {
            return self.atoms[idx].clone();
        }
        self.sample_tail(spec, rng)
    }

    fn sample_tail(&self, spec: &GroupSpec, rng: &mut ChaCha8Rng) -> GroupElement {
        let (factor, magnitude) = match self.tail.as_ref().expect("tail index drawn") {
            TiltedTail::Geometric { factor, magnitude } => (*factor, 1 + magnitude.sample(rng)),
            TiltedTail::Polynomial { factor, magnitude } => {
                (*factor, magnitude.sample(rng) as u64)
            }
        };
        let sign: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
        let k = BigInt::from(sign) * BigInt::from(magnitude);
        spec.power_element(factor, &k).expect("valid tail factor")
    }
}
