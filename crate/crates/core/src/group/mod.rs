//! Exact arithmetic on free products of cyclic and free factors.
//!
//! Elements are kept in free-product normal form: an alternating sequence
//! of nontrivial syllables from distinct factors. The word length is the
//! relative one: a syllable from a peripheral factor costs 1 regardless of
//! its payload, while letters of free factors (and powers of a
//! non-peripheral infinite-cyclic generator) are counted individually.

mod ball;
mod element;
mod text;

pub use element::{GroupElement, Payload, Syllable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isomorphism type of a single free-product factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FactorKind {
    /// Z/mZ with m >= 2.
    FiniteCyclic { order: u32 },
    /// Z.
    InfiniteCyclic,
    /// Free group of the given rank >= 1.
    Free { rank: u32 },
}

/// One factor of the free product, with its peripheral designation.
///
/// Peripheral factors contribute all of their nontrivial elements to the
/// generating set, so a whole syllable costs one letter. Non-peripheral
/// factors contribute only their standard generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub peripheral: bool,
}

impl FactorSpec {
    pub fn finite_cyclic(order: u32) -> Self {
        FactorSpec {
            kind: FactorKind::FiniteCyclic { order },
            peripheral: true,
        }
    }

    pub fn infinite_cyclic(peripheral: bool) -> Self {
        FactorSpec {
            kind: FactorKind::InfiniteCyclic,
            peripheral,
        }
    }

    pub fn free(rank: u32) -> Self {
        FactorSpec {
            kind: FactorKind::Free { rank },
            peripheral: false,
        }
    }

    /// Number of distinct text-form letters this factor consumes.
    pub(crate) fn letter_count(&self) -> usize {
        match self.kind {
            FactorKind::Free { rank } => rank as usize,
            _ => 1,
        }
    }
}

/// A free product of cyclic and free factors.
///
/// The spec is validated at construction: factor parameters must be in
/// range, free factors cannot be peripheral, and the resulting group must
/// be non-elementary (infinite and not virtually cyclic).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGroupSpec", into = "RawGroupSpec")]
pub struct GroupSpec {
    factors: Vec<FactorSpec>,
}

impl GroupSpec {
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpec("at least one factor required".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            match f.kind {
                FactorKind::FiniteCyclic { order } => {
                    if order < 2 {
                        return Err(Error::InvalidSpec(format!(
                            "factor {i}: finite-cyclic order must be >= 2, got {order}"
                        )));
                    }
                }
                FactorKind::Free { rank } => {
                    if rank < 1 {
                        return Err(Error::InvalidSpec(format!(
                            "factor {i}: free rank must be >= 1"
                        )));
                    }
                    if f.peripheral {
                        return Err(Error::InvalidSpec(format!(
                            "factor {i}: free factors cannot be peripheral"
                        )));
                    }
                }
                FactorKind::InfiniteCyclic => {}
            }
        }
        let spec = GroupSpec { factors };
        if !spec.is_non_elementary() {
            return Err(Error::InvalidSpec(
                "group is elementary (finite or virtually cyclic); \
                 need a free factor of rank >= 2, or at least two factors \
                 not both of order 2"
                    .into(),
            ));
        }
        if spec.letter_total() > 26 {
            return Err(Error::InvalidSpec(
                "text form supports at most 26 generator letters".into(),
            ));
        }
        Ok(spec)
    }

    /// Z/2 * Z/3, both factors peripheral. The smallest non-elementary
    /// free product of finite groups.
    pub fn z2_star_z3() -> Self {
        GroupSpec::new(vec![FactorSpec::finite_cyclic(2), FactorSpec::finite_cyclic(3)])
            .expect("valid spec")
    }

    /// Free group of rank 2 as a single free factor; the peripheral
    /// collection is trivial.
    pub fn free_rank(rank: u32) -> Result<Self> {
        GroupSpec::new(vec![FactorSpec::free(rank)])
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn factor(&self, index: usize) -> Option<&FactorSpec> {
        self.factors.get(index)
    }

    /// True if some peripheral factor is infinite, in which case ball
    /// enumeration and breadth-first search need a payload truncation.
    pub fn has_infinite_peripheral(&self) -> bool {
        self.factors
            .iter()
            .any(|f| f.peripheral && matches!(f.kind, FactorKind::InfiniteCyclic))
    }

    fn is_non_elementary(&self) -> bool {
        if self
            .factors
            .iter()
            .any(|f| matches!(f.kind, FactorKind::Free { rank } if rank >= 2))
        {
            return true;
        }
        if self.factors.len() < 2 {
            return false;
        }
        // Z/2 * Z/2 is infinite dihedral, hence virtually cyclic.
        !(self.factors.len() == 2
            && self
                .factors
                .iter()
                .all(|f| matches!(f.kind, FactorKind::FiniteCyclic { order: 2 })))
    }

    pub(crate) fn letter_total(&self) -> usize {
        self.factors.iter().map(|f| f.letter_count()).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct RawGroupSpec {
    factors: Vec<RawFactor>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawFactor {
    FiniteCyclic {
        order: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        peripheral: Option<bool>,
    },
    InfiniteCyclic {
        #[serde(skip_serializing_if = "Option::is_none")]
        peripheral: Option<bool>,
    },
    Free {
        rank: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        peripheral: Option<bool>,
    },
}

impl TryFrom<RawGroupSpec> for GroupSpec {
    type Error = Error;

    fn try_from(raw: RawGroupSpec) -> Result<Self> {
        let factors = raw
            .factors
            .into_iter()
            .map(|f| match f {
                RawFactor::FiniteCyclic { order, peripheral } => FactorSpec {
                    kind: FactorKind::FiniteCyclic { order },
                    peripheral: peripheral.unwrap_or(true),
                },
                RawFactor::InfiniteCyclic { peripheral } => FactorSpec {
                    kind: FactorKind::InfiniteCyclic,
                    peripheral: peripheral.unwrap_or(true),
                },
                RawFactor::Free { rank, peripheral } => FactorSpec {
                    kind: FactorKind::Free { rank },
                    // No default flip here: an explicit `peripheral = true`
                    // must fail validation rather than be silently fixed.
                    peripheral: peripheral.unwrap_or(false),
                },
            })
            .collect();
        GroupSpec::new(factors)
    }
}

impl From<GroupSpec> for RawGroupSpec {
    fn from(spec: GroupSpec) -> Self {
        let factors = spec
            .factors
            .into_iter()
            .map(|f| match f.kind {
                FactorKind::FiniteCyclic { order } => RawFactor::FiniteCyclic {
                    order,
                    peripheral: (!f.peripheral).then_some(false),
                },
                FactorKind::InfiniteCyclic => RawFactor::InfiniteCyclic {
                    peripheral: (!f.peripheral).then_some(false),
                },
                FactorKind::Free { rank } => RawFactor::Free {
                    rank,
                    peripheral: None,
                },
            })
            .collect();
        RawGroupSpec { factors }
    }
}
