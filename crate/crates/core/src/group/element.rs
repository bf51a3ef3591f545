use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{FactorKind, GroupSpec};
use crate::error::{Error, Result};

/// Payload of one syllable. Never represents the factor's identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    /// Nonzero residue mod m, in 1..m.
    Residue(u32),
    /// Nonzero power of the infinite-cyclic generator. Arbitrary precision
    /// so heavy-tail increments cannot overflow.
    Power(BigInt),
    /// Nonempty freely reduced word; letters are +/-1..=rank.
    Word(Vec<i32>),
}

impl Payload {
    /// Key for the deterministic enumeration order: small before large,
    /// positive before negative, words by length then letterwise.
    fn order_key(&self, other: &Payload) -> Ordering {
        match (self, other) {
            (Payload::Residue(a), Payload::Residue(b)) => a.cmp(b),
            (Payload::Power(a), Payload::Power(b)) => (a.magnitude(), a.is_negative())
                .cmp(&(b.magnitude(), b.is_negative())),
            (Payload::Word(a), Payload::Word(b)) => {
                let key = |w: &[i32]| {
                    (w.len(), w.iter().map(|&l| (l.unsigned_abs(), l < 0)).collect::<Vec<_>>())
                };
                key(a).cmp(&key(b))
            }
            // Mixed payload kinds never share a factor; fall back to a
            // stable arbitrary order.
            (Payload::Residue(_), _) => Ordering::Less,
            (_, Payload::Residue(_)) => Ordering::Greater,
            (Payload::Power(_), _) => Ordering::Less,
            (_, Payload::Power(_)) => Ordering::Greater,
        }
    }
}

/// A maximal block of one factor inside a normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syllable {
    pub factor: usize,
    pub payload: Payload,
}

impl PartialOrd for Syllable {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Syllable {
    fn cmp(&self, other: &Self) -> Ordering {
        self.factor
            .cmp(&other.factor)
            .then_with(|| self.payload.order_key(&other.payload))
    }
}

/// A group element in free-product normal form: alternating nontrivial
/// syllables from distinct factors. The empty sequence is the identity.
///
/// Equality is structural equality of normal forms, which is element
/// equality by the normal form theorem for free products.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    syllables: Vec<Syllable>,
}

impl GroupElement {
    /// The identity element.
    pub fn identity() -> Self {
        GroupElement { syllables: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub(crate) fn from_syllables_unchecked(syllables: Vec<Syllable>) -> Self {
        GroupElement { syllables }
    }
}

impl GroupSpec {
    /// Builds an element from syllables, validating the normal-form
    /// invariants against this spec.
    pub fn element(&self, syllables: Vec<Syllable>) -> Result<GroupElement> {
        let g = GroupElement { syllables };
        self.validate_element(&g)?;
        Ok(g)
    }

    /// Checks that `g` is a valid normal form under this spec: factor
    /// indices in range, payload kinds matching, payloads nontrivial and
    /// reduced, adjacent syllables from distinct factors.
    pub fn validate_element(&self, g: &GroupElement) -> Result<()> {
        let mut last_factor = None;
        for syl in &g.syllables {
            let factor = self.factor(syl.factor).ok_or_else(|| {
                Error::InvalidElement(format!("factor index {} out of range", syl.factor))
            })?;
            if last_factor == Some(syl.factor) {
                return Err(Error::InvalidElement(format!(
                    "adjacent syllables share factor {}",
                    syl.factor
                )));
            }
            last_factor = Some(syl.factor);
            match (&factor.kind, &syl.payload) {
                (FactorKind::FiniteCyclic { order }, Payload::Residue(r)) => {
                    if *r == 0 || r >= order {
                        return Err(Error::InvalidElement(format!(
                            "residue {r} out of range 1..{order}"
                        )));
                    }
                }
                (FactorKind::InfiniteCyclic, Payload::Power(p)) => {
                    if p.is_zero() {
                        return Err(Error::InvalidElement("zero power syllable".into()));
                    }
                }
                (FactorKind::Free { rank }, Payload::Word(w)) => {
                    if w.is_empty() {
                        return Err(Error::InvalidElement("empty free word".into()));
                    }
                    for &l in w {
                        if l == 0 || l.unsigned_abs() > *rank {
                            return Err(Error::InvalidElement(format!(
                                "letter {l} out of range for rank {rank}"
                            )));
                        }
                    }
                    for pair in w.windows(2) {
                        if pair[0] == -pair[1] {
                            return Err(Error::InvalidElement(
                                "free word is not freely reduced".into(),
                            ));
                        }
                    }
                }
                _ => {
                    return Err(Error::InvalidElement(format!(
                        "payload kind does not match factor {} kind",
                        syl.factor
                    )));
                }
            }
        }
        Ok(())
    }

    /// Normal form of `a * b` by concatenation with cascading junction
    /// reduction.
    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut out = a.clone();
        self.append(&mut out, b);
        out
    }

    /// In-place right multiplication: `acc <- acc * rhs`. This is the hot
    /// path of walk simulation; amortized cost is the seam work only.
    pub fn append(&self, acc: &mut GroupElement, rhs: &GroupElement) {
        for syl in &rhs.syllables {
            self.push_syllable(&mut acc.syllables, syl);
        }
    }

    /// Product of a slice of elements, left to right.
    pub fn product<'a, I>(&self, items: I) -> GroupElement
    where
        I: IntoIterator<Item = &'a GroupElement>,
    {
        let mut out = GroupElement::identity();
        for g in items {
            self.append(&mut out, g);
        }
        out
    }

    fn push_syllable(&self, stack: &mut Vec<Syllable>, syl: &Syllable) {
        match stack.last_mut() {
            Some(top) if top.factor == syl.factor => {
                let trivial = match (&mut top.payload, &syl.payload) {
                    (Payload::Residue(r1), Payload::Residue(r2)) => {
                        let order = match self.factor(top.factor).map(|f| &f.kind) {
                            Some(FactorKind::FiniteCyclic { order }) => *order,
                            _ => unreachable!("residue payload on non-finite factor"),
                        };
                        *r1 = (*r1 + r2) % order;
                        *r1 == 0
                    }
                    (Payload::Power(p1), Payload::Power(p2)) => {
                        *p1 += p2;
                        p1.is_zero()
                    }
                    (Payload::Word(w1), Payload::Word(w2)) => {
                        let mut i = 0;
                        while let Some(&last) = w1.last() {
                            if i < w2.len() && last == -w2[i] {
                                w1.pop();
                                i += 1;
                            } else {
                                break;
                            }
                        }
                        w1.extend_from_slice(&w2[i..]);
                        w1.is_empty()
                    }
                    _ => unreachable!("mismatched payload kinds within one factor"),
                };
                if trivial {
                    stack.pop();
                }
            }
            _ => stack.push(syl.clone()),
        }
    }

    /// Inverse: reverse the syllables and invert each payload.
    pub fn invert(&self, a: &GroupElement) -> GroupElement {
        let syllables = a
            .syllables
            .iter()
            .rev()
            .map(|syl| {
                let payload = match &syl.payload {
                    Payload::Residue(r) => {
                        let order = match self.factor(syl.factor).map(|f| &f.kind) {
                            Some(FactorKind::FiniteCyclic { order }) => *order,
                            _ => unreachable!("residue payload on non-finite factor"),
                        };
                        Payload::Residue(order - r)
                    }
                    Payload::Power(p) => Payload::Power(-p),
                    Payload::Word(w) => Payload::Word(w.iter().rev().map(|&l| -l).collect()),
                };
                Syllable { factor: syl.factor, payload }
            })
            .collect();
        GroupElement { syllables }
    }

    /// Relative word length: whole peripheral syllables cost 1; letters of
    /// free factors and powers of a non-peripheral infinite-cyclic
    /// generator are counted one by one. Nontrivial elements of finite
    /// factors always cost 1 since they all belong to the generating set.
    pub fn word_length(&self, g: &GroupElement) -> u64 {
        g.syllables
            .iter()
            .map(|syl| {
                let factor = &self.factors()[syl.factor];
                match (&factor.kind, &syl.payload) {
                    (FactorKind::FiniteCyclic { .. }, _) => 1,
                    (FactorKind::InfiniteCyclic, Payload::Power(p)) => {
                        if factor.peripheral {
                            1
                        } else {
                            p.magnitude().to_u64().unwrap_or(u64::MAX)
                        }
                    }
                    (FactorKind::Free { .. }, Payload::Word(w)) => w.len() as u64,
                    _ => unreachable!("validated element"),
                }
            })
            .sum()
    }
}
