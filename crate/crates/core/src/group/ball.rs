use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;

use super::{FactorKind, GroupElement, GroupSpec, Payload, Syllable};
use crate::error::{Error, Result};

impl GroupSpec {
    /// Enumerates the closed ball `{g : l(g) <= radius}` by direct normal
    /// form construction, sorted by length and then by the deterministic
    /// structural order (identity first).
    ///
    /// If a peripheral factor is infinite-cyclic the ball is infinite and
    /// `truncation` is required; it caps the absolute payload of every
    /// infinite-cyclic syllable. No silent truncation happens otherwise.
    pub fn ball(&self, radius: u64, truncation: Option<u64>) -> Result<Vec<GroupElement>> {
        if self.has_infinite_peripheral() && truncation.is_none() {
            return Err(Error::TruncationRequired(
                "a peripheral factor is infinite-cyclic, so the ball is infinite; \
                 supply a payload truncation"
                    .into(),
            ));
        }
        let mut out = Vec::new();
        let mut prefix: Vec<Syllable> = Vec::new();
        self.extend_ball(&mut prefix, None, radius, truncation, &mut out);
        out.sort_by(|a, b| {
            (self.word_length(a), a).cmp(&(self.word_length(b), b))
        });
        Ok(out)
    }

    fn extend_ball(
        &self,
        prefix: &mut Vec<Syllable>,
        last_factor: Option<usize>,
        budget: u64,
        truncation: Option<u64>,
        out: &mut Vec<GroupElement>,
    ) {
        out.push(GroupElement::from_syllables_unchecked(prefix.clone()));
        if budget == 0 {
            return;
        }
        for (i, factor) in self.factors().iter().enumerate() {
            if last_factor == Some(i) {
                continue;
            }
            match factor.kind {
                FactorKind::FiniteCyclic { order } => {
                    for r in 1..order {
                        prefix.push(Syllable { factor: i, payload: Payload::Residue(r) });
                        self.extend_ball(prefix, Some(i), budget - 1, truncation, out);
                        prefix.pop();
                    }
                }
                FactorKind::InfiniteCyclic => {
                    // For a non-peripheral Z factor the budget already
                    // bounds |k|; a supplied truncation caps it further.
                    let max_abs = if factor.peripheral {
                        truncation.expect("checked above")
                    } else {
                        truncation.map_or(budget, |t| t.min(budget))
                    };
                    for k in 1..=max_abs {
                        let cost = if factor.peripheral { 1 } else { k };
                        if cost > budget {
                            break;
                        }
                        for sign in [1i64, -1] {
                            let payload = Payload::Power(BigInt::from(sign * k as i64));
                            prefix.push(Syllable { factor: i, payload });
                            self.extend_ball(prefix, Some(i), budget - cost, truncation, out);
                            prefix.pop();
                        }
                    }
                }
                FactorKind::Free { rank } => {
                    self.extend_free_words(prefix, i, rank, Vec::new(), budget, truncation, out);
                }
            }
        }
    }

    /// Grows a reduced word letter by letter; each nonempty state is a
    /// complete syllable to recurse past.
    #[allow(clippy::too_many_arguments)]
    fn extend_free_words(
        &self,
        prefix: &mut Vec<Syllable>,
        factor: usize,
        rank: u32,
        word: Vec<i32>,
        budget: u64,
        truncation: Option<u64>,
        out: &mut Vec<GroupElement>,
    ) {
        if budget == 0 {
            return;
        }
        let last = word.last().copied();
        for letter in 1..=rank as i32 {
            for signed in [letter, -letter] {
                if last == Some(-signed) {
                    continue;
                }
                let mut next = word.clone();
                next.push(signed);
                prefix.push(Syllable { factor, payload: Payload::Word(next.clone()) });
                self.extend_ball(prefix, Some(factor), budget - 1, truncation, out);
                prefix.pop();
                self.extend_free_words(prefix, factor, rank, next, budget - 1, truncation, out);
            }
        }
    }

    /// The elements of length exactly 1: the generating set
    /// `S u U_i (H_i \ {e})`, truncated for infinite peripheral factors.
    pub fn one_step_generators(&self, truncation: Option<u64>) -> Result<Vec<GroupElement>> {
        Ok(self
            .ball(1, truncation)?
            .into_iter()
            .filter(|g| !g.is_identity())
            .collect())
    }

    /// Graph distances from the identity in the (truncated) relative
    /// Cayley graph, for every vertex within `max_radius`, by
    /// breadth-first search over one-step multiplications. Independent of
    /// `word_length` by construction.
    pub fn bfs_distances(
        &self,
        max_radius: u64,
        truncation: Option<u64>,
    ) -> Result<HashMap<GroupElement, u64>> {
        if self.has_infinite_peripheral() && truncation.is_none() {
            return Err(Error::TruncationRequired(
                "the relative generating set is infinite; supply a truncation \
                 to run breadth-first search"
                    .into(),
            ));
        }
        let generators = self.one_step_generators(truncation)?;
        let mut dist = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(GroupElement::identity(), 0u64);
        queue.push_back(GroupElement::identity());
        while let Some(g) = queue.pop_front() {
            let d = dist[&g];
            if d == max_radius {
                continue;
            }
            for s in &generators {
                let next = self.multiply(&g, s);
                dist.entry(next.clone()).or_insert_with(|| {
                    queue.push_back(next);
                    d + 1
                });
            }
        }
        Ok(dist)
    }

    /// Graph distance from the identity to `g`, or `None` if it exceeds
    /// `max_radius`.
    pub fn bfs_length_oracle(
        &self,
        g: &GroupElement,
        max_radius: u64,
        truncation: Option<u64>,
    ) -> Result<Option<u64>> {
        if g.is_identity() {
            return Ok(Some(0));
        }
        // Level-by-level search with early exit on the target.
        if self.has_infinite_peripheral() && truncation.is_none() {
            return Err(Error::TruncationRequired(
                "the relative generating set is infinite; supply a truncation \
                 to run breadth-first search"
                    .into(),
            ));
        }
        let generators = self.one_step_generators(truncation)?;
        let mut dist = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(GroupElement::identity(), 0u64);
        queue.push_back(GroupElement::identity());
        while let Some(h) = queue.pop_front() {
            let d = dist[&h];
            if d == max_radius {
                continue;
            }
            for s in &generators {
                let next = self.multiply(&h, s);
                if !dist.contains_key(&next) {
                    if next == *g {
                        return Ok(Some(d + 1));
                    }
                    dist.insert(next.clone(), d + 1);
                    queue.push_back(next);
                }
            }
        }
        Ok(None)
    }
}
