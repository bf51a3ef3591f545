//! Human-readable element form: syllables joined by `*`, each written as a
//! generator letter followed by a signed exponent, e.g. `a1*b2*a1`.
//! Letters are assigned `a`, `b`, ... across factors in order; a free
//! factor of rank k consumes k consecutive letters.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{FactorKind, GroupElement, GroupSpec, Payload, Syllable};
use crate::error::{Error, Result};

impl GroupSpec {
    /// Letter assigned to generator `sub` of factor `factor`.
    pub fn generator_letter(&self, factor: usize, sub: usize) -> char {
        let offset: usize = self.factors()[..factor]
            .iter()
            .map(|f| f.letter_count())
            .sum();
        (b'a' + (offset + sub) as u8) as char
    }

    fn letter_to_factor(&self, letter: char) -> Option<(usize, usize)> {
        if !letter.is_ascii_lowercase() {
            return None;
        }
        let mut index = (letter as u8 - b'a') as usize;
        for (i, f) in self.factors().iter().enumerate() {
            let count = f.letter_count();
            if index < count {
                return Some((i, index));
            }
            index -= count;
        }
        None
    }

    /// Renders an element; the identity is `"e"`.
    pub fn element_text(&self, g: &GroupElement) -> String {
        if g.is_identity() {
            return "e".to_string();
        }
        let mut parts = Vec::new();
        for syl in g.syllables() {
            match &syl.payload {
                Payload::Residue(r) => {
                    parts.push(format!("{}{}", self.generator_letter(syl.factor, 0), r));
                }
                Payload::Power(p) => {
                    parts.push(format!("{}{}", self.generator_letter(syl.factor, 0), p));
                }
                Payload::Word(w) => {
                    // Run-length encode consecutive repetitions of one letter.
                    let mut i = 0;
                    while i < w.len() {
                        let mut j = i;
                        while j < w.len() && w[j] == w[i] {
                            j += 1;
                        }
                        let sub = (w[i].unsigned_abs() - 1) as usize;
                        let exp = (j - i) as i64 * w[i].signum() as i64;
                        parts.push(format!(
                            "{}{}",
                            self.generator_letter(syl.factor, sub),
                            exp
                        ));
                        i = j;
                    }
                }
            }
        }
        parts.join("*")
    }

    /// Parses the text form. Arbitrary exponents are accepted and reduced
    /// to normal form, so e.g. `a2` in Z/2 * Z/3 parses to the identity.
    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty element text".into()));
        }
        if text == "e" {
            return Ok(GroupElement::identity());
        }
        let mut out = GroupElement::identity();
        for token in text.split('*') {
            let token = token.trim();
            let mut chars = token.chars();
            let letter = chars
                .next()
                .ok_or_else(|| Error::Parse(format!("empty token in '{text}'")))?;
            let exp_str = chars.as_str();
            let (factor, sub) = self.letter_to_factor(letter).ok_or_else(|| {
                Error::Parse(format!("unknown generator letter '{letter}'"))
            })?;
            let exponent: BigInt = exp_str
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent '{exp_str}' in token '{token}'")))?;
            let piece = self.generator_power(factor, sub, &exponent)?;
            self.append(&mut out, &piece);
        }
        Ok(out)
    }

    /// `generator^exponent` as a normal form (possibly the identity).
    fn generator_power(&self, factor: usize, sub: usize, exponent: &BigInt) -> Result<GroupElement> {
        let kind = &self.factors()[factor].kind;
        let syllables = match kind {
            FactorKind::FiniteCyclic { order } => {
                let r = ((exponent % order) + order) % order;
                let r = num_traits::ToPrimitive::to_u32(&r).expect("reduced residue fits");
                if r == 0 {
                    vec![]
                } else {
                    vec![Syllable { factor, payload: Payload::Residue(r) }]
                }
            }
            FactorKind::InfiniteCyclic => {
                if exponent.is_zero() {
                    vec![]
                } else {
                    vec![Syllable { factor, payload: Payload::Power(exponent.clone()) }]
                }
            }
            FactorKind::Free { .. } => {
                let count = num_traits::ToPrimitive::to_i64(exponent).ok_or_else(|| {
                    Error::Parse("free-letter exponent too large".into())
                })?;
                if count.unsigned_abs() > 1_000_000 {
                    return Err(Error::Parse("free-letter exponent too large".into()));
                }
                if count == 0 {
                    vec![]
                } else {
                    let letter = (sub as i32 + 1) * count.signum() as i32;
                    vec![Syllable {
                        factor,
                        payload: Payload::Word(vec![letter; count.unsigned_abs() as usize]),
                    }]
                }
            }
        };
        Ok(GroupElement::from_syllables_unchecked(syllables))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_and_parses_z2_star_z3() {
        let spec = GroupSpec::z2_star_z3();
        let g = spec.parse_element("a1*b2*a1").unwrap();
        assert_eq!(spec.element_text(&g), "a1*b2*a1");
        assert_eq!(spec.element_text(&GroupElement::identity()), "e");
        assert_eq!(spec.parse_element("e").unwrap(), GroupElement::identity());
    }

    #[test]
    fn parse_normalizes() {
        let spec = GroupSpec::z2_star_z3();
        // a^2 = e in Z/2; b^4 = b in Z/3.
        assert!(spec.parse_element("a2").unwrap().is_identity());
        assert_eq!(spec.parse_element("b4").unwrap(), spec.parse_element("b1").unwrap());
        assert_eq!(spec.parse_element("b-1").unwrap(), spec.parse_element("b2").unwrap());
        // Adjacent tokens of one factor merge.
        assert!(spec.parse_element("b1*b2").unwrap().is_identity());
    }

    #[test]
    fn free_letters_and_runs() {
        let spec = GroupSpec::free_rank(2).unwrap();
        let g = spec.parse_element("a2*b-1*a1").unwrap();
        assert_eq!(g.syllables().len(), 1);
        assert_eq!(spec.word_length(&g), 4);
        assert_eq!(spec.element_text(&g), "a2*b-1*a1");
        assert!(spec.parse_element("a1*a-1").unwrap().is_identity());
    }

    #[test]
    fn round_trip_over_a_ball() {
        for spec in [GroupSpec::z2_star_z3(), GroupSpec::free_rank(2).unwrap()] {
            for g in spec.ball(4, None).unwrap() {
                let text = spec.element_text(&g);
                assert_eq!(spec.parse_element(&text).unwrap(), g, "text was {text}");
            }
        }
    }

    #[test]
    fn parse_errors() {
        let spec = GroupSpec::z2_star_z3();
        assert!(spec.parse_element("").is_err());
        assert!(spec.parse_element("z1").is_err());
        assert!(spec.parse_element("a").is_err());
        assert!(spec.parse_element("a1**b1").is_err());
    }

    #[test]
    fn mixed_factor_letters() {
        // Z/2 * F2: letters a (Z/2), b and c (free).
        let spec = GroupSpec::new(vec![
            crate::group::FactorSpec::finite_cyclic(2),
            crate::group::FactorSpec::free(2),
        ])
        .unwrap();
        let g = spec.parse_element("a1*b1*c-2*a1").unwrap();
        assert_eq!(spec.word_length(&g), 5);
        assert_eq!(spec.element_text(&g), "a1*b1*c-2*a1");
    }
}
