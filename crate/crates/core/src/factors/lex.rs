use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clipped unigram precision: each candidate word is credited at most as
/// often as it occurs in the reference. Word order plays no role.
pub fn lex_score<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Result<f64> {
    if candidate.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for w in reference {
        *ref_counts.entry(w.as_ref()).or_default() += 1;
    }
    let mut cand_counts: HashMap<&str, usize> = HashMap::new();
    for w in candidate {
        *cand_counts.entry(w.as_ref()).or_default() += 1;
    }
    let clipped: usize = cand_counts.iter().map(|(w, c)| (*c).min(ref_counts.get(w).copied().unwrap_or(0))).sum();
    Ok(clipped as f64 / candidate.len() as f64)
}

/// Which sentence plays the BLEU candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexDirection {
    /// Candidate = hypothesis y, reference = x.
    #[default]
    Hypothesis,
    /// Candidate = x, reference = y.
    Reference,
    /// Mean of both directions.
    Symmetric,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LexOptions {
    pub direction: LexDirection,
    pub brevity_penalty: bool,
}

fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len >= reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

/// LEX for a pair under the configured direction and penalty.
pub fn lex_factor<S: AsRef<str>>(x: &[S], y: &[S], opts: LexOptions) -> Result<f64> {
    let one = |cand: &[S], refr: &[S]| -> Result<f64> {
        let p = lex_score(cand, refr)?;
        Ok(if opts.brevity_penalty { p * brevity_penalty(cand.len(), refr.len()) } else { p })
    };
    match opts.direction {
        LexDirection::Hypothesis => one(y, x),
        LexDirection::Reference => one(x, y),
        LexDirection::Symmetric => Ok(0.5 * (one(y, x)? + one(x, y)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(lex_score(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(lex_score(&["a", "b"], &["c", "d"]).unwrap(), 0.0);
        assert_eq!(lex_score(&["a", "a", "b"], &["a", "c"]).unwrap(), 1.0 / 3.0);
        assert!(matches!(lex_score::<&str>(&[], &["a"]), Err(Error::EmptyCandidate)));
    }

    #[test]
    fn directions() {
        let x = ["a", "b", "c", "d"];
        let y = ["a", "e"];
        let h = lex_factor(&x, &y, LexOptions::default()).unwrap();
        let r = lex_factor(&x, &y, LexOptions { direction: LexDirection::Reference, brevity_penalty: false }).unwrap();
        let s = lex_factor(&x, &y, LexOptions { direction: LexDirection::Symmetric, brevity_penalty: false }).unwrap();
        assert_eq!(h, 0.5);
        assert_eq!(r, 0.25);
        assert_eq!(s, 0.375);
        let bp = lex_factor(&x, &y, LexOptions { direction: LexDirection::Hypothesis, brevity_penalty: true }).unwrap();
        assert!((bp - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn self_overlap_and_order_invariance(
            s in prop::collection::vec("[a-e]", 1..12),
            r in prop::collection::vec("[a-e]", 0..12),
            seed in any::<u64>(),
        ) {
            prop_assert_eq!(lex_score(&s, &s).unwrap(), 1.0);
            let mut shuffled = s.clone();
            // deterministic rotation plus reversal as a permutation
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(lex_score(&s, &r).unwrap(), lex_score(&shuffled, &r).unwrap());
            let v = lex_score(&s, &r).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
