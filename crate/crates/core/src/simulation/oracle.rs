//! Exhaustive reference scorer for question selection.
//!
//! Kept deliberately separate from `inference`: it normalizes each answer
//! branch explicitly and uses natural logs, so agreement with
//! `select_question` is evidence rather than tautology.

use std::collections::HashSet;

use crate::inference::Distribution;
use crate::knowledge::{ConditionId, KnowledgeMatrix, SymptomId};

fn bits(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h / std::f64::consts::LN_2
}

/// Two-branch information gain of one symptom, from first principles.
pub fn brute_force_gain(d: &Distribution, matrix: &KnowledgeMatrix, s: SymptomId) -> f64 {
    let prior = d.probs();
    let n = prior.len();
    let mut yes = vec![0.0; n];
    let mut no = vec![0.0; n];
    for i in 0..n {
        let l = matrix.entry(ConditionId(i), s);
        yes[i] = prior[i] * l;
        no[i] = prior[i] * (1.0 - l);
    }
    let mut expected = 0.0;
    for branch in [&mut yes, &mut no] {
        let mass: f64 = branch.iter().sum();
        if mass > 0.0 {
            for w in branch.iter_mut() {
                *w /= mass;
            }
            expected += mass * bits(branch);
        }
    }
    let h = bits(prior);
    (h - expected).clamp(0.0, h)
}

/// Highest-gain unexcluded symptom, lowest index on ties.
pub fn brute_force_best_symptom(d: &Distribution, matrix: &KnowledgeMatrix, excluded: &HashSet<SymptomId>) -> Option<SymptomId> {
    let scored: Vec<(SymptomId, f64)> = (0..matrix.symptom_count())
        .map(SymptomId)
        .filter(|s| !excluded.contains(s))
        .map(|s| (s, brute_force_gain(d, matrix, s)))
        .collect();
    let best = scored.iter().map(|&(_, g)| g).fold(f64::NEG_INFINITY, f64::max);
    scored.into_iter().find(|&(_, g)| g == best).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_symptoms() -> KnowledgeMatrix {
        KnowledgeMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["A".into(), "B".into()],
            vec![vec![0.9, 0.6], vec![0.1, 0.4]],
        )
        .unwrap()
    }

    #[test]
    fn picks_a_over_b() {
        let m = two_symptoms();
        let half = Distribution::uniform(2);
        assert!((brute_force_gain(&half, &m, SymptomId(0)) - 0.531).abs() < 1e-3);
        assert!((brute_force_gain(&half, &m, SymptomId(1)) - 0.029).abs() < 1e-3);
        assert_eq!(brute_force_best_symptom(&half, &m, &HashSet::new()), Some(SymptomId(0)));
    }

    #[test]
    fn exclusion_cases() {
        let m = two_symptoms();
        let half = Distribution::uniform(2);
        let all: HashSet<_> = [SymptomId(0), SymptomId(1)].into();
        assert_eq!(brute_force_best_symptom(&half, &m, &all), None);
        let only_b: HashSet<_> = [SymptomId(0)].into();
        assert_eq!(brute_force_best_symptom(&half, &m, &only_b), Some(SymptomId(1)));
    }
}
