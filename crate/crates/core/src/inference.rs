//! Probabilistic core: Bayes updates, entropies and greedy question selection.
//!
//! Symptoms are conditionally independent given the condition, so each
//! answer multiplies the current distribution by one likelihood column and
//! renormalizes. Everything here is a pure function of its inputs.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{ConditionId, KnowledgeMatrix, SymptomId};

/// Absolute tolerance on `Σ p = 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Unnormalized posterior mass below this is treated as annihilated.
pub const MIN_NORMALIZER: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distribution has {found} entries but the matrix has {expected} conditions")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("symptom index {index} out of range ({count} symptoms)")]
    SymptomOutOfRange { index: usize, count: usize },
    #[error("degenerate normalizer {0:e}: posterior annihilated")]
    DegenerateNormalizer(f64),
}

/// Probability vector over conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Wrap an already-normalized vector.
    pub fn new(probs: Vec<f64>) -> Result<Self, InferenceError> {
        if probs.is_empty() {
            return Err(InferenceError::InvalidDistribution("empty".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(InferenceError::InvalidDistribution(format!("entry {i} = {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(InferenceError::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Normalize nonnegative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, InferenceError> {
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(InferenceError::InvalidDistribution(format!("weight {i} = {w}")));
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(InferenceError::InvalidDistribution(format!("weights sum to {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over zero conditions");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, c: ConditionId) -> Self {
        let mut probs = vec![0.0; n];
        probs[c.0] = 1.0;
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, c: ConditionId) -> f64 {
        self.0[c.0]
    }

    /// Most probable condition, lowest index on ties.
    pub fn argmax(&self) -> ConditionId {
        self.ranking()[0].0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// All conditions sorted by descending probability, ties by lower index.
    pub fn ranking(&self) -> Vec<(ConditionId, f64)> {
        let mut ranked: Vec<_> = self.0.iter().enumerate().map(|(i, &p)| (ConditionId(i), p)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        ranked
    }

    /// 1-based position of `c` in [`ranking`](Self::ranking).
    pub fn rank_of(&self, c: ConditionId) -> usize {
        let p = self.0[c.0];
        1 + self
            .0
            .iter()
            .enumerate()
            .filter(|&(i, &q)| q > p || (q == p && i < c.0))
            .count()
    }

    fn check_against(&self, matrix: &KnowledgeMatrix) -> Result<(), InferenceError> {
        if self.0.len() == matrix.condition_count() {
            Ok(())
        } else {
            Err(InferenceError::DimensionMismatch { expected: matrix.condition_count(), found: self.0.len() })
        }
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = InferenceError;

    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Unknown => "unknown",
        })
    }
}

impl FromStr for Answer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "y" | "yes" => Ok(Answer::Yes),
            "n" | "no" => Ok(Answer::No),
            "u" | "unknown" | "?" => Ok(Answer::Unknown),
            other => Err(format!("expected yes, no or unknown, got {other:?}")),
        }
    }
}

/// Scoring rule used by [`select_question`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Full expected information gain over both answer outcomes.
    #[default]
    ExpectedIg,
    /// Negative entropy of the `yes` posterior only.
    YesBranch,
}

impl SelectionPolicy {
    pub const ALL: [SelectionPolicy; 2] = [SelectionPolicy::ExpectedIg, SelectionPolicy::YesBranch];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionPolicy::ExpectedIg => "expected_ig",
            SelectionPolicy::YesBranch => "yes_branch",
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expected_ig" => Ok(SelectionPolicy::ExpectedIg),
            "yes_branch" => Ok(SelectionPolicy::YesBranch),
            other => Err(format!("unknown policy {other:?} (expected_ig | yes_branch)")),
        }
    }
}

fn check_inputs(d: &Distribution, matrix: &KnowledgeMatrix, s: SymptomId) -> Result<(), InferenceError> {
    d.check_against(matrix)?;
    if s.0 >= matrix.symptom_count() {
        return Err(InferenceError::SymptomOutOfRange { index: s.0, count: matrix.symptom_count() });
    }
    Ok(())
}

/// Condition on one answered symptom.
///
/// `yes` weighs by `p(s|c)`, `no` by `1 - p(s|c)`; `unknown` returns the prior untouched.
pub fn posterior_update(
    prior: &Distribution,
    matrix: &KnowledgeMatrix,
    s: SymptomId,
    answer: Answer,
) -> Result<Distribution, InferenceError> {
    check_inputs(prior, matrix, s)?;
    let weights: Vec<f64> = match answer {
        Answer::Unknown => return Ok(prior.clone()),
        Answer::Yes => prior.0.iter().zip(matrix.column(s)).map(|(p, l)| p * l).collect(),
        Answer::No => prior.0.iter().zip(matrix.column(s)).map(|(p, l)| p * (1.0 - l)).collect(),
    };
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total < MIN_NORMALIZER {
        return Err(InferenceError::DegenerateNormalizer(total));
    }
    Ok(Distribution(weights.into_iter().map(|w| w / total).collect()))
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(d: &Distribution) -> f64 {
    entropy_of(&d.0)
}

fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// `-Σ w log2(w / total)` for unnormalized branch weights; equals `total · H(branch)`.
fn weighted_branch_entropy(weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    -weights.iter().filter(|&&w| w > 0.0).map(|&w| w * (w / total).log2()).sum::<f64>()
}

/// Expected posterior entropy after asking `s`: `p_yes H(yes) + p_no H(no)`.
fn expected_conditional_entropy(d: &Distribution, matrix: &KnowledgeMatrix, s: SymptomId, buf: &mut [Vec<f64>; 2]) -> f64 {
    let [yes, no] = buf;
    yes.clear();
    no.clear();
    for (p, l) in d.0.iter().zip(matrix.column(s)) {
        yes.push(p * l);
        no.push(p * (1.0 - l));
    }
    let p_yes: f64 = yes.iter().sum();
    let p_no: f64 = no.iter().sum();
    weighted_branch_entropy(yes, p_yes) + weighted_branch_entropy(no, p_no)
}

/// `H(d) - E[H(d | answer to s)]` in bits, clamped into `[0, H(d)]`.
pub fn expected_information_gain(d: &Distribution, matrix: &KnowledgeMatrix, s: SymptomId) -> Result<f64, InferenceError> {
    check_inputs(d, matrix, s)?;
    let mut buf = [Vec::new(), Vec::new()];
    let h = entropy(d);
    Ok(clamp_gain(h - expected_conditional_entropy(d, matrix, s, &mut buf), h))
}

fn clamp_gain(gain: f64, h: f64) -> f64 {
    gain.max(0.0).min(h)
}

/// `Σ q log2 q` for the posterior after a `yes` to `s`; at most zero.
pub fn yes_branch_score(d: &Distribution, matrix: &KnowledgeMatrix, s: SymptomId) -> Result<f64, InferenceError> {
    check_inputs(d, matrix, s)?;
    let mut buf = [Vec::new(), Vec::new()];
    Ok(yes_branch_score_unchecked(d, matrix, s, &mut buf[0]))
}

fn yes_branch_score_unchecked(d: &Distribution, matrix: &KnowledgeMatrix, s: SymptomId, yes: &mut Vec<f64>) -> f64 {
    yes.clear();
    yes.extend(d.0.iter().zip(matrix.column(s)).map(|(p, l)| p * l));
    let p_yes: f64 = yes.iter().sum();
    if p_yes <= 0.0 {
        // A yes answer is impossible; treat it as carrying no information.
        return -entropy(d);
    }
    -weighted_branch_entropy(yes, p_yes) / p_yes
}

/// Pick the unexcluded symptom with the highest policy score.
///
/// Ties go to the lowest index. Returns `None` when every symptom is excluded.
pub fn select_question(
    d: &Distribution,
    matrix: &KnowledgeMatrix,
    excluded: &HashSet<SymptomId>,
    policy: SelectionPolicy,
) -> Result<Option<SymptomId>, InferenceError> {
    d.check_against(matrix)?;
    let h = entropy(d);
    let mut buf = [Vec::with_capacity(d.len()), Vec::with_capacity(d.len())];
    let mut best: Option<(SymptomId, f64)> = None;
    for j in 0..matrix.symptom_count() {
        let s = SymptomId(j);
        if excluded.contains(&s) {
            continue;
        }
        let score = match policy {
            SelectionPolicy::ExpectedIg => clamp_gain(h - expected_conditional_entropy(d, matrix, s, &mut buf), h),
            SelectionPolicy::YesBranch => yes_branch_score_unchecked(d, matrix, s, &mut buf[0]),
        };
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((s, score));
        }
    }
    Ok(best.map(|(s, _)| s))
}
