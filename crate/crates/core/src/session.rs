//! Question/answer dialog driven by information-gain selection.
//!
//! A session starts from a prior (optionally conditioned on symptoms the
//! patient already reported), then alternates between asking the most
//! informative symptom and folding the answer into the posterior until one
//! of the stop rules fires.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{posterior_update, select_question, Answer, Distribution, InferenceError, SelectionPolicy};
use crate::knowledge::{ConditionId, KnowledgeMatrix, SymptomId};

pub const DEFAULT_MAX_QUESTIONS: usize = 10;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("prior has {found} entries but the matrix has {expected} conditions")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("answer for {got} but the pending question is {pending}")]
    NotPending { pending: SymptomId, got: SymptomId },
    #[error("session already finished ({0})")]
    Finished(StopReason),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub prior: Distribution,
    pub initial_positive_symptoms: Vec<SymptomId>,
    pub max_questions: usize,
    pub confidence_threshold: f64,
    pub policy: SelectionPolicy,
}

impl SessionConfig {
    /// Default stop rules: ten questions, 95% confidence, expected-IG selection.
    pub fn new(prior: Distribution) -> Self {
        Self {
            prior,
            initial_positive_symptoms: Vec::new(),
            max_questions: DEFAULT_MAX_QUESTIONS,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            policy: SelectionPolicy::default(),
        }
    }

    pub fn with_initial_symptoms(mut self, symptoms: impl IntoIterator<Item = SymptomId>) -> Self {
        self.initial_positive_symptoms = symptoms.into_iter().collect();
        self
    }

    pub fn with_max_questions(mut self, n: usize) -> Self {
        self.max_questions = n;
        self
    }

    pub fn with_threshold(mut self, t: f64) -> Self {
        self.confidence_threshold = t;
        self
    }

    pub fn with_policy(mut self, policy: SelectionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self, matrix: &KnowledgeMatrix) -> Result<(), SessionError> {
        if self.prior.len() != matrix.condition_count() {
            return Err(SessionError::DimensionMismatch { expected: matrix.condition_count(), found: self.prior.len() });
        }
        if self.max_questions < 1 {
            return Err(SessionError::InvalidConfig("max_questions must be at least 1".into()));
        }
        if !(self.confidence_threshold > 0.5 && self.confidence_threshold < 1.0) {
            return Err(SessionError::InvalidConfig(format!(
                "confidence_threshold {} must lie in (0.5, 1)",
                self.confidence_threshold
            )));
        }
        let mut seen = HashSet::new();
        for &s in &self.initial_positive_symptoms {
            if s.0 >= matrix.symptom_count() {
                return Err(SessionError::InvalidConfig(format!("initial symptom {s} out of range")));
            }
            if !seen.insert(s) {
                return Err(SessionError::InvalidConfig(format!("initial symptom {s} listed twice")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ThresholdReached,
    BudgetExhausted,
    SymptomsExhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ThresholdReached => "threshold_reached",
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::SymptomsExhausted => "symptoms_exhausted",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    AwaitingAnswer { pending: SymptomId },
    Finished { reason: StopReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub symptom: SymptomId,
    pub answer: Answer,
    /// Reported up front rather than asked; does not count against the budget.
    pub initial: bool,
}

/// Ranked conditions, descending by probability, ties by lower index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Differential {
    pub ranked: Vec<(ConditionId, f64)>,
}

impl Differential {
    /// Top `k` entries of `d`; `k` past the condition count returns everything.
    pub fn top(d: &Distribution, k: usize) -> Self {
        let mut ranked = d.ranking();
        ranked.truncate(k);
        Self { ranked }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    config: SessionConfig,
    posterior: Distribution,
    history: Vec<HistoryEntry>,
    status: Status,
}

impl Session {
    pub fn create(config: SessionConfig, matrix: &KnowledgeMatrix) -> Result<Self, SessionError> {
        config.validate(matrix)?;
        let mut posterior = config.prior.clone();
        let mut history = Vec::with_capacity(config.initial_positive_symptoms.len() + config.max_questions);
        for &s in &config.initial_positive_symptoms {
            posterior = posterior_update(&posterior, matrix, s, Answer::Yes)?;
            history.push(HistoryEntry { symptom: s, answer: Answer::Yes, initial: true });
        }
        let mut session = Self {
            config,
            posterior,
            history,
            // Overwritten by `advance`.
            status: Status::Finished { reason: StopReason::SymptomsExhausted },
        };
        session.advance(matrix)?;
        Ok(session)
    }

    /// Record the answer to the pending question and move to the next state.
    ///
    /// On error the session is left unchanged.
    pub fn submit_answer(&mut self, matrix: &KnowledgeMatrix, s: SymptomId, answer: Answer) -> Result<(), SessionError> {
        let pending = match self.status {
            Status::Finished { reason } => return Err(SessionError::Finished(reason)),
            Status::AwaitingAnswer { pending } => pending,
        };
        if pending != s {
            return Err(SessionError::NotPending { pending, got: s });
        }
        let posterior = posterior_update(&self.posterior, matrix, s, answer)?;
        let previous = (self.posterior.clone(), self.status);
        self.posterior = posterior;
        self.history.push(HistoryEntry { symptom: s, answer, initial: false });
        if let Err(e) = self.advance(matrix) {
            self.history.pop();
            (self.posterior, self.status) = previous;
            return Err(e);
        }
        Ok(())
    }

    /// Apply the stop rules in order: threshold, budget, exhausted symptoms.
    fn advance(&mut self, matrix: &KnowledgeMatrix) -> Result<(), SessionError> {
        self.status = if self.posterior.max() >= self.config.confidence_threshold {
            Status::Finished { reason: StopReason::ThresholdReached }
        } else if self.questions_asked() >= self.config.max_questions {
            Status::Finished { reason: StopReason::BudgetExhausted }
        } else {
            let asked: HashSet<SymptomId> = self.history.iter().map(|h| h.symptom).collect();
            match select_question(&self.posterior, matrix, &asked, self.config.policy)? {
                Some(pending) => Status::AwaitingAnswer { pending },
                None => Status::Finished { reason: StopReason::SymptomsExhausted },
            }
        };
        Ok(())
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn posterior(&self) -> &Distribution {
        &self.posterior
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn pending(&self) -> Option<SymptomId> {
        match self.status {
            Status::AwaitingAnswer { pending } => Some(pending),
            Status::Finished { .. } => None,
        }
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        match self.status {
            Status::Finished { reason } => Some(reason),
            Status::AwaitingAnswer { .. } => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.stop_reason().is_some()
    }

    /// Answers to asked questions, excluding initially reported symptoms.
    pub fn questions_asked(&self) -> usize {
        self.history.iter().filter(|h| !h.initial).count()
    }

    pub fn differential(&self, k: usize) -> Differential {
        Differential::top(&self.posterior, k)
    }

    /// Recompute the posterior by folding the history over the prior.
    pub fn replay(&self, matrix: &KnowledgeMatrix) -> Result<Distribution, SessionError> {
        self.history.iter().try_fold(self.config.prior.clone(), |d, h| {
            posterior_update(&d, matrix, h.symptom, h.answer).map_err(SessionError::from)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> KnowledgeMatrix {
        KnowledgeMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["weak".into(), "strong".into()],
            vec![vec![0.6, 0.9], vec![0.4, 0.1]],
        )
        .unwrap()
    }

    #[test]
    fn uniform_start_asks_most_informative() {
        let m = two_by_two();
        let s = Session::create(SessionConfig::new(Distribution::uniform(2)), &m).unwrap();
        assert_eq!(s.status(), Status::AwaitingAnswer { pending: SymptomId(1) });
        assert_eq!(s.questions_asked(), 0);
    }

    #[test]
    fn confident_prior_finishes_immediately() {
        let m = two_by_two();
        let prior = Distribution::new(vec![0.97, 0.03]).unwrap();
        let s = Session::create(SessionConfig::new(prior), &m).unwrap();
        assert_eq!(s.stop_reason(), Some(StopReason::ThresholdReached));
        assert!(s.history().is_empty());
    }

    #[test]
    fn prior_length_mismatch() {
        let m = two_by_two();
        let err = Session::create(SessionConfig::new(Distribution::uniform(3)), &m).unwrap_err();
        assert_eq!(err, SessionError::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn config_validation() {
        let m = two_by_two();
        let base = SessionConfig::new(Distribution::uniform(2));
        for bad in [
            base.clone().with_max_questions(0),
            base.clone().with_threshold(0.5),
            base.clone().with_threshold(1.0),
            base.clone().with_initial_symptoms([SymptomId(2)]),
            base.clone().with_initial_symptoms([SymptomId(0), SymptomId(0)]),
        ] {
            assert!(matches!(Session::create(bad, &m), Err(SessionError::InvalidConfig(_))));
        }
    }

    #[test]
    fn threshold_stop_after_answer() {
        let m = two_by_two();
        let mut s = Session::create(SessionConfig::new(Distribution::uniform(2)), &m).unwrap();
        s.submit_answer(&m, SymptomId(1), Answer::Yes).unwrap();
        // 0.45 / 0.5 = 0.9, still below the threshold; "weak" is pending next.
        assert_eq!(s.pending(), Some(SymptomId(0)));
        s.submit_answer(&m, SymptomId(0), Answer::Yes).unwrap();
        // 0.9·0.6 / (0.9·0.6 + 0.1·0.4) ≈ 0.931; both symptoms used up.
        assert_eq!(s.stop_reason(), Some(StopReason::SymptomsExhausted));
        let mut t = Session::create(SessionConfig::new(Distribution::new(vec![0.8, 0.2]).unwrap()), &m).unwrap();
        t.submit_answer(&m, SymptomId(1), Answer::Yes).unwrap();
        // 0.72 / 0.74 ≈ 0.973
        assert_eq!(t.stop_reason(), Some(StopReason::ThresholdReached));
        assert!(t.posterior().max() >= 0.95);
    }

    #[test]
    fn budget_stop() {
        let m = two_by_two();
        let cfg = SessionConfig::new(Distribution::uniform(2)).with_max_questions(1);
        let mut s = Session::create(cfg, &m).unwrap();
        s.submit_answer(&m, SymptomId(1), Answer::Unknown).unwrap();
        assert_eq!(s.stop_reason(), Some(StopReason::BudgetExhausted));
        assert_eq!(s.questions_asked(), 1);
    }

    #[test]
    fn wrong_symptom_leaves_state_unchanged() {
        let m = two_by_two();
        let mut s = Session::create(SessionConfig::new(Distribution::uniform(2)), &m).unwrap();
        let before = s.clone();
        let err = s.submit_answer(&m, SymptomId(0), Answer::Yes).unwrap_err();
        assert_eq!(err, SessionError::NotPending { pending: SymptomId(1), got: SymptomId(0) });
        assert_eq!(s, before);
    }

    #[test]
    fn finished_session_rejects_answers() {
        let m = two_by_two();
        let mut s = Session::create(SessionConfig::new(Distribution::new(vec![0.99, 0.01]).unwrap()), &m).unwrap();
        assert_eq!(
            s.submit_answer(&m, SymptomId(0), Answer::Yes),
            Err(SessionError::Finished(StopReason::ThresholdReached))
        );
    }

    #[test]
    fn initial_symptoms_fold_into_posterior_and_are_not_asked() {
        let m = two_by_two();
        let cfg = SessionConfig::new(Distribution::uniform(2)).with_initial_symptoms([SymptomId(1)]);
        let s = Session::create(cfg, &m).unwrap();
        assert!((s.posterior().probs()[0] - 0.9).abs() < 1e-12);
        assert_eq!(s.pending(), Some(SymptomId(0)));
        assert_eq!(s.history(), [HistoryEntry { symptom: SymptomId(1), answer: Answer::Yes, initial: true }]);
        assert_eq!(s.questions_asked(), 0);
        assert_eq!(&s.replay(&m).unwrap(), s.posterior());
    }

    #[test]
    fn differential_examples() {
        let d = Distribution::new(vec![0.1, 0.7, 0.2]).unwrap();
        assert_eq!(Differential::top(&d, 2).ranked, [(ConditionId(1), 0.7), (ConditionId(2), 0.2)]);
        assert_eq!(Differential::top(&d, 10).ranked.len(), 3);
        let tie = Distribution::uniform(2);
        assert_eq!(Differential::top(&tie, 1).ranked, [(ConditionId(0), 0.5)]);
    }
}
