//! Synthetic evaluation of the diagnosis pipeline.
//!
//! Every episode draws a vignette and runs it through three configurations:
//! the prior alone, questioning from a uniform prior, and questioning seeded
//! with the vignette's prior. Top-K accuracy is reported per fold.

mod benchmark;
mod metrics;
mod oracle;
mod vignette;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{Distribution, SelectionPolicy};
use crate::knowledge::{ConditionId, KnowledgeMatrix};
use crate::session::{Session, SessionConfig, SessionError, StopReason, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_MAX_QUESTIONS};

pub use benchmark::SyntheticMatrix;
pub use metrics::{Accuracy, ConfigurationMetrics, MetricsReport, ReportConfig};
pub use oracle::{brute_force_best_symptom, brute_force_gain};
pub use vignette::{
    answer_oracle, read_vignettes, sample_vignette, write_vignettes, PriorModel, PriorNoiseModel, Vignette, VignetteSampler,
    DEFAULT_UNREPORTED_FRACTION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid vignette: {0}")]
    InvalidVignette(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PriorOnly,
    QaOnly,
    Combined,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::PriorOnly, Mode::QaOnly, Mode::Combined];
}

/// Stop rules and selection policy shared by every episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub max_questions: usize,
    pub confidence_threshold: f64,
    pub policy: SelectionPolicy,
}

impl Default for SessionParams {
    fn default() -> Self {
        Self {
            max_questions: DEFAULT_MAX_QUESTIONS,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            policy: SelectionPolicy::ExpectedIg,
        }
    }
}

impl SessionParams {
    fn config(&self, prior: Distribution) -> SessionConfig {
        SessionConfig::new(prior)
            .with_max_questions(self.max_questions)
            .with_threshold(self.confidence_threshold)
            .with_policy(self.policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub mode: Mode,
    pub true_condition: ConditionId,
    pub final_posterior: Distribution,
    pub questions_asked: usize,
    /// `None` for prior-only episodes, which ask nothing.
    pub stop_reason: Option<StopReason>,
    /// 1-based rank of the truth under the vignette's prior.
    pub prior_rank: usize,
    /// 1-based rank of the truth under the final distribution.
    pub final_rank: usize,
}

/// Run one vignette through one configuration, answering from the vignette.
pub fn run_episode(v: &Vignette, matrix: &KnowledgeMatrix, mode: Mode, params: &SessionParams) -> Result<EpisodeResult, SimulationError> {
    v.validate(matrix)?;
    let prior_rank = v.prior.rank_of(v.true_condition);
    let start = match mode {
        Mode::PriorOnly => {
            return Ok(EpisodeResult {
                mode,
                true_condition: v.true_condition,
                final_posterior: v.prior.clone(),
                questions_asked: 0,
                stop_reason: None,
                prior_rank,
                final_rank: prior_rank,
            })
        }
        Mode::QaOnly => Distribution::uniform(matrix.condition_count()),
        Mode::Combined => v.prior.clone(),
    };
    let mut session = Session::create(params.config(start), matrix)?;
    while let Some(s) = session.pending() {
        session.submit_answer(matrix, s, answer_oracle(v, s))?;
    }
    Ok(EpisodeResult {
        mode,
        true_condition: v.true_condition,
        final_rank: session.posterior().rank_of(v.true_condition),
        final_posterior: session.posterior().clone(),
        questions_asked: session.questions_asked(),
        stop_reason: session.stop_reason(),
        prior_rank,
    })
}

/// One vignette's results under every [`Mode`], in [`Mode::ALL`] order.
pub type EpisodeSet = [EpisodeResult; 3];

fn run_all_modes(v: &Vignette, matrix: &KnowledgeMatrix, params: &SessionParams) -> Result<EpisodeSet, SimulationError> {
    Ok([
        run_episode(v, matrix, Mode::PriorOnly, params)?,
        run_episode(v, matrix, Mode::QaOnly, params)?,
        run_episode(v, matrix, Mode::Combined, params)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub episodes: usize,
    pub folds: usize,
    pub sampler: VignetteSampler,
    pub session: SessionParams,
    pub seed: u64,
}

/// Default prior noise: argmax correct half the time.
pub const DEFAULT_NOISE: PriorNoiseModel = PriorNoiseModel { target_top1: 0.5, concentration: 2.5 };

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 1500,
            folds: 5,
            sampler: VignetteSampler::new(PriorModel::Noisy(DEFAULT_NOISE)),
            session: SessionParams::default(),
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.folds < 1 || self.episodes < self.folds {
            return Err(SimulationError::InvalidParameter(format!(
                "need episodes ≥ folds ≥ 1 (got {} episodes, {} folds)",
                self.episodes, self.folds
            )));
        }
        if self.session.max_questions < 1 || !(self.session.confidence_threshold > 0.5 && self.session.confidence_threshold < 1.0) {
            return Err(SimulationError::InvalidParameter("max_questions ≥ 1 and threshold in (0.5, 1) required".into()));
        }
        self.sampler.validate()
    }
}

/// Random stream for episode `index`, independent of execution order.
fn episode_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Vignette for episode `index`: condition drawn uniformly, then symptoms and prior.
pub fn episode_vignette(matrix: &KnowledgeMatrix, sampler: &VignetteSampler, seed: u64, index: usize) -> Vignette {
    let mut rng = episode_rng(seed, index);
    let c = ConditionId(rng.random_range(0..matrix.condition_count()));
    sampler.sample(matrix, c, &mut rng)
}

/// Run every episode of `config` under all three modes, in parallel.
pub fn run_episodes(matrix: &KnowledgeMatrix, config: &EvalConfig) -> Result<Vec<EpisodeSet>, SimulationError> {
    config.validate()?;
    (0..config.episodes)
        .into_par_iter()
        .map(|i| run_all_modes(&episode_vignette(matrix, &config.sampler, config.seed, i), matrix, &config.session))
        .collect()
}

pub fn evaluate(matrix: &KnowledgeMatrix, config: &EvalConfig) -> Result<MetricsReport, SimulationError> {
    let episodes = run_episodes(matrix, config)?;
    Ok(MetricsReport::from_episodes(
        &episodes,
        ReportConfig::new(matrix, config.folds, &config.session, Some(config.seed), Some(config.sampler)),
    ))
}

/// Evaluate externally supplied vignettes (e.g. real classifier outputs).
pub fn evaluate_vignettes(
    matrix: &KnowledgeMatrix,
    vignettes: &[Vignette],
    folds: usize,
    params: &SessionParams,
) -> Result<MetricsReport, SimulationError> {
    if folds < 1 || vignettes.len() < folds {
        return Err(SimulationError::InvalidParameter(format!(
            "need vignettes ≥ folds ≥ 1 (got {} vignettes, {folds} folds)",
            vignettes.len()
        )));
    }
    let episodes = vignettes
        .par_iter()
        .map(|v| run_all_modes(v, matrix, params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_episodes(&episodes, ReportConfig::new(matrix, folds, params, None, None)))
}
