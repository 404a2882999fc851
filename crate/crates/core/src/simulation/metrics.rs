use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{EpisodeResult, EpisodeSet, SessionParams, VignetteSampler};
use crate::inference::SelectionPolicy;
use crate::knowledge::KnowledgeMatrix;

/// Fold-wise top-K accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub mean: f64,
    /// Sample standard deviation across folds; zero with a single fold.
    pub std: f64,
    pub folds: Vec<f64>,
}

impl Accuracy {
    fn from_folds(folds: Vec<f64>) -> Self {
        let n = folds.len() as f64;
        let mean = folds.iter().sum::<f64>() / n;
        let std = if folds.len() > 1 {
            (folds.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std, folds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationMetrics {
    pub top1: Accuracy,
    pub top2: Accuracy,
    pub top3: Accuracy,
    pub mean_questions: f64,
    pub stop_reasons: BTreeMap<String, usize>,
}

impl ConfigurationMetrics {
    fn from_results(results: &[&EpisodeResult], folds: usize) -> Self {
        let n = results.len();
        let top = |k: usize| {
            Accuracy::from_folds(
                (0..folds)
                    .map(|f| {
                        let fold = &results[f * n / folds..(f + 1) * n / folds];
                        fold.iter().filter(|r| r.final_rank <= k).count() as f64 / fold.len() as f64
                    })
                    .collect(),
            )
        };
        let mut stop_reasons = BTreeMap::new();
        for r in results {
            if let Some(reason) = r.stop_reason {
                *stop_reasons.entry(reason.as_str().to_owned()).or_insert(0) += 1;
            }
        }
        Self {
            top1: top(1),
            top2: top(2),
            top3: top(3),
            mean_questions: results.iter().map(|r| r.questions_asked as f64).sum::<f64>() / n as f64,
            stop_reasons,
        }
    }

    pub fn top(&self, k: usize) -> &Accuracy {
        match k {
            1 => &self.top1,
            2 => &self.top2,
            3 => &self.top3,
            _ => panic!("top-{k} accuracy is not tracked"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub policy: SelectionPolicy,
    pub episodes: usize,
    pub folds: usize,
    pub max_questions: usize,
    pub confidence_threshold: f64,
    /// Absent for externally supplied vignettes.
    pub seed: Option<u64>,
    pub sampler: Option<VignetteSampler>,
    pub conditions: usize,
    pub symptoms: usize,
}

impl ReportConfig {
    pub fn new(
        matrix: &KnowledgeMatrix,
        folds: usize,
        params: &SessionParams,
        seed: Option<u64>,
        sampler: Option<VignetteSampler>,
    ) -> Self {
        Self {
            policy: params.policy,
            episodes: 0,
            folds,
            max_questions: params.max_questions,
            confidence_threshold: params.confidence_threshold,
            seed,
            sampler,
            conditions: matrix.condition_count(),
            symptoms: matrix.symptom_count(),
        }
    }
}

/// Top-1/2/3 accuracy of the three configurations, with the run's settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ReportConfig,
    pub prior_only: ConfigurationMetrics,
    pub qa_only: ConfigurationMetrics,
    pub combined: ConfigurationMetrics,
}

impl MetricsReport {
    /// Aggregate episodes split into contiguous folds.
    pub fn from_episodes(episodes: &[EpisodeSet], mut config: ReportConfig) -> Self {
        assert!(config.folds >= 1 && episodes.len() >= config.folds, "need episodes ≥ folds ≥ 1");
        config.episodes = episodes.len();
        let column = |m: usize| {
            let results: Vec<&EpisodeResult> = episodes.iter().map(|set| &set[m]).collect();
            ConfigurationMetrics::from_results(&results, config.folds)
        };
        Self { prior_only: column(0), qa_only: column(1), combined: column(2), config }
    }

    /// Aligned text table: rows Top-1..3, columns prior-only / QA-only / combined.
    pub fn to_table(&self) -> String {
        let cell = |a: &Accuracy| format!("{:6.2} ± {:4.2}%", a.mean * 100.0, a.std * 100.0);
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "policy: {}   episodes: {}   folds: {}   max questions: {}   threshold: {}",
            c.policy, c.episodes, c.folds, c.max_questions, c.confidence_threshold
        );
        let _ = writeln!(out, "{:<8}| {:<17}| {:<17}| {:<17}|", "", "Prior only", "QA only", "Prior + QA");
        let _ = writeln!(out, "{}", "-".repeat(8 + 3 * 19 + 1));
        for k in 1..=3 {
            let _ = writeln!(
                out,
                "{:<8}| {:<17}| {:<17}| {:<17}|",
                format!("Top-{k}"),
                cell(self.prior_only.top(k)),
                cell(self.qa_only.top(k)),
                cell(self.combined.top(k)),
            );
        }
        let _ = writeln!(
            out,
            "{:<8}| {:<17}| {:<17.2}| {:<17.2}|",
            "Asked", "-", self.qa_only.mean_questions, self.combined.mean_questions
        );
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}
