use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gumbel};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::inference::{Answer, Distribution};
use crate::knowledge::{ConditionId, KnowledgeMatrix, SymptomId};

/// A case with known ground truth: reported symptoms plus a classifier-style prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Vignette {
    pub true_condition: ConditionId,
    pub positive_symptoms: BTreeSet<SymptomId>,
    pub negative_symptoms: BTreeSet<SymptomId>,
    pub prior: Distribution,
}

impl Vignette {
    pub fn validate(&self, matrix: &KnowledgeMatrix) -> Result<(), SimulationError> {
        let bad = |msg: String| Err(SimulationError::InvalidVignette(msg));
        if self.true_condition.0 >= matrix.condition_count() {
            return bad(format!("true condition {} out of range", self.true_condition));
        }
        if self.prior.len() != matrix.condition_count() {
            return bad(format!("prior has {} entries, matrix has {} conditions", self.prior.len(), matrix.condition_count()));
        }
        if let Some(s) = self.positive_symptoms.intersection(&self.negative_symptoms).next() {
            return bad(format!("symptom {s} is both positive and negative"));
        }
        if let Some(s) = self.positive_symptoms.iter().chain(&self.negative_symptoms).find(|s| s.0 >= matrix.symptom_count()) {
            return bad(format!("symptom {s} out of range"));
        }
        Ok(())
    }
}

/// Answer a question from the vignette's description.
pub fn answer_oracle(v: &Vignette, s: SymptomId) -> Answer {
    if v.positive_symptoms.contains(&s) {
        Answer::Yes
    } else if v.negative_symptoms.contains(&s) {
        Answer::No
    } else {
        Answer::Unknown
    }
}

/// Noisy classifier output: `softmax(concentration · one_hot(target) + Gumbel noise)`.
///
/// The target is the true condition or, at a calibrated rate, a uniformly
/// chosen decoy. The rate is solved so that the prior's argmax equals the
/// truth with probability `target_top1` in expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorNoiseModel {
    pub target_top1: f64,
    pub concentration: f64,
}

impl PriorNoiseModel {
    pub fn new(target_top1: f64, concentration: f64) -> Result<Self, SimulationError> {
        let model = Self { target_top1, concentration };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if !(self.target_top1 > 0.0 && self.target_top1 < 1.0) {
            return Err(SimulationError::InvalidParameter(format!("target_top1 {} must lie in (0, 1)", self.target_top1)));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(SimulationError::InvalidParameter(format!("concentration {} must be positive", self.concentration)));
        }
        Ok(())
    }

    /// Probability of keeping the true condition as the softmax target.
    ///
    /// By the Gumbel-max property the argmax hits the target with probability
    /// `e^k / (e^k + n - 1)` and any other given condition with `1 / (e^k + n - 1)`.
    /// Clamped to `[0, 1]` when `target_top1` is out of reach for this concentration.
    pub fn keep_rate(&self, n: usize) -> f64 {
        if n < 2 {
            return 1.0;
        }
        let boost = self.concentration.exp();
        let denom = boost + (n - 1) as f64;
        let hit = boost / denom;
        let miss = 1.0 / denom;
        ((self.target_top1 - miss) / (hit - miss)).clamp(0.0, 1.0)
    }

    /// Expected fraction of priors whose argmax is the truth.
    pub fn expected_top1(&self, n: usize) -> f64 {
        if n < 2 {
            return 1.0;
        }
        let boost = self.concentration.exp();
        let denom = boost + (n - 1) as f64;
        let keep = self.keep_rate(n);
        keep * boost / denom + (1.0 - keep) / denom
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, truth: ConditionId, rng: &mut R) -> Distribution {
        let target = if n < 2 || rng.random::<f64>() < self.keep_rate(n) {
            truth
        } else {
            // Uniform over the n - 1 wrong conditions.
            let k = rng.random_range(0..n - 1);
            ConditionId(if k >= truth.0 { k + 1 } else { k })
        };
        let gumbel = Gumbel::new(0.0, 1.0).expect("unit Gumbel");
        let logits: Vec<f64> = (0..n)
            .map(|i| gumbel.sample(rng) + if i == target.0 { self.concentration } else { 0.0 })
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Distribution::from_weights(logits.iter().map(|l| (l - top).exp()).collect()).expect("softmax weights are positive")
    }
}

/// Where a vignette's prior comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorModel {
    /// One-hot at the true condition.
    Oracle,
    Uniform,
    Noisy(PriorNoiseModel),
}

impl PriorModel {
    pub fn validate(&self) -> Result<(), SimulationError> {
        match self {
            PriorModel::Noisy(m) => m.validate(),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, truth: ConditionId, rng: &mut R) -> Distribution {
        match self {
            PriorModel::Oracle => Distribution::one_hot(n, truth),
            PriorModel::Uniform => Distribution::uniform(n),
            PriorModel::Noisy(m) => m.sample(n, truth, rng),
        }
    }
}

pub const DEFAULT_UNREPORTED_FRACTION: f64 = 0.5;

/// Draws vignettes from the matrix's own likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VignetteSampler {
    pub prior: PriorModel,
    /// Fraction of sampled symptom labels hidden (answered `unknown`).
    pub unreported_fraction: f64,
}

impl VignetteSampler {
    pub fn new(prior: PriorModel) -> Self {
        Self { prior, unreported_fraction: DEFAULT_UNREPORTED_FRACTION }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        self.prior.validate()?;
        if !(0.0..=1.0).contains(&self.unreported_fraction) {
            return Err(SimulationError::InvalidParameter(format!(
                "unreported_fraction {} must lie in [0, 1]",
                self.unreported_fraction
            )));
        }
        Ok(())
    }

    /// Each symptom is positive with probability `p(s|c)` and negative otherwise,
    /// then hidden with probability `unreported_fraction`.
    pub fn sample<R: Rng + ?Sized>(&self, matrix: &KnowledgeMatrix, c: ConditionId, rng: &mut R) -> Vignette {
        let mut positive_symptoms = BTreeSet::new();
        let mut negative_symptoms = BTreeSet::new();
        for (j, &p) in matrix.row(c).iter().enumerate() {
            let present = rng.random::<f64>() < p;
            let hidden = rng.random::<f64>() < self.unreported_fraction;
            if hidden {
                continue;
            }
            if present {
                positive_symptoms.insert(SymptomId(j));
            } else {
                negative_symptoms.insert(SymptomId(j));
            }
        }
        let prior = self.prior.sample(matrix.condition_count(), c, rng);
        Vignette { true_condition: c, positive_symptoms, negative_symptoms, prior }
    }
}

/// Deterministic single-vignette draw from a seed.
pub fn sample_vignette(
    matrix: &KnowledgeMatrix,
    c: ConditionId,
    sampler: &VignetteSampler,
    seed: u64,
) -> Result<Vignette, SimulationError> {
    matrix.check_condition(c).map_err(|e| SimulationError::InvalidVignette(e.to_string()))?;
    sampler.validate()?;
    Ok(sampler.sample(matrix, c, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// On-disk vignette record; conditions and symptoms by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct VignetteRecord {
    true_condition: String,
    /// Condition name → probability; missing conditions get zero before normalization.
    prior: BTreeMap<String, f64>,
    positive_symptoms: Vec<String>,
    negative_symptoms: Vec<String>,
}

/// Read a JSON array of vignettes, resolving names against `matrix`.
pub fn read_vignettes<R: Read>(source: R, matrix: &KnowledgeMatrix) -> Result<Vec<Vignette>, SimulationError> {
    let records: Vec<VignetteRecord> =
        serde_json::from_reader(source).map_err(|e| SimulationError::InvalidVignette(e.to_string()))?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let err = |msg: String| SimulationError::InvalidVignette(format!("vignette {i}: {msg}"));
            let condition = |name: &str| matrix.condition_index(name).ok_or_else(|| err(format!("unknown condition {name:?}")));
            let symptoms = |names: &[String]| {
                names
                    .iter()
                    .map(|n| matrix.symptom_index(n).ok_or_else(|| err(format!("unknown symptom {n:?}"))))
                    .collect::<Result<BTreeSet<_>, _>>()
            };
            let true_condition = condition(&r.true_condition)?;
            let mut weights = vec![0.0; matrix.condition_count()];
            for (name, &p) in &r.prior {
                weights[condition(name)?.0] = p;
            }
            let prior = Distribution::from_weights(weights).map_err(|e| err(e.to_string()))?;
            let v = Vignette {
                true_condition,
                positive_symptoms: symptoms(&r.positive_symptoms)?,
                negative_symptoms: symptoms(&r.negative_symptoms)?,
                prior,
            };
            v.validate(matrix).map_err(|e| err(e.to_string()))?;
            Ok(v)
        })
        .collect()
}

pub fn write_vignettes<W: Write>(sink: W, vignettes: &[Vignette], matrix: &KnowledgeMatrix) -> Result<(), SimulationError> {
    let records: Vec<VignetteRecord> = vignettes
        .iter()
        .map(|v| VignetteRecord {
            true_condition: matrix.condition_name(v.true_condition).to_owned(),
            prior: matrix.conditions().iter().cloned().zip(v.prior.probs().iter().copied()).collect(),
            positive_symptoms: v.positive_symptoms.iter().map(|&s| matrix.symptom_name(s).to_owned()).collect(),
            negative_symptoms: v.negative_symptoms.iter().map(|&s| matrix.symptom_name(s).to_owned()).collect(),
        })
        .collect();
    serde_json::to_writer_pretty(sink, &records).map_err(|e| SimulationError::InvalidVignette(e.to_string()))
}
