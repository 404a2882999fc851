use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::knowledge::{KnowledgeMatrix, DEFAULT_EPSILON};

/// Generator for sparse synthetic knowledge matrices.
///
/// Most entries are background noise near `epsilon`; each condition gets a
/// handful of informative symptoms with likelihoods in `informative_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMatrix {
    pub conditions: usize,
    pub symptoms: usize,
    pub informative_per_condition: usize,
    pub informative_range: (f64, f64),
    /// Background entries are drawn uniformly from `[0, background_max]`.
    pub background_max: f64,
    pub epsilon: f64,
}

impl Default for SyntheticMatrix {
    /// Nine conditions by 330 symptoms.
    fn default() -> Self {
        Self {
            conditions: 9,
            symptoms: 330,
            informative_per_condition: 3,
            informative_range: (0.3, 0.95),
            background_max: 0.02,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl SyntheticMatrix {
    pub fn generate(&self, seed: u64) -> Result<KnowledgeMatrix, SimulationError> {
        let (lo, hi) = self.informative_range;
        if self.conditions == 0 || self.symptoms == 0 {
            return Err(SimulationError::InvalidParameter("matrix dimensions must be positive".into()));
        }
        if self.informative_per_condition > self.symptoms {
            return Err(SimulationError::InvalidParameter("more informative symptoms than symptoms".into()));
        }
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) || !(0.0..=1.0).contains(&self.background_max) {
            return Err(SimulationError::InvalidParameter("likelihood ranges must lie in [0, 1]".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..self.conditions)
            .map(|_| {
                let mut row: Vec<f64> = (0..self.symptoms).map(|_| rng.random::<f64>() * self.background_max).collect();
                for j in index::sample(&mut rng, self.symptoms, self.informative_per_condition) {
                    row[j] = rng.random_range(lo..=hi);
                }
                row
            })
            .collect();
        let conditions = (0..self.conditions).map(|i| format!("condition_{i:02}")).collect();
        let symptoms = (0..self.symptoms).map(|j| format!("symptom_{j:03}")).collect();
        KnowledgeMatrix::new(conditions, symptoms, rows)
            .and_then(|m| m.clamp_probabilities(self.epsilon))
            .map_err(|e| SimulationError::InvalidParameter(e.to_string()))
    }
}
