//! Evaluate a vignette file, e.g. priors exported from an external classifier.
//!
//! Samples a few vignettes, writes them as JSON, reads them back and scores them.
//!
//! ```bash
//! cargo run -p triage --example vignette_file
//! ```

use std::io::Cursor;

use triage::simulation::{
    evaluate_vignettes, read_vignettes, sample_vignette, write_vignettes, PriorModel, PriorNoiseModel, SessionParams,
    SyntheticMatrix, VignetteSampler,
};
use triage::ConditionId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = SyntheticMatrix::default().generate(5)?;
    let sampler = VignetteSampler::new(PriorModel::Noisy(PriorNoiseModel::new(0.6, 3.0)?));

    let vignettes = (0..200u64)
        .map(|seed| sample_vignette(&matrix, ConditionId(seed as usize % matrix.condition_count()), &sampler, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut file = Vec::new();
    write_vignettes(&mut file, &vignettes, &matrix)?;
    let records: serde_json::Value = serde_json::from_slice(&file)?;
    let first = &records[0];
    println!(
        "{} records; first: true_condition={} positives={} negatives={}\n",
        vignettes.len(),
        first["true_condition"],
        first["positive_symptoms"],
        first["negative_symptoms"].as_array().map_or(0, Vec::len)
    );

    let loaded = read_vignettes(Cursor::new(&file), &matrix)?;
    let report = evaluate_vignettes(&matrix, &loaded, 4, &SessionParams::default())?;
    println!("{report}");
    Ok(())
}
