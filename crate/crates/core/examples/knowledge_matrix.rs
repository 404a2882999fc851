//! Build, validate, serialize and reload a knowledge matrix.
//!
//! ```bash
//! cargo run -p triage --example knowledge_matrix
//! ```

use std::io::Cursor;

use triage::knowledge::{KnowledgeMatrix, MatrixFormat, DEFAULT_EPSILON};
use triage::{ConditionId, SymptomId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = KnowledgeMatrix::new(
        vec!["influenza".into(), "common_cold".into(), "allergy".into()],
        vec!["fever".into(), "sneezing".into(), "itchy_eyes".into(), "fatigue".into()],
        vec![
            vec![0.90, 0.30, 0.05, 0.85],
            vec![0.20, 0.80, 0.10, 0.40],
            vec![0.00, 0.90, 0.85, 0.10],
        ],
    )?;
    println!("{} conditions x {} symptoms", matrix.condition_count(), matrix.symptom_count());

    let fever = matrix.symptom_index("fever").unwrap();
    println!("p(fever | allergy) = {}", matrix.likelihood(ConditionId(2), fever)?);

    // Hard zeros make a single answer decisive; clamp them away from 0 and 1.
    let smoothed = matrix.clone().clamp_probabilities(DEFAULT_EPSILON)?;
    println!("after smoothing: {}", smoothed.entry(ConditionId(2), SymptomId(0)));

    let mut csv = Vec::new();
    smoothed.write(&mut csv, MatrixFormat::Csv)?;
    println!("\nCSV form:\n{}", String::from_utf8_lossy(&csv));
    let reloaded = KnowledgeMatrix::load(Cursor::new(&csv), MatrixFormat::Csv)?;
    assert_eq!(reloaded, smoothed);

    let broken = r#"{
        "conditions": ["a", "b"],
        "symptoms": ["x", "y"],
        "p_symptom_given_condition": [[0.5, 1.2], [-0.1, 0.4]]
    }"#;
    let (c, s, violations) = KnowledgeMatrix::validate(Cursor::new(broken), MatrixFormat::Json)?;
    println!("broken {c}x{s} matrix has {} violation(s):", violations.len());
    for v in violations {
        println!("  {v}");
    }
    Ok(())
}
