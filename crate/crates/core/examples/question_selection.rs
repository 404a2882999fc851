//! Greedy question selection under both scoring policies.
//!
//! ```bash
//! cargo run -p triage --example question_selection
//! ```

use std::collections::HashSet;

use triage::inference::{expected_information_gain, select_question, yes_branch_score, Distribution, SelectionPolicy};
use triage::knowledge::KnowledgeMatrix;
use triage::simulation::brute_force_best_symptom;
use triage::SymptomId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = KnowledgeMatrix::new(
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
        vec!["rare_but_specific".into(), "splits_pairs".into(), "uninformative".into(), "common".into()],
        vec![
            vec![0.95, 0.9, 0.5, 0.8],
            vec![0.01, 0.9, 0.5, 0.7],
            vec![0.01, 0.1, 0.5, 0.9],
            vec![0.01, 0.1, 0.5, 0.6],
        ],
    )?;
    let prior = Distribution::uniform(4);

    println!("{:<20}{:>12}{:>14}", "symptom", "expected IG", "yes-branch");
    for (j, name) in matrix.symptoms().iter().enumerate() {
        let s = SymptomId(j);
        println!(
            "{name:<20}{:>12.4}{:>14.4}",
            expected_information_gain(&prior, &matrix, s)?,
            yes_branch_score(&prior, &matrix, s)?
        );
    }

    let mut asked = HashSet::new();
    for policy in SelectionPolicy::ALL {
        let pick = select_question(&prior, &matrix, &asked, policy)?.unwrap();
        println!("{policy} picks {}", matrix.symptom_name(pick));
    }

    // Excluded symptoms are never picked again.
    let first = select_question(&prior, &matrix, &asked, SelectionPolicy::ExpectedIg)?.unwrap();
    asked.insert(first);
    let second = select_question(&prior, &matrix, &asked, SelectionPolicy::ExpectedIg)?.unwrap();
    println!("after asking {}, next is {}", matrix.symptom_name(first), matrix.symptom_name(second));
    assert_eq!(Some(second), brute_force_best_symptom(&prior, &matrix, &asked));
    Ok(())
}
