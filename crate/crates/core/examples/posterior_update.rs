//! Bayes updates, entropy and expected information gain by hand.
//!
//! ```bash
//! cargo run -p triage --example posterior_update
//! ```

use triage::inference::{entropy, expected_information_gain, posterior_update, Answer, Distribution};
use triage::knowledge::KnowledgeMatrix;
use triage::SymptomId;

fn show(label: &str, d: &Distribution, matrix: &KnowledgeMatrix) {
    let cells: Vec<String> = matrix.conditions().iter().zip(d.probs()).map(|(c, p)| format!("{c}={p:.4}")).collect();
    println!("{label:<22} {}  H={:.4} bits", cells.join(" "), entropy(d));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = KnowledgeMatrix::new(
        vec!["migraine".into(), "tension".into(), "cluster".into()],
        vec!["aura".into(), "nausea".into(), "eye_watering".into()],
        vec![vec![0.35, 0.70, 0.05], vec![0.01, 0.10, 0.02], vec![0.02, 0.30, 0.90]],
    )?;
    let prior = Distribution::new(vec![0.3, 0.6, 0.1])?;
    show("prior", &prior, &matrix);

    for (j, name) in matrix.symptoms().iter().enumerate() {
        let ig = expected_information_gain(&prior, &matrix, SymptomId(j))?;
        println!("  IG({name}) = {ig:.4} bits");
    }

    let after_yes = posterior_update(&prior, &matrix, SymptomId(1), Answer::Yes)?;
    show("nausea = yes", &after_yes, &matrix);
    let after_no = posterior_update(&after_yes, &matrix, SymptomId(2), Answer::No)?;
    show("eye_watering = no", &after_no, &matrix);
    let unchanged = posterior_update(&after_no, &matrix, SymptomId(0), Answer::Unknown)?;
    show("aura = unknown", &unchanged, &matrix);

    let ranking: Vec<&str> = unchanged.ranking().iter().map(|&(c, _)| matrix.condition_name(c)).collect();
    println!("ranking: {}", ranking.join(" > "));
    Ok(())
}
