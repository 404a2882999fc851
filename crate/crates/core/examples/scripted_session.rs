//! Drive a diagnostic session with a scripted patient.
//!
//! ```bash
//! cargo run -p triage --example scripted_session
//! ```

use std::collections::HashMap;

use triage::inference::{Answer, Distribution};
use triage::knowledge::KnowledgeMatrix;
use triage::session::{Session, SessionConfig, Status};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = KnowledgeMatrix::new(
        vec!["pneumonia".into(), "bronchitis".into(), "asthma".into(), "gerd".into()],
        vec!["cough".into(), "fever".into(), "wheezing".into(), "heartburn".into(), "chest_pain".into()],
        vec![
            vec![0.90, 0.80, 0.20, 0.05, 0.50],
            vec![0.95, 0.30, 0.10, 0.05, 0.20],
            vec![0.60, 0.05, 0.90, 0.05, 0.30],
            vec![0.30, 0.01, 0.05, 0.90, 0.60],
        ],
    )?;
    // The patient has asthma; chest pain is something they can't say.
    let patient: HashMap<&str, Answer> = [
        ("fever", Answer::No),
        ("wheezing", Answer::Yes),
        ("heartburn", Answer::No),
        ("chest_pain", Answer::Unknown),
    ]
    .into();

    let cough = matrix.symptom_index("cough").unwrap();
    let prior = Distribution::new(vec![0.3, 0.4, 0.2, 0.1])?;
    let config = SessionConfig::new(prior).with_initial_symptoms([cough]).with_max_questions(5);
    let mut session = Session::create(config, &matrix)?;

    while let Status::AwaitingAnswer { pending } = session.status() {
        let name = matrix.symptom_name(pending);
        let answer = patient[name];
        println!("Q{}: {name}? {answer}", session.questions_asked() + 1);
        session.submit_answer(&matrix, pending, answer)?;
    }

    println!("stopped: {}", session.stop_reason().unwrap());
    for (c, p) in session.differential(3).ranked {
        println!("  {:<12}{:6.2}%", matrix.condition_name(c), p * 100.0);
    }
    let replayed = session.replay(&matrix)?;
    assert!(replayed.probs().iter().zip(session.posterior().probs()).all(|(a, b)| (a - b).abs() < 1e-12));
    Ok(())
}
