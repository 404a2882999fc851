//! Top-K accuracy of prior-only, QA-only and combined diagnosis on the
//! synthetic benchmark, for both selection policies.
//!
//! ```bash
//! cargo run --release -p triage --example evaluate_benchmark -- [EPISODES]
//! ```

use std::time::Instant;

use triage::inference::SelectionPolicy;
use triage::simulation::{evaluate, EvalConfig, SessionParams, SyntheticMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let episodes: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1500);
    let matrix = SyntheticMatrix::default().generate(0)?;

    for policy in SelectionPolicy::ALL {
        let config = EvalConfig {
            episodes,
            session: SessionParams { policy, ..Default::default() },
            ..Default::default()
        };
        let start = Instant::now();
        let report = evaluate(&matrix, &config)?;
        println!("{report}");
        println!("stop reasons (combined): {:?}", report.combined.stop_reasons);
        println!("{:.2?}\n", start.elapsed());
    }
    Ok(())
}
