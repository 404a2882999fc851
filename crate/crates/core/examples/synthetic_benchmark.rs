//! Generate the 9 x 330 synthetic benchmark matrix and write it to disk.
//!
//! ```bash
//! cargo run -p triage --example synthetic_benchmark -- [OUT_DIR] [SEED]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use triage::knowledge::MatrixFormat;
use triage::simulation::SyntheticMatrix;
use triage::ConditionId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out_dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let spec = SyntheticMatrix::default();
    let matrix = spec.generate(seed)?;
    for i in 0..matrix.condition_count() {
        let c = ConditionId(i);
        let informative: Vec<String> = matrix
            .row(c)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= spec.informative_range.0)
            .map(|(j, p)| format!("{}={p:.2}", matrix.symptoms()[j]))
            .collect();
        println!("{}: {}", matrix.condition_name(c), informative.join(", "));
    }

    for (format, ext) in [(MatrixFormat::Json, "json"), (MatrixFormat::Csv, "csv")] {
        let path = out_dir.join(format!("benchmark_seed{seed}.{ext}"));
        matrix.write(BufWriter::new(File::create(&path)?), format)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
