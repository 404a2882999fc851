//! Run the REST API in-process and walk one session over HTTP.
//!
//! ```bash
//! cargo run -p triage --example http_service
//! ```
//!
//! For a standalone server use `triage serve --matrix FILE`.

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};
use tokio::net::TcpListener;
use triage::service::{router, AppState};
use triage::simulation::SyntheticMatrix;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let matrix = Arc::new(SyntheticMatrix::default().generate(0)?);
    let state = AppState::new(matrix, Duration::from_secs(600));
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(state)).await });

    let client = reqwest::Client::new();
    let mut view: Value = client
        .post(format!("{base}/v1/sessions"))
        .json(&json!({ "prior": "uniform", "initial_symptoms": ["symptom_017"], "max_questions": 6 }))
        .send()
        .await?
        .json()
        .await?;
    let id = view["session_id"].as_str().unwrap().to_owned();
    println!("POST /v1/sessions -> {id}");

    // Answer "no" to everything except every third question.
    let mut n = 0;
    while let Some(symptom) = view["pending_question"]["symptom"].as_str().map(str::to_owned) {
        let answer = if n % 3 == 2 { "yes" } else { "no" };
        println!("  {symptom}? {answer}");
        view = client
            .post(format!("{base}/v1/sessions/{id}/answers"))
            .json(&json!({ "symptom": symptom, "answer": answer }))
            .send()
            .await?
            .json()
            .await?;
        n += 1;
    }
    println!("status {} ({})", view["status"], view["stop_reason"]);
    for entry in view["differential"].as_array().unwrap().iter().take(3) {
        println!("  {:<14}{:.4}", entry["condition"].as_str().unwrap(), entry["probability"].as_f64().unwrap());
    }

    let gone = client.delete(format!("{base}/v1/sessions/{id}")).send().await?;
    println!("DELETE -> {}", gone.status());
    Ok(())
}
