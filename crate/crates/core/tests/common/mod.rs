#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use triage::knowledge::{KnowledgeMatrix, MatrixFormat};
use triage::service::{self, AppState};

/// Conditions a/b, symptoms x (weak, favors a) and y (strong, favors b).
pub fn two_by_two() -> KnowledgeMatrix {
    KnowledgeMatrix::new(
        vec!["a".into(), "b".into()],
        vec!["x".into(), "y".into()],
        vec![vec![0.8, 0.1], vec![0.2, 0.9]],
    )
    .unwrap()
}

pub fn write_matrix(dir: &Path, name: &str, matrix: &KnowledgeMatrix) -> PathBuf {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).unwrap();
    matrix.write(file, MatrixFormat::from_path(&path)).unwrap();
    path
}

/// Start the API on an ephemeral port; returns its base URL.
pub async fn spawn_server(matrix: KnowledgeMatrix) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = AppState::new(Arc::new(matrix), Duration::from_secs(3600));
    tokio::spawn(async move {
        axum::serve(listener, service::router(state)).await.unwrap();
    });
    format!("http://{addr}")
}
