//! Active diagnosis engine.
//!
//! A prior over conditions (typically an image classifier's softmax) is
//! refined by asking symptom questions. Each question is the symptom with the
//! largest expected information gain under the current posterior; each
//! answer is folded in with Bayes' rule against a condition–symptom
//! knowledge matrix.
//!
//! - [`knowledge`]: loading, validating and smoothing the matrix
//! - [`inference`]: posterior updates, entropy, question scoring
//! - [`session`]: the question/answer loop and its stop rules
//! - [`simulation`]: synthetic vignettes and top-K evaluation
//! - [`service`]: HTTP API over live sessions
//! - [`cli`]: the `triage` command line

pub mod knowledge;
pub mod inference;
pub mod session;
pub mod simulation;
pub mod service;
pub mod cli;

pub use inference::{Answer, Distribution, SelectionPolicy};
pub use knowledge::{ConditionId, KnowledgeMatrix, SymptomId};
pub use session::{Session, SessionConfig, StopReason};
