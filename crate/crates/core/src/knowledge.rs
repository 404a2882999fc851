//! Condition–symptom knowledge matrix.
//!
//! Entry `(i, j)` holds `p(symptom j present | condition i)`. Conditions and
//! symptoms are addressed by position; their names are metadata used at the
//! I/O boundary only.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smoothing applied by [`KnowledgeMatrix::load_smoothed`].
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Zero-based index of a condition (matrix row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionId(pub usize);

/// Zero-based index of a symptom (matrix column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymptomId(pub usize);

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

impl fmt::Display for SymptomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Json,
    Csv,
}

impl MatrixFormat {
    /// Guess the format from a file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentifierKind {
    Condition,
    Symptom,
}

impl fmt::Display for IdentifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentifierKind::Condition => f.write_str("condition"),
            IdentifierKind::Symptom => f.write_str("symptom"),
        }
    }
}

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("entry ({row}, {col}) [{condition} / {symptom}] = {value} is not a probability in [0, 1]")]
    Domain {
        row: usize,
        col: usize,
        condition: String,
        symptom: String,
        value: f64,
    },
    #[error("duplicate {kind} identifier {name:?}")]
    DuplicateIdentifier { kind: IdentifierKind, name: String },
    #[error("epsilon {0} must satisfy 0 < epsilon < 0.5")]
    EpsilonOutOfRange(f64),
    #[error("condition index {index} out of range ({count} conditions)")]
    ConditionOutOfRange { index: usize, count: usize },
    #[error("symptom index {index} out of range ({count} symptoms)")]
    SymptomOutOfRange { index: usize, count: usize },
    #[error("{} violation(s): {}", .0.len(), join_violations(.0))]
    Invalid(Vec<KnowledgeError>),
}

fn join_violations(errors: &[KnowledgeError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

/// Dense `conditions × symptoms` table of symptom likelihoods.
///
/// Immutable once built; share it behind an `Arc` across sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeMatrix {
    conditions: Vec<String>,
    symptoms: Vec<String>,
    likelihood: Vec<f64>,
}

/// JSON document layout.
#[derive(Debug, Serialize, Deserialize)]
struct MatrixDocument {
    conditions: Vec<String>,
    symptoms: Vec<String>,
    p_symptom_given_condition: Vec<Vec<f64>>,
}

impl KnowledgeMatrix {
    /// Build a matrix from names and rows, reporting the first violation.
    pub fn new(
        conditions: Vec<String>,
        symptoms: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, KnowledgeError> {
        match Self::check(&conditions, &symptoms, &rows).into_iter().next() {
            Some(err) => Err(err),
            None => Ok(Self {
                likelihood: rows.into_iter().flatten().collect(),
                conditions,
                symptoms,
            }),
        }
    }

    /// Collect every invariant violation of a candidate matrix.
    pub fn check(conditions: &[String], symptoms: &[String], rows: &[Vec<f64>]) -> Vec<KnowledgeError> {
        let mut errors = Vec::new();
        duplicates(conditions, IdentifierKind::Condition, &mut errors);
        duplicates(symptoms, IdentifierKind::Symptom, &mut errors);
        if rows.len() != conditions.len() {
            errors.push(KnowledgeError::DimensionMismatch(format!(
                "{} rows for {} conditions",
                rows.len(),
                conditions.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != symptoms.len() {
                errors.push(KnowledgeError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    symptoms.len()
                )));
                continue;
            }
            for (j, &value) in row.iter().enumerate() {
                if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                    errors.push(KnowledgeError::Domain {
                        row: i,
                        col: j,
                        condition: conditions.get(i).cloned().unwrap_or_default(),
                        symptom: symptoms[j].clone(),
                        value,
                    });
                }
            }
        }
        errors
    }

    pub fn load<R: Read>(source: R, format: MatrixFormat) -> Result<Self, KnowledgeError> {
        let (conditions, symptoms, rows) = read_raw(source, format)?;
        Self::new(conditions, symptoms, rows)
    }

    /// Load and apply [`clamp_probabilities`](Self::clamp_probabilities) with `epsilon`.
    pub fn load_smoothed<R: Read>(source: R, format: MatrixFormat, epsilon: f64) -> Result<Self, KnowledgeError> {
        Self::load(source, format)?.clamp_probabilities(epsilon)
    }

    pub fn load_path(path: &Path) -> Result<Self, KnowledgeError> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file), MatrixFormat::from_path(path))
    }

    /// Parse a source and return all violations instead of stopping at the first.
    ///
    /// I/O and syntax errors are returned as `Err`; invariant violations as `Ok(list)`.
    pub fn validate<R: Read>(source: R, format: MatrixFormat) -> Result<(usize, usize, Vec<KnowledgeError>), KnowledgeError> {
        let (conditions, symptoms, rows) = read_raw(source, format)?;
        let errors = Self::check(&conditions, &symptoms, &rows);
        Ok((conditions.len(), symptoms.len(), errors))
    }

    pub fn write<W: Write>(&self, mut sink: W, format: MatrixFormat) -> Result<(), KnowledgeError> {
        match format {
            MatrixFormat::Json => {
                let doc = MatrixDocument {
                    conditions: self.conditions.clone(),
                    symptoms: self.symptoms.clone(),
                    p_symptom_given_condition: self.rows().map(<[f64]>::to_vec).collect(),
                };
                serde_json::to_writer_pretty(&mut sink, &doc).map_err(|e| KnowledgeError::Parse(e.to_string()))?;
                sink.write_all(b"\n")?;
            }
            MatrixFormat::Csv => {
                let mut writer = csv::Writer::from_writer(sink);
                let header = std::iter::once("condition").chain(self.symptoms.iter().map(String::as_str));
                writer.write_record(header).map_err(csv_error)?;
                for (name, row) in self.conditions.iter().zip(self.rows()) {
                    // `{:?}` on f64 prints the shortest representation that round-trips.
                    let record = std::iter::once(name.clone()).chain(row.iter().map(|v| format!("{v:?}")));
                    writer.write_record(record).map_err(csv_error)?;
                }
                writer.flush()?;
            }
        }
        Ok(())
    }

    /// Replace every entry `e` by `min(max(e, epsilon), 1 - epsilon)`.
    pub fn clamp_probabilities(mut self, epsilon: f64) -> Result<Self, KnowledgeError> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(KnowledgeError::EpsilonOutOfRange(epsilon));
        }
        let hi = 1.0 - epsilon;
        for e in &mut self.likelihood {
            *e = e.max(epsilon).min(hi);
        }
        Ok(self)
    }

    pub fn condition_count(&self) -> usize {
        self.conditions.len()
    }

    pub fn symptom_count(&self) -> usize {
        self.symptoms.len()
    }

    pub fn conditions(&self) -> &[String] {
        &self.conditions
    }

    pub fn symptoms(&self) -> &[String] {
        &self.symptoms
    }

    pub fn condition_name(&self, c: ConditionId) -> &str {
        &self.conditions[c.0]
    }

    pub fn symptom_name(&self, s: SymptomId) -> &str {
        &self.symptoms[s.0]
    }

    pub fn condition_index(&self, name: &str) -> Option<ConditionId> {
        self.conditions.iter().position(|c| c == name).map(ConditionId)
    }

    pub fn symptom_index(&self, name: &str) -> Option<SymptomId> {
        self.symptoms.iter().position(|s| s == name).map(SymptomId)
    }

    /// `p(s | c)`, checked.
    pub fn likelihood(&self, c: ConditionId, s: SymptomId) -> Result<f64, KnowledgeError> {
        self.check_condition(c)?;
        self.check_symptom(s)?;
        Ok(self.entry(c, s))
    }

    /// Unchecked lookup; panics on out-of-range indices.
    #[inline]
    pub fn entry(&self, c: ConditionId, s: SymptomId) -> f64 {
        self.likelihood[c.0 * self.symptoms.len() + s.0]
    }

    pub fn row(&self, c: ConditionId) -> &[f64] {
        let n = self.symptoms.len();
        &self.likelihood[c.0 * n..(c.0 + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.conditions.len()).map(|i| self.row(ConditionId(i)))
    }

    /// Column of `p(s | c_i)` over all conditions.
    pub fn column(&self, s: SymptomId) -> impl Iterator<Item = f64> + '_ {
        (0..self.conditions.len()).map(move |i| self.entry(ConditionId(i), s))
    }

    pub fn check_condition(&self, c: ConditionId) -> Result<(), KnowledgeError> {
        if c.0 < self.conditions.len() {
            Ok(())
        } else {
            Err(KnowledgeError::ConditionOutOfRange { index: c.0, count: self.conditions.len() })
        }
    }

    pub fn check_symptom(&self, s: SymptomId) -> Result<(), KnowledgeError> {
        if s.0 < self.symptoms.len() {
            Ok(())
        } else {
            Err(KnowledgeError::SymptomOutOfRange { index: s.0, count: self.symptoms.len() })
        }
    }
}

fn duplicates(names: &[String], kind: IdentifierKind, errors: &mut Vec<KnowledgeError>) {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            errors.push(KnowledgeError::DuplicateIdentifier { kind, name: name.clone() });
        }
    }
}

fn csv_error(e: csv::Error) -> KnowledgeError {
    KnowledgeError::Parse(e.to_string())
}

type RawMatrix = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

fn read_raw<R: Read>(source: R, format: MatrixFormat) -> Result<RawMatrix, KnowledgeError> {
    match format {
        MatrixFormat::Json => {
            let doc: MatrixDocument = serde_json::from_reader(source).map_err(|e| {
                if e.is_io() {
                    KnowledgeError::Io(e.into())
                } else {
                    KnowledgeError::Parse(e.to_string())
                }
            })?;
            Ok((doc.conditions, doc.symptoms, doc.p_symptom_given_condition))
        }
        MatrixFormat::Csv => read_csv(source),
    }
}

fn read_csv<R: Read>(source: R) -> Result<RawMatrix, KnowledgeError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_error)?,
        None => return Err(KnowledgeError::Parse("empty CSV document".into())),
    };
    if header.get(0) != Some("condition") {
        return Err(KnowledgeError::Parse(format!(
            "CSV header must start with \"condition\", found {:?}",
            header.get(0).unwrap_or("")
        )));
    }
    let symptoms: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut conditions = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in records.enumerate() {
        let record = record.map_err(csv_error)?;
        let mut fields = record.iter();
        conditions.push(fields.next().unwrap_or_default().to_owned());
        let row = fields
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    KnowledgeError::Parse(format!("row {line}, column {col}: {field:?} is not a number"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((conditions, symptoms, rows))
}
