//! Machine-readable study reports.
//!
//! Every estimate carries its Monte Carlo standard error and path count. A
//! report serializes to CSV with the fixed column set
//! `quantity,estimate,std_error,n_paths,seed_base` and to JSON through
//! serde; the schema is versioned.

use serde::Serialize;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One labeled estimate row.
#[derive(Clone, Debug, Serialize)]
pub struct StudyRow {
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Outcome of one study driver.
#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub kind: String,
    pub grid_size: usize,
    pub seed_base: u64,
    pub passed: bool,
    pub rows: Vec<StudyRow>,
    pub details: Vec<String>,
    pub runtime_ms: u128,
}

impl StudyReport {
    pub fn new(kind: &str, grid_size: usize, seed_base: u64) -> Self {
        StudyReport {
            schema_version: REPORT_SCHEMA_VERSION,
            kind: kind.to_string(),
            grid_size,
            seed_base,
            passed: true,
            rows: Vec::new(),
            details: Vec::new(),
            runtime_ms: 0,
        }
    }

    pub fn push(&mut self, quantity: impl Into<String>, estimate: f64, std_error: f64, n_paths: usize) {
        self.rows.push(StudyRow { quantity: quantity.into(), estimate, std_error, n_paths });
    }

    pub fn note(&mut self, detail: impl Into<String>) {
        self.details.push(detail.into());
    }

    pub fn require(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if ok {
            self.details.push(format!("ok: {detail}"));
        } else {
            self.passed = false;
            self.details.push(format!("FAIL: {detail}"));
        }
    }

    /// File stem encoding study kind, grid size, and seed base.
    pub fn file_stem(&self) -> String {
        format!("{}_n{}_s{}", self.kind, self.grid_size, self.seed_base)
    }

    /// CSV rendering with the documented column set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,estimate,std_error,n_paths,seed_base\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.quantity, row.estimate, row.std_error, row.n_paths, self.seed_base
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
