//! The versioned JSON result document.

use randex::frt::{DegeneratePolicy, Mode};
use randex::scenarios::StudyResult;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "randex/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema: String,
    /// Canonical form of the invocation, without thread counts or output
    /// paths.
    pub command: String,
    pub seed: Option<u64>,
    pub statistic: Option<String>,
    pub p_frt: Option<f64>,
    pub p_asymptotic: Option<f64>,
    pub observed_value: Option<f64>,
    pub replications: Option<u64>,
    pub degenerate_replicates: Option<u64>,
    pub warnings: Vec<String>,
    /// Treatment label of each arm, in arm order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestDetails>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryDetails>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyResult>,
}

impl ResultDocument {
    pub fn new(command: String, seed: Option<u64>) -> Self {
        Self {
            schema: SCHEMA.into(),
            command,
            seed,
            statistic: None,
            p_frt: None,
            p_asymptotic: None,
            observed_value: None,
            replications: None,
            degenerate_replicates: None,
            warnings: Vec::new(),
            labels: None,
            test: None,
            summary: None,
            theory: None,
            study: None,
        }
    }

    /// Keeps a value only if it is finite; otherwise records a warning and
    /// yields null.
    pub fn finite(&mut self, name: &str, value: f64) -> Option<f64> {
        if value.is_finite() {
            Some(value)
        } else {
            self.warnings.push(format!("{name} is not finite ({value}); reported as null"));
            None
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDetails {
    pub mode: Mode,
    pub degenerate_policy: DegeneratePolicy,
    pub group_sizes: Vec<usize>,
    pub extreme_count: u64,
    /// Unadjusted tail proportion; equals `p_frt` in exact mode.
    pub p_frt_raw: f64,
}

/// Statistics computed from group summaries alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDetails {
    pub group_sizes: Vec<usize>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub f: f64,
    pub x2: f64,
    pub p_asymptotic_f: f64,
    pub p_asymptotic_x2: f64,
    /// Published randomization p-values, for reference.
    pub reported: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// `match` or `mismatch`.
    pub status: String,
    pub assignments: u64,
    pub enumerated: Vec<f64>,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub a: f64,
    pub chi_square: f64,
    pub mixture: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum TheoryReport {
    Expectations {
        design: Vec<usize>,
        means: Vec<f64>,
        variances: Vec<f64>,
        delta: f64,
        e_ss_treatment: f64,
        e_ss_residual: f64,
        e_ms_treatment: f64,
        e_ms_residual: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        verification: Option<Verification>,
    },
    Msgap {
        design: Vec<usize>,
        delta: f64,
        /// `E(MSRes - MSTre)`; negative values make `F` anti-conservative.
        gap: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        verification: Option<Verification>,
    },
    Constants {
        design: Vec<usize>,
        c1: f64,
        c2: f64,
        var_tau: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        verification: Option<Verification>,
    },
    Mixture {
        design: Vec<usize>,
        weights: Vec<f64>,
        draws: u64,
        dominated: bool,
        tails: Vec<TailRow>,
    },
}
