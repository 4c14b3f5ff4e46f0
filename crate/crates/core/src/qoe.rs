//! QoE scoring and evaluation summaries.
//!
//! The score of a set of decisions is `sum_n beta^n * #{chunks at level >= n}
//! - lambda * stall_seconds`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::model::{DecisionSet, ModelError};
use crate::simulator::SessionLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoeParams {
    pub beta: f64,
    pub lambda: f64,
}

impl Default for QoeParams {
    fn default() -> Self {
        Self {
            beta: 0.1,
            lambda: 10.0,
        }
    }
}

impl QoeParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Exact parameters for comparisons that must not round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactQoeParams {
    pub beta: Ratio<i64>,
    pub lambda: Ratio<i64>,
}

impl Default for ExactQoeParams {
    fn default() -> Self {
        Self {
            beta: Ratio::new(1, 10),
            lambda: Ratio::from_integer(10),
        }
    }
}

pub fn score_levels(levels: &[usize], stall_s: u64, params: &QoeParams) -> f64 {
    let top = levels.iter().copied().max().unwrap_or(0);
    let mut quality = 0.0;
    let mut weight = 1.0;
    for n in 0..=top {
        let count = levels.iter().filter(|&&l| l >= n).count();
        quality += weight * count as f64;
        weight *= params.beta;
    }
    quality - params.lambda * stall_s as f64
}

pub fn score_levels_exact(levels: &[usize], stall_s: u64, params: &ExactQoeParams) -> Ratio<i64> {
    let top = levels.iter().copied().max().unwrap_or(0);
    let mut quality = Ratio::from_integer(0);
    let mut weight = Ratio::from_integer(1);
    for n in 0..=top {
        let count = levels.iter().filter(|&&l| l >= n).count() as i64;
        quality += weight * count;
        weight *= params.beta;
    }
    quality - params.lambda * stall_s as i64
}

/// Score of a window decision; the stall term is the window's total stall.
pub fn score(decisions: &DecisionSet, params: &QoeParams) -> f64 {
    score_levels(&decisions.levels, decisions.total_stall(), params)
}

pub fn score_exact(decisions: &DecisionSet, params: &ExactQoeParams) -> Ratio<i64> {
    score_levels_exact(&decisions.levels, decisions.total_stall(), params)
}

/// Score of a whole session; the stall term is the sum of all stalls,
/// startup delay excluded.
pub fn score_session(log: &SessionLog, params: &QoeParams) -> f64 {
    let levels: Vec<usize> = log.chunks.iter().map(|c| c.level).collect();
    score_levels(&levels, log.total_stall_s, params)
}

/// Number of adjacent chunks whose levels differ.
pub fn switch_count(levels: &[usize]) -> usize {
    levels.windows(2).filter(|w| w[0] != w[1]).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub trace: String,
    pub algorithm: String,
    pub qoe: f64,
    /// `qoe / reference qoe` on the same trace; `None` without a reference.
    pub normalized_qoe: Option<f64>,
    /// Fraction of chunks at each level.
    pub level_pmf: Vec<f64>,
    pub total_stall_s: u64,
    pub percent_level0: f64,
    pub switches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub reference: String,
    pub rows: Vec<LogSummary>,
}

impl Summary {
    /// Sorted normalized QoE values of one algorithm, ready for a CDF plot.
    pub fn normalized_cdf(&self, algorithm: &str) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .filter_map(|r| r.normalized_qoe)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("trace,algorithm,qoe,normalized_qoe,total_stall_s,percent_level0,switches\n");
        for r in &self.rows {
            let norm = r.normalized_qoe.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.trace, r.algorithm, r.qoe, norm, r.total_stall_s, r.percent_level0, r.switches
            ));
        }
        out
    }
}

/// Summarizes session logs, normalizing each against the `reference`
/// algorithm's log on the same trace.
pub fn summarize(logs: &[SessionLog], reference: &str, params: &QoeParams) -> Result<Summary, ModelError> {
    let Some(first) = logs.first() else {
        return Err(ModelError::InvalidParameter("no session logs to summarize".into()));
    };
    if let Some(bad) = logs.iter().find(|l| l.manifest_digest != first.manifest_digest) {
        return Err(ModelError::Structural(format!(
            "logs mix manifests ({} on trace {} vs {})",
            bad.manifest_digest, bad.trace, first.manifest_digest
        )));
    }
    let reference_qoe: BTreeMap<&str, f64> = logs
        .iter()
        .filter(|l| l.algorithm == reference)
        .map(|l| (l.trace.as_str(), score_session(l, params)))
        .collect();
    let rows = logs
        .iter()
        .map(|log| {
            let qoe = score_session(log, params);
            let levels: Vec<usize> = log.chunks.iter().map(|c| c.level).collect();
            let total = levels.len().max(1) as f64;
            let level_pmf = log.level_counts.iter().map(|&c| c as f64 / total).collect::<Vec<_>>();
            let percent_level0 = 100.0 * log.level_counts.first().copied().unwrap_or(0) as f64 / total;
            LogSummary {
                trace: log.trace.clone(),
                algorithm: log.algorithm.clone(),
                qoe,
                normalized_qoe: reference_qoe.get(log.trace.as_str()).map(|r| qoe / r),
                level_pmf,
                total_stall_s: log.total_stall_s,
                percent_level0,
                switches: switch_count(&levels),
            }
        })
        .collect();
    Ok(Summary {
        reference: reference.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_levels_no_stall() {
        let q = score_levels(&[2, 1, 0], 0, &QoeParams::default());
        assert!((q - 3.21).abs() < 1e-12);
        let exact = score_levels_exact(&[2, 1, 0], 0, &ExactQoeParams::default());
        assert_eq!(exact, Ratio::new(321, 100));
    }

    #[test]
    fn base_level_only() {
        assert_eq!(score_levels(&[0; 7], 0, &QoeParams::default()), 7.0);
        assert_eq!(score_levels(&[0; 7], 1, &QoeParams::default()), -3.0);
    }

    #[test]
    fn promotion_raises_and_stall_lowers_score() {
        let p = ExactQoeParams::default();
        let base = score_levels_exact(&[1, 0, 2], 2, &p);
        assert!(score_levels_exact(&[1, 1, 2], 2, &p) > base);
        assert!(score_levels_exact(&[1, 0, 3], 2, &p) > base);
        assert!(score_levels_exact(&[1, 0, 2], 3, &p) < base);
    }

    #[test]
    fn switches_count_level_changes() {
        assert_eq!(switch_count(&[0, 0, 1, 1, 0, 2]), 3);
        assert_eq!(switch_count(&[]), 0);
    }

    #[test]
    fn params_validation() {
        assert!(QoeParams::default().validate().is_ok());
        assert!(QoeParams {
            beta: 1.0,
            lambda: 10.0
        }
        .validate()
        .is_err());
        assert!(QoeParams { beta: 0.1, lambda: 0.0 }.validate().is_err());
    }
}
