//! Throughput prediction from recent per-chunk download rates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("no throughput samples recorded yet")]
    NoHistory,
    #[error("invalid predictor parameter: {0}")]
    InvalidParameter(String),
}

/// The last `capacity` per-chunk throughputs, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputHistory {
    capacity: usize,
    floor: f64,
    samples: VecDeque<f64>,
}

impl ThroughputHistory {
    pub fn new(capacity: usize, floor: f64) -> Result<Self, PredictorError> {
        if capacity == 0 {
            return Err(PredictorError::InvalidParameter(
                "history needs room for one sample".into(),
            ));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(PredictorError::InvalidParameter(format!(
                "floor must be positive, got {floor}"
            )));
        }
        Ok(Self {
            capacity,
            floor,
            samples: VecDeque::with_capacity(capacity),
        })
    }

    /// Records one throughput; values below the floor (including zero) are
    /// stored as the floor.
    pub fn push(&mut self, throughput: f64) {
        let value = if throughput.is_finite() {
            throughput.max(self.floor)
        } else {
            self.floor
        };
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(value);
    }

    /// Records the throughput of a chunk of `bytes` that took `seconds`.
    /// Instant downloads (empty chunks) carry no information and are skipped.
    pub fn push_download(&mut self, bytes: f64, seconds: f64) {
        if seconds > 0.0 {
            self.push(bytes / seconds);
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().copied()
    }
}

pub fn predict_harmonic(history: &ThroughputHistory) -> Result<f64, PredictorError> {
    if history.is_empty() {
        return Err(PredictorError::NoHistory);
    }
    let inverse: f64 = history.samples().map(|b| 1.0 / b).sum();
    Ok(history.len() as f64 / inverse)
}

/// Exponentially weighted average where the newest sample gets `weight`
/// and the rest share `1 - weight` recursively.
pub fn predict_ewma(history: &ThroughputHistory, weight: f64) -> Result<f64, PredictorError> {
    if !(weight > 0.0 && weight < 1.0) {
        return Err(PredictorError::InvalidParameter(format!(
            "weight must lie in (0, 1), got {weight}"
        )));
    }
    let mut it = history.samples();
    let mut avg = it.next().ok_or(PredictorError::NoHistory)?;
    for b in it {
        avg = weight * b + (1.0 - weight) * avg;
    }
    Ok(avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn history(samples: &[f64]) -> ThroughputHistory {
        let mut h = ThroughputHistory::new(samples.len().max(1), 0.001).unwrap();
        for &s in samples {
            h.push(s);
        }
        h
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(predict_harmonic(&history(&[2.0; 5])).unwrap(), 2.0);
        assert!((predict_harmonic(&history(&[1.0, 2.0, 4.0])).unwrap() - 12.0 / 7.0).abs() < 1e-12);
        let damped = predict_harmonic(&history(&[8.0, 0.0])).unwrap();
        assert!((damped - 2.0 / (0.125 + 1000.0)).abs() < 1e-15);
    }

    #[test]
    fn ewma_examples() {
        assert_eq!(predict_ewma(&history(&[5.0]), 0.3).unwrap(), 5.0);
        assert_eq!(predict_ewma(&history(&[1.0, 3.0]), 0.5).unwrap(), 2.0);
        assert_eq!(predict_ewma(&history(&[4.0; 4]), 0.7).unwrap(), 4.0);
    }

    #[test]
    fn empty_history_has_no_prediction() {
        let h = ThroughputHistory::new(5, 0.01).unwrap();
        assert_eq!(predict_harmonic(&h), Err(PredictorError::NoHistory));
        assert_eq!(predict_ewma(&h, 0.5), Err(PredictorError::NoHistory));
    }

    #[test]
    fn ring_keeps_newest() {
        let mut h = ThroughputHistory::new(3, 0.01).unwrap();
        for s in [1.0, 2.0, 3.0, 4.0] {
            h.push(s);
        }
        assert_eq!(h.samples().collect::<Vec<_>>(), vec![2.0, 3.0, 4.0]);
    }

    proptest! {
        #[test]
        fn harmonic_at_most_arithmetic(samples in prop::collection::vec(0.01f64..100.0, 1..10)) {
            let h = history(&samples);
            let hm = predict_harmonic(&h).unwrap();
            let am = samples.iter().sum::<f64>() / samples.len() as f64;
            prop_assert!(hm <= am * (1.0 + 1e-12));
        }

        #[test]
        fn predictors_scale_with_samples(
            samples in prop::collection::vec(0.01f64..100.0, 1..10),
            scale in 0.1f64..10.0,
            weight in 0.05f64..0.95,
        ) {
            let h = history(&samples);
            let scaled: Vec<f64> = samples.iter().map(|s| s * scale).collect();
            let hs = history(&scaled);
            let a = predict_harmonic(&hs).unwrap();
            let b = scale * predict_harmonic(&h).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * b);
            let a = predict_ewma(&hs, weight).unwrap();
            let b = scale * predict_ewma(&h, weight).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * b);
        }
    }
}
