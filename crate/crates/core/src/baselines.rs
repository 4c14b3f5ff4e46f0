//! Rule-based comparison algorithms: rate-based, buffer-based and a
//! Festive-style stability/efficiency trade-off.

use serde::{Deserialize, Serialize};

use crate::model::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub bba_reservoir_s: f64,
    pub bba_cushion_s: f64,
    pub festive_alpha: f64,
    /// Number of past decisions inspected for switches.
    pub festive_history: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            bba_reservoir_s: 10.0,
            bba_cushion_s: 30.0,
            festive_alpha: 12.0,
            festive_history: 5,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self, buffer_cap_s: f64) -> Result<(), ModelError> {
        if !(self.bba_reservoir_s >= 0.0
            && self.bba_reservoir_s < self.bba_cushion_s
            && self.bba_cushion_s <= buffer_cap_s)
        {
            return Err(ModelError::InvalidParameter(format!(
                "need 0 <= reservoir ({}) < cushion ({}) <= buffer ({buffer_cap_s})",
                self.bba_reservoir_s, self.bba_cushion_s
            )));
        }
        if self.festive_alpha.is_nan() || self.festive_alpha < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "festive alpha must be non-negative, got {}",
                self.festive_alpha
            )));
        }
        Ok(())
    }
}

/// Highest level whose rate is below the prediction; 0 if none is.
pub fn rb_decide(prediction: f64, level_rates: &[f64]) -> usize {
    level_rates.iter().rposition(|&r| r < prediction).unwrap_or(0)
}

/// Lowest level up to the reservoir, top level from the cushion on, and a
/// floored linear map in between.
pub fn bba_decide(buffer_s: f64, params: &BaselineParams, num_levels: usize) -> usize {
    let top = num_levels.saturating_sub(1);
    if buffer_s <= params.bba_reservoir_s {
        return 0;
    }
    if buffer_s >= params.bba_cushion_s {
        return top;
    }
    let frac = (buffer_s - params.bba_reservoir_s) / (params.bba_cushion_s - params.bba_reservoir_s);
    ((top as f64 * frac).floor() as usize).min(top)
}

/// Picks among the current level and its neighbours by minimizing
/// `stability + alpha * efficiency`.
///
/// Efficiency of level `n` is `|rate(n) / min(prediction, rate(ref)) - 1|`,
/// where `ref` is the highest candidate whose rate does not exceed the
/// prediction (the lowest candidate if none does). Stability counts switches
/// among `recent` decisions, plus one if `n` differs from `current`.
pub fn festive_decide(
    prediction: f64,
    current: usize,
    recent: &[usize],
    level_rates: &[f64],
    params: &BaselineParams,
) -> usize {
    let top = level_rates.len().saturating_sub(1);
    let current = current.min(top);
    let lo = current.saturating_sub(1);
    let hi = (current + 1).min(top);
    let reference = (lo..=hi).rev().find(|&n| level_rates[n] <= prediction).unwrap_or(lo);
    let denom = prediction.min(level_rates[reference]);
    let tail = &recent[recent.len().saturating_sub(params.festive_history)..];
    let switches = tail.windows(2).filter(|w| w[0] != w[1]).count() as f64;

    let mut best = current;
    let mut best_score = f64::INFINITY;
    for (n, &rate) in level_rates.iter().enumerate().take(hi + 1).skip(lo) {
        let efficiency = if denom > 0.0 {
            (rate / denom - 1.0).abs()
        } else {
            f64::INFINITY
        };
        let stability = switches + f64::from(u8::from(n != current));
        let score = stability + params.festive_alpha * efficiency;
        if score < best_score {
            best = n;
            best_score = score;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RATES: [f64; 5] = [0.338, 0.583, 0.959, 1.898, 2.806];

    #[test]
    fn rb_examples() {
        assert_eq!(rb_decide(1.0, &RATES), 2);
        assert_eq!(rb_decide(0.2, &RATES), 0);
        assert_eq!(rb_decide(99.0, &RATES), 4);
        assert_eq!(rb_decide(0.959, &RATES), 1);
    }

    #[test]
    fn bba_examples() {
        let p = BaselineParams::default();
        assert_eq!(bba_decide(5.0, &p, 5), 0);
        assert_eq!(bba_decide(35.0, &p, 5), 4);
        assert_eq!(bba_decide(20.0, &p, 5), 2);
        assert_eq!(bba_decide(10.0, &p, 5), 0);
        assert_eq!(bba_decide(30.0, &p, 5), 4);
    }

    #[test]
    fn festive_keeps_matching_level() {
        let p = BaselineParams::default();
        assert_eq!(festive_decide(0.96, 2, &[2, 2, 2, 2, 2], &RATES, &p), 2);
    }

    #[test]
    fn festive_steps_up_on_high_prediction() {
        let p = BaselineParams::default();
        assert_eq!(festive_decide(5.0, 2, &[2, 2, 2, 2, 2], &RATES, &p), 3);
    }

    #[test]
    fn festive_steps_down_despite_recent_switches() {
        let p = BaselineParams::default();
        assert_eq!(festive_decide(0.4, 3, &[2, 3, 2, 3, 3], &RATES, &p), 2);
    }

    #[test]
    fn festive_moves_one_level_at_most() {
        let p = BaselineParams::default();
        assert_eq!(festive_decide(100.0, 0, &[], &RATES, &p), 1);
        assert_eq!(festive_decide(0.01, 4, &[], &RATES, &p), 3);
    }

    #[test]
    fn params_validation() {
        assert!(BaselineParams::default().validate(60.0).is_ok());
        assert!(BaselineParams::default().validate(20.0).is_err());
    }

    proptest! {
        #[test]
        fn rb_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(rb_decide(lo, &RATES) <= rb_decide(hi, &RATES));
        }

        #[test]
        fn bba_monotone_and_in_range(a in 0.0f64..60.0, b in 0.0f64..60.0, levels in 1usize..8) {
            let p = BaselineParams::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(bba_decide(lo, &p, levels) <= bba_decide(hi, &p, levels));
            prop_assert!(bba_decide(hi, &p, levels) < levels);
        }

        #[test]
        fn festive_in_range(pred in 0.0f64..10.0, cur in 0usize..5, recent in prop::collection::vec(0usize..5, 0..8)) {
            let n = festive_decide(pred, cur, &recent, &RATES, &BaselineParams::default());
            prop_assert!(n < RATES.len());
            prop_assert!(n + 1 >= cur && n <= cur + 1);
        }
    }
}
