//! Seeded synthetic traces and manifests.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, VideoManifest, BYTES_PER_MBIT};

/// Nominal level rates in Mbps used when none are given.
pub const DEFAULT_RATES_MBPS: [f64; 5] = [0.338, 0.583, 0.959, 1.898, 2.806];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceModel {
    Constant,
    /// Alternates between `mean + stddev` and `mean - stddev`.
    Markov2State,
    /// Mean-reverting Ornstein-Uhlenbeck process with stationary `stddev`.
    Ou,
}

impl TraceModel {
    pub fn name(self) -> &'static str {
        match self {
            TraceModel::Constant => "constant",
            TraceModel::Markov2State => "markov-2state",
            TraceModel::Ou => "ou",
        }
    }
}

impl fmt::Display for TraceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TraceModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [TraceModel::Constant, TraceModel::Markov2State, TraceModel::Ou]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown trace model {s:?} (expected constant, markov-2state or ou)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub model: TraceModel,
    pub length_s: usize,
    pub mean_mbps: f64,
    pub stddev_mbps: f64,
    /// Per-second probability of leaving the current state (markov-2state).
    pub switch_prob: f64,
    /// Mean reversion per second (ou).
    pub reversion: f64,
    pub seed: u64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            model: TraceModel::Constant,
            length_s: 300,
            mean_mbps: 1.0,
            stddev_mbps: 0.0,
            switch_prob: 0.1,
            reversion: 0.1,
            seed: 0,
        }
    }
}

/// Generates a trace in Mbps, rounded to kbps.
pub fn generate_trace(params: &TraceParams) -> Result<Vec<f64>, ModelError> {
    let bad = |m: String| Err(ModelError::InvalidParameter(m));
    if params.length_s == 0 {
        return bad("trace length must be positive".into());
    }
    if !(params.mean_mbps >= 0.0 && params.mean_mbps.is_finite()) {
        return bad(format!("mean {} must be non-negative", params.mean_mbps));
    }
    if !(params.stddev_mbps >= 0.0 && params.stddev_mbps.is_finite()) {
        return bad(format!("stddev {} must be non-negative", params.stddev_mbps));
    }
    if !(0.0..=1.0).contains(&params.switch_prob) {
        return bad(format!("switch probability {} outside [0, 1]", params.switch_prob));
    }
    if !(params.reversion > 0.0 && params.reversion <= 1.0) {
        return bad(format!("reversion {} outside (0, 1]", params.reversion));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let round = |x: f64| (x.max(0.0) * 1000.0).round() / 1000.0;
    let out = match params.model {
        TraceModel::Constant => vec![round(params.mean_mbps); params.length_s],
        TraceModel::Markov2State => {
            let high = params.mean_mbps + params.stddev_mbps;
            let low = params.mean_mbps - params.stddev_mbps;
            let mut up = rng.random_bool(0.5);
            (0..params.length_s)
                .map(|_| {
                    if rng.random_bool(params.switch_prob) {
                        up = !up;
                    }
                    round(if up { high } else { low })
                })
                .collect()
        }
        TraceModel::Ou => {
            let theta = params.reversion;
            let sigma = params.stddev_mbps * (theta * (2.0 - theta)).sqrt();
            let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE))
                .map_err(|e| ModelError::InvalidParameter(e.to_string()))?;
            let mut x = params.mean_mbps;
            (0..params.length_s)
                .map(|_| {
                    x += theta * (params.mean_mbps - x) + noise.sample(&mut rng);
                    round(x)
                })
                .collect()
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub chunks: usize,
    pub chunk_duration_s: u64,
    pub startup_delay_s: u64,
    pub rates_mbps: Vec<f64>,
    /// Each size is scaled by a uniform factor in `1 ± jitter_pct / 100`.
    pub jitter_pct: f64,
    pub seed: u64,
}

impl Default for ManifestParams {
    fn default() -> Self {
        Self {
            chunks: 75,
            chunk_duration_s: 4,
            startup_delay_s: 4,
            rates_mbps: DEFAULT_RATES_MBPS.to_vec(),
            jitter_pct: 0.0,
            seed: 0,
        }
    }
}

/// Builds a manifest with sizes `rate * L` bytes, jittered per chunk and
/// level. Zero jitter gives a CBR manifest.
pub fn generate_manifest(params: &ManifestParams) -> Result<VideoManifest, ModelError> {
    if params.chunks == 0 {
        return Err(ModelError::InvalidParameter("manifest needs at least one chunk".into()));
    }
    if params.rates_mbps.is_empty() {
        return Err(ModelError::InvalidParameter(
            "at least one level rate is required".into(),
        ));
    }
    if !(0.0..100.0).contains(&params.jitter_pct) {
        return Err(ModelError::InvalidParameter(format!(
            "jitter {}% outside [0, 100)",
            params.jitter_pct
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let jitter = params.jitter_pct / 100.0;
    let sizes = (0..params.chunks)
        .map(|_| {
            params
                .rates_mbps
                .iter()
                .map(|r| {
                    let factor = if jitter > 0.0 {
                        1.0 + rng.random_range(-jitter..=jitter)
                    } else {
                        1.0
                    };
                    (r * params.chunk_duration_s as f64 * BYTES_PER_MBIT * factor).round()
                })
                .collect()
        })
        .collect();
    VideoManifest::new(params.chunk_duration_s, params.startup_delay_s, sizes)?
        .with_nominal_mbps(params.rates_mbps.clone())
}
