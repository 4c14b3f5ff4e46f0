//! Trace-driven playback sessions.
//!
//! One chunk at a time: predict bandwidth, decide the chunk's level, then
//! download it against the actual trace. Playback starts at the startup
//! delay; chunk `k` starts playing at `P(k) = max(P(k-1) + L, f_k)` where
//! `f_k` is the slot its last byte arrives in, and any excess over
//! `P(k-1) + L` is stall. Downloads continue during stalls.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{bba_decide, festive_decide, rb_decide, BaselineParams};
use crate::engine::{fastscan_window, EngineError};
use crate::model::{
    check_feasibility, validate_beta, BandwidthTimeline, Bytes, DecisionSet, FeasibilityReport, FetchEntry,
    FetchSchedule, ModelError, Slot, VideoManifest, WindowContext,
};
use crate::predictor::{predict_ewma, predict_harmonic, PredictorError, ThroughputHistory};
use crate::qoe::{score_session, summarize, QoeParams, Summary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("beta {beta} does not give diminishing returns for window {window} and {levels} levels")]
    BetaCondition { beta: f64, window: usize, levels: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("no progress on chunk {chunk} for {slots} slots (stuck at slot {slot})")]
    ProgressTimeout { chunk: usize, slot: Slot, slots: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    FastScan,
    Rb,
    Bba,
    Festive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::FastScan, Algorithm::Rb, Algorithm::Bba, Algorithm::Festive];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FastScan => "fastscan",
            Algorithm::Rb => "rb",
            Algorithm::Bba => "bba",
            Algorithm::Festive => "festive",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected fastscan, rb, bba or festive)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Harmonic,
    Ewma,
    /// Reads the actual trace ahead of time. For tests and upper bounds.
    Perfect,
}

impl FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "harmonic" => Ok(PredictorKind::Harmonic),
            "ewma" => Ok(PredictorKind::Ewma),
            "perfect" => Ok(PredictorKind::Perfect),
            _ => Err(format!("unknown predictor {s:?} (expected harmonic, ewma or perfect)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub algorithm: Algorithm,
    pub window: usize,
    pub eta: usize,
    pub beta: f64,
    pub lambda: f64,
    pub buffer_cap_s: u64,
    pub low_buffer_threshold_s: f64,
    pub predictor: PredictorKind,
    pub ewma_weight: f64,
    /// Prediction before any chunk has been measured, bytes per second.
    /// Defaults to the lowest level's rate.
    pub bootstrap_rate: Option<f64>,
    /// Stored in place of throughputs below it, bytes per second.
    pub throughput_floor: f64,
    pub baseline: BaselineParams,
    /// Slots without a single fetched byte before giving up.
    pub progress_timeout_slots: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::FastScan,
            window: 5,
            eta: 5,
            beta: 0.1,
            lambda: 10.0,
            buffer_cap_s: 60,
            low_buffer_threshold_s: 5.0,
            predictor: PredictorKind::Harmonic,
            ewma_weight: 0.5,
            bootstrap_rate: None,
            throughput_floor: 1.0,
            baseline: BaselineParams::default(),
            progress_timeout_slots: 600,
        }
    }
}

impl SessionConfig {
    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn qoe_params(&self) -> QoeParams {
        QoeParams {
            beta: self.beta,
            lambda: self.lambda,
        }
    }

    pub fn validate(&self, manifest: &VideoManifest) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.eta == 0 {
            return bad("eta must be at least 1".into());
        }
        if self.low_buffer_threshold_s.is_nan() || self.low_buffer_threshold_s < 0.0 {
            return bad(format!(
                "low buffer threshold {} is negative",
                self.low_buffer_threshold_s
            ));
        }
        if self.buffer_cap_s < manifest.chunk_duration_s() {
            return bad(format!(
                "buffer of {}s cannot hold a {}s chunk",
                self.buffer_cap_s,
                manifest.chunk_duration_s()
            ));
        }
        if !(self.ewma_weight > 0.0 && self.ewma_weight < 1.0) {
            return bad(format!("ewma weight {} outside (0, 1)", self.ewma_weight));
        }
        if let Some(r) = self.bootstrap_rate {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("bootstrap rate {r} must be positive"));
            }
        }
        if self.progress_timeout_slots == 0 {
            return bad("progress timeout must be at least one slot".into());
        }
        self.qoe_params().validate()?;
        if self.algorithm == Algorithm::Bba {
            self.baseline.validate(self.buffer_cap_s as f64)?;
        }
        if self.algorithm == Algorithm::FastScan {
            let window = self.window.min(manifest.num_chunks());
            if !validate_beta(self.beta, window, manifest.top_level())? {
                return Err(SimError::BetaCondition {
                    beta: self.beta,
                    window,
                    levels: manifest.num_levels(),
                });
            }
        }
        Ok(())
    }
}

/// Actual per-slot bandwidth in bytes, starting at slot 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    pub samples: Vec<Bytes>,
}

impl Trace {
    pub fn new(name: impl Into<String>, samples: Vec<Bytes>) -> Self {
        Self {
            name: name.into(),
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionReason {
    Algorithm,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub index: usize,
    pub level: usize,
    /// Level chosen by the algorithm before the low-buffer fallback.
    pub decided_level: usize,
    pub reason: DecisionReason,
    pub bytes: Bytes,
    pub predicted_rate: f64,
    pub start_s: f64,
    pub end_s: f64,
    pub start_slot: Slot,
    pub end_slot: Slot,
    /// Slot in which the chunk starts playing.
    pub deadline: Slot,
    pub stall_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub algorithm: String,
    pub trace: String,
    pub manifest_digest: String,
    pub config: SessionConfig,
    pub chunks: Vec<ChunkRecord>,
    /// Buffer occupancy in seconds at each slot from 1 to the last download.
    pub buffer_trajectory: Vec<f64>,
    pub total_stall_s: u64,
    pub startup_delay_s: u64,
    pub qoe: f64,
    pub level_counts: Vec<usize>,
    /// True when the download ran past the trace and its last sample was held.
    pub trace_extended: bool,
    /// Every fetch of the session; kept in memory only.
    #[serde(skip)]
    pub schedule: FetchSchedule,
}

impl SessionLog {
    pub fn levels(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.level).collect()
    }

    pub fn fallback_count(&self) -> usize {
        self.chunks
            .iter()
            .filter(|c| c.reason == DecisionReason::Fallback)
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,level,bytes,start,end,deadline,stall_s\n");
        for c in &self.chunks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.index, c.level, c.bytes, c.start_s, c.end_s, c.deadline, c.stall_s
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session log serializes")
    }
}

pub fn manifest_digest(manifest: &VideoManifest) -> String {
    let mut h = DefaultHasher::new();
    manifest.chunk_duration_s().hash(&mut h);
    manifest.startup_delay_s().hash(&mut h);
    for c in 0..manifest.num_chunks() {
        for s in manifest.chunk_sizes(c) {
            s.to_bits().hash(&mut h);
        }
    }
    format!("{:016x}", h.finish())
}

/// Download position: inside `slot`, `used` bytes already taken.
struct Cursor<'a> {
    actual: &'a BandwidthTimeline,
    slot: Slot,
    used: Bytes,
    extended: bool,
}

impl Cursor<'_> {
    fn left(&self) -> Bytes {
        self.actual.rate(self.slot) - self.used
    }

    fn time(&self) -> f64 {
        let rate = self.actual.rate(self.slot);
        let frac = if rate > 0.0 { self.used / rate } else { 0.0 };
        (self.slot - 1) as f64 + frac
    }

    fn advance(&mut self) {
        self.slot += 1;
        self.used = 0.0;
        if self.slot > self.actual.last_sample_slot() {
            self.extended = true;
        }
    }
}

fn predict(
    kind: PredictorKind,
    history: &ThroughputHistory,
    config: &SessionConfig,
    bootstrap: f64,
) -> Result<f64, PredictorError> {
    let result = match kind {
        PredictorKind::Harmonic => predict_harmonic(history),
        PredictorKind::Ewma => predict_ewma(history, config.ewma_weight),
        PredictorKind::Perfect => unreachable!("perfect prediction reads the trace"),
    };
    match result {
        Err(PredictorError::NoHistory) => Ok(bootstrap),
        other => other,
    }
}

/// Mean actual bandwidth over the next `span` slots.
fn lookahead_mean(cursor: &Cursor<'_>, span: u64) -> f64 {
    let total: f64 = (0..span).map(|k| cursor.actual.rate(cursor.slot + k)).sum::<f64>() - cursor.used;
    total.max(0.0) / span as f64
}

pub fn run_session(manifest: &VideoManifest, trace: &Trace, config: &SessionConfig) -> Result<SessionLog, SimError> {
    config.validate(manifest)?;
    if trace.samples.is_empty() {
        return Err(SimError::InvalidConfig(format!("trace {} is empty", trace.name)));
    }
    let l = manifest.chunk_duration_s();
    let s = manifest.startup_delay_s();
    let v = manifest.num_chunks();
    let cap = (config.buffer_cap_s / l) as usize;
    let rates = manifest.level_rates();
    let bootstrap = config.bootstrap_rate.unwrap_or(rates[0]);
    let last = *trace.samples.last().unwrap();
    let actual = BandwidthTimeline::from_samples(trace.samples.clone())?.with_tail(last)?;

    let mut history = ThroughputHistory::new(config.eta, config.throughput_floor)?;
    let mut cursor = Cursor {
        actual: &actual,
        slot: 1,
        used: 0.0,
        extended: false,
    };
    let mut play: Vec<Slot> = Vec::with_capacity(v);
    let mut first_slots: Vec<Slot> = Vec::with_capacity(v);
    let mut chunks = Vec::with_capacity(v);
    let mut stall_total = 0u64;
    let mut previous_level = 0usize;
    let mut fetches = Vec::new();

    for i in 0..v {
        let now = cursor.time();
        let due = if i == 0 { s } else { play[i - 1] + l };
        let buffer_s: f64 = play
            .iter()
            .map(|&p| (p as f64 + l as f64 - now).clamp(0.0, l as f64))
            .sum();

        let predicted = match config.predictor {
            PredictorKind::Perfect => lookahead_mean(&cursor, (config.window as u64 * l).max(1)),
            kind => predict(kind, &history, config, bootstrap)?,
        };
        let decided = match config.algorithm {
            Algorithm::FastScan => {
                let ctx = WindowContext::clipped(
                    manifest,
                    i,
                    config.window,
                    cursor.slot,
                    s + stall_total,
                    config.buffer_cap_s,
                    play.clone(),
                );
                let timeline = if config.predictor == PredictorKind::Perfect {
                    let mut samples: Vec<Bytes> = (cursor.slot..=actual.last_sample_slot().max(cursor.slot))
                        .map(|j| actual.rate(j))
                        .collect();
                    samples[0] = cursor.left().max(0.0);
                    BandwidthTimeline::new(cursor.slot, samples)?.with_tail(actual.tail_rate())?
                } else {
                    let rate = predicted.floor().max(1.0);
                    let first = (rate - cursor.used).max(0.0).floor();
                    BandwidthTimeline::new(cursor.slot, vec![first])?.with_tail(rate)?
                };
                match fastscan_window(&ctx, manifest, &timeline, config.beta) {
                    Ok(out) => out.decisions.levels[0],
                    Err(EngineError::InsufficientTrace { .. }) => 0,
                    Err(e) => return Err(e.into()),
                }
            }
            Algorithm::Rb => rb_decide(predicted, &rates),
            Algorithm::Bba => bba_decide(buffer_s, &config.baseline, manifest.num_levels()),
            Algorithm::Festive => {
                let recent: Vec<usize> = chunks.iter().map(|c: &ChunkRecord| c.level).collect();
                festive_decide(predicted, previous_level, &recent, &rates, &config.baseline)
            }
        };
        let (level, reason) =
            if config.algorithm == Algorithm::FastScan && decided > 0 && buffer_s < config.low_buffer_threshold_s {
                (decided - 1, DecisionReason::Fallback)
            } else {
                (decided, DecisionReason::Algorithm)
            };

        // Wait for buffer room.
        while play.iter().filter(|&&p| p > cursor.slot).count() >= cap {
            cursor.advance();
        }
        let bytes = manifest.size(i, level);
        // Bytes arrive lowest increment first.
        let mut parts: Vec<(usize, Bytes)> = (0..=level).map(|n| (n, manifest.increment(i, n))).collect();
        let mut part = 0;
        let mut start: Option<(f64, Slot)> = None;
        let mut idle = 0u64;
        while part < parts.len() {
            if parts[part].1 <= 0.0 {
                part += 1;
                continue;
            }
            let left = cursor.left();
            if left <= 0.0 {
                idle += 1;
                if idle > config.progress_timeout_slots {
                    return Err(SimError::ProgressTimeout {
                        chunk: i,
                        slot: cursor.slot,
                        slots: config.progress_timeout_slots,
                    });
                }
                cursor.advance();
                continue;
            }
            idle = 0;
            if start.is_none() {
                start = Some((cursor.time(), cursor.slot));
            }
            let take = left.min(parts[part].1);
            cursor.used += take;
            parts[part].1 -= take;
            fetches.push(FetchEntry {
                chunk: i,
                level: parts[part].0,
                slot: cursor.slot,
                amount: take,
            });
        }
        let (start_s, start_slot) = start.unwrap_or((cursor.time(), cursor.slot));
        let end_s = cursor.time();
        let end_slot = cursor.slot;
        history.push_download(bytes, end_s - start_s);

        let p = due.max(end_slot);
        let stall = p - due;
        stall_total += stall;
        play.push(p);
        first_slots.push(start_slot);
        previous_level = level;
        chunks.push(ChunkRecord {
            index: i,
            level,
            decided_level: decided,
            reason,
            bytes,
            predicted_rate: predicted,
            start_s,
            end_s,
            start_slot,
            end_slot,
            deadline: p,
            stall_s: stall,
        });
    }

    let horizon = chunks.last().map(|c| c.end_slot).unwrap_or(1);
    let buffer_trajectory = (1..=horizon)
        .map(|t| {
            let held = first_slots.iter().zip(&play).filter(|(&f, &p)| f <= t && p > t).count();
            (held as u64 * l) as f64
        })
        .collect();
    let mut level_counts = vec![0usize; manifest.num_levels()];
    for c in &chunks {
        level_counts[c.level] += 1;
    }
    let mut log = SessionLog {
        algorithm: config.algorithm.name().to_string(),
        trace: trace.name.clone(),
        manifest_digest: manifest_digest(manifest),
        config: config.clone(),
        chunks,
        buffer_trajectory,
        total_stall_s: stall_total,
        startup_delay_s: s,
        qoe: 0.0,
        level_counts,
        trace_extended: cursor.extended,
        schedule: FetchSchedule { entries: fetches },
    };
    log.qoe = score_session(&log, &config.qoe_params());
    Ok(log)
}

/// Replays a finished session as one window over the whole video, with the
/// realized play-out slots as deadlines, and checks every constraint.
pub fn check_session(
    manifest: &VideoManifest,
    trace: &Trace,
    log: &SessionLog,
) -> Result<FeasibilityReport, ModelError> {
    let last = trace.samples.last().copied().unwrap_or(0.0);
    let timeline = BandwidthTimeline::from_samples(trace.samples.clone())?.with_tail(last)?;
    let ctx = WindowContext::whole_video(manifest, log.config.buffer_cap_s);
    let mut stall = 0;
    let decisions = DecisionSet {
        first_chunk: 0,
        levels: log.levels(),
        sizes: log.chunks.iter().map(|c| c.bytes).collect(),
        stall_before: log
            .chunks
            .iter()
            .map(|c| {
                stall += c.stall_s;
                stall
            })
            .collect(),
        deadlines: log.chunks.iter().map(|c| c.deadline).collect(),
    };
    check_feasibility(manifest, &timeline, &ctx, &decisions, &log.schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub trace: String,
    pub algorithm: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<PairOutcome>,
    pub summary: Summary,
    #[serde(skip)]
    pub logs: Vec<SessionLog>,
}

impl ComparisonReport {
    pub fn succeeded(&self) -> usize {
        self.pairs.iter().filter(|p| p.error.is_none()).count()
    }
}

/// Runs every (trace, config) pair in trace-major order. Failed pairs are
/// reported, not fatal. QoE is normalized against the FastScan run on each
/// trace when one exists.
pub fn run_comparison(
    manifest: &VideoManifest,
    traces: &[Trace],
    configs: &[SessionConfig],
    params: &QoeParams,
) -> ComparisonReport {
    let mut pairs = Vec::new();
    let mut logs = Vec::new();
    for trace in traces {
        for config in configs {
            match run_session(manifest, trace, config) {
                Ok(log) => {
                    pairs.push(PairOutcome {
                        trace: trace.name.clone(),
                        algorithm: config.algorithm.name().to_string(),
                        error: None,
                    });
                    logs.push(log);
                }
                Err(e) => pairs.push(PairOutcome {
                    trace: trace.name.clone(),
                    algorithm: config.algorithm.name().to_string(),
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    let reference = Algorithm::FastScan.name();
    let summary = if logs.is_empty() {
        Summary {
            reference: reference.to_string(),
            rows: Vec::new(),
        }
    } else {
        summarize(&logs, reference, params).expect("all logs share one manifest")
    };
    ComparisonReport { pairs, summary, logs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fastscan_window;

    fn cbr(v: usize, sizes: &[f64]) -> VideoManifest {
        VideoManifest::cbr(1, 1, v, sizes).unwrap()
    }

    fn perfect(window: usize) -> SessionConfig {
        SessionConfig {
            window,
            predictor: PredictorKind::Perfect,
            low_buffer_threshold_s: 0.0,
            buffer_cap_s: 10,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn ample_bandwidth_reaches_top_level() {
        let m = cbr(6, &[1.0, 2.0, 4.0]);
        let trace = Trace::new("flat", vec![1000.0; 20]);
        let log = run_session(&m, &trace, &perfect(6)).unwrap();
        assert_eq!(log.levels(), vec![2; 6]);
        assert_eq!(log.total_stall_s, 0);
        assert!((log.qoe - 6.0 * 1.11).abs() < 1e-9);
    }

    #[test]
    fn perfect_prediction_matches_offline_plan() {
        let m = cbr(3, &[1.0, 2.0]);
        let trace = Trace::new("unit", vec![1.0; 10]);
        let config = SessionConfig {
            buffer_cap_s: 1,
            ..perfect(3)
        };
        let log = run_session(&m, &trace, &config).unwrap();
        let ctx = WindowContext::whole_video(&m, 1);
        let t = BandwidthTimeline::from_samples(vec![1.0; 10])
            .unwrap()
            .with_tail(1.0)
            .unwrap();
        let offline = fastscan_window(&ctx, &m, &t, 0.1).unwrap();
        assert_eq!(log.levels(), offline.decisions.levels);
        assert_eq!(log.total_stall_s, offline.decisions.total_stall());
        assert_eq!(log.levels(), vec![0, 0, 0]);
    }

    #[test]
    fn optimistic_prediction_triggers_fallback() {
        let m = VideoManifest::cbr(1, 1, 6, &[1.0, 4.0]).unwrap();
        let trace = Trace::new("slow", vec![1.0; 40]);
        let config = SessionConfig {
            window: 3,
            buffer_cap_s: 10,
            low_buffer_threshold_s: 2.0,
            bootstrap_rate: Some(8.0),
            ..SessionConfig::default()
        };
        let log = run_session(&m, &trace, &config).unwrap();
        let fallback = log
            .chunks
            .iter()
            .find(|c| c.reason == DecisionReason::Fallback)
            .expect("fallback fires");
        assert_eq!(fallback.level + 1, fallback.decided_level);
    }

    #[test]
    fn sessions_are_deterministic() {
        let m = VideoManifest::cbr(2, 2, 8, &[1.0, 3.0, 6.0]).unwrap();
        let samples: Vec<f64> = (0..60).map(|j| ((j * 7) % 5) as f64).collect();
        let trace = Trace::new("wobble", samples);
        for algo in Algorithm::ALL {
            let config = SessionConfig {
                buffer_cap_s: 30,
                ..SessionConfig::default().with_algorithm(algo)
            };
            let a = run_session(&m, &trace, &config).unwrap();
            let b = run_session(&m, &trace, &config).unwrap();
            assert_eq!(a.to_json(), b.to_json());
            assert_eq!(a.to_csv(), b.to_csv());
            let report = check_session(&m, &trace, &a).unwrap();
            assert!(report.passed(), "{algo}: {:?}", report.first_violation());
        }
    }

    #[test]
    fn buffer_never_exceeds_cap() {
        let m = VideoManifest::cbr(2, 2, 12, &[1.0, 3.0]).unwrap();
        let trace = Trace::new("fast", vec![50.0; 40]);
        let config = SessionConfig {
            buffer_cap_s: 6,
            ..SessionConfig::default()
        };
        let log = run_session(&m, &trace, &config).unwrap();
        assert!(log.buffer_trajectory.iter().all(|&b| b <= 6.0));
        assert!(check_session(&m, &trace, &log).unwrap().passed());
        assert!(log.buffer_trajectory.contains(&6.0));
    }

    #[test]
    fn stall_accounting() {
        let m = cbr(3, &[2.0]);
        let trace = Trace::new("half", vec![1.0; 10]);
        let log = run_session(&m, &trace, &perfect(3)).unwrap();
        // Chunks finish at slots 2, 4, 6 against due times 1, 3, 5.
        assert_eq!(log.chunks.iter().map(|c| c.stall_s).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert_eq!(log.total_stall_s, 3);
        assert_eq!(log.qoe, 3.0 - 30.0);
    }

    #[test]
    fn dead_trace_times_out() {
        let m = cbr(2, &[1.0]);
        let trace = Trace::new("dead", vec![0.0; 5]);
        let config = SessionConfig {
            progress_timeout_slots: 20,
            ..SessionConfig::default()
        };
        let err = run_session(&m, &trace, &config).unwrap_err();
        assert!(matches!(err, SimError::ProgressTimeout { chunk: 0, .. }));
    }

    #[test]
    fn short_trace_is_extended_and_flagged() {
        let m = cbr(5, &[1.0]);
        let trace = Trace::new("short", vec![1.0, 1.0]);
        let log = run_session(&m, &trace, &perfect(5)).unwrap();
        assert!(log.trace_extended);
        assert_eq!(log.chunks.len(), 5);
    }

    #[test]
    fn beta_condition_is_checked() {
        let m = VideoManifest::cbr(1, 1, 10, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let config = SessionConfig {
            beta: 0.5,
            ..SessionConfig::default()
        };
        let err = run_session(&m, &Trace::new("t", vec![1.0]), &config).unwrap_err();
        assert!(matches!(err, SimError::BetaCondition { .. }));
    }

    #[test]
    fn comparison_on_ample_bandwidth_normalizes_to_one() {
        let m = cbr(4, &[1.0, 2.0]);
        let traces = vec![Trace::new("flat", vec![100.0; 20])];
        let configs = vec![
            SessionConfig {
                buffer_cap_s: 10,
                bootstrap_rate: Some(100.0),
                ..SessionConfig::default()
            },
            SessionConfig {
                buffer_cap_s: 10,
                bootstrap_rate: Some(100.0),
                ..SessionConfig::default().with_algorithm(Algorithm::Rb)
            },
        ];
        let mut configs = configs;
        for c in &mut configs {
            c.low_buffer_threshold_s = 0.0;
        }
        let report = run_comparison(&m, &traces, &configs, &QoeParams::default());
        assert_eq!(report.succeeded(), 2);
        for row in &report.summary.rows {
            assert_eq!(row.normalized_qoe, Some(1.0));
        }
    }

    #[test]
    fn comparison_of_nothing_is_empty() {
        let m = cbr(2, &[1.0]);
        let report = run_comparison(&m, &[], &[SessionConfig::default()], &QoeParams::default());
        assert!(report.pairs.is_empty());
        assert!(report.summary.rows.is_empty());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("mpc".parse::<Algorithm>().is_err());
    }
}
