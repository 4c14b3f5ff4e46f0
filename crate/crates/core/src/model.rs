//! Domain types shared by the scan engine, the simulator, the baselines and the
//! oracle.
//!
//! Conventions used throughout the crate:
//!
//! * Chunks are indexed from 0. Chunk `k` has base playback deadline
//!   `prior_stall + k * L` before any stall inside the current window.
//! * Time is split into 1-second slots numbered from 1. Slot `j` covers the
//!   interval `(j - 1, j]`; a chunk finished in slot `j` is playable at `j`.
//! * Amounts are bytes, carried as `f64` so fractional predictions are
//!   representable. Integer-valued inputs stay exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amount of data in bytes.
pub type Bytes = f64;

/// A one-second slot index (1-based).
pub type Slot = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("chunk {chunk}: size at level {level} ({size}) must exceed level {prev} ({prev_size})")]
    NonIncreasingSizes {
        chunk: usize,
        level: usize,
        size: Bytes,
        prev: usize,
        prev_size: Bytes,
    },
    #[error("structural mismatch: {0}")]
    Structural(String),
}

/// Per-chunk, per-level encoded sizes of a video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    chunk_duration_s: u64,
    startup_delay_s: u64,
    /// `sizes[chunk][level]`
    sizes: Vec<Vec<Bytes>>,
    /// Optional advertised rate of each level in Mbps.
    nominal_mbps: Option<Vec<f64>>,
}

impl VideoManifest {
    pub fn new(chunk_duration_s: u64, startup_delay_s: u64, sizes: Vec<Vec<Bytes>>) -> Result<Self, ModelError> {
        if chunk_duration_s == 0 {
            return Err(ModelError::InvalidParameter("chunk duration must be positive".into()));
        }
        if sizes.is_empty() {
            return Err(ModelError::InvalidParameter("manifest needs at least one chunk".into()));
        }
        let levels = sizes[0].len();
        if levels == 0 {
            return Err(ModelError::InvalidParameter("manifest needs at least one level".into()));
        }
        for (chunk, row) in sizes.iter().enumerate() {
            if row.len() != levels {
                return Err(ModelError::Structural(format!(
                    "chunk {chunk} has {} levels, expected {levels}",
                    row.len()
                )));
            }
            for (level, &size) in row.iter().enumerate() {
                if !size.is_finite() || size < 0.0 {
                    return Err(ModelError::InvalidParameter(format!(
                        "chunk {chunk} level {level}: size {size} is not a non-negative number"
                    )));
                }
                if level > 0 && size <= row[level - 1] {
                    return Err(ModelError::NonIncreasingSizes {
                        chunk,
                        level,
                        size,
                        prev: level - 1,
                        prev_size: row[level - 1],
                    });
                }
            }
        }
        Ok(Self {
            chunk_duration_s,
            startup_delay_s,
            sizes,
            nominal_mbps: None,
        })
    }

    /// Builds a constant-bitrate manifest: every chunk has `level_sizes`.
    pub fn cbr(
        chunk_duration_s: u64,
        startup_delay_s: u64,
        num_chunks: usize,
        level_sizes: &[Bytes],
    ) -> Result<Self, ModelError> {
        Self::new(
            chunk_duration_s,
            startup_delay_s,
            vec![level_sizes.to_vec(); num_chunks],
        )
    }

    pub fn with_nominal_mbps(mut self, rates: Vec<f64>) -> Result<Self, ModelError> {
        if rates.len() != self.num_levels() {
            return Err(ModelError::Structural(format!(
                "{} nominal rates for {} levels",
                rates.len(),
                self.num_levels()
            )));
        }
        self.nominal_mbps = Some(rates);
        Ok(self)
    }

    pub fn chunk_duration_s(&self) -> u64 {
        self.chunk_duration_s
    }

    pub fn startup_delay_s(&self) -> u64 {
        self.startup_delay_s
    }

    pub fn num_chunks(&self) -> usize {
        self.sizes.len()
    }

    /// Number of quality levels (`N + 1`).
    pub fn num_levels(&self) -> usize {
        self.sizes[0].len()
    }

    /// Index of the highest level (`N`).
    pub fn top_level(&self) -> usize {
        self.num_levels() - 1
    }

    pub fn size(&self, chunk: usize, level: usize) -> Bytes {
        self.sizes[chunk][level]
    }

    pub fn chunk_sizes(&self, chunk: usize) -> &[Bytes] {
        &self.sizes[chunk]
    }

    /// Extra bytes of `level` over `level - 1`; the full size at level 0.
    pub fn increment(&self, chunk: usize, level: usize) -> Bytes {
        if level == 0 {
            self.sizes[chunk][0]
        } else {
            self.sizes[chunk][level] - self.sizes[chunk][level - 1]
        }
    }

    /// True when every level has the same size for all chunks.
    pub fn is_cbr(&self) -> bool {
        let first = &self.sizes[0];
        self.sizes.iter().all(|row| row == first)
    }

    pub fn nominal_mbps(&self) -> Option<&[f64]> {
        self.nominal_mbps.as_deref()
    }

    /// Rate of each level in bytes per second. Uses the advertised rates when
    /// present, the mean chunk size otherwise.
    pub fn level_rates(&self) -> Vec<f64> {
        match &self.nominal_mbps {
            Some(rates) => rates.iter().map(|r| r * BYTES_PER_MBIT).collect(),
            None => (0..self.num_levels())
                .map(|level| {
                    let total: f64 = self.sizes.iter().map(|row| row[level]).sum();
                    total / self.num_chunks() as f64 / self.chunk_duration_s as f64
                })
                .collect(),
        }
    }
}

/// Bytes carried by one second of a 1 Mbps link.
pub const BYTES_PER_MBIT: f64 = 125_000.0;

/// Per-slot available bandwidth starting at `start_slot`, with prefix sums.
///
/// Slots past the stored samples report `tail_rate` (0 unless set), which is
/// how a scalar prediction is held constant beyond the materialized window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthTimeline {
    start_slot: Slot,
    samples: Vec<Bytes>,
    cumulative: Vec<Bytes>,
    tail_rate: Bytes,
}

impl BandwidthTimeline {
    pub fn new(start_slot: Slot, samples: Vec<Bytes>) -> Result<Self, ModelError> {
        if start_slot == 0 {
            return Err(ModelError::InvalidParameter("slots are numbered from 1".into()));
        }
        if let Some((idx, bad)) = samples.iter().enumerate().find(|(_, b)| !b.is_finite() || **b < 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "bandwidth sample {} is {bad}",
                start_slot + idx as u64
            )));
        }
        let mut acc = 0.0;
        let cumulative = samples
            .iter()
            .map(|b| {
                acc += b;
                acc
            })
            .collect();
        Ok(Self {
            start_slot,
            samples,
            cumulative,
            tail_rate: 0.0,
        })
    }

    /// Timeline starting at slot 1.
    pub fn from_samples(samples: Vec<Bytes>) -> Result<Self, ModelError> {
        Self::new(1, samples)
    }

    pub fn with_tail(mut self, rate: Bytes) -> Result<Self, ModelError> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(ModelError::InvalidParameter(format!("tail rate {rate}")));
        }
        self.tail_rate = rate;
        Ok(self)
    }

    pub fn start_slot(&self) -> Slot {
        self.start_slot
    }

    /// Last slot backed by an explicit sample.
    pub fn last_sample_slot(&self) -> Slot {
        self.start_slot + self.samples.len() as u64 - 1
    }

    pub fn samples(&self) -> &[Bytes] {
        &self.samples
    }

    pub fn tail_rate(&self) -> Bytes {
        self.tail_rate
    }

    /// True if slot `j` has a sample or a positive tail to draw from.
    pub fn covers(&self, j: Slot) -> bool {
        j >= self.start_slot && (j <= self.last_sample_slot() || self.tail_rate > 0.0)
    }

    /// `B(j)`; 0 before the start and past the end when there is no tail.
    pub fn rate(&self, j: Slot) -> Bytes {
        if j < self.start_slot {
            return 0.0;
        }
        let idx = (j - self.start_slot) as usize;
        self.samples.get(idx).copied().unwrap_or(self.tail_rate)
    }

    /// `c(j)`: total bandwidth in slots `start_slot..=j`.
    pub fn cumulative(&self, j: Slot) -> Bytes {
        if j < self.start_slot {
            return 0.0;
        }
        let idx = (j - self.start_slot) as usize;
        match self.cumulative.get(idx) {
            Some(c) => *c,
            None => {
                let last = self.cumulative.last().copied().unwrap_or(0.0);
                let extra = (idx + 1 - self.samples.len()) as f64;
                last + extra * self.tail_rate
            }
        }
    }
}

/// The window being decided: chunks `first_chunk..=last_chunk` at slot
/// `current_slot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowContext {
    pub first_chunk: usize,
    pub last_chunk: usize,
    pub current_slot: Slot,
    /// Startup delay plus all stalls before `first_chunk`.
    pub prior_stall_s: u64,
    pub buffer_cap_s: u64,
    /// Playback deadlines of chunks downloaded before the window, oldest
    /// first. Only the most recent ones can still occupy the buffer.
    pub prior_deadlines: Vec<Slot>,
}

impl WindowContext {
    /// Window over a whole video from its start: slot 1, no prior chunks.
    pub fn whole_video(manifest: &VideoManifest, buffer_cap_s: u64) -> Self {
        Self {
            first_chunk: 0,
            last_chunk: manifest.num_chunks() - 1,
            current_slot: 1,
            prior_stall_s: manifest.startup_delay_s(),
            buffer_cap_s,
            prior_deadlines: Vec::new(),
        }
    }

    /// Window of `window` chunks starting at `first_chunk`, clipped to the
    /// end of the video.
    pub fn clipped(
        manifest: &VideoManifest,
        first_chunk: usize,
        window: usize,
        current_slot: Slot,
        prior_stall_s: u64,
        buffer_cap_s: u64,
        prior_deadlines: Vec<Slot>,
    ) -> Self {
        let last_chunk = (first_chunk + window.max(1) - 1).min(manifest.num_chunks() - 1);
        Self {
            first_chunk,
            last_chunk,
            current_slot,
            prior_stall_s,
            buffer_cap_s,
            prior_deadlines,
        }
    }

    pub fn len(&self) -> usize {
        self.last_chunk + 1 - self.first_chunk
    }

    pub fn is_empty(&self) -> bool {
        self.last_chunk < self.first_chunk
    }

    pub fn chunks(&self) -> std::ops::RangeInclusive<usize> {
        self.first_chunk..=self.last_chunk
    }

    /// Deadline of `chunk` with no stall inside the window.
    pub fn base_deadline(&self, chunk: usize, chunk_duration_s: u64) -> Slot {
        self.prior_stall_s + chunk as u64 * chunk_duration_s
    }

    /// How many whole chunks fit in the buffer.
    pub fn buffer_chunks(&self, chunk_duration_s: u64) -> usize {
        (self.buffer_cap_s / chunk_duration_s) as usize
    }

    pub fn validate(&self, manifest: &VideoManifest) -> Result<(), ModelError> {
        if self.is_empty() {
            return Err(ModelError::InvalidParameter("empty window".into()));
        }
        if self.last_chunk >= manifest.num_chunks() {
            return Err(ModelError::Structural(format!(
                "window ends at chunk {} but the video has {}",
                self.last_chunk,
                manifest.num_chunks()
            )));
        }
        if self.current_slot == 0 {
            return Err(ModelError::InvalidParameter("slots are numbered from 1".into()));
        }
        if self.buffer_cap_s < manifest.chunk_duration_s() {
            return Err(ModelError::InvalidParameter(format!(
                "buffer of {}s cannot hold a {}s chunk",
                self.buffer_cap_s,
                manifest.chunk_duration_s()
            )));
        }
        if self.prior_deadlines.windows(2).any(|w| w[0] > w[1]) {
            return Err(ModelError::InvalidParameter(
                "prior deadlines must be non-decreasing".into(),
            ));
        }
        Ok(())
    }
}

/// Quality decisions for a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    pub first_chunk: usize,
    /// Highest level fetched per window chunk; `I_{n,i} = (levels[i] >= n)`.
    pub levels: Vec<usize>,
    /// Decided size `X(i)` per window chunk.
    pub sizes: Vec<Bytes>,
    /// Stall accumulated inside the window before each chunk plays, `d(i)`.
    pub stall_before: Vec<u64>,
    /// Playback deadline per window chunk.
    pub deadlines: Vec<Slot>,
}

impl DecisionSet {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `I_{n,i}` for window position `idx`.
    pub fn indicator(&self, level: usize, idx: usize) -> bool {
        self.levels[idx] >= level
    }

    /// `d(C)`: total stall inside the window.
    pub fn total_stall(&self) -> u64 {
        self.stall_before.last().copied().unwrap_or(0)
    }

    /// Number of chunks fetched at least at each level `0..num_levels`.
    pub fn level_counts(&self, num_levels: usize) -> Vec<usize> {
        (0..num_levels)
            .map(|n| self.levels.iter().filter(|&&l| l >= n).count())
            .collect()
    }
}

/// One fetch of `amount` bytes of `chunk`'s level-`level` increment in `slot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FetchEntry {
    pub chunk: usize,
    pub level: usize,
    pub slot: Slot,
    pub amount: Bytes,
}

/// Per-slot fetched amounts `z_n(i, j)`: the witness that a decision set is
/// feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FetchSchedule {
    pub entries: Vec<FetchEntry>,
}

impl FetchSchedule {
    /// `x(i, j)`: everything fetched for `chunk` in `slot`.
    pub fn chunk_amount(&self, chunk: usize, slot: Slot) -> Bytes {
        self.entries
            .iter()
            .filter(|e| e.chunk == chunk && e.slot == slot)
            .map(|e| e.amount)
            .sum()
    }

    /// First slot in which `chunk` received a positive amount.
    pub fn first_slot(&self, chunk: usize) -> Option<Slot> {
        self.entries
            .iter()
            .filter(|e| e.chunk == chunk && e.amount > 0.0)
            .map(|e| e.slot)
            .min()
    }

    pub fn last_slot(&self, chunk: usize) -> Option<Slot> {
        self.entries
            .iter()
            .filter(|e| e.chunk == chunk && e.amount > 0.0)
            .map(|e| e.slot)
            .max()
    }

    /// Buffer occupancy in seconds at the end of each slot in `from..=to`:
    /// chunks that have started and whose deadline lies ahead, times `L`.
    pub fn buffer_trajectory(
        &self,
        ctx: &WindowContext,
        decisions: &DecisionSet,
        chunk_duration_s: u64,
        from: Slot,
        to: Slot,
    ) -> Vec<u64> {
        let starts: Vec<Option<Slot>> = ctx.chunks().map(|c| self.first_slot(c)).collect();
        (from..=to)
            .map(|t| {
                let prior = ctx.prior_deadlines.iter().filter(|&&d| d > t).count();
                let window = starts
                    .iter()
                    .zip(&decisions.deadlines)
                    .filter(|(s, &d)| s.is_some_and(|s| s <= t) && d > t)
                    .count();
                (prior + window) as u64 * chunk_duration_s
            })
            .collect()
    }
}

/// Checks that `beta` gives diminishing returns across levels: for every
/// level `n`, `W * sum_{k>n} beta^k < beta^n`.
pub fn validate_beta(beta: f64, window: usize, top_level: usize) -> Result<bool, ModelError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    if window == 0 {
        return Err(ModelError::InvalidParameter("window must be at least 1".into()));
    }
    let ok = (0..=top_level).all(|n| {
        let tail: f64 = (n + 1..=top_level).map(|k| beta.powi(k as i32)).sum();
        (window as f64) * tail < beta.powi(n as i32)
    });
    Ok(ok)
}

/// Constraint families checked by [`check_feasibility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFamily {
    BaseLevelCoverage,
    LevelMonotonicity,
    Bandwidth,
    BufferCap,
    Deadline,
    Completeness,
    Stalls,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 7] = [
        ConstraintFamily::BaseLevelCoverage,
        ConstraintFamily::LevelMonotonicity,
        ConstraintFamily::Bandwidth,
        ConstraintFamily::BufferCap,
        ConstraintFamily::Deadline,
        ConstraintFamily::Completeness,
        ConstraintFamily::Stalls,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub chunk: Option<usize>,
    pub level: Option<usize>,
    pub slot: Option<Slot>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// First violation per family, `None` when the family passes.
    pub checks: Vec<(ConstraintFamily, Option<Violation>)>,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, v)| v.is_none())
    }

    pub fn violation(&self, family: ConstraintFamily) -> Option<&Violation> {
        self.checks
            .iter()
            .find(|(f, _)| *f == family)
            .and_then(|(_, v)| v.as_ref())
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.checks.iter().find_map(|(_, v)| v.as_ref())
    }
}

fn tolerance(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Replays `schedule` against every constraint of the window problem.
pub fn check_feasibility(
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    ctx: &WindowContext,
    decisions: &DecisionSet,
    schedule: &FetchSchedule,
) -> Result<FeasibilityReport, ModelError> {
    ctx.validate(manifest)?;
    let w = ctx.len();
    if decisions.first_chunk != ctx.first_chunk
        || decisions.levels.len() != w
        || decisions.stall_before.len() != w
        || decisions.deadlines.len() != w
        || decisions.sizes.len() != w
    {
        return Err(ModelError::Structural(format!(
            "decision set covers {} chunks from {}, window has {w} from {}",
            decisions.levels.len(),
            decisions.first_chunk,
            ctx.first_chunk
        )));
    }
    let top = manifest.top_level();
    for e in &schedule.entries {
        if !ctx.chunks().contains(&e.chunk) || e.level > top {
            return Err(ModelError::Structural(format!(
                "schedule entry for chunk {} level {} is outside the window",
                e.chunk, e.level
            )));
        }
    }
    if let Some(&l) = decisions.levels.iter().find(|&&l| l > top) {
        return Err(ModelError::Structural(format!("level {l} exceeds top level {top}")));
    }

    let chunk_duration = manifest.chunk_duration_s();
    let mut checks = Vec::new();
    let v = |family, chunk: Option<usize>, level, slot, detail: String| Violation {
        family,
        chunk,
        level,
        slot,
        detail,
    };

    // Every chunk has I_0 = 1 and a positive decided size wherever a level is
    // claimed. Levels are stored as "highest level", so I_{n} <= I_{n-1} holds
    // by construction; sizes must agree with the claimed level.
    checks.push((ConstraintFamily::BaseLevelCoverage, None));
    let mut mono = None;
    for (idx, chunk) in ctx.chunks().enumerate() {
        let expected = manifest.size(chunk, decisions.levels[idx]);
        if (decisions.sizes[idx] - expected).abs() > tolerance(expected) {
            mono = Some(v(
                ConstraintFamily::LevelMonotonicity,
                Some(chunk),
                Some(decisions.levels[idx]),
                None,
                format!(
                    "decided size {} does not match level {} size {expected}",
                    decisions.sizes[idx], decisions.levels[idx]
                ),
            ));
            break;
        }
    }
    checks.push((ConstraintFamily::LevelMonotonicity, mono));

    // Per-slot bandwidth.
    let mut per_slot: std::collections::BTreeMap<Slot, Bytes> = Default::default();
    let mut negative = None;
    for e in &schedule.entries {
        if e.amount < 0.0 || !e.amount.is_finite() {
            negative = Some(*e);
            break;
        }
        *per_slot.entry(e.slot).or_default() += e.amount;
    }
    let bandwidth = if let Some(e) = negative {
        Some(v(
            ConstraintFamily::Bandwidth,
            Some(e.chunk),
            Some(e.level),
            Some(e.slot),
            format!("negative amount {}", e.amount),
        ))
    } else {
        per_slot.iter().find_map(|(&slot, &used)| {
            let cap = timeline.rate(slot);
            (used > cap + tolerance(cap)).then(|| {
                let chunk = schedule
                    .entries
                    .iter()
                    .find(|e| e.slot == slot && e.amount > 0.0)
                    .map(|e| e.chunk);
                v(
                    ConstraintFamily::Bandwidth,
                    chunk,
                    None,
                    Some(slot),
                    format!("fetched {used} with {cap} available"),
                )
            })
        })
    };
    checks.push((ConstraintFamily::Bandwidth, bandwidth));

    // Deadlines: nothing before the current slot, nothing after the deadline.
    let deadline = schedule.entries.iter().find_map(|e| {
        if e.amount <= 0.0 {
            return None;
        }
        let idx = e.chunk - ctx.first_chunk;
        let dl = decisions.deadlines[idx];
        if e.slot > dl {
            Some(v(
                ConstraintFamily::Deadline,
                Some(e.chunk),
                Some(e.level),
                Some(e.slot),
                format!("fetched in slot {} after deadline {dl}", e.slot),
            ))
        } else if e.slot < ctx.current_slot {
            Some(v(
                ConstraintFamily::Deadline,
                Some(e.chunk),
                Some(e.level),
                Some(e.slot),
                format!("fetched in slot {} before the window opens", e.slot),
            ))
        } else {
            None
        }
    });
    checks.push((ConstraintFamily::Deadline, deadline));

    // Completeness: sum_j z_n(i, j) = I_{n,i} Y_{n,i}.
    let mut complete = None;
    'outer: for (idx, chunk) in ctx.chunks().enumerate() {
        for level in 0..=top {
            let fetched: Bytes = schedule
                .entries
                .iter()
                .filter(|e| e.chunk == chunk && e.level == level)
                .map(|e| e.amount)
                .sum();
            let want = if decisions.indicator(level, idx) {
                manifest.increment(chunk, level)
            } else {
                0.0
            };
            if (fetched - want).abs() > tolerance(want) {
                complete = Some(v(
                    ConstraintFamily::Completeness,
                    Some(chunk),
                    Some(level),
                    None,
                    format!("fetched {fetched} of {want}"),
                ));
                break 'outer;
            }
        }
    }
    checks.push((ConstraintFamily::Completeness, complete));

    // Stalls: non-negative, non-decreasing, consistent with deadlines.
    let mut stalls = None;
    for (idx, chunk) in ctx.chunks().enumerate() {
        let d = decisions.stall_before[idx];
        let expected = ctx.base_deadline(chunk, chunk_duration) + d;
        let msg = if idx > 0 && d < decisions.stall_before[idx - 1] {
            Some(format!(
                "stall {d} below predecessor's {}",
                decisions.stall_before[idx - 1]
            ))
        } else if decisions.deadlines[idx] != expected {
            Some(format!(
                "deadline {} but base deadline plus stall is {expected}",
                decisions.deadlines[idx]
            ))
        } else {
            None
        };
        if let Some(detail) = msg {
            stalls = Some(v(ConstraintFamily::Stalls, Some(chunk), None, None, detail));
            break;
        }
    }
    checks.push((ConstraintFamily::Stalls, stalls));

    // Buffer: started chunks whose deadline is still ahead, times L.
    let last_slot = schedule
        .entries
        .iter()
        .map(|e| e.slot)
        .chain(decisions.deadlines.iter().copied())
        .max()
        .unwrap_or(ctx.current_slot)
        .max(ctx.current_slot);
    let occupancy = schedule.buffer_trajectory(ctx, decisions, chunk_duration, ctx.current_slot, last_slot);
    let buffer = occupancy
        .iter()
        .enumerate()
        .find(|(_, &b)| b > ctx.buffer_cap_s)
        .map(|(off, &b)| {
            let slot = ctx.current_slot + off as u64;
            let chunk = ctx
                .chunks()
                .rfind(|&c| schedule.first_slot(c).is_some_and(|s| s <= slot));
            v(
                ConstraintFamily::BufferCap,
                chunk,
                None,
                Some(slot),
                format!("buffer holds {b}s, cap {}s", ctx.buffer_cap_s),
            )
        });
    checks.push((ConstraintFamily::BufferCap, buffer));

    checks.sort_by_key(|(f, _)| ConstraintFamily::ALL.iter().position(|g| g == f));
    Ok(FeasibilityReport { checks })
}

/// Fetches the decided sizes in chunk order as early as the bandwidth and the
/// buffer allow, never past a deadline. Returns `None` if a chunk cannot be
/// completed by its deadline.
///
/// A chunk may begin in slot `t` only if, counting it, no more than
/// `floor(B_m / L)` started chunks have a deadline after `t`.
pub fn greedy_schedule(
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    ctx: &WindowContext,
    decisions: &DecisionSet,
) -> Option<FetchSchedule> {
    let cap = ctx.buffer_chunks(manifest.chunk_duration_s());
    let mut entries = Vec::new();
    let mut slot = ctx.current_slot;
    let mut left = timeline.rate(slot);
    // Deadlines of every started chunk so far, prior chunks included.
    let mut started: Vec<Slot> = ctx.prior_deadlines.clone();
    for (idx, chunk) in ctx.chunks().enumerate() {
        let size = decisions.sizes[idx];
        let deadline = decisions.deadlines[idx];
        if size <= 0.0 {
            continue;
        }
        loop {
            let waiting = started.iter().filter(|&&d| d > slot).count();
            if waiting + usize::from(deadline > slot) <= cap {
                break;
            }
            slot += 1;
            left = timeline.rate(slot);
            if slot > deadline {
                return None;
            }
        }
        started.push(deadline);
        // Split the byte stream into per-level increments, lowest first.
        let level = decisions.levels[idx];
        let mut parts: Vec<(usize, Bytes)> = (0..=level).map(|n| (n, manifest.increment(chunk, n))).collect();
        let mut part = 0;
        while part < parts.len() {
            if parts[part].1 <= 0.0 {
                part += 1;
                continue;
            }
            if left <= 0.0 {
                slot += 1;
                if slot > deadline {
                    return None;
                }
                left = timeline.rate(slot);
                continue;
            }
            let take = left.min(parts[part].1);
            left -= take;
            parts[part].1 -= take;
            entries.push(FetchEntry {
                chunk,
                level: parts[part].0,
                slot,
                amount: take,
            });
        }
        if slot > deadline {
            return None;
        }
    }
    Some(FetchSchedule { entries })
}
