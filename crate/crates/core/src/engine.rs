//! Forward/backward scan engine.
//!
//! A window of chunks is decided in passes over a simulated download:
//!
//! 1. Level-0 forward: fetch every chunk at the lowest level in order, as
//!    early as possible, and add stall only when a chunk misses its deadline.
//!    This yields the minimum total stall of the window.
//! 2. Level-0 backward: assume all that stall happens before the first chunk,
//!    then walk the chunks in reverse, fetching each as late as possible. When
//!    the buffer cannot hold a chunk until its deadline, pull that deadline
//!    earlier one second at a time. The resulting deadlines are final.
//! 3. For each higher level `n`, a forward pass finds the earliest slot each
//!    chunk can start without disturbing earlier chunks, and a backward pass
//!    promotes chunks from the last one down whenever the bandwidth between
//!    that earliest start and the current backward frontier covers the
//!    level-`n` size.
//!
//! Buffer admission is the same rule everywhere: with `K = floor(B_m / L)`, a
//! chunk may start in slot `t` only once the `K`-th chunk before it has a
//! deadline no later than `t`. Every chunk counts, whatever its size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_beta, BandwidthTimeline, Bytes, DecisionSet, ModelError, Slot, VideoManifest, WindowContext,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("bandwidth timeline ends at slot {slot} before chunk {chunk} is fetched")]
    InsufficientTrace { chunk: usize, slot: Slot },
    #[error("beta {beta} does not give diminishing returns for window {window} and {levels} levels")]
    BetaCondition { beta: f64, window: usize, levels: usize },
    #[error("formulation violated at chunk {chunk}: {detail}")]
    FormulationViolation { chunk: usize, detail: String },
    #[error("internal invariant violated at chunk {chunk}: {detail}")]
    Internal { chunk: usize, detail: String },
}

/// Loop counter across all passes of one window decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub iterations: u64,
}

/// Result of the level-0 passes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level0Result {
    /// `d(i)` from the forward pass.
    pub stall_before: Vec<u64>,
    /// `d_f(i)` from the backward pass; empty after the forward pass alone.
    pub final_stall: Vec<u64>,
    /// Deadlines matching `final_stall` (or `stall_before` after forward only).
    pub deadlines: Vec<Slot>,
}

impl Level0Result {
    pub fn total_stall(&self) -> u64 {
        self.stall_before.last().copied().unwrap_or(0)
    }
}

/// Earliest-start information from a level-`n` forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelNForwardResult {
    /// `t(i)`: slot in which the chunk starts.
    pub earliest_start: Vec<Slot>,
    /// `a(i)`: amount fetched in that slot.
    pub first_slot_amount: Vec<Bytes>,
    /// Bandwidth of slot `t(i)` left over by earlier chunks.
    pub start_capacity: Vec<Bytes>,
    /// True when the start was held back by the buffer rather than bandwidth.
    pub buffer_bound: Vec<bool>,
    /// `e(j)` for slots `residual_from..`: bandwidth unused by the pass.
    pub residual: Vec<Bytes>,
    pub residual_from: Slot,
}

impl LevelNForwardResult {
    pub fn residual_at(&self, slot: Slot) -> Option<Bytes> {
        slot.checked_sub(self.residual_from)
            .and_then(|off| self.residual.get(off as usize).copied())
    }
}

/// Why a chunk was not promoted at some level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// Not fetched at the level below.
    NotCandidate,
    /// Not enough bandwidth between its earliest start and its slot in the
    /// backward schedule.
    Bandwidth,
    /// Its earliest start was held back by a full buffer.
    Buffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelNBackwardResult {
    pub sizes: Vec<Bytes>,
    /// Window positions promoted to this level, in ascending order.
    pub promoted: Vec<usize>,
    /// Window positions left below this level, with the reason.
    pub skipped: Vec<(usize, SkipReason)>,
}

/// A window decision together with per-level diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutcome {
    pub decisions: DecisionSet,
    pub level0: Level0Result,
    /// `promoted[n - 1]` holds the window positions promoted to level `n`.
    pub promoted: Vec<Vec<usize>>,
    pub skipped: Vec<Vec<(usize, SkipReason)>>,
    pub stats: ScanStats,
}

/// Earliest slot in which window position `pos` may start, given the
/// deadlines of everything before it.
fn admission_slot(prior: &[Slot], window_deadlines: &[Slot], pos: usize, cap: usize) -> Slot {
    let before = prior.len() + pos;
    if before < cap {
        return 0;
    }
    let idx = before - cap;
    if idx < prior.len() {
        prior[idx]
    } else {
        window_deadlines[idx - prior.len()]
    }
}

/// Fetches the lowest level of every window chunk in order and returns the
/// minimum stall per chunk.
pub fn level0_forward(
    ctx: &WindowContext,
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    stats: &mut ScanStats,
) -> Result<Level0Result, EngineError> {
    ctx.validate(manifest)?;
    let chunk_duration = manifest.chunk_duration_s();
    let cap = ctx.buffer_chunks(chunk_duration);
    let mut stall_before = Vec::with_capacity(ctx.len());
    let mut deadlines: Vec<Slot> = Vec::with_capacity(ctx.len());

    let mut j = ctx.current_slot;
    let mut left = timeline.rate(j);
    let mut stall = 0u64;
    for (pos, chunk) in ctx.chunks().enumerate() {
        let base = ctx.base_deadline(chunk, chunk_duration);
        let mut remaining = manifest.size(chunk, 0);
        if remaining > 0.0 {
            let admit = admission_slot(&ctx.prior_deadlines, &deadlines, pos, cap);
            if j < admit {
                j = admit;
                left = timeline.rate(j);
            }
            loop {
                stats.iterations += 1;
                if left <= 0.0 {
                    j += 1;
                    if !timeline.covers(j) {
                        return Err(EngineError::InsufficientTrace { chunk, slot: j - 1 });
                    }
                    left = timeline.rate(j);
                    continue;
                }
                let fetched = left.min(remaining);
                left -= fetched;
                remaining -= fetched;
                if remaining <= 0.0 {
                    break;
                }
            }
            if j > base + stall {
                stall = j - base;
            }
        }
        stall_before.push(stall);
        deadlines.push(base + stall);
    }
    Ok(Level0Result {
        stall_before,
        final_stall: Vec::new(),
        deadlines,
    })
}

/// Moves the forward pass's stall as early as the buffer allows and fixes the
/// deadlines.
pub fn level0_backward(
    ctx: &WindowContext,
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    forward: &Level0Result,
    stats: &mut ScanStats,
) -> Result<Level0Result, EngineError> {
    let w = ctx.len();
    if forward.stall_before.len() != w {
        return Err(ModelError::Structural(format!(
            "forward result covers {} chunks, window has {w}",
            forward.stall_before.len()
        ))
        .into());
    }
    let chunk_duration = manifest.chunk_duration_s();
    let cap = ctx.buffer_chunks(chunk_duration);
    let total = forward.total_stall();
    // All stall in front of the window.
    let hypothesis = vec![total; w];
    let mut final_stall = vec![0u64; w];
    let mut starts = vec![0 as Slot; w];

    let last = ctx.last_chunk;
    let mut j = ctx.base_deadline(last, chunk_duration) + total;
    let mut left = timeline.rate(j);
    for pos in (0..w).rev() {
        stats.iterations += 1;
        let chunk = ctx.first_chunk + pos;
        let base = ctx.base_deadline(chunk, chunk_duration);
        let mut stall = if pos + 1 == w {
            total
        } else {
            hypothesis[pos] - (hypothesis[pos + 1] - final_stall[pos + 1])
        };
        // The chunk `cap` places later must not start while this one still
        // waits in the buffer.
        if pos + cap < w {
            let blocker = starts[pos + cap];
            while base + stall > blocker {
                if stall <= forward.stall_before[pos] {
                    return Err(EngineError::FormulationViolation {
                        chunk,
                        detail: format!(
                            "buffer forces stall below the forward minimum {}",
                            forward.stall_before[pos]
                        ),
                    });
                }
                stall -= 1;
                stats.iterations += 1;
            }
        }
        let deadline = base + stall;
        if deadline < j {
            j = deadline;
            left = timeline.rate(j);
        }
        let mut remaining = manifest.size(chunk, 0);
        while remaining > 0.0 {
            stats.iterations += 1;
            if left <= 0.0 {
                if j <= ctx.current_slot {
                    return Err(EngineError::Internal {
                        chunk,
                        detail: "level-0 chunk no longer fits before the window opens".into(),
                    });
                }
                j -= 1;
                left = timeline.rate(j);
                continue;
            }
            let fetched = left.min(remaining);
            left -= fetched;
            remaining -= fetched;
        }
        starts[pos] = j;
        final_stall[pos] = stall;
    }
    let deadlines = ctx
        .chunks()
        .zip(&final_stall)
        .map(|(c, d)| ctx.base_deadline(c, chunk_duration) + d)
        .collect();
    Ok(Level0Result {
        stall_before: forward.stall_before.clone(),
        final_stall,
        deadlines,
    })
}

/// Fetches `sizes` in order under fixed `deadlines`, recording where each
/// chunk starts and what bandwidth is left.
pub fn leveln_forward(
    ctx: &WindowContext,
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    sizes: &[Bytes],
    deadlines: &[Slot],
    stats: &mut ScanStats,
) -> Result<LevelNForwardResult, EngineError> {
    let w = ctx.len();
    if sizes.len() != w || deadlines.len() != w {
        return Err(ModelError::Structural("sizes or deadlines do not match the window".into()).into());
    }
    let cap = ctx.buffer_chunks(manifest.chunk_duration_s());
    let horizon = deadlines[w - 1].max(ctx.current_slot);
    let from = ctx.current_slot;
    let mut residual: Vec<Bytes> = (from..=horizon).map(|s| timeline.rate(s)).collect();
    let mut earliest_start = Vec::with_capacity(w);
    let mut first_slot_amount = Vec::with_capacity(w);
    let mut start_capacity = Vec::with_capacity(w);
    let mut buffer_bound = Vec::with_capacity(w);

    let mut j = from;
    let mut left = timeline.rate(j);
    for pos in 0..w {
        let chunk = ctx.first_chunk + pos;
        let admit = admission_slot(&ctx.prior_deadlines, deadlines, pos, cap);
        // Where the chunk would begin: the next slot with bandwidth left, or
        // later if the buffer is full.
        let (mut at, mut at_left) = if left <= 0.0 {
            (j + 1, timeline.rate(j + 1))
        } else {
            (j, left)
        };
        let bound = admit > at;
        if bound {
            at = admit;
            at_left = timeline.rate(at);
        }
        let mut remaining = sizes[pos];
        if remaining <= 0.0 {
            stats.iterations += 1;
            earliest_start.push(at);
            first_slot_amount.push(0.0);
            start_capacity.push(at_left);
            buffer_bound.push(bound);
            continue;
        }
        j = at;
        left = at_left;
        let mut first = true;
        loop {
            stats.iterations += 1;
            if left <= 0.0 {
                j += 1;
                if j > deadlines[pos] {
                    return Err(EngineError::Internal {
                        chunk,
                        detail: format!("current size misses deadline {}", deadlines[pos]),
                    });
                }
                left = timeline.rate(j);
                continue;
            }
            let fetched = left.min(remaining);
            if first {
                earliest_start.push(j);
                first_slot_amount.push(fetched);
                start_capacity.push(left);
                buffer_bound.push(bound);
                first = false;
            }
            left -= fetched;
            remaining -= fetched;
            if let Some(e) = residual.get_mut((j - from) as usize) {
                *e = left;
            }
            if remaining <= 0.0 {
                break;
            }
        }
        if j > deadlines[pos] {
            return Err(EngineError::Internal {
                chunk,
                detail: format!("current size misses deadline {}", deadlines[pos]),
            });
        }
    }
    Ok(LevelNForwardResult {
        earliest_start,
        first_slot_amount,
        start_capacity,
        buffer_bound,
        residual,
        residual_from: from,
    })
}

/// Walks the window from the last chunk, promoting every level-`(n-1)` chunk
/// whose level-`n` size fits between its earliest start and the backward
/// frontier.
#[allow(clippy::too_many_arguments)]
pub fn leveln_backward(
    ctx: &WindowContext,
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    level: usize,
    levels: &[usize],
    sizes: &[Bytes],
    deadlines: &[Slot],
    forward: &LevelNForwardResult,
    stats: &mut ScanStats,
) -> Result<LevelNBackwardResult, EngineError> {
    let w = ctx.len();
    if level == 0 || level > manifest.top_level() {
        return Err(ModelError::InvalidParameter(format!("level {level} out of range")).into());
    }
    let mut new_sizes = sizes.to_vec();
    let mut promoted = Vec::new();
    let mut skipped = Vec::new();

    let mut j = deadlines[w - 1];
    let mut left = timeline.rate(j);
    for pos in (0..w).rev() {
        stats.iterations += 1;
        let chunk = ctx.first_chunk + pos;
        if deadlines[pos] < j {
            j = deadlines[pos];
            left = timeline.rate(j);
        }
        if levels[pos] + 1 == level {
            let target = manifest.size(chunk, level);
            let start = forward.earliest_start[pos];
            // rem2: bandwidth after the start slot up to the frontier;
            // rem1 adds this chunk's share of the start slot.
            let (rem2, rem1) = if j > start {
                let rem2 = timeline.cumulative(j - 1) - timeline.cumulative(start) + left;
                (rem2, rem2 + forward.start_capacity[pos])
            } else if j == start {
                let used_before = timeline.rate(start) - forward.start_capacity[pos];
                (0.0, left - used_before)
            } else {
                (0.0, 0.0)
            };
            debug_assert!(rem2 <= rem1);
            if rem1 >= target {
                new_sizes[pos] = target;
                promoted.push(pos);
            } else if forward.buffer_bound[pos] {
                skipped.push((pos, SkipReason::Buffer));
            } else {
                skipped.push((pos, SkipReason::Bandwidth));
            }
        } else if levels[pos] + 1 < level {
            skipped.push((pos, SkipReason::NotCandidate));
        }
        let mut remaining = new_sizes[pos];
        while remaining > 0.0 {
            stats.iterations += 1;
            if left <= 0.0 {
                if j <= ctx.current_slot {
                    return Err(EngineError::Internal {
                        chunk,
                        detail: format!("backward schedule overran the window at level {level}"),
                    });
                }
                j -= 1;
                left = timeline.rate(j);
                continue;
            }
            let fetched = left.min(remaining);
            left -= fetched;
            remaining -= fetched;
        }
    }
    promoted.reverse();
    skipped.reverse();
    Ok(LevelNBackwardResult {
        sizes: new_sizes,
        promoted,
        skipped,
    })
}

/// Decides the quality of every chunk in the window.
pub fn fastscan_window(
    ctx: &WindowContext,
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    beta: f64,
) -> Result<WindowOutcome, EngineError> {
    ctx.validate(manifest)?;
    let top = manifest.top_level();
    if !validate_beta(beta, ctx.len(), top)? {
        return Err(EngineError::BetaCondition {
            beta,
            window: ctx.len(),
            levels: top + 1,
        });
    }
    let mut stats = ScanStats::default();
    let forward = level0_forward(ctx, manifest, timeline, &mut stats)?;
    let level0 = level0_backward(ctx, manifest, timeline, &forward, &mut stats)?;
    let deadlines = level0.deadlines.clone();

    let mut levels = vec![0usize; ctx.len()];
    let mut sizes: Vec<Bytes> = ctx.chunks().map(|c| manifest.size(c, 0)).collect();
    let mut promoted_by_level = Vec::with_capacity(top);
    let mut skipped_by_level = Vec::with_capacity(top);
    for level in 1..=top {
        let fwd = leveln_forward(ctx, manifest, timeline, &sizes, &deadlines, &mut stats)?;
        let back = leveln_backward(
            ctx, manifest, timeline, level, &levels, &sizes, &deadlines, &fwd, &mut stats,
        )?;
        for &pos in &back.promoted {
            levels[pos] = level;
        }
        sizes = back.sizes;
        promoted_by_level.push(back.promoted);
        skipped_by_level.push(back.skipped);
    }

    let decisions = DecisionSet {
        first_chunk: ctx.first_chunk,
        levels,
        sizes,
        stall_before: level0.final_stall.clone(),
        deadlines,
    };
    Ok(WindowOutcome {
        decisions,
        level0,
        promoted: promoted_by_level,
        skipped: skipped_by_level,
        stats,
    })
}
