//! Exhaustive reference solvers for small instances.
//!
//! Nothing here shares code with the scan engine: both solvers simulate
//! downloads slot by slot with the literal buffer rule (a chunk occupies the
//! buffer from its first fetched byte until its deadline).

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::model::{BandwidthTimeline, Bytes, DecisionSet, ModelError, Slot, VideoManifest, WindowContext};
use crate::qoe::{score_levels_exact, ExactQoeParams};

pub const MAX_ORACLE_CHUNKS: usize = 10;
pub const MAX_ORACLE_MATRICES: u64 = 1_000_000;
pub const MAX_BRUTEFORCE_CHUNKS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("bandwidth trace runs out before chunk {chunk} can be fetched")]
    InsufficientTrace { chunk: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(serialize_with = "ratio_as_f64")]
    pub best_qoe: Ratio<i64>,
    pub best_decisions: DecisionSet,
    /// Every decision set reaching `best_qoe`, in enumeration order.
    pub optima: Vec<DecisionSet>,
    pub enumerated: u64,
}

fn ratio_as_f64<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(ratio_to_f64(r))
}

pub fn ratio_to_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

struct Sim<'a> {
    timeline: &'a BandwidthTimeline,
    cap: usize,
    /// Deadlines of chunks that hold bytes, in fetch order.
    occupied: Vec<Slot>,
    slot: Slot,
    used: Bytes,
}

impl<'a> Sim<'a> {
    fn new(timeline: &'a BandwidthTimeline, ctx: &WindowContext, cap: usize) -> Self {
        Self {
            timeline,
            cap,
            occupied: ctx.prior_deadlines.clone(),
            slot: ctx.current_slot,
            used: 0.0,
        }
    }

    fn exhausted(&self) -> bool {
        self.slot > self.timeline.last_sample_slot() && self.timeline.tail_rate() <= 0.0
    }

    fn next_slot(&mut self) {
        self.slot += 1;
        self.used = 0.0;
    }

    /// Waits for buffer room, then fetches `size` bytes. Returns the slot in
    /// which the last byte arrives, or `None` if the trace ends first.
    fn fetch(&mut self, size: Bytes) -> Option<Slot> {
        loop {
            let slot = self.slot;
            let held = self.occupied.iter().filter(|&&d| d > slot).count();
            if held < self.cap {
                break;
            }
            self.next_slot();
        }
        let mut need = size;
        while need > 0.0 {
            let avail = self.timeline.rate(self.slot) - self.used;
            if avail <= 0.0 {
                if self.exhausted() {
                    return None;
                }
                self.next_slot();
                continue;
            }
            let take = avail.min(need);
            self.used += take;
            need -= take;
        }
        Some(self.slot)
    }
}

/// Minimum per-chunk stall for fixed sizes: fetch in order as early as
/// possible and stall only when a chunk finishes late.
fn greedy_min_stall(
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    ctx: &WindowContext,
    sizes: &[Bytes],
) -> Result<Vec<u64>, OracleError> {
    let l = manifest.chunk_duration_s();
    let mut sim = Sim::new(timeline, ctx, ctx.buffer_chunks(l));
    let mut stall = 0u64;
    let mut out = Vec::with_capacity(sizes.len());
    for (pos, &size) in sizes.iter().enumerate() {
        let chunk = ctx.first_chunk + pos;
        let base = ctx.prior_stall_s + chunk as u64 * l;
        if size > 0.0 {
            let done = sim.fetch(size).ok_or(OracleError::InsufficientTrace { chunk })?;
            stall = stall.max(done.saturating_sub(base));
            sim.occupied.push(base + stall);
        }
        out.push(stall);
    }
    Ok(out)
}

fn check_size_guard(ctx: &WindowContext, manifest: &VideoManifest) -> Result<u64, OracleError> {
    let w = ctx.len();
    if w > MAX_ORACLE_CHUNKS {
        return Err(OracleError::TooLarge(format!(
            "{w} chunks exceeds the limit of {MAX_ORACLE_CHUNKS}"
        )));
    }
    let levels = manifest.num_levels() as u64;
    let mut count: u64 = 1;
    for _ in 0..w {
        count = count.saturating_mul(levels);
        if count > MAX_ORACLE_MATRICES {
            return Err(OracleError::TooLarge(format!(
                "{levels}^{w} level assignments exceeds {MAX_ORACLE_MATRICES}"
            )));
        }
    }
    Ok(count)
}

/// Scores every level assignment of the window at its minimum stall and
/// returns the best. Ties go to the lexicographically smallest level vector.
pub fn enumerate_optimal(
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    ctx: &WindowContext,
    params: &ExactQoeParams,
) -> Result<OracleResult, OracleError> {
    ctx.validate(manifest)?;
    let total = check_size_guard(ctx, manifest)?;
    let w = ctx.len();
    let top = manifest.top_level();
    let l = manifest.chunk_duration_s();

    let mut levels = vec![0usize; w];
    let mut best: Option<(Ratio<i64>, Vec<DecisionSet>)> = None;
    let mut enumerated = 0u64;
    loop {
        enumerated += 1;
        let sizes: Vec<Bytes> = levels
            .iter()
            .enumerate()
            .map(|(pos, &n)| manifest.size(ctx.first_chunk + pos, n))
            .collect();
        let stalls = greedy_min_stall(manifest, timeline, ctx, &sizes)?;
        let qoe = score_levels_exact(&levels, *stalls.last().unwrap(), params);
        let better = best.as_ref().is_none_or(|(b, _)| qoe >= *b);
        if better {
            let decisions = DecisionSet {
                first_chunk: ctx.first_chunk,
                levels: levels.clone(),
                sizes,
                deadlines: stalls
                    .iter()
                    .enumerate()
                    .map(|(pos, d)| ctx.prior_stall_s + (ctx.first_chunk + pos) as u64 * l + d)
                    .collect(),
                stall_before: stalls,
            };
            match &mut best {
                Some((b, optima)) if *b == qoe => optima.push(decisions),
                _ => best = Some((qoe, vec![decisions])),
            }
        }
        // Odometer over level vectors, last position fastest.
        let mut pos = w;
        loop {
            if pos == 0 {
                let (best_qoe, optima) = best.expect("at least one assignment");
                debug_assert_eq!(enumerated, total);
                return Ok(OracleResult {
                    best_qoe,
                    best_decisions: optima[0].clone(),
                    optima,
                    enumerated,
                });
            }
            pos -= 1;
            if levels[pos] < top {
                levels[pos] += 1;
                break;
            }
            levels[pos] = 0;
        }
    }
}

/// Minimum total stall of the window at level 0, found by searching every
/// non-decreasing stall vector in order of increasing total.
pub fn min_stall_bruteforce(
    manifest: &VideoManifest,
    timeline: &BandwidthTimeline,
    ctx: &WindowContext,
) -> Result<u64, OracleError> {
    ctx.validate(manifest)?;
    let w = ctx.len();
    if w > MAX_BRUTEFORCE_CHUNKS {
        return Err(OracleError::TooLarge(format!(
            "{w} chunks exceeds the limit of {MAX_BRUTEFORCE_CHUNKS}"
        )));
    }
    let l = manifest.chunk_duration_s();
    let sizes: Vec<Bytes> = ctx.chunks().map(|c| manifest.size(c, 0)).collect();
    let need: Bytes = sizes.iter().sum();
    let slack = w as u64 * (ctx.buffer_cap_s + l);
    let end = if timeline.tail_rate() > 0.0 {
        timeline.last_sample_slot() + (need / timeline.tail_rate()).ceil() as u64 + slack
    } else {
        timeline.last_sample_slot()
    };
    let last_base = ctx.prior_stall_s + ctx.last_chunk as u64 * l;
    let limit = end.saturating_sub(last_base) + slack;
    for total in 0..=limit {
        let mut sim = Sim::new(timeline, ctx, ctx.buffer_chunks(l));
        if feasible_with_total(&mut sim, ctx, l, &sizes, 0, 0, total) {
            return Ok(total);
        }
    }
    Err(OracleError::InsufficientTrace { chunk: ctx.last_chunk })
}

fn feasible_with_total(
    sim: &mut Sim<'_>,
    ctx: &WindowContext,
    l: u64,
    sizes: &[Bytes],
    pos: usize,
    prev: u64,
    total: u64,
) -> bool {
    if pos == sizes.len() {
        return prev == total;
    }
    let base = ctx.prior_stall_s + (ctx.first_chunk + pos) as u64 * l;
    let (slot, used, held) = (sim.slot, sim.used, sim.occupied.len());
    let lo = if pos + 1 == sizes.len() { total } else { prev };
    for d in lo..=total {
        let deadline = base + d;
        let ok = if sizes[pos] > 0.0 {
            match sim.fetch(sizes[pos]) {
                Some(done) if done <= deadline => {
                    sim.occupied.push(deadline);
                    true
                }
                _ => false,
            }
        } else {
            true
        };
        if ok && feasible_with_total(sim, ctx, l, sizes, pos + 1, d, total) {
            return true;
        }
        sim.slot = slot;
        sim.used = used;
        sim.occupied.truncate(held);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(samples: Vec<f64>) -> BandwidthTimeline {
        BandwidthTimeline::from_samples(samples).unwrap()
    }

    #[test]
    fn single_chunk_ample_bandwidth() {
        let m = VideoManifest::cbr(1, 1, 1, &[1.0, 2.0]).unwrap();
        let ctx = WindowContext::whole_video(&m, 10);
        let r = enumerate_optimal(&m, &tl(vec![100.0; 5]), &ctx, &ExactQoeParams::default()).unwrap();
        assert_eq!(r.best_qoe, Ratio::new(11, 10));
        assert_eq!(r.best_decisions.levels, vec![1]);
        assert_eq!(r.enumerated, 2);
    }

    #[test]
    fn two_chunks_unit_rate() {
        let m = VideoManifest::cbr(1, 1, 2, &[1.0, 2.0]).unwrap();
        let ctx = WindowContext::whole_video(&m, 100);
        let r = enumerate_optimal(&m, &tl(vec![1.0; 10]), &ctx, &ExactQoeParams::default()).unwrap();
        assert_eq!(r.best_qoe, Ratio::from_integer(2));
        assert_eq!(r.best_decisions.levels, vec![0, 0]);
        assert_eq!(r.optima.len(), 1);
    }

    #[test]
    fn two_chunks_double_rate() {
        let m = VideoManifest::cbr(1, 1, 2, &[1.0, 2.0]).unwrap();
        let ctx = WindowContext::whole_video(&m, 100);
        let r = enumerate_optimal(&m, &tl(vec![2.0; 10]), &ctx, &ExactQoeParams::default()).unwrap();
        assert_eq!(r.best_qoe, Ratio::new(22, 10));
        assert_eq!(r.best_decisions.levels, vec![1, 1]);
    }

    #[test]
    fn size_guard() {
        let m = VideoManifest::cbr(1, 1, 11, &[1.0, 2.0]).unwrap();
        let ctx = WindowContext::whole_video(&m, 100);
        let err = enumerate_optimal(&m, &tl(vec![2.0; 10]), &ctx, &ExactQoeParams::default()).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge(_)));
        let m = VideoManifest::cbr(1, 1, 7, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let ctx = WindowContext::whole_video(&m, 100);
        let err = enumerate_optimal(&m, &tl(vec![2.0; 10]), &ctx, &ExactQoeParams::default()).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge(_)));
        let ctx = WindowContext::whole_video(&m, 100);
        assert!(matches!(
            min_stall_bruteforce(&m, &tl(vec![2.0; 10]), &ctx),
            Err(OracleError::TooLarge(_))
        ));
    }

    #[test]
    fn bruteforce_min_stall_examples() {
        let m = VideoManifest::cbr(1, 1, 3, &[1.0]).unwrap();
        let ctx = WindowContext::whole_video(&m, 10);
        assert_eq!(min_stall_bruteforce(&m, &tl(vec![10.0; 10]), &ctx).unwrap(), 0);
        assert_eq!(min_stall_bruteforce(&m, &tl(vec![0.5; 10]), &ctx).unwrap(), 3);
        // Alternating 0 and 2: each chunk lands in an even slot.
        let alt: Vec<f64> = (0..12).map(|j| if j % 2 == 0 { 0.0 } else { 2.0 }).collect();
        assert_eq!(min_stall_bruteforce(&m, &tl(alt), &ctx).unwrap(), 1);
    }

    #[test]
    fn bruteforce_respects_buffer() {
        // One big burst, then nothing: a one-chunk buffer forces waiting.
        let m = VideoManifest::cbr(1, 1, 3, &[1.0]).unwrap();
        let mut samples = vec![3.0];
        samples.extend(vec![0.0; 4]);
        samples.extend(vec![1.0; 6]);
        let t = tl(samples);
        let big = WindowContext::whole_video(&m, 10);
        assert_eq!(min_stall_bruteforce(&m, &t, &big).unwrap(), 0);
        let small = WindowContext::whole_video(&m, 1);
        assert_eq!(min_stall_bruteforce(&m, &t, &small).unwrap(), 3);
    }
}
