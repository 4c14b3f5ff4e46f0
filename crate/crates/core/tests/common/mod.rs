#![allow(dead_code)]

use fastscan::model::{
    check_feasibility, greedy_schedule, BandwidthTimeline, DecisionSet, VideoManifest, WindowContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small CBR instance: whole video as one window, slot 1 onward.
#[derive(Debug, Clone)]
pub struct CbrInstance {
    pub manifest: VideoManifest,
    pub timeline: BandwidthTimeline,
    pub ctx: WindowContext,
}

/// V in [2,8], N in [1,3], integer bandwidth in [0,4] per slot, L = 1,
/// S in [1,3], buffer of 2 or 10 chunks.
pub fn random_cbr_instance(rng: &mut ChaCha8Rng) -> CbrInstance {
    let buffer = if rng.random_bool(0.5) { 2 } else { 10 };
    random_cbr_instance_with(rng, buffer)
}

/// Same as [`random_cbr_instance`] with a fixed buffer in seconds.
pub fn random_cbr_instance_with(rng: &mut ChaCha8Rng, buffer: u64) -> CbrInstance {
    let v = rng.random_range(2..=8);
    let n = rng.random_range(1..=3);
    let s = rng.random_range(1..=3);
    let mut sizes = Vec::with_capacity(n + 1);
    let mut x = rng.random_range(1..=3) as f64;
    sizes.push(x);
    for _ in 0..n {
        x += rng.random_range(1..=3) as f64;
        sizes.push(x);
    }
    let manifest = VideoManifest::cbr(1, s, v, &sizes).unwrap();
    let len = 3 * v + 30;
    let samples: Vec<f64> = (0..len).map(|_| rng.random_range(0..=4) as f64).collect();
    // A positive tail keeps every instance finite.
    let timeline = BandwidthTimeline::from_samples(samples)
        .unwrap()
        .with_tail(1.0)
        .unwrap();
    let ctx = WindowContext::whole_video(&manifest, buffer);
    CbrInstance {
        manifest,
        timeline,
        ctx,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to six chunks with independently drawn sizes per chunk, so level 0
/// varies from chunk to chunk. Integer bandwidth in [0,4].
pub fn random_vbr_instance(rng: &mut ChaCha8Rng, max_chunks: usize) -> CbrInstance {
    let v = rng.random_range(1..=max_chunks);
    let n = rng.random_range(0..=2);
    let s = rng.random_range(1..=3);
    let buffer = rng.random_range(1..=4) * 2;
    let sizes: Vec<Vec<f64>> = (0..v)
        .map(|_| {
            let mut x = rng.random_range(1..=4) as f64;
            let mut row = vec![x];
            for _ in 0..n {
                x += rng.random_range(1..=3) as f64;
                row.push(x);
            }
            row
        })
        .collect();
    let manifest = VideoManifest::new(1, s, sizes).unwrap();
    let len = 3 * v + 20;
    let samples: Vec<f64> = (0..len).map(|_| rng.random_range(0..=4) as f64).collect();
    let timeline = BandwidthTimeline::from_samples(samples)
        .unwrap()
        .with_tail(1.0)
        .unwrap();
    let ctx = WindowContext::whole_video(&manifest, buffer);
    CbrInstance {
        manifest,
        timeline,
        ctx,
    }
}

/// Replays `decisions` with the in-order greedy fetcher and checks every
/// constraint. Panics with the first violation.
pub fn assert_feasible(inst: &CbrInstance, decisions: &DecisionSet) {
    let schedule = greedy_schedule(&inst.manifest, &inst.timeline, &inst.ctx, decisions)
        .unwrap_or_else(|| panic!("no schedule meets the deadlines of {decisions:?}"));
    let report = check_feasibility(&inst.manifest, &inst.timeline, &inst.ctx, decisions, &schedule).unwrap();
    assert!(report.passed(), "{:?} for {decisions:?}", report.first_violation());
}
