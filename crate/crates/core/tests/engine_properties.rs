mod common;

use fastscan::engine::{fastscan_window, level0_backward, level0_forward, ScanStats};
use fastscan::oracle::{enumerate_optimal, min_stall_bruteforce};
use fastscan::qoe::{score_exact, ExactQoeParams};
use proptest::prelude::*;

const BETA: f64 = 0.1;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(200)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn forward_stall_is_minimal(seed in any::<u64>()) {
        let inst = common::random_vbr_instance(&mut common::rng(seed), 6);
        let fwd = level0_forward(&inst.ctx, &inst.manifest, &inst.timeline, &mut ScanStats::default()).unwrap();
        let best = min_stall_bruteforce(&inst.manifest, &inst.timeline, &inst.ctx).unwrap();
        prop_assert_eq!(fwd.total_stall(), best);
    }

    #[test]
    fn backward_conserves_stall_and_stays_feasible(seed in any::<u64>()) {
        let inst = common::random_vbr_instance(&mut common::rng(seed), 6);
        let mut stats = ScanStats::default();
        let fwd = level0_forward(&inst.ctx, &inst.manifest, &inst.timeline, &mut stats).unwrap();
        let back = level0_backward(&inst.ctx, &inst.manifest, &inst.timeline, &fwd, &mut stats).unwrap();
        prop_assert_eq!(back.final_stall.last(), fwd.stall_before.last());
        for (f, b) in back.final_stall.iter().zip(&fwd.stall_before) {
            prop_assert!(f >= b);
        }
        let decisions = fastscan::model::DecisionSet {
            first_chunk: 0,
            levels: vec![0; inst.ctx.len()],
            sizes: inst.ctx.chunks().map(|c| inst.manifest.size(c, 0)).collect(),
            stall_before: back.final_stall.clone(),
            deadlines: back.deadlines.clone(),
        };
        common::assert_feasible(&inst, &decisions);
    }

    #[test]
    fn promotions_nest_and_deadlines_hold(seed in any::<u64>()) {
        let inst = common::random_cbr_instance(&mut common::rng(seed));
        let out = fastscan_window(&inst.ctx, &inst.manifest, &inst.timeline, BETA).unwrap();
        for pair in out.promoted.windows(2) {
            prop_assert!(pair[1].iter().all(|p| pair[0].contains(p)), "{:?}", out.promoted);
        }
        prop_assert_eq!(&out.decisions.deadlines, &out.level0.deadlines);
        prop_assert_eq!(&out.decisions.stall_before, &out.level0.final_stall);
        for (pos, &level) in out.decisions.levels.iter().enumerate() {
            let chunk = inst.ctx.first_chunk + pos;
            prop_assert_eq!(out.decisions.sizes[pos], inst.manifest.size(chunk, level));
        }
        common::assert_feasible(&inst, &out.decisions);
    }

    #[test]
    fn vbr_engine_never_beats_oracle(seed in any::<u64>()) {
        let inst = common::random_vbr_instance(&mut common::rng(seed), 6);
        let params = ExactQoeParams::default();
        let out = fastscan_window(&inst.ctx, &inst.manifest, &inst.timeline, BETA);
        prop_assume!(out.is_ok());
        let out = out.unwrap();
        common::assert_feasible(&inst, &out.decisions);
        let oracle = enumerate_optimal(&inst.manifest, &inst.timeline, &inst.ctx, &params).unwrap();
        prop_assert!(score_exact(&out.decisions, &params) <= oracle.best_qoe);
    }

    #[test]
    fn oracle_optima_are_feasible(seed in any::<u64>()) {
        let inst = common::random_cbr_instance(&mut common::rng(seed));
        let params = ExactQoeParams::default();
        let oracle = enumerate_optimal(&inst.manifest, &inst.timeline, &inst.ctx, &params).unwrap();
        for d in &oracle.optima {
            prop_assert_eq!(score_exact(d, &params), oracle.best_qoe);
            common::assert_feasible(&inst, d);
        }
    }
}

#[test]
fn optimal_on_cbr_with_roomy_buffer() {
    let mut rng = common::rng(11);
    let params = ExactQoeParams::default();
    for case in 0..300 {
        let inst = common::random_cbr_instance_with(&mut rng, 10);
        let out = fastscan_window(&inst.ctx, &inst.manifest, &inst.timeline, BETA).unwrap();
        let oracle = enumerate_optimal(&inst.manifest, &inst.timeline, &inst.ctx, &params).unwrap();
        assert_eq!(
            score_exact(&out.decisions, &params),
            oracle.best_qoe,
            "case {case}: engine {:?} oracle {:?}",
            out.decisions.levels,
            oracle.best_decisions.levels
        );
    }
}

/// Where engine and oracle agree, the k-th chunk left below level `n` by the
/// engine comes no later than the k-th such chunk of any optimum with the
/// same count.
#[test]
fn skipped_chunks_come_first() {
    let mut rng = common::rng(12);
    let params = ExactQoeParams::default();
    let below = |levels: &[usize], n: usize| -> Vec<usize> {
        levels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l < n)
            .map(|(i, _)| i)
            .collect()
    };
    let mut compared = 0;
    for case in 0..300 {
        let inst = common::random_cbr_instance_with(&mut rng, 10);
        let out = fastscan_window(&inst.ctx, &inst.manifest, &inst.timeline, BETA).unwrap();
        let oracle = enumerate_optimal(&inst.manifest, &inst.timeline, &inst.ctx, &params).unwrap();
        if score_exact(&out.decisions, &params) != oracle.best_qoe {
            continue;
        }
        for n in 1..=inst.manifest.top_level() {
            let ours = below(&out.decisions.levels, n);
            for opt in &oracle.optima {
                let theirs = below(&opt.levels, n);
                if theirs.len() != ours.len() {
                    continue;
                }
                compared += 1;
                for (a, b) in ours.iter().zip(&theirs) {
                    assert!(a <= b, "case {case} level {n}: {ours:?} vs {theirs:?}");
                }
            }
        }
    }
    assert!(compared > 100, "only {compared} comparisons");
}
