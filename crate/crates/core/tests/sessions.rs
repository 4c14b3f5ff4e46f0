mod common;

use fastscan::engine::fastscan_window;
use fastscan::gen::{generate_manifest, generate_trace, ManifestParams, TraceModel, TraceParams};
use fastscan::io::mbps_to_bytes;
use fastscan::model::{BandwidthTimeline, VideoManifest, WindowContext};
use fastscan::simulator::{check_session, run_session, Algorithm, PredictorKind, SessionConfig, Trace};

const CHUNKS: usize = 12;

fn manifest() -> VideoManifest {
    generate_manifest(&ManifestParams {
        chunks: CHUNKS,
        ..ManifestParams::default()
    })
    .unwrap()
}

fn trace(seed: u64) -> Trace {
    let model = [TraceModel::Constant, TraceModel::Markov2State, TraceModel::Ou][seed as usize % 3];
    let mbps = generate_trace(&TraceParams {
        model,
        length_s: 120,
        mean_mbps: 0.4 + (seed % 7) as f64 * 0.4,
        stddev_mbps: 0.6,
        seed,
        ..TraceParams::default()
    })
    .unwrap();
    Trace::new(format!("synthetic-{seed}"), mbps_to_bytes(&mbps))
}

fn perfect_config(algorithm: Algorithm) -> SessionConfig {
    SessionConfig {
        algorithm,
        window: CHUNKS,
        beta: 0.05,
        predictor: PredictorKind::Perfect,
        low_buffer_threshold_s: 0.0,
        ..SessionConfig::default()
    }
}

#[test]
fn every_session_replays_feasibly() {
    let m = manifest();
    for seed in 0..10 {
        let t = trace(seed);
        for algo in Algorithm::ALL {
            for predictor in [PredictorKind::Harmonic, PredictorKind::Ewma, PredictorKind::Perfect] {
                let config = SessionConfig {
                    predictor,
                    ..perfect_config(algo)
                };
                let log = run_session(&m, &t, &config).unwrap();
                let report = check_session(&m, &t, &log).unwrap();
                assert!(
                    report.passed(),
                    "{algo} {predictor:?} seed {seed}: {:?}",
                    report.first_violation()
                );
            }
        }
    }
}

#[test]
fn fastscan_dominates_baselines_with_perfect_prediction() {
    let m = manifest();
    for seed in 0..20 {
        let t = trace(seed);
        let ours = run_session(&m, &t, &perfect_config(Algorithm::FastScan)).unwrap();
        for algo in [Algorithm::Rb, Algorithm::Bba, Algorithm::Festive] {
            let other = run_session(&m, &t, &perfect_config(algo)).unwrap();
            assert!(
                ours.qoe >= other.qoe - 1e-9,
                "seed {seed}: fastscan {} < {algo} {}",
                ours.qoe,
                other.qoe
            );
        }
    }
}

/// With perfect prediction and the whole video as window, the first plan
/// already fixes the session: every chunk lands at the planned level.
#[test]
fn perfect_session_follows_first_plan() {
    let m = manifest();
    for seed in 0..10 {
        let t = trace(seed);
        let config = perfect_config(Algorithm::FastScan);
        let log = run_session(&m, &t, &config).unwrap();
        let timeline = BandwidthTimeline::from_samples(t.samples.clone())
            .unwrap()
            .with_tail(*t.samples.last().unwrap())
            .unwrap();
        let ctx = WindowContext::whole_video(&m, config.buffer_cap_s);
        let plan = fastscan_window(&ctx, &m, &timeline, config.beta).unwrap();
        let planned = fastscan::qoe::score(&plan.decisions, &config.qoe_params());
        assert!(
            (log.qoe - planned).abs() < 1e-9,
            "seed {seed}: session {} plan {planned}",
            log.qoe
        );
    }
}
