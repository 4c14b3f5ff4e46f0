//! Browser bindings for the demo page in `www/`. Every export takes and
//! returns plain strings; results are JSON.

use fastscan::engine::fastscan_window;
use fastscan::gen::{generate_manifest, generate_trace, ManifestParams, TraceModel, TraceParams};
use fastscan::io::{format_trace, manifest_to_json, mbps_to_bytes, parse_manifest, parse_trace};
use fastscan::model::{BandwidthTimeline, WindowContext};
use fastscan::qoe::score;
use fastscan::simulator::{run_session, Algorithm, PredictorKind, SessionConfig, Trace};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Synthetic trace text in Mbps, one line per second.
pub fn trace_text(model: &str, length_s: usize, mean_mbps: f64, stddev_mbps: f64, seed: u64) -> Result<String, String> {
    let params = TraceParams {
        model: model.parse::<TraceModel>()?,
        length_s,
        mean_mbps,
        stddev_mbps,
        seed,
        ..TraceParams::default()
    };
    Ok(format_trace(&generate_trace(&params).map_err(err)?))
}

/// Manifest JSON with the default five-level ladder.
pub fn manifest_json(chunks: usize, jitter_pct: f64, seed: u64) -> Result<String, String> {
    let params = ManifestParams {
        chunks,
        jitter_pct,
        seed,
        ..ManifestParams::default()
    };
    Ok(manifest_to_json(&generate_manifest(&params).map_err(err)?))
}

/// Plays the trace once per algorithm and returns the four session logs.
pub fn compare_json(manifest: &str, trace: &str, buffer_s: u64, predictor: &str) -> Result<String, String> {
    let manifest = parse_manifest(manifest).map_err(err)?;
    let trace = Trace::new("trace", mbps_to_bytes(&parse_trace(trace).map_err(err)?));
    let predictor: PredictorKind = predictor.parse()?;
    let mut sessions = Vec::new();
    for algorithm in Algorithm::ALL {
        let config = SessionConfig {
            algorithm,
            buffer_cap_s: buffer_s,
            predictor,
            ..SessionConfig::default()
        };
        let log = run_session(&manifest, &trace, &config).map_err(|e| format!("{algorithm}: {e}"))?;
        sessions.push(json!({
            "algorithm": algorithm.name(),
            "qoe": log.qoe,
            "total_stall_s": log.total_stall_s,
            "levels": log.levels(),
            "buffer_s": log.buffer_trajectory,
            "fallbacks": log.fallback_count(),
        }));
    }
    Ok(json!({ "sessions": sessions }).to_string())
}

/// Runs one window decision over the first `window` chunks, treating the
/// trace as known, and returns the per-level scan diagnostics.
pub fn plan_json(manifest: &str, trace: &str, window: usize, buffer_s: u64, beta: f64) -> Result<String, String> {
    let manifest = parse_manifest(manifest).map_err(err)?;
    let samples = mbps_to_bytes(&parse_trace(trace).map_err(err)?);
    let last = *samples.last().expect("parsed traces are non-empty");
    let timeline = BandwidthTimeline::from_samples(samples)
        .and_then(|t| t.with_tail(last))
        .map_err(err)?;
    let ctx = WindowContext::clipped(
        &manifest,
        0,
        window.max(1),
        1,
        manifest.startup_delay_s(),
        buffer_s,
        Vec::new(),
    );
    let out = fastscan_window(&ctx, &manifest, &timeline, beta).map_err(err)?;
    let qoe = score(&out.decisions, &fastscan::qoe::QoeParams { beta, lambda: 10.0 });
    Ok(json!({
        "qoe": qoe,
        "levels": out.decisions.levels,
        "stall_before": out.decisions.stall_before,
        "deadlines": out.decisions.deadlines,
        "level0_forward": out.level0.stall_before,
        "promoted": out.promoted,
        "iterations": out.stats.iterations,
    })
    .to_string())
}

#[wasm_bindgen(js_name = generateTrace)]
pub fn generate_trace_js(
    model: &str,
    length_s: usize,
    mean_mbps: f64,
    stddev_mbps: f64,
    seed: u64,
) -> Result<String, JsValue> {
    trace_text(model, length_s, mean_mbps, stddev_mbps, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = generateManifest)]
pub fn generate_manifest_js(chunks: usize, jitter_pct: f64, seed: u64) -> Result<String, JsValue> {
    manifest_json(chunks, jitter_pct, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compare(manifest: &str, trace: &str, buffer_s: u64, predictor: &str) -> Result<String, JsValue> {
    compare_json(manifest, trace, buffer_s, predictor).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = planWindow)]
pub fn plan_window(manifest: &str, trace: &str, window: usize, buffer_s: u64, beta: f64) -> Result<String, JsValue> {
    plan_json(manifest, trace, window, buffer_s, beta).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> (String, String) {
        (
            manifest_json(15, 0.0, 1).unwrap(),
            trace_text("markov-2state", 200, 1.5, 0.7, 4).unwrap(),
        )
    }

    #[test]
    fn compare_returns_all_algorithms() {
        let (m, t) = inputs();
        let v: serde_json::Value = serde_json::from_str(&compare_json(&m, &t, 60, "harmonic").unwrap()).unwrap();
        let sessions = v["sessions"].as_array().unwrap();
        assert_eq!(sessions.len(), 4);
        assert!(sessions.iter().all(|s| s["levels"].as_array().unwrap().len() == 15));
    }

    #[test]
    fn plan_reports_levels_per_chunk() {
        let (m, t) = inputs();
        let v: serde_json::Value = serde_json::from_str(&plan_json(&m, &t, 5, 60, 0.1).unwrap()).unwrap();
        assert_eq!(v["levels"].as_array().unwrap().len(), 5);
        assert_eq!(v["promoted"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn errors_are_messages() {
        let (m, t) = inputs();
        assert!(compare_json(&m, "-1\n", 60, "harmonic").unwrap_err().contains("line 1"));
        assert!(plan_json(&m, &t, 15, 60, 0.5).is_err());
        assert!(trace_text("sine", 10, 1.0, 0.0, 0).is_err());
    }
}
