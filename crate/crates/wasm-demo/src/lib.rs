//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it and draws. The
//! plain `*_json` functions hold the logic so they can be tested natively.

use omplab::experiments::{sharpness_probe, ProbeOutcome};
use omplab::rip::{binomial, comparison_report, exact_ric, sharp_ric_bound, verdict_from_delta, verify_lemma1};
use omplab::sensing::{
    gaussian_sensing_matrix, generate_measurement, lemma1_example_instance, random_sparse_signal,
    NoiseSpec, SignPattern,
};
use omplab::{omp_run, StopRule};
use serde::Serialize;
use wasm_bindgen::prelude::*;

// keeps the page responsive: exact RICs beyond this are skipped
const DEMO_RIC_BUDGET: u128 = 50_000;

type Json = Result<String, String>;

fn to_json(v: &impl Serialize) -> Json {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Lemma1View {
    delta: f64,
    diag: [f64; 3],
    ric: f64,
    lhs: f64,
    rhs: f64,
    margin: f64,
    selected: Vec<usize>,
}

pub fn lemma1_example_json(delta: f64) -> Json {
    let ex = lemma1_example_instance(delta).map_err(|e| e.to_string())?;
    let ric = exact_ric(&ex.matrix, 3).map_err(|e| e.to_string())?;
    let c = verify_lemma1(&ex.matrix, &ex.signal, &ex.subset).map_err(|e| e.to_string())?;
    let y = ex.matrix.mul_vec(&ex.signal.to_dense()).map_err(|e| e.to_string())?;
    let r = omp_run(&ex.matrix, &y, StopRule::MaxIterations(2)).map_err(|e| e.to_string())?;
    to_json(&Lemma1View {
        delta,
        diag: [ex.matrix[(0, 0)], ex.matrix[(1, 1)], ex.matrix[(2, 2)]],
        ric: ric.delta,
        lhs: c.lhs,
        rhs: c.rhs,
        margin: c.margin(),
        selected: r.selected(),
    })
}

#[derive(Serialize)]
struct Curves {
    k: usize,
    epsilon: f64,
    sharp_ric_bound: f64,
    chang_wu_ric_bound: f64,
    delta: Vec<f64>,
    sharp_min_mag: Vec<Option<f64>>,
    chang_wu_min_mag: Vec<Option<f64>>,
}

/// Both minimum-magnitude requirements on a grid of `points` values of
/// `δ_{K+1}` spanning `[0, 1/√(K+1))`.
pub fn comparison_curves_json(k: usize, epsilon: f64, points: usize) -> Json {
    if points < 2 {
        return Err("need at least 2 points".into());
    }
    let top = sharp_ric_bound(k.max(1));
    let mut c = Curves {
        k,
        epsilon,
        sharp_ric_bound: top,
        chang_wu_ric_bound: 0.0,
        delta: Vec::with_capacity(points),
        sharp_min_mag: Vec::with_capacity(points),
        chang_wu_min_mag: Vec::with_capacity(points),
    };
    for i in 0..points {
        let d = top * i as f64 / points as f64;
        let r = comparison_report(k, d, epsilon).map_err(|e| e.to_string())?;
        c.chang_wu_ric_bound = r.chang_wu_ric_bound;
        c.delta.push(d);
        c.sharp_min_mag.push(r.sharp_min_mag);
        c.chang_wu_min_mag.push(r.chang_wu_min_mag);
    }
    to_json(&c)
}

#[derive(Serialize)]
struct OmpView {
    m: usize,
    n: usize,
    k: usize,
    epsilon: f64,
    truth: Vec<usize>,
    x: Vec<f64>,
    estimate: Vec<f64>,
    recovered: Vec<usize>,
    success: bool,
    trace: Vec<omplab::omp::OmpIterationRecord>,
    /// Present when `C(n, K+1)` is small enough to enumerate in the page.
    delta_k1: Option<f64>,
    conditions_hold: Option<bool>,
}

/// Draws a normalized Gaussian instance with sphere noise and runs OMP with
/// the residual stopping rule (or `K` iterations when `ε = 0`).
pub fn omp_demo_json(m: usize, n: usize, k: usize, epsilon: f64, seed: u64) -> Json {
    let err = |e: omplab::Error| e.to_string();
    if k == 0 || k >= n {
        return Err("need 1 <= K < n".into());
    }
    let a = gaussian_sensing_matrix(m, n, seed, true).map_err(err)?;
    let x = random_sparse_signal(n, k, 1.0, 3.0, seed ^ 0x5eed, SignPattern::Random).map_err(err)?;
    let inst = generate_measurement(&a, &x, &NoiseSpec::sphere(epsilon, seed ^ 0xbeef)).map_err(err)?;
    let rule = if epsilon == 0.0 {
        StopRule::MaxIterations(k)
    } else {
        StopRule::ResidualAtMost(epsilon)
    };
    let mut r = omp_run(&a, &inst.measurement, rule).map_err(err)?;
    r.annotate_truth(x.support());

    let (delta_k1, conditions_hold) = if binomial(n, k + 1) <= DEMO_RIC_BUDGET {
        let d = exact_ric(&a, k + 1).map_err(err)?.delta;
        let v = verdict_from_delta(d, k, x.min_magnitude().unwrap_or(0.0), epsilon).map_err(err)?;
        (Some(d), Some(v.overall))
    } else {
        (None, None)
    };
    to_json(&OmpView {
        m,
        n,
        k,
        epsilon,
        truth: x.support().to_vec(),
        x: x.to_dense(),
        estimate: r.estimate.to_dense(),
        success: r.recovered_support == x.support(),
        recovered: r.recovered_support,
        trace: r.trace,
        delta_k1,
        conditions_hold,
    })
}

/// Runs the sharpness probe for `K` and target `t` and returns the found
/// matrix and OMP trace, or `{"found": false}`.
pub fn sharpness_json(k: usize, t: f64, budget: usize, seed: u64) -> Json {
    match sharpness_probe(k, t, budget, seed).map_err(|e| e.to_string())? {
        ProbeOutcome::NotFound { candidates } => {
            to_json(&serde_json::json!({ "found": false, "candidates": candidates }))
        }
        ProbeOutcome::Found(f) => to_json(&serde_json::json!({
            "found": true,
            "verified_delta": f.verified_delta,
            "sharp_bound": f.sharp_bound,
            "support": f.signal.support(),
            "selected": f.omp_trace.selected(),
            "rows": (0..f.matrix.rows()).map(|i| f.matrix.row(i)).collect::<Vec<_>>(),
        })),
    }
}

#[wasm_bindgen]
pub fn lemma1_example(delta: f64) -> Result<String, JsValue> {
    lemma1_example_json(delta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn comparison_curves(k: usize, epsilon: f64, points: usize) -> Result<String, JsValue> {
    comparison_curves_json(k, epsilon, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn omp_demo(m: usize, n: usize, k: usize, epsilon: f64, seed: u32) -> Result<String, JsValue> {
    omp_demo_json(m, n, k, epsilon, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sharpness(k: usize, t: f64, budget: usize, seed: u32) -> Result<String, JsValue> {
    sharpness_json(k, t, budget, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Json) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn lemma1_view_margin() {
        let v = parse(lemma1_example_json(0.3));
        let margin = v["margin"].as_f64().unwrap();
        assert!((margin - (2f64.sqrt() - 1.0) * 0.3).abs() < 1e-12);
        assert_eq!(v["selected"], serde_json::json!([0, 1]));
        assert!(lemma1_example_json(1.0).is_err());
    }

    #[test]
    fn curves_have_requested_length() {
        let v = parse(comparison_curves_json(3, 0.1, 50));
        assert_eq!(v["delta"].as_array().unwrap().len(), 50);
        assert_eq!(v["sharp_ric_bound"].as_f64().unwrap(), 0.5);
        assert!(comparison_curves_json(0, 0.1, 50).is_err());
    }

    #[test]
    fn omp_demo_is_deterministic() {
        let a = omp_demo_json(30, 20, 2, 0.01, 9).unwrap();
        assert_eq!(a, omp_demo_json(30, 20, 2, 0.01, 9).unwrap());
        let v: Value = serde_json::from_str(&a).unwrap();
        assert!(v["delta_k1"].is_number());
        assert!(omp_demo_json(30, 20, 0, 0.01, 9).is_err());
    }

    #[test]
    fn sharpness_view_found() {
        let v = parse(sharpness_json(2, 0.7, 100, 1));
        assert_eq!(v["found"], true);
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
