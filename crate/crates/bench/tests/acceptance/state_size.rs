use bgp_bench::synth;
use bgp_core::engine::{run_quantum, QuotaClock, SavedPlanState};
use bgp_core::{build_plan, Bgp, Dataset};
use serde_json::Value;

use crate::Verdict;

/// `?v0 follows ?v1 . ?v1 follows ?v2 ...` with `m` patterns.
fn follows_path(m: usize) -> Bgp {
    let p = synth::predicate("follows");
    let text: Vec<String> = (0..m).map(|i| format!("?v{i} {p} ?v{} .", i + 1)).collect();
    Bgp::parse(&text.join("\n")).expect("valid path")
}

/// A state saved right after the first answer, so every join holds a mapping.
fn mid_state(d: &Dataset, bgp: &Bgp) -> Result<SavedPlanState, String> {
    let fresh = SavedPlanState::fresh(d.digest(), &build_plan(d, bgp));
    let out = run_quantum(d, &fresh, &QuotaClock::unlimited(), Some(1)).map_err(|e| e.to_string())?;
    out.resume.ok_or_else(|| format!("{}-pattern path finished after one answer", bgp.len()))
}

/// Blanks every term and offset, leaving the bytes that do not depend on
/// the data.
fn structural(v: &mut Value, under_term: bool) {
    match v {
        Value::String(s) if under_term => s.clear(),
        Value::Array(items) => items.iter_mut().for_each(|i| structural(i, true)),
        Value::Object(map) => {
            for (key, value) in map.iter_mut() {
                match key.as_str() {
                    "offset" => *value = Value::from(0),
                    "mu" => {
                        if let Value::Object(mu) = value {
                            mu.values_mut().for_each(|t| structural(t, true));
                        }
                    }
                    _ => structural(value, false),
                }
            }
        }
        _ => {}
    }
}

fn structural_size(state: &SavedPlanState) -> usize {
    let mut v = serde_json::to_value(state).expect("state serializes");
    structural(&mut v, false);
    serde_json::to_string(&v).expect("value serializes").len()
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}

pub fn affine_state_size() -> Verdict {
    let xs: Vec<f64> = (1..=10).map(f64::from).collect();
    let mut fits = Vec::new();
    let mut structure = Vec::new();
    for size in [1_000, 100_000] {
        let d = Dataset::from_triples(synth::generate(1, size));
        let mut raw = Vec::new();
        let mut blank = Vec::new();
        for m in 1..=10 {
            let state = mid_state(&d, &follows_path(m))?;
            raw.push(state.to_json().len() as f64);
            blank.push(structural_size(&state) as f64);
        }
        let (slope, intercept, r2) = linear_fit(&xs, &raw);
        ensure!(r2 > 0.99, "{size} triples: r2 = {r2:.4} for sizes {raw:?}");
        fits.push(format!("{size}: {slope:.1}m + {intercept:.1} B, r2 {r2:.4}"));
        structure.push(blank);
    }
    let (s_small, _, _) = linear_fit(&xs, &structure[0]);
    let (s_large, _, _) = linear_fit(&xs, &structure[1]);
    ensure!(
        structure[0] == structure[1],
        "structural sizes differ between datasets: {:?} vs {:?}",
        structure[0],
        structure[1]
    );
    Ok(format!(
        "{}; per-node constant without terms {s_small:.1} B on both sizes (difference {:.1} B)",
        fits.join("; "),
        (s_small - s_large).abs()
    ))
}
