//! Wasm bindings for the browser demo: three operations, each returning a
//! JSON string the page renders on a canvas.
//!
//! * [`scene`] — solve one instance at resolution k and return the plan
//!   support, the projection step function and the reference maps.
//! * [`sweep`] — convergence data (value error, d_p, disc_p) over a k range.
//! * [`modulus`] — sampled vs certified modulus of continuity of the
//!   quadratic cost across a radius grid.

use hplan::experiment::{build_scene, ProjectionChoice};
use hplan::{estimate_modulus, metrics, CompactSpace, CostFunction, Map1D, ProductMetric};
use wasm_bindgen::prelude::wasm_bindgen;

fn choice(kind: &str) -> ProjectionChoice {
    match kind {
        "gm" => ProjectionChoice::GeometricMedianHNet,
        _ => ProjectionChoice::Barycentric,
    }
}

fn map_polyline(map: &hplan::Piecewise1D, samples: usize) -> Vec<serde_json::Value> {
    let mut out = Vec::new();
    for p in &map.pieces {
        if p.lo == p.hi {
            out.push(serde_json::json!([p.lo, p.intercept + p.slope * p.lo, "dot"]));
            continue;
        }
        let n = samples.max(2);
        let seg: Vec<[f64; 2]> = (0..n)
            .map(|t| {
                let x = p.lo + (p.hi - p.lo) * t as f64 / (n - 1) as f64;
                [x, p.slope * x + p.intercept]
            })
            .collect();
        out.push(serde_json::json!(seg));
    }
    out
}

/// Solve the named instance at resolution `k`, extract the chosen projection
/// and return everything the plan/map panels draw.
#[wasm_bindgen]
pub fn scene(name: &str, k: u32, kind: &str) -> Result<String, String> {
    let s = build_scene(name, k as usize, choice(kind)).map_err(|e| e.to_string())?;
    let atoms: Vec<serde_json::Value> = s
        .plan
        .plan
        .entries
        .iter()
        .map(|e| {
            let x = s.plan.source.anchors[e.i].scalar().unwrap();
            let y = s.plan.target.anchors[e.j].scalar().unwrap();
            serde_json::json!([x, y, e.mass])
        })
        .collect();
    let step: Vec<serde_json::Value> = s
        .plan
        .source
        .cells
        .iter()
        .zip(&s.projection.values)
        .map(|(cell, v)| {
            let (lo, hi) = match cell {
                hplan::Cell::Interval { lo, hi, .. } => (*lo, *hi),
                _ => (0.0, 0.0),
            };
            serde_json::json!([lo, hi, v.scalar().unwrap()])
        })
        .collect();
    let (xlo, xhi) = match &s.plan.source.space {
        CompactSpace::Interval { lo, hi } => (*lo, *hi),
        _ => (0.0, 1.0),
    };
    let (ylo, yhi) = match &s.plan.target.space {
        CompactSpace::Interval { lo, hi } => (*lo, *hi),
        _ => (0.0, 1.0),
    };
    let mut values = serde_json::Map::new();
    values.insert("cost".into(), s.plan.cost(&s.cost).into());
    values.insert("gap".into(), s.gap.into());
    values.insert("h".into(), s.plan.h_bound().into());
    if let Some(reference) = &s.reference {
        let t = Map1D::Piecewise(reference.clone());
        if let Ok(d) = metrics::map_distance_p(&s.projection.to_map().unwrap(), &t, &s.mu, 1.0) {
            values.insert("d1_to_reference".into(), d.value.into());
        }
        if let Ok(disc) = metrics::disc_p(&s.projection, &t, 1.0) {
            values.insert("disc1_to_reference".into(), disc.into());
        }
    }
    let out = serde_json::json!({
        "name": s.name,
        "k": k,
        "bounds": {"x": [xlo, xhi], "y": [ylo, yhi]},
        "plan": atoms,
        "projection": step,
        "reference": s.reference.as_ref().map(|m| map_polyline(m, 32)),
        "limit": s.limit.as_ref().map(|m| map_polyline(m, 32)),
        "values": values,
    });
    Ok(out.to_string())
}

/// Convergence sweep for the scene: per k, the certified value error bound
/// data and the map distances to the reference.
#[wasm_bindgen]
pub fn sweep(name: &str, k_max: u32, kind: &str) -> Result<String, String> {
    let mut ks = vec![];
    let mut k = 2usize;
    while k <= (k_max as usize).clamp(2, 512) {
        ks.push(k);
        k *= 2;
    }
    let mut rows = Vec::new();
    for &k in &ks {
        let s = build_scene(name, k, choice(kind)).map_err(|e| e.to_string())?;
        let mut row = serde_json::Map::new();
        row.insert("k".into(), k.into());
        row.insert("h".into(), s.plan.h_bound().into());
        row.insert("cost".into(), s.plan.cost(&s.cost).into());
        row.insert("gap".into(), s.gap.into());
        if let Some(reference) = &s.reference {
            let t = Map1D::Piecewise(reference.clone());
            if let Ok(d) = metrics::map_distance_p(&s.projection.to_map().unwrap(), &t, &s.mu, 2.0) {
                row.insert("d2".into(), d.value.into());
            }
            if let Ok(disc) = metrics::disc_p(&s.projection, &t, 1.0) {
                row.insert("disc1".into(), disc.into());
            }
        }
        rows.push(serde_json::Value::Object(row));
    }
    // closed-form optimum of the squeeze instance for the error panel
    let k_star = if name == "squeeze" {
        Some(1.0 / 12.0)
    } else if name == "identity" || name == "ex34" || name == "ex45" {
        Some(0.0)
    } else {
        None
    };
    Ok(serde_json::json!({"name": name, "rows": rows, "k_star": k_star}).to_string())
}

/// Sampled lower estimate and certified upper bound of the modulus of
/// continuity of the quadratic cost on the unit square, over a radius grid.
#[wasm_bindgen]
pub fn modulus(n_samples: u32, seed: u32) -> Result<String, String> {
    let product = ProductMetric::new(
        CompactSpace::interval(0.0, 1.0).unwrap(),
        CompactSpace::interval(0.0, 1.0).unwrap(),
    );
    let cost = CostFunction::quadratic().with_lipschitz(4.0);
    let mut rows = Vec::new();
    for i in 1..=40 {
        let h = i as f64 / 40.0;
        let est = estimate_modulus(&cost, &product, h, n_samples as usize, seed as u64)
            .map_err(|e| e.to_string())?;
        // (x - y)^2 on the unit square: the difference 1 - (1 - 2h)^2 grows
        // until the far point reaches the zero set at h = 1/2, then the
        // modulus saturates at the full range of the cost.
        let exact = if h < 0.5 { 4.0 * h * (1.0 - h) } else { 1.0 };
        rows.push(serde_json::json!({
            "h": h,
            "sampled": est.sampled_lower,
            "upper": est.upper,
            "exact": exact,
        }));
    }
    Ok(serde_json::json!({"rows": rows}).to_string())
}
