//! WebAssembly entry points for the static demo page in `www/`. Every export
//! returns a JSON document; failures become `{"error": "..."}` so the page
//! never has to catch exceptions.

use serde_json::{json, Value};
use ssc_core::bangbang::fixtures::{self, STATIONARY_FIXTURES};
use ssc_core::bangbang::{extract_zero_level_set, growth_inequality_probe, StationaryPoint};
use ssc_core::bessel::{bessel_kernel, kernel_half_nodes, BesselSpec, DualNormOperator};
use ssc_core::field::{GridFunction, UniformGrid};
use ssc_core::Result;
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest grid the page may request; keeps each call well under a second.
const MAX_NODES: usize = 257;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn checked_nodes(n: usize) -> Result<usize> {
    if (9..=MAX_NODES).contains(&n) {
        Ok(n)
    } else {
        Err(ssc_core::Error::InvalidArgument(format!("grid size {n} outside 9..={MAX_NODES}")))
    }
}

/// Sampled kernel `g_alpha` in one dimension on `[0, 5]`, with
/// `exp(-|x|)/2` alongside when `alpha = 2`.
pub fn kernel_profile_value(alpha: f64, spacing: f64) -> Result<Value> {
    if !(1e-3..=0.5).contains(&spacing) {
        return Err(ssc_core::Error::InvalidArgument(format!("spacing {spacing} outside [0.001, 0.5]")));
    }
    let spec = BesselSpec::new(alpha, 2.0, 1)?;
    let m = kernel_half_nodes(alpha, 1, spacing);
    let k = bessel_kernel(&spec, &UniformGrid::symmetric(1, m, spacing)?)?;
    let ray = k.axis_ray(0);
    let keep = ((5.0 / spacing) as usize + 1).min(ray.len());
    let x: Vec<f64> = (0..keep).map(|j| j as f64 * spacing).collect();
    let exact: Option<Vec<f64>> = (alpha == 2.0).then(|| x.iter().map(|t| 0.5 * (-t).exp()).collect());
    Ok(json!({
        "x": x,
        "value": &ray[..keep],
        "exact": exact,
        "mass": k.discrete_integral(),
        "peak": k.peak(),
    }))
}

/// Zero level set of `|x - c|^2 - r^2` on the unit square.
pub fn circle_level_set_value(n: usize, radius: f64) -> Result<Value> {
    let (phi, mask) = fixtures::circle(checked_nodes(n)?, radius)?;
    let mesh = extract_zero_level_set(&phi, &mask, None)?;
    let exact = 2.0 * std::f64::consts::PI * radius;
    Ok(json!({
        "facets": mesh.facets.len(),
        "total_surface": mesh.total_surface,
        "perimeter": exact,
        "relative_error": (mesh.total_surface - exact).abs() / exact,
        "min_gradient": mesh.min_gradient(),
        "max_gradient": mesh.max_gradient(),
        "centroids": mesh.facets.iter().map(|f| [f.centroid[0], f.centroid[1]]).collect::<Vec<_>>(),
    }))
}

fn band_flip(sp: &StationaryPoint, w: f64) -> GridFunction {
    let cut = w * sp.phibar().max_abs();
    let mut v = GridFunction::zeros(*sp.mask().grid());
    for i in sp.mask().interior_nodes() {
        if sp.phibar().values()[i].abs() <= cut {
            v.values_mut()[i] = -2.0 * sp.ubar().field().values()[i];
        }
    }
    v
}

/// Growth constants of band flips around the switching curve of the
/// manufactured fixture, measured in the dual norm and in `L^2`.
pub fn growth_contrast_value(n: usize, alpha: f64, p: f64, widths: &[f64]) -> Result<Value> {
    let sp = fixtures::stationary_fixture(STATIONARY_FIXTURES[0], checked_nodes(n)?)?;
    let op = DualNormOperator::new(BesselSpec::new(alpha, p, 2)?, UniformGrid::unit_box(2, 33)?)?;
    let mut rows = Vec::with_capacity(widths.len());
    for &w in widths {
        let v = band_flip(&sp, w);
        if v.max_abs() == 0.0 {
            continue;
        }
        let r = growth_inequality_probe(sp.phibar(), sp.mask(), &op, &[v])?;
        rows.push(json!({ "width": w, "c_dual": r.c_dual, "c_l1": r.c_l1, "c_l2": r.c_l2 }));
    }
    Ok(json!({ "rows": rows }))
}

#[wasm_bindgen]
pub fn kernel_profile(alpha: f64, spacing: f64) -> String {
    respond(kernel_profile_value(alpha, spacing))
}

#[wasm_bindgen]
pub fn circle_level_set(n: usize, radius: f64) -> String {
    respond(circle_level_set_value(n, radius))
}

#[wasm_bindgen]
pub fn growth_contrast(n: usize, alpha: f64, p: f64, widths: Vec<f64>) -> String {
    respond(growth_contrast_value(n, alpha, p, &widths))
}
