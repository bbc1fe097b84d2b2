//! Browser demo: convergence-ratio curves, the ψ₁ Padé error on a circle
//! against its a-priori bound, and a Newton-Schulz trace of the full ψ_ℓ
//! pipeline on a random stable matrix.
//!
//! Every operation returns a JSON string. The `*_json` functions are plain
//! Rust and are what the tests exercise; the exported wrappers only turn
//! errors into JS exceptions.

use std::fmt::Write;

use num_complex::Complex64;
use psifun::densecore::{inf_norm, matmul, Matrix};
use psifun::oracle::psi_oracle_full;
use psifun::pade::{error_bound, psi_pade_coeffs};
use psifun::phipade::DEFAULT_DEGREE;
use psifun::psieval::psi_matrix;
use psifun::scalarfun::{conv_ratio, h_ell, psi_scalar};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 20_000;
const MAX_ORDER: usize = 96;

fn json_array(out: &mut String, values: impl IntoIterator<Item = f64>) {
    out.push('[');
    for (k, v) in values.into_iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        if v.is_finite() {
            write!(out, "{v:e}").unwrap();
        } else {
            out.push_str("null");
        }
    }
    out.push(']');
}

fn grid(t_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(t_max > 0.0 && t_max.is_finite()) || !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("need t_max > 0 and 2 ≤ points ≤ {MAX_POINTS}"));
    }
    Ok((0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect())
}

/// `{"t": [...], "h": [...], "ray": [...]}`: h_ℓ(t) and C_ℓ(t e^{iα}).
pub fn ratio_curves_json(ell: u32, t_max: f64, points: usize, angle: f64) -> Result<String, String> {
    let t = grid(t_max, points)?;
    let h = if ell >= 2 {
        t.iter().map(|&x| h_ell(ell, x)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?
    } else {
        Vec::new()
    };
    let ray = t
        .iter()
        .map(|&x| conv_ratio(ell, Complex64::from_polar(x, angle)).unwrap_or(f64::NAN))
        .collect::<Vec<_>>();
    let mut out = String::from("{\"t\":");
    json_array(&mut out, t);
    out.push_str(",\"h\":");
    json_array(&mut out, h);
    out.push_str(",\"ray\":");
    json_array(&mut out, ray);
    out.push('}');
    Ok(out)
}

/// `|ψ₁(z) − ℛ_{d,1}(z)|` on `|z| = radius` together with the estimate
/// `s(d,4) / min|𝒟|` that covers the disc of radius 4.
pub fn pade_circle_json(d: usize, radius: f64, samples: usize) -> Result<String, String> {
    if !(radius > 0.0 && radius <= 4.0) || !(8..=MAX_POINTS).contains(&samples) {
        return Err(format!("need 0 < radius ≤ 4 and 8 ≤ samples ≤ {MAX_POINTS}"));
    }
    let r = psi_pade_coeffs(d, 1).map_err(|e| e.to_string())?;
    let bound = error_bound(d, 4.0).map_err(|e| e.to_string())?;
    let angles: Vec<f64> = (0..samples).map(|k| 2.0 * std::f64::consts::PI * k as f64 / samples as f64).collect();
    let err = angles
        .iter()
        .map(|&a| {
            let z = Complex64::from_polar(radius, a);
            match (psi_scalar(1, z), r.eval(z)) {
                (Ok(exact), Ok(approx)) => (exact - approx).norm(),
                _ => f64::NAN,
            }
        })
        .collect::<Vec<_>>();
    let max = err.iter().cloned().fold(0.0, f64::max);
    let mut out = String::from("{\"angle\":");
    json_array(&mut out, angles);
    out.push_str(",\"err\":");
    json_array(&mut out, err);
    write!(
        out,
        ",\"max\":{max:e},\"bound\":{:e},\"series\":{:e},\"denom_min\":{:e}}}",
        bound.series_value / bound.denom_min,
        bound.series_value,
        bound.denom_min
    )
    .unwrap();
    Ok(out)
}

/// Random `n×n` matrix with entries in `(−spread, spread)`, shifted left past
/// its largest Gershgorin disc edge.
pub fn random_stable(n: usize, spread: f64, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-spread..spread));
    let edge = (0..n)
        .map(|i| a[(i, i)] + (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    a.add_identity(-(edge + 0.1));
    a
}

/// Runs ψ_ℓ on a random stable matrix and reports the Newton-Schulz trace,
/// the scaling exponent and the error against the reference.
pub fn psi_trace_json(n: usize, ell: u32, spread: f64, theta: f64, seed: u64) -> Result<String, String> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(format!("order must be in 1..={MAX_ORDER}"));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err("spread must be positive".into());
    }
    let a = random_stable(n, spread, seed);
    let r = psi_matrix(&a, ell, theta, DEFAULT_DEGREE).map_err(|e| e.to_string())?;
    let oracle = psi_oracle_full(&a, ell).map_err(|e| e.to_string())?;
    let rel_err = inf_norm(&(&r.psi - &oracle.psi)) / inf_norm(&oracle.psi);
    let mut defect = matmul(&r.psi, &oracle.phi).map_err(|e| e.to_string())?;
    defect.add_identity(-1.0);

    let mut out = format!(
        "{{\"n\":{n},\"ell\":{ell},\"norm\":{:e},\"s\":{},\"rel_err\":{rel_err:e},\"defect\":{:e},\"condition\":{:e},\"steps\":[",
        inf_norm(&a),
        r.scaling.s,
        inf_norm(&defect),
        oracle.condition
    );
    for (k, step) in r.trace.steps().into_iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str("{\"step\":");
        write!(out, "{step},\"err2\":").unwrap();
        json_array(&mut out, r.trace.errors(step));
        out.push('}');
    }
    out.push_str("],\"seed\":[");
    for (k, step) in r.seed_trace.steps().into_iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "{{\"rung\":{step},\"err2\":").unwrap();
        json_array(&mut out, r.seed_trace.errors(step));
        out.push('}');
    }
    out.push_str("]}");
    Ok(out)
}

#[wasm_bindgen]
pub fn ratio_curves(ell: u32, t_max: f64, points: usize, angle: f64) -> Result<String, JsError> {
    ratio_curves_json(ell, t_max, points, angle).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pade_circle(d: usize, radius: f64, samples: usize) -> Result<String, JsError> {
    pade_circle_json(d, radius, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn psi_trace(n: usize, ell: u32, spread: f64, theta: f64, seed: u32) -> Result<String, JsError> {
    psi_trace_json(n, ell, spread, theta, u64::from(seed)).map_err(|e| JsError::new(&e))
}
