//! Scaling and squaring for φ_0..φ_ℓ.
//!
//! `A` is scaled by `2^-s` so that `‖A/2^s‖_∞ ≤ θ`, the φ-functions are
//! seeded there with diagonal Padé approximants, and the scaling is undone
//! with
//!
//! ```text
//! φ_ℓ(2z) = 2^-ℓ [φ_0(z) φ_ℓ(z) + Σ_{j=1..ℓ} φ_j(z) / (ℓ−j)!],   φ_0(2z) = φ_0(z)²
//! ```
//!
//! Every level is kept, since the ψ pipeline consumes all of them. A ladder
//! holds `(s+1)(ℓ+1)` matrices.

use crate::densecore::{combine_powers, inf_norm, matmul, matrix_powers, solve, Matrix};
use crate::error::{Error, Result};
use crate::pade::{phi_pade_coeffs, MAX_PADE_ELL};

pub const DEFAULT_THETA: f64 = 4.0;
pub const DEFAULT_DEGREE: usize = 7;

/// Largest scaling exponent accepted; keeps `2^-s` a normal number.
const MAX_SCALING: u32 = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingDecision {
    pub theta: f64,
    pub norm: f64,
    pub s: u32,
}

impl ScalingDecision {
    pub fn factor(&self) -> f64 {
        (-(self.s as f64)).exp2()
    }
}

/// Smallest `s ≥ 0` with `‖A‖_∞ / 2^s ≤ θ`.
pub fn scaling_exponent(a: &Matrix, theta: f64) -> Result<ScalingDecision> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("theta = {theta} must be positive and finite")));
    }
    let norm = inf_norm(a);
    if !norm.is_finite() {
        return Err(Error::invalid("matrix norm is not finite"));
    }
    let fits = |s: u32| norm * (-(s as f64)).exp2() <= theta;
    let mut s = if norm > theta {
        (norm / theta).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    // log2 may be off by one in either direction near powers of two
    while s > 0 && fits(s - 1) {
        s -= 1;
    }
    while !fits(s) {
        s += 1;
    }
    if s > MAX_SCALING {
        return Err(Error::invalid(format!("norm {norm:e} needs scaling exponent {s}")));
    }
    Ok(ScalingDecision { theta, norm, s })
}

/// `(φ_0(B), ..., φ_ℓ(B))` from `[d/d]` Padé approximants.
pub fn phi_seed(b: &Matrix, ell_max: u32, d: usize) -> Result<Vec<Matrix>> {
    let powers = matrix_powers(b, d)?;
    phi_seed_from_powers(&powers, ell_max, d)
}

/// [`phi_seed`] given `[I, B, ..., B^d]`.
pub(crate) fn phi_seed_from_powers(powers: &[Matrix], ell_max: u32, d: usize) -> Result<Vec<Matrix>> {
    if ell_max > MAX_PADE_ELL {
        return Err(Error::invalid(format!("ell {ell_max} exceeds {MAX_PADE_ELL}")));
    }
    (0..=ell_max)
        .map(|j| {
            let r = phi_pade_coeffs(d, j)?;
            let num = combine_powers(r.numerator(), powers);
            let den = combine_powers(r.denominator(), powers);
            solve(&den, &num)
        })
        .collect()
}

/// One doubling of the argument: `φ_j(Z) ↦ φ_j(2Z)` for all `j`.
pub fn square_step(level: &[Matrix]) -> Result<Vec<Matrix>> {
    let Some(phi0) = level.first() else {
        return Err(Error::invalid("empty level"));
    };
    let mut out = Vec::with_capacity(level.len());
    out.push(matmul(phi0, phi0)?);
    for l in 1..level.len() {
        let mut acc = matmul(phi0, &level[l])?;
        let mut inv_fact = 1.0;
        for j in (1..=l).rev() {
            // j = l has (l−j)! = 1, then 1/1!, 1/2!, ...
            acc.axpy(inv_fact, &level[j]);
            inv_fact /= (l - j + 1) as f64;
        }
        out.push(acc.scaled((-(l as f64)).exp2()));
    }
    Ok(out)
}

/// All levels `φ_j(A/2^i)`, `j = 0..=ℓ`, `i = s..=0`.
#[derive(Clone, Debug)]
pub struct PhiLadder {
    ell_max: u32,
    scaling: ScalingDecision,
    /// `levels[i]` holds the functions at `A/2^i`.
    levels: Vec<Vec<Matrix>>,
}

impl PhiLadder {
    pub fn ell_max(&self) -> u32 {
        self.ell_max
    }

    pub fn s(&self) -> u32 {
        self.scaling.s
    }

    pub fn scaling(&self) -> ScalingDecision {
        self.scaling
    }

    /// `(φ_0, ..., φ_ℓ)` at `A/2^i`.
    pub fn level(&self, i: u32) -> &[Matrix] {
        &self.levels[i as usize]
    }

    /// `φ_j(A/2^i)`.
    pub fn phi(&self, i: u32, j: u32) -> &Matrix {
        &self.levels[i as usize][j as usize]
    }

    /// The seed level `A/2^s`.
    pub fn top(&self) -> &[Matrix] {
        self.level(self.s())
    }

    /// `(φ_0(A), ..., φ_ℓ(A))`.
    pub fn bottom(&self) -> &[Matrix] {
        self.level(0)
    }

    pub fn into_bottom(mut self) -> Vec<Matrix> {
        self.levels.swap_remove(0)
    }
}

pub fn phi_ladder(a: &Matrix, ell_max: u32, theta: f64, d: usize) -> Result<PhiLadder> {
    let scaling = scaling_exponent(a, theta)?;
    let b = a.scaled(scaling.factor());
    let powers = matrix_powers(&b, d)?;
    phi_ladder_from_powers(&powers, ell_max, d, scaling)
}

pub(crate) fn phi_ladder_from_powers(
    powers: &[Matrix],
    ell_max: u32,
    d: usize,
    scaling: ScalingDecision,
) -> Result<PhiLadder> {
    let s = scaling.s as usize;
    let mut levels = vec![Vec::new(); s + 1];
    levels[s] = phi_seed_from_powers(powers, ell_max, d)?;
    for i in (0..s).rev() {
        levels[i] = square_step(&levels[i + 1])?;
    }
    Ok(PhiLadder {
        ell_max,
        scaling,
        levels,
    })
}
