//! ψ_ℓ(A) = φ_ℓ(A)⁻¹ by Newton-Schulz squaring.
//!
//! At the scaled argument `B = A/2^s`, ψ₁(B) comes from the swapped Padé
//! pair and ψ_j(B), `j = 2..ℓ`, from Newton-Schulz started at ψ_{j−1}(B).
//! Each level of the φ ladder is then inverted with Newton-Schulz, started
//! from the inverse one level up.

use std::fmt::Write as _;

use crate::densecore::{combine_powers, inf_norm, matmul, matrix_powers, solve, Matrix};
use crate::error::{Error, Result};
use crate::pade::psi_pade_coeffs;
use crate::phipade::{phi_ladder_from_powers, scaling_exponent, PhiLadder, ScalingDecision};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsOptions {
    pub max_iterations: usize,
    /// Iteration continues while the previous difference is at least this.
    pub coarse_threshold: f64,
    /// Reaching `max_iterations` is an error when set; otherwise the run
    /// stops there and reports [`Termination::Cap`].
    pub error_on_cap: bool,
}

impl Default for NsOptions {
    fn default() -> Self {
        NsOptions {
            max_iterations: 60,
            coarse_threshold: 0.1,
            error_on_cap: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The difference norm stopped decreasing below the threshold, or vanished.
    Stagnation,
    Cap,
}

#[derive(Clone, Debug)]
pub struct NsOutcome {
    pub x: Matrix,
    /// `err2 = ‖X_k − X_{k−1}‖_∞` for every iteration.
    pub errors: Vec<f64>,
    pub termination: Termination,
}

/// Approximate inverse of `m` by `X ← 2X − (X M) X`, starting from `x0`.
///
/// Runs while `err1 > err2` or `err1 ≥ coarse_threshold`, where `err2` is
/// the newest difference norm and `err1` the one before; the last computed
/// iterate is returned. A zero difference ends the run as well.
///
/// Ties below the threshold end the run: at roundoff level the iterates can
/// settle into a cycle with exactly repeating differences, which a
/// non-strict comparison would never leave.
pub fn newton_schulz(m: &Matrix, x0: &Matrix, opts: &NsOptions) -> Result<NsOutcome> {
    if !m.is_square() || (x0.rows(), x0.cols()) != (m.rows(), m.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "Newton-Schulz needs square operands of equal size, got {}x{} and {}x{}",
            m.rows(),
            m.cols(),
            x0.rows(),
            x0.cols()
        )));
    }
    if opts.max_iterations == 0 {
        return Err(Error::invalid("max_iterations must be at least 1"));
    }
    let mut x = x0.clone();
    let mut errors = Vec::new();
    let (mut err1, mut err2) = (f64::INFINITY, f64::INFINITY);
    while continues(err1, err2, opts.coarse_threshold) {
        if errors.len() == opts.max_iterations {
            if opts.error_on_cap {
                return Err(Error::Divergence {
                    stage: "iteration cap reached".into(),
                    errors,
                });
            }
            return Ok(NsOutcome {
                x,
                errors,
                termination: Termination::Cap,
            });
        }
        let xm = matmul(&x, m)?;
        let mut next = x.scaled(2.0);
        next.axpy(-1.0, &matmul(&xm, &x)?);
        let e = inf_norm(&(&next - &x));
        errors.push(e);
        if !e.is_finite() {
            return Err(Error::Divergence {
                stage: "non-finite iterate".into(),
                errors,
            });
        }
        x = next;
        err1 = err2;
        err2 = e;
        if e == 0.0 {
            break;
        }
    }
    Ok(NsOutcome {
        x,
        errors,
        termination: Termination::Stagnation,
    })
}

fn continues(err1: f64, err2: f64, coarse_threshold: f64) -> bool {
    err1 > err2 || err1 >= coarse_threshold
}

/// Replays the loop guard over a recorded `err2` sequence and returns the
/// number of iterations it allows.
pub fn replay_guard(errors: &[f64], coarse_threshold: f64) -> usize {
    let (mut err1, mut err2) = (f64::INFINITY, f64::INFINITY);
    let mut k = 0;
    while continues(err1, err2, coarse_threshold) && k < errors.len() {
        err1 = err2;
        err2 = errors[k];
        k += 1;
        if err2 == 0.0 {
            break;
        }
    }
    k
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsRecord {
    pub step: usize,
    pub iteration: usize,
    pub err2: f64,
}

/// Newton-Schulz history of a pipeline run, grouped by step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<NsRecord>,
    /// `(step, termination)` in the order the steps ran.
    pub terminations: Vec<(usize, Termination)>,
}

impl ConvergenceTrace {
    fn push_run(&mut self, step: usize, outcome: &NsOutcome) {
        self.records.extend(outcome.errors.iter().enumerate().map(|(k, &err2)| NsRecord {
            step,
            iteration: k + 1,
            err2,
        }));
        self.terminations.push((step, outcome.termination));
    }

    pub fn steps(&self) -> Vec<usize> {
        self.terminations.iter().map(|&(s, _)| s).collect()
    }

    /// `err2` values recorded for one step.
    pub fn errors(&self, step: usize) -> Vec<f64> {
        self.records.iter().filter(|r| r.step == step).map(|r| r.err2).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with header `step,iteration,err2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,iteration,err2\n");
        for r in &self.records {
            writeln!(out, "{},{},{:e}", r.step, r.iteration, r.err2).unwrap();
        }
        out
    }
}

/// ψ₁(B) from the `[d/d]` swapped Padé pair.
pub fn psi1eval(b: &Matrix, d: usize) -> Result<Matrix> {
    let powers = matrix_powers(b, d)?;
    psi1eval_from_powers(&powers, d)
}

fn psi1eval_from_powers(powers: &[Matrix], d: usize) -> Result<Matrix> {
    let r = psi_pade_coeffs(d, 1)?;
    let num = combine_powers(r.numerator(), powers);
    let den = combine_powers(r.denominator(), powers);
    solve(&den, &num)
}

/// ψ_ℓ(B) from ψ₁(B) by Newton-Schulz on `φ_2(B), ..., φ_ℓ(B)`.
/// `phis_at_b[j]` is φ_j(B); the trace step of rung `j` is `j`.
pub fn psi_seed_ladder(
    b: &Matrix,
    ell: u32,
    phis_at_b: &[Matrix],
    d: usize,
    opts: &NsOptions,
) -> Result<(Matrix, ConvergenceTrace)> {
    let powers = matrix_powers(b, d)?;
    seed_ladder_from(psi1eval_from_powers(&powers, d)?, ell, phis_at_b, opts)
}

fn seed_ladder_from(
    psi1: Matrix,
    ell: u32,
    phis_at_b: &[Matrix],
    opts: &NsOptions,
) -> Result<(Matrix, ConvergenceTrace)> {
    if ell == 0 {
        return Err(Error::invalid("the ψ ladder starts at ell = 1"));
    }
    if phis_at_b.len() <= ell as usize {
        return Err(Error::invalid(format!(
            "need φ_0..φ_{ell} at the seed, got {} matrices",
            phis_at_b.len()
        )));
    }
    let mut x = psi1;
    let mut trace = ConvergenceTrace::default();
    for (j, phi) in phis_at_b.iter().enumerate().take(ell as usize + 1).skip(2) {
        let out = newton_schulz(phi, &x, opts).map_err(|e| e.in_stage(&format!("seed rung ell = {j}")))?;
        trace.push_run(j, &out);
        x = out.x;
    }
    Ok((x, trace))
}

/// Carries `psi_top ≈ ψ_ℓ(A/2^s)` down the ladder to ψ_ℓ(A). Trace step `k`
/// (from 1) inverts φ_ℓ(A/2^{s−k}).
pub fn update_matrix(
    psi_top: Matrix,
    ladder: &PhiLadder,
    ell: u32,
    opts: &NsOptions,
) -> Result<(Matrix, ConvergenceTrace)> {
    if ell > ladder.ell_max() {
        return Err(Error::invalid(format!(
            "ladder holds φ up to ell = {}, asked for {ell}",
            ladder.ell_max()
        )));
    }
    let s = ladder.s();
    let mut x = psi_top;
    let mut trace = ConvergenceTrace::default();
    for i in (1..=s).rev() {
        let step = (s - i + 1) as usize;
        let out = newton_schulz(ladder.phi(i - 1, ell), &x, opts)
            .map_err(|e| e.in_stage(&format!("squaring step {step} of {s}")))?;
        trace.push_run(step, &out);
        x = out.x;
    }
    Ok((x, trace))
}

#[derive(Clone, Debug)]
pub struct PsiResult {
    pub psi: Matrix,
    /// One step per squaring level.
    pub trace: ConvergenceTrace,
    /// Newton-Schulz rungs at the seed (`ell ≥ 2` only).
    pub seed_trace: ConvergenceTrace,
    pub scaling: ScalingDecision,
}

/// ψ_ℓ(A) for `ℓ ≥ 1`.
pub fn psi_matrix(a: &Matrix, ell: u32, theta: f64, d: usize) -> Result<PsiResult> {
    psi_matrix_with(a, ell, theta, d, &NsOptions::default())
}

pub fn psi_matrix_with(a: &Matrix, ell: u32, theta: f64, d: usize, opts: &NsOptions) -> Result<PsiResult> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    if ell == 0 {
        return Err(Error::invalid("psi_matrix needs ell >= 1"));
    }
    let scaling = scaling_exponent(a, theta)?;
    let b = a.scaled(scaling.factor());
    let powers = matrix_powers(&b, d)?;
    let ladder = phi_ladder_from_powers(&powers, ell, d, scaling)?;
    let psi1 = psi1eval_from_powers(&powers, d).map_err(|e| e.in_stage("psi seed"))?;
    drop(powers);
    let (top, seed_trace) = seed_ladder_from(psi1, ell, ladder.top(), opts).map_err(|e| e.in_stage("psi seed"))?;
    let (psi, trace) = update_matrix(top, &ladder, ell, opts)?;
    Ok(PsiResult {
        psi,
        trace,
        seed_trace,
        scaling,
    })
}
