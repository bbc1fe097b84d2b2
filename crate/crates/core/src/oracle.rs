//! Reference values of φ_ℓ(A) and ψ_ℓ(A) for testing.
//!
//! Uses a different route from the main pipeline: heavier scaling
//! (`‖A/2^t‖_∞ ≤ 1/16`), a 30-term Taylor series accumulated with
//! compensated summation, the doubling recurrence written out separately,
//! and an LU solve for the inverse.

use crate::densecore::{inf_norm, matmul, solve, Matrix};
use crate::error::{Error, Result};

pub const TAYLOR_TERMS: usize = 30;
const SCALED_NORM: f64 = 1.0 / 16.0;

/// Neumaier-compensated running sum of matrices.
struct CompensatedSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl CompensatedSum {
    fn new(len: usize) -> Self {
        CompensatedSum {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    fn add_scaled(&mut self, c: f64, m: &Matrix) {
        for ((s, e), &v) in self.sum.iter_mut().zip(&mut self.comp).zip(m.as_slice()) {
            let x = c * v;
            let t = *s + x;
            if s.abs() >= x.abs() {
                *e += (*s - t) + x;
            } else {
                *e += (x - t) + *s;
            }
            *s = t;
        }
    }

    fn finish(self, rows: usize, cols: usize) -> Matrix {
        let data = self.sum.iter().zip(&self.comp).map(|(s, e)| s + e).collect();
        Matrix::from_vec(rows, cols, data).expect("finite sums")
    }
}

/// `(φ_0(A), ..., φ_ℓ(A))`.
pub fn phi_oracle_all(a: &Matrix, ell: u32) -> Result<Vec<Matrix>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    let n = a.rows();
    let norm = inf_norm(a);
    let mut t = 0i32;
    while norm * (-t as f64).exp2() > SCALED_NORM {
        t += 1;
    }
    let x = a.scaled((-t as f64).exp2());

    let ell = ell as usize;
    let mut sums: Vec<CompensatedSum> = (0..=ell).map(|_| CompensatedSum::new(n * n)).collect();
    let mut power = Matrix::identity(n);
    for k in 0..TAYLOR_TERMS {
        if k > 0 {
            power = matmul(&power, &x)?;
        }
        for (j, acc) in sums.iter_mut().enumerate() {
            let inv_fact = (1..=(j + k)).fold(1.0, |f, i| f / i as f64);
            acc.add_scaled(inv_fact, &power);
        }
    }
    let mut phis: Vec<Matrix> = sums.into_iter().map(|s| s.finish(n, n)).collect();

    for _ in 0..t {
        phis = double_argument(&phis)?;
    }
    Ok(phis)
}

/// `φ_l(2X) = 2^-l (φ_0 φ_l + Σ_{k=0}^{l−1} φ_{l−k} / k!)`.
fn double_argument(phis: &[Matrix]) -> Result<Vec<Matrix>> {
    let e = &phis[0];
    let mut out = vec![matmul(e, e)?];
    for l in 1..phis.len() {
        let mut v = matmul(e, &phis[l])?;
        let mut inv_fact = 1.0;
        for k in 0..l {
            if k > 0 {
                inv_fact /= k as f64;
            }
            v.axpy(inv_fact, &phis[l - k]);
        }
        out.push(v.scaled(0.5f64.powi(l as i32)));
    }
    Ok(out)
}

pub fn phi_oracle(a: &Matrix, ell: u32) -> Result<Matrix> {
    Ok(phi_oracle_all(a, ell)?.swap_remove(ell as usize))
}

pub fn psi_oracle(a: &Matrix, ell: u32) -> Result<Matrix> {
    Ok(psi_oracle_full(a, ell)?.psi)
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub phi: Matrix,
    pub psi: Matrix,
    /// `‖φ‖_∞ ‖φ^{-1}‖_∞`.
    pub condition: f64,
}

pub fn psi_oracle_full(a: &Matrix, ell: u32) -> Result<OracleResult> {
    let phi = phi_oracle(a, ell)?;
    let psi = solve(&phi, &Matrix::identity(a.rows()))?;
    let condition = inf_norm(&phi) * inf_norm(&psi);
    Ok(OracleResult { phi, psi, condition })
}
