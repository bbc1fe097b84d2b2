//! Dense real matrices and the kernels the rest of the crate is built on:
//! multiplication, the infinity norm, LU solves and polynomial evaluation.
//!
//! Storage is row-major. Multiplication is delegated to `matrixmultiply`;
//! when more than one worker is allowed, the output is split into row blocks
//! so every entry is still reduced in the same order and results do not
//! depend on the worker count.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{}", self.rows, self.cols)?;
        if self.rows * self.cols <= 64 {
            for i in 0..self.rows {
                write!(f, "\n  {:?}", self.row(i))?;
            }
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data. Dimensions must be positive,
    /// match the data length, and every entry must be finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: f64, x: &Matrix) {
        assert_eq!((self.rows, self.cols), (x.rows, x.cols), "axpy shape mismatch");
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    /// `self += alpha * I`.
    pub fn add_identity(&mut self, alpha: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// Worker cap for the multiply kernel, from `PSIFUN_THREADS` when set.
pub fn max_threads() -> usize {
    static THREADS: OnceLock<usize> = OnceLock::new();
    *THREADS.get_or_init(|| {
        if cfg!(target_arch = "wasm32") {
            return 1;
        }
        std::env::var("PSIFUN_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    })
}

/// Row blocks smaller than this are not worth a thread.
const MIN_ROWS_PER_WORKER: usize = 64;

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    matmul_threads(a, b, max_threads())
}

/// [`matmul`] with an explicit worker count.
pub fn matmul_threads(a: &Matrix, b: &Matrix, threads: usize) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = Matrix::zeros(m, n);
    let workers = threads.clamp(1, (m / MIN_ROWS_PER_WORKER).max(1));
    if workers == 1 || cfg!(target_arch = "wasm32") {
        gemm_block(&a.data, &b.data, &mut c.data, m, k, n);
    } else {
        let rows_per = m.div_ceil(workers);
        std::thread::scope(|scope| {
            for (a_blk, c_blk) in a.data.chunks(rows_per * k).zip(c.data.chunks_mut(rows_per * n)) {
                let rows = c_blk.len() / n;
                let b = &b.data;
                scope.spawn(move || gemm_block(a_blk, b, c_blk, rows, k, n));
            }
        });
    }
    Ok(c)
}

fn gemm_block(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the slices cover m*k, k*n and m*n row-major elements with the
    // strides passed below, and `c` is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Maximum absolute row sum.
pub fn inf_norm(a: &Matrix) -> f64 {
    (0..a.rows)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Row-pivoted LU factors `P M = L U`, packed in one array.
#[derive(Clone, Debug)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let tiny = inf_norm(m) * f64::EPSILON * 0.5;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax.is_nan() || pmax <= tiny {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let pivot = pivot_row[k];
            for row in tail.chunks_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= l * u;
                    }
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M X = B` for all columns of `B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, expected {n}",
                b.rows
            )));
        }
        let nrhs = b.cols;
        let mut x = Matrix::zeros(n, nrhs);
        // column panels keep the working set in cache
        const PANEL: usize = 96;
        let mut buf = vec![0.0; n * PANEL.min(nrhs)];
        for c0 in (0..nrhs).step_by(PANEL) {
            let w = PANEL.min(nrhs - c0);
            let buf = &mut buf[..n * w];
            for (i, &pi) in self.perm.iter().enumerate() {
                buf[i * w..(i + 1) * w].copy_from_slice(&b.data[pi * nrhs + c0..pi * nrhs + c0 + w]);
            }
            // L y = P b, unit diagonal
            for i in 1..n {
                let (done, rest) = buf.split_at_mut(i * w);
                let xi = &mut rest[..w];
                for (k, &l) in self.lu[i * n..i * n + i].iter().enumerate() {
                    if l != 0.0 {
                        for (t, &s) in xi.iter_mut().zip(&done[k * w..(k + 1) * w]) {
                            *t -= l * s;
                        }
                    }
                }
            }
            // U x = y
            for i in (0..n).rev() {
                let (head, rest) = buf.split_at_mut((i + 1) * w);
                let xi = &mut head[i * w..];
                for (off, &u) in self.lu[i * n + i + 1..(i + 1) * n].iter().enumerate() {
                    if u != 0.0 {
                        let src = &rest[off * w..(off + 1) * w];
                        for (t, &s) in xi.iter_mut().zip(src) {
                            *t -= u * s;
                        }
                    }
                }
                let d = self.lu[i * n + i];
                for t in xi.iter_mut() {
                    *t /= d;
                }
            }
            for i in 0..n {
                x.data[i * nrhs + c0..i * nrhs + c0 + w].copy_from_slice(&buf[i * w..(i + 1) * w]);
            }
        }
        Ok(x)
    }
}

/// `M^{-1} B` by partial-pivoting LU.
pub fn solve(m: &Matrix, b: &Matrix) -> Result<Matrix> {
    LuFactors::factor(m)?.solve(b)
}

/// `c_0 I + c_1 A + ... + c_d A^d` in Horner form.
pub fn polyval_matrix(coeffs: &[f64], a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("polynomial argument must be square".into()));
    }
    let Some((&last, rest)) = coeffs.split_last() else {
        return Err(Error::invalid("empty coefficient vector"));
    };
    let n = a.rows;
    let mut p = if rest.is_empty() {
        let mut p = Matrix::zeros(n, n);
        p.add_identity(last);
        return Ok(p);
    } else {
        let mut p = a.scaled(last);
        p.add_identity(rest[rest.len() - 1]);
        p
    };
    for &c in rest[..rest.len() - 1].iter().rev() {
        p = matmul(&p, a)?;
        p.add_identity(c);
    }
    Ok(p)
}

/// `[I, A, A^2, ..., A^d]`.
pub fn matrix_powers(a: &Matrix, d: usize) -> Result<Vec<Matrix>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("powers need a square matrix".into()));
    }
    let mut powers = Vec::with_capacity(d + 1);
    powers.push(Matrix::identity(a.rows));
    if d >= 1 {
        powers.push(a.clone());
    }
    for k in 2..=d {
        let next = matmul(&powers[k - 1], a)?;
        powers.push(next);
    }
    Ok(powers)
}

/// `Σ_k c_k P_k` over precomputed powers.
pub fn combine_powers(coeffs: &[f64], powers: &[Matrix]) -> Matrix {
    assert!(coeffs.len() <= powers.len(), "not enough powers for the polynomial");
    let mut out = Matrix::zeros(powers[0].rows, powers[0].cols);
    for (&c, p) in coeffs.iter().zip(powers).rev() {
        out.axpy(c, p);
    }
    out
}
