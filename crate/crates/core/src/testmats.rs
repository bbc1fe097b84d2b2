//! Test matrices and a check that a spectrum lies in the left half-plane.
//!
//! `make_a1` is the second-difference matrix on `(−1, 1)` with rows scaled
//! by `1/cos(x_i)`. `make_a2` is the five-point centred discretisation of
//! `u_xx + u_yy − 10x u_x − 100y u_y` on the unit square with zero
//! Dirichlet data, unknowns ordered with `x` running fastest.

use crate::densecore::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Self {
        Grid1D {
            n,
            h: 2.0 / (n + 1) as f64,
        }
    }

    /// `x_i = −1 + i h`, `i = 1..=n`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| -1.0 + i as f64 * self.h).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub m: usize,
    pub h: f64,
}

impl Grid2D {
    pub fn new(m: usize) -> Self {
        Grid2D {
            m,
            h: 1.0 / (m + 1) as f64,
        }
    }

    pub fn order(&self) -> usize {
        self.m * self.m
    }

    /// Interior coordinate `p h`, `p = 1..=m`.
    pub fn coord(&self, p: usize) -> f64 {
        p as f64 * self.h
    }

    /// Row index of node `(x_p, y_q)`, 1-based `p` and `q`.
    pub fn index(&self, p: usize, q: usize) -> usize {
        (q - 1) * self.m + (p - 1)
    }
}

pub fn make_a1(n: usize) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::invalid("make_a1 needs n >= 2"));
    }
    let grid = Grid1D::new(n);
    let inv_h = (n + 1) as f64 / 2.0;
    let inv_h2 = inv_h * inv_h;
    let x = grid.nodes();
    let mut a = Matrix::zeros(n, n);
    for (i, &xi) in x.iter().enumerate() {
        let w = inv_h2 / xi.cos();
        a[(i, i)] = -2.0 * w;
        if i > 0 {
            a[(i, i - 1)] = w;
        }
        if i + 1 < n {
            a[(i, i + 1)] = w;
        }
    }
    Ok(a)
}

/// `D^{1/2}` for `make_a1(n) = D^{-1} T`: `D^{1/2} A D^{-1/2}` is symmetric.
pub fn a1_symmetrizer(n: usize) -> Vec<f64> {
    Grid1D::new(n).nodes().iter().map(|x| x.cos().sqrt()).collect()
}

pub const A2_CONVECTION_X: f64 = 10.0;
pub const A2_CONVECTION_Y: f64 = 100.0;

pub fn make_a2(m: usize) -> Result<Matrix> {
    make_a2_with(m, A2_CONVECTION_X, A2_CONVECTION_Y)
}

/// Five-point operator for `u_xx + u_yy − cx·x u_x − cy·y u_y`.
pub fn make_a2_with(m: usize, cx: f64, cy: f64) -> Result<Matrix> {
    if m < 2 {
        return Err(Error::invalid("make_a2 needs m >= 2"));
    }
    let g = Grid2D::new(m);
    let n = g.order();
    let inv_h = (m + 1) as f64;
    let inv_h2 = inv_h * inv_h;
    let half = inv_h / 2.0;
    let mut a = Matrix::zeros(n, n);
    for q in 1..=m {
        let y = g.coord(q);
        for p in 1..=m {
            let x = g.coord(p);
            let k = g.index(p, q);
            a[(k, k)] = -4.0 * inv_h2;
            if p < m {
                a[(k, g.index(p + 1, q))] = inv_h2 - cx * x * half;
            }
            if p > 1 {
                a[(k, g.index(p - 1, q))] = inv_h2 + cx * x * half;
            }
            if q < m {
                a[(k, g.index(p, q + 1))] = inv_h2 - cy * y * half;
            }
            if q > 1 {
                a[(k, g.index(p, q - 1))] = inv_h2 + cy * y * half;
            }
        }
    }
    Ok(a)
}

/// Largest cell Péclet number `|c| h / 2` of `make_a2(m)`.
pub fn a2_cell_peclet(m: usize) -> f64 {
    let g = Grid2D::new(m);
    let edge = g.coord(m);
    (A2_CONVECTION_X * edge).max(A2_CONVECTION_Y * edge) * g.h / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// `−S` has a Cholesky factor, `S` the symmetrised matrix.
    Symmetrized,
    /// Gershgorin discs in the closed left half-plane, one strictly, and
    /// the matrix irreducible.
    Gershgorin,
    Inconclusive,
}

impl Certificate {
    pub fn is_certified(self) -> bool {
        self != Certificate::Inconclusive
    }
}

/// Tries to show every eigenvalue of `a` has negative real part.
///
/// With `symmetrizer = Some(s)`, `S = diag(s) A diag(s)^{-1}` must be
/// symmetric and `−S` positive definite. Without it, a symmetric `a` is
/// tested the same way. Otherwise Gershgorin discs are used; a row whose
/// disc reaches the imaginary axis only through rounding of the row sum
/// counts as touching it.
pub fn certify_left_half_plane(a: &Matrix, symmetrizer: Option<&[f64]>) -> Certificate {
    if !a.is_square() {
        return Certificate::Inconclusive;
    }
    let symmetric = match symmetrizer {
        Some(s) if s.len() == a.rows() && s.iter().all(|v| v.is_finite() && *v != 0.0) => {
            symmetrized(a, s)
        }
        Some(_) => None,
        None => is_symmetric(a, 0.0).then(|| a.clone()),
    };
    if let Some(sym) = symmetric {
        if negative_definite(&sym) {
            return Certificate::Symmetrized;
        }
    }
    if gershgorin_left(a) && irreducible(a) {
        return Certificate::Gershgorin;
    }
    Certificate::Inconclusive
}

fn is_symmetric(a: &Matrix, rel_tol: f64) -> bool {
    let n = a.rows();
    let scale = a.max_abs();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= rel_tol * scale))
}

fn symmetrized(a: &Matrix, s: &[f64]) -> Option<Matrix> {
    let n = a.rows();
    let b = Matrix::from_fn(n, n, |i, j| s[i] * a[(i, j)] / s[j]);
    if !is_symmetric(&b, 64.0 * f64::EPSILON) {
        return None;
    }
    Some(Matrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)])))
}

/// Cholesky of `−S`.
fn negative_definite(s: &Matrix) -> bool {
    let n = s.rows();
    let mut l = s.scaled(-1.0).into_vec();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut v = l[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    true
}

fn gershgorin_left(a: &Matrix) -> bool {
    let n = a.rows();
    let mut strict = false;
    for i in 0..n {
        let row = a.row(i);
        let centre = row[i];
        let (radius, count) = row
            .iter()
            .enumerate()
            .filter(|&(j, v)| j != i && *v != 0.0)
            .fold((0.0, 0usize), |(r, c), (_, v)| (r + v.abs(), c + 1));
        let reach = centre + radius;
        let slack = 2.0 * (count + 1) as f64 * f64::EPSILON * (centre.abs() + radius);
        if reach > slack {
            return false;
        }
        if reach < -slack {
            strict = true;
        }
    }
    strict
}

/// Strong connectivity of the graph of the off-diagonal non-zeros.
fn irreducible(a: &Matrix) -> bool {
    let n = a.rows();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let v = if forward { a[(i, j)] } else { a[(j, i)] };
                if !seen[j] && v != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n == 1 || (reach_all(true) && reach_all(false))
}
