//! Diagonal Padé approximants of φ_ℓ and ψ_ℓ, and the a-priori error bound
//! for the ψ₁ approximant.
//!
//! The φ pair is
//!
//! ```text
//! N̂_{d,ℓ}(z) = d!/(2d+ℓ)! Σ_i [Σ_{j≤i} (2d+ℓ−j)! (−1)^j / (j! (d−j)! (ℓ+i−j)!)] z^i
//! D̂_{d,ℓ}(z) = d!/(2d+ℓ)! Σ_i (2d+ℓ−i)! / (i! (d−i)!) (−z)^i
//! ```
//!
//! and the ψ pair is the φ pair swapped and multiplied by ℓ!.
//! Factorial ratios are accumulated as products of small quotients.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};
use crate::scalarfun::{bernoulli_scaled, ComplexScalar, MAX_BERNOULLI};

pub const MAX_DEGREE: usize = 13;
pub const MAX_PADE_ELL: u32 = 16;

/// Samples on the circle used by [`denom_min_modulus`].
pub const DENOM_SAMPLES: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadeKind {
    Phi,
    Psi,
}

/// A `[d/d]` rational approximant in the ascending monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PadeRational {
    degree: usize,
    ell: u32,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    kind: PadeKind,
}

impl PadeRational {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn kind(&self) -> PadeKind {
        self.kind
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn eval(&self, z: ComplexScalar) -> Result<ComplexScalar> {
        pade_eval_scalar(self, z)
    }
}

fn check_range(d: usize, ell: u32) -> Result<()> {
    if !(1..=MAX_DEGREE).contains(&d) {
        return Err(Error::invalid(format!("degree {d} outside 1..={MAX_DEGREE}")));
    }
    if ell > MAX_PADE_ELL {
        return Err(Error::invalid(format!("ell {ell} outside 0..={MAX_PADE_ELL}")));
    }
    Ok(())
}

/// Coefficients `(N̂, D̂)` of the φ_ℓ approximant in any number field.
///
/// With `q_j = Π_{k<j} (d−k)/(2d+ℓ−k)`, `D̂_i = q_i (−1)^i / i!` and
/// `N̂_i = Σ_{j≤i} q_j (−1)^j / (j! (ℓ+i−j)!)`.
pub fn phi_pade_pair<T>(d: usize, ell: u32) -> Result<(Vec<T>, Vec<T>)>
where
    T: Num + Clone + FromPrimitive,
{
    check_range(d, ell)?;
    let ell = ell as usize;
    let int = |v: usize| T::from_usize(v).expect("small integer");
    let mut inv_fact = vec![T::one()];
    for k in 1..=(ell + d) {
        let prev = inv_fact[k - 1].clone();
        inv_fact.push(prev / int(k));
    }
    let mut q = vec![T::one()];
    for k in 0..d {
        let prev = q[k].clone();
        q.push(prev * int(d - k) / int(2 * d + ell - k));
    }
    // signed q_j / j!
    let w: Vec<T> = (0..=d)
        .map(|j| {
            let v = q[j].clone() * inv_fact[j].clone();
            if j % 2 == 1 {
                T::zero() - v
            } else {
                v
            }
        })
        .collect();
    let num = (0..=d)
        .map(|i| {
            (0..=i).fold(T::zero(), |acc, j| {
                acc + w[j].clone() * inv_fact[ell + i - j].clone()
            })
        })
        .collect();
    Ok((num, w))
}

pub fn phi_pade_coeffs(d: usize, ell: u32) -> Result<PadeRational> {
    let (numerator, denominator) = phi_pade_pair::<f64>(d, ell)?;
    Ok(PadeRational {
        degree: d,
        ell,
        numerator,
        denominator,
        kind: PadeKind::Phi,
    })
}

pub fn psi_pade_coeffs(d: usize, ell: u32) -> Result<PadeRational> {
    let phi = phi_pade_coeffs(d, ell)?;
    let fact: f64 = (1..=ell).map(f64::from).product();
    let scale = |v: Vec<f64>| v.into_iter().map(|c| c * fact).collect();
    Ok(PadeRational {
        degree: d,
        ell,
        numerator: scale(phi.denominator),
        denominator: scale(phi.numerator),
        kind: PadeKind::Psi,
    })
}

pub(crate) fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn pade_eval_scalar(r: &PadeRational, z: ComplexScalar) -> Result<ComplexScalar> {
    let den = horner(&r.denominator, z);
    if den.norm().is_nan() || den.norm() < f64::MIN_POSITIVE {
        return Err(Error::Pole(format!("Padé denominator vanishes at {z}")));
    }
    Ok(horner(&r.numerator, z) / den)
}

/// Truncated series for `φ_ℓ(z) D̂_{d,ℓ}(z) − N̂_{d,ℓ}(z)`:
/// `Σ_{i≥2d+1} (−1)^d d!(d+ℓ)! / ((2d+ℓ)! (ℓ+i)!) · C(i−d−1, d) · z^i`,
/// summing `terms` terms.
pub fn residual_series(d: usize, ell: u32, z: ComplexScalar, terms: usize) -> Result<ComplexScalar> {
    check_range(d, ell)?;
    if terms == 0 {
        return Err(Error::invalid("at least one term is required"));
    }
    let l = ell as f64;
    let df = d as f64;
    // d!(d+ℓ)!/(2d+ℓ)! = Π_{k=1..d} k/(d+ℓ+k)
    let mut c = (1..=d).fold(1.0, |a, k| a * k as f64 / (df + l + k as f64));
    let first = 2 * d + 1;
    c = (1..=(ell as usize + first)).fold(c, |a, k| a / k as f64);
    if d % 2 == 1 {
        c = -c;
    }
    let mut term = z.powu(first as u32) * c;
    let mut sum = term;
    for i in first..first + terms - 1 {
        let fi = i as f64;
        term = term * z * ((fi - df) / ((l + fi + 1.0) * (fi - 2.0 * df)));
        sum += term;
    }
    Ok(sum)
}

const RELATIVE_CUTOFF: f64 = 1e-20;
const CUTOFF_RUN: usize = 5;

/// `s(d, R) = d!/(2d+1)! Σ_{i≥2d+1} γ_i R^i`, the bound on
/// `|ψ₁(z) 𝒟_{d,1}(z) − 𝒩_{d,1}(z)|` for `|z| ≤ R`.
pub fn error_bound_s(d: usize, radius: f64) -> Result<f64> {
    check_range(d, 1)?;
    if !(radius > 0.0 && radius < 2.0 * std::f64::consts::PI) {
        return Err(Error::invalid(format!(
            "radius {radius} must lie in (0, 2π) for the series to converge"
        )));
    }
    let b = bernoulli_scaled(MAX_BERNOULLI)?;
    let b = b.coefficients();
    let df = d as f64;
    let first = 2 * d + 1;
    // c_k = (d+1)! C(k−d−1, d) R^k / (k+1)!, k ≥ 2d+1
    let mut c = vec![(d + 2..=2 * d + 2).fold(radius.powi(first as i32), |a, j| a / j as f64)];
    // b_m R^m
    let mut br = vec![1.0];
    let mut sum = 0.0;
    let mut small = 0;
    for i in first.. {
        let m_max = i - first;
        if m_max > MAX_BERNOULLI {
            return Err(Error::invalid(format!(
                "bound series for d = {d}, R = {radius} did not settle within {MAX_BERNOULLI} Bernoulli terms"
            )));
        }
        if m_max > 0 {
            let k = (first + m_max - 1) as f64;
            let last = c[m_max - 1];
            c.push(last * radius / (k + 2.0) * (k - df) / (k - 2.0 * df));
            br.push(b[m_max] * radius.powi(m_max as i32));
        }
        let term = (0..=m_max).map(|m| br[m] * c[m_max - m]).sum::<f64>().abs();
        sum += term;
        if term <= RELATIVE_CUTOFF * sum {
            small += 1;
            if small == CUTOFF_RUN {
                break;
            }
        } else {
            small = 0;
        }
    }
    let prefactor = (d + 1..=first).fold(1.0, |a, j| a / j as f64);
    Ok(prefactor * sum)
}

/// Roots of a real polynomial (ascending coefficients) from the
/// eigenvalues of its companion matrix.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .ok_or_else(|| Error::invalid("zero polynomial has no finite root set"))?;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let companion = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -coeffs[deg - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

/// A lower bound for `min_{|z|≤R} |𝒟_{d,1}(z)|`.
///
/// All roots of 𝒟_{d,1} are checked to lie outside the closed disc, so by
/// the minimum-modulus principle the minimum is attained on `|z| = R`. The
/// circle is sampled at [`DENOM_SAMPLES`] points and the sample minimum is
/// lowered by `L·πR/N`, where `L = Σ k|c_k| R^{k−1}` bounds the derivative,
/// which covers the gaps between samples.
pub fn denom_min_modulus(d: usize, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    let den = psi_pade_coeffs(d, 1)?.denominator;
    let roots = polynomial_roots(&den)?;
    if let Some(r) = roots.iter().find(|r| r.norm() <= radius) {
        return Err(Error::PreconditionViolated(format!(
            "denominator of degree {d} has a root {r} inside |z| <= {radius}"
        )));
    }
    let n = DENOM_SAMPLES;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let sample_min = (0..n)
        .map(|k| horner(&den, Complex64::from_polar(radius, step * k as f64)).norm())
        .fold(f64::INFINITY, f64::min);
    let lipschitz: f64 = den
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c.abs() * radius.powi(k as i32 - 1))
        .sum();
    Ok(sample_min - lipschitz * radius * std::f64::consts::PI / n as f64)
}

/// The a-priori bound on `|ψ₁(z) − ℛ_{d,1}(z)|` over `|z| ≤ R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBound {
    pub d: usize,
    pub radius: f64,
    /// `s(d, R)`.
    pub series_value: f64,
    /// Certified lower bound on `|𝒟_{d,1}|` over the disc.
    pub denom_min: f64,
    /// `denom_min` rounded down to two decimals, the form in which the
    /// constant is usually quoted.
    pub denom_tabulated: f64,
    /// `series_value / denom_tabulated`.
    pub total: f64,
}

pub fn error_bound(d: usize, radius: f64) -> Result<ErrorBound> {
    let series_value = error_bound_s(d, radius)?;
    let denom_min = denom_min_modulus(d, radius)?;
    if denom_min <= 0.0 {
        return Err(Error::PreconditionViolated(format!(
            "no positive lower bound for the denominator of degree {d} on |z| <= {radius}"
        )));
    }
    let floored = (denom_min * 100.0).floor() / 100.0;
    let denom_tabulated = if floored > 0.0 { floored } else { denom_min };
    Ok(ErrorBound {
        d,
        radius,
        series_value,
        denom_min,
        denom_tabulated,
        total: series_value / denom_tabulated,
    })
}

/// Rounds `x > 0` up to `digits` significant digits.
pub fn round_up_sig(x: f64, digits: i32) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() as i32 - (digits - 1);
    let m = if e < 0 { x * 10f64.powi(-e) } else { x / 10f64.powi(e) };
    // guard against the scaling pushing an exact value up
    let up = if (m - m.round()).abs() < 1e-9 { m.round() } else { m.ceil() };
    if e < 0 {
        up / 10f64.powi(-e)
    } else {
        up * 10f64.powi(e)
    }
}
