//! Reference scalar φ- and ψ-functions.
//!
//! These are the scalar counterparts of the matrix functions computed by the
//! rest of the crate. They are evaluated internally in double-double
//! arithmetic and rounded once, so they serve as references for the matrix
//! pipeline and for the convergence-ratio experiments.
//!
//! `φ_ℓ(z) = Σ_{k≥0} z^k / (ℓ+k)!`, and `ψ_ℓ(z) = 1 / φ_ℓ(z)`.

mod dd;

pub(crate) use dd::{Cdd, Dd};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex argument of the scalar functions.
pub type ComplexScalar = Complex64;

/// Largest supported index ℓ.
pub const MAX_ELL: u32 = 64;

/// Largest Bernoulli index accepted by [`bernoulli_scaled`].
pub const MAX_BERNOULLI: usize = 256;

/// Below this modulus the Taylor series is always used.
pub const SWITCH_RADIUS: f64 = 0.5;

const MIN_TAYLOR_TERMS: usize = 32;
const MAX_TAYLOR_TERMS: usize = 1000;

fn check_args(ell: u32, z: ComplexScalar) -> Result<()> {
    if ell > MAX_ELL {
        return Err(Error::invalid(format!("ell = {ell} exceeds cap {MAX_ELL}")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid(format!("non-finite argument {z}")));
    }
    Ok(())
}

/// Radius of the disc on which the Taylor branch is used. The series has
/// monotonically decreasing terms there, while outside it the closed form
/// suffers no cancellation.
fn taylor_radius(ell: u32) -> f64 {
    SWITCH_RADIUS.max(ell as f64)
}

fn inv_factorial(k: u32) -> Dd {
    (2..=k).fold(Dd::ONE, |acc, j| acc.div_f64(j as f64))
}

/// Number of Taylor terms needed so the neglected tail is below 2^-110 of
/// the leading term.
fn taylor_terms(ell: u32, r: f64) -> usize {
    let mut tail = 1.0;
    let mut k = 1usize;
    while k < MAX_TAYLOR_TERMS {
        tail *= r / (ell as f64 + k as f64);
        let ratio = r / (ell as f64 + k as f64 + 1.0);
        if k >= MIN_TAYLOR_TERMS && ratio < 1.0 && tail / (1.0 - ratio) < 1e-34 {
            break;
        }
        k += 1;
    }
    k + 1
}

fn taylor_dd(ell: u32, z: Cdd, terms: usize) -> Cdd {
    // (1/ℓ!) [1 + z/(ℓ+1) (1 + z/(ℓ+2) (1 + ...))]
    let mut acc = Cdd::ONE;
    for k in (1..terms).rev() {
        acc = Cdd::ONE + (z * acc).div_f64(ell as f64 + k as f64);
    }
    acc.scale(inv_factorial(ell))
}

fn closed_form_dd(ell: u32, z: ComplexScalar) -> Cdd {
    let zz = Cdd::from_c64(z);
    if ell == 0 {
        return zz.exp();
    }
    let w = recip_scaled(z);
    // e^z z^-ℓ - Σ_{j<ℓ} z^{j-ℓ}/j!, with the sum in Horner form in w = 1/z
    let mut acc = Cdd::ONE;
    let mut inv_fact = Dd::ONE;
    for j in 1..ell {
        inv_fact = inv_fact.div_f64(j as f64);
        acc = acc * w + Cdd::from_dd(inv_fact);
    }
    let poly = acc * w;
    let lead = if z.re > 700.0 {
        // e^z overflows on its own; combine in log form where nothing cancels
        Cdd::from_c64((z - ell as f64 * z.ln()).exp())
    } else {
        let mut t = zz.exp();
        for _ in 0..ell {
            t = t * w;
        }
        t
    };
    lead - poly
}

/// 1/z with power-of-two prescaling so |z|² never overflows.
fn recip_scaled(z: ComplexScalar) -> Cdd {
    let m = z.re.abs().max(z.im.abs());
    let e = m.log2().floor() as i32;
    let f = 2f64.powi(-e);
    let w = Cdd::from_c64(z * f).recip();
    Cdd {
        re: w.re.mul_f64(f),
        im: w.im.mul_f64(f),
    }
}

pub(crate) fn phi_dd(ell: u32, z: ComplexScalar) -> Result<Cdd> {
    check_args(ell, z)?;
    let r = z.norm();
    if r <= taylor_radius(ell) {
        Ok(taylor_dd(ell, Cdd::from_c64(z), taylor_terms(ell, r)))
    } else {
        Ok(closed_form_dd(ell, z))
    }
}

/// φ_ℓ(z), accurate to a few units of roundoff in the left half-plane and
/// on the imaginary axis.
pub fn phi_scalar(ell: u32, z: ComplexScalar) -> Result<ComplexScalar> {
    Ok(phi_dd(ell, z)?.to_c64())
}

/// The Taylor branch alone with an explicit number of terms.
pub fn phi_taylor(ell: u32, z: ComplexScalar, terms: usize) -> Result<ComplexScalar> {
    check_args(ell, z)?;
    if terms == 0 {
        return Err(Error::invalid("at least one Taylor term is required"));
    }
    Ok(taylor_dd(ell, Cdd::from_c64(z), terms).to_c64())
}

/// The closed-form branch `(e^z - Σ_{j<ℓ} z^j/j!) / z^ℓ` alone.
pub fn phi_closed_form(ell: u32, z: ComplexScalar) -> Result<ComplexScalar> {
    check_args(ell, z)?;
    if ell > 0 && z == Complex64::new(0.0, 0.0) {
        return Err(Error::invalid("closed form is undefined at z = 0"));
    }
    Ok(closed_form_dd(ell, z).to_c64())
}

fn pole_guard(ell: u32, z: ComplexScalar, phi: Cdd) -> Result<()> {
    if phi.to_c64().norm() < f64::MIN_POSITIVE {
        return Err(Error::Pole(format!("φ_{ell}({z}) vanishes to working precision")));
    }
    Ok(())
}

/// ψ_ℓ(z) = 1/φ_ℓ(z).
pub fn psi_scalar(ell: u32, z: ComplexScalar) -> Result<ComplexScalar> {
    let phi = phi_dd(ell, z)?;
    pole_guard(ell, z, phi)?;
    Ok(phi.recip().to_c64())
}

/// |1 - φ_ℓ(2z)/φ_ℓ(z)|, the contraction factor of one Newton-Schulz
/// squaring step at an eigenvalue z.
pub fn conv_ratio(ell: u32, z: ComplexScalar) -> Result<f64> {
    if ell == 0 {
        return Err(Error::invalid("conv_ratio needs ell >= 1"));
    }
    let z2 = z * 2.0;
    let num = phi_dd(ell, z2)?;
    let den = phi_dd(ell, z)?;
    pole_guard(ell, z, den)?;
    let c = (Cdd::ONE - num / den).to_c64();
    Ok(c.norm())
}

/// `|C_ℓ(it)| - 2 |C_ℓ(-t)|` for t ≥ 0.
pub fn h_ell(ell: u32, t: f64) -> Result<f64> {
    if ell < 2 {
        return Err(Error::invalid("h_ell needs ell >= 2"));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("t = {t} must be finite and non-negative")));
    }
    Ok(conv_ratio(ell, Complex64::new(0.0, t))? - 2.0 * conv_ratio(ell, Complex64::new(-t, 0.0))?)
}

/// Bernoulli numbers divided by the factorial of their index, `b_m = B_m/m!`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledBernoulli {
    coefficients: Vec<f64>,
}

impl ScaledBernoulli {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn get(&self, m: usize) -> Option<f64> {
        self.coefficients.get(m).copied()
    }

    pub fn max_index(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Partial sum `Σ_m b_m z^m`, the Taylor series of ψ₁ (valid for |z| < 2π).
    pub fn eval(&self, z: ComplexScalar) -> ComplexScalar {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &b| acc * z + b)
    }
}

/// `b_0..b_{m_max}` from `Σ_{j=0}^{m} b_j/(m-j+1)! = 0` (m ≥ 1), the
/// coefficient form of ψ₁(z)·φ₁(z) = 1.
pub fn bernoulli_scaled(m_max: usize) -> Result<ScaledBernoulli> {
    if m_max > MAX_BERNOULLI {
        return Err(Error::invalid(format!("m_max = {m_max} exceeds cap {MAX_BERNOULLI}")));
    }
    // 1/k! for k = 0..=m_max+1; underflows harmlessly to zero past 178
    let mut inv_fact = vec![1.0f64; m_max + 2];
    for k in 1..inv_fact.len() {
        inv_fact[k] = inv_fact[k - 1] / k as f64;
    }
    // The odd terms are carried through the recurrence and only zeroed at
    // the end: dropping them early leaves a recurrence on the even terms
    // whose error grows like π^-m against the (2π)^-m decay of b_m.
    let mut b = Vec::with_capacity(m_max + 1);
    b.push(1.0);
    for m in 1..=m_max {
        let s: f64 = (0..m).map(|j| b[j] * inv_fact[m - j + 1]).sum();
        b.push(-s);
    }
    for v in b.iter_mut().skip(3).step_by(2) {
        *v = 0.0;
    }
    Ok(ScaledBernoulli { coefficients: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Plain Taylor partial sum with Neumaier compensation, independent of
    /// the double-double code path.
    fn taylor_oracle(ell: u32, z: f64, terms: usize) -> f64 {
        let mut inv = 1.0;
        for k in 2..=ell {
            inv /= k as f64;
        }
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut term = inv;
        for k in 0..terms {
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            term *= z / (ell as f64 + k as f64 + 1.0);
        }
        sum + comp
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_scalar(2, c(0.0, 0.0)).unwrap(), c(0.5, 0.0));
        let v = phi_scalar(1, c(1.0, 0.0)).unwrap();
        assert!((v.re - (E - 1.0)).abs() < 4e-16 && v.im == 0.0);
        let want = taylor_oracle(3, -0.37, 60);
        let got = phi_scalar(3, c(-0.37, 0.0)).unwrap();
        assert!((got.re - want).abs() <= 2.0 * f64::EPSILON * want.abs());
    }

    #[test]
    fn phi_cap_is_enforced() {
        assert!(matches!(phi_scalar(65, c(0.1, 0.0)), Err(Error::InvalidArgument(_))));
        assert!(phi_scalar(1, c(f64::NAN, 0.0)).is_err());
        assert!(phi_scalar(64, c(-3.0, 40.0)).is_ok());
    }

    #[test]
    fn phi_zero_is_exp() {
        for &z in &[c(-3.0, 0.0), c(0.2, 0.1), c(-50.0, 7.0)] {
            assert!(rel(phi_scalar(0, z).unwrap(), z.exp()) < 4e-16);
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_scalar(1, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let v = psi_scalar(1, c(-1.0, 0.0)).unwrap();
        assert!((v.re - 1.581_976_706_869_327).abs() < 1e-15);
        assert_eq!(psi_scalar(2, c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
        // ψ₂(z) = z²/(e^z - 1 - z)
        let z = -2.5f64;
        let want = z * z / (z.exp() - 1.0 - z);
        assert!((psi_scalar(2, c(z, 0.0)).unwrap().re - want).abs() < 1e-14 * want);
    }

    #[test]
    fn psi_pole_is_reported() {
        // e^z underflows completely, so φ_0 vanishes
        assert!(matches!(psi_scalar(0, c(-800.0, 0.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn bernoulli_examples() {
        let b = bernoulli_scaled(5).unwrap();
        assert_eq!(b.get(0), Some(1.0));
        assert_eq!(b.get(1), Some(-0.5));
        assert!((b.get(2).unwrap() - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(b.get(3), Some(0.0));
        assert_eq!(b.get(5), Some(0.0));
        // B_4 = -1/30
        assert!((b.get(4).unwrap() * 720.0 + 1.0).abs() < 1e-14);
        assert!(bernoulli_scaled(257).is_err());
        assert_eq!(bernoulli_scaled(256).unwrap().max_index(), 256);
    }

    #[test]
    fn bernoulli_matches_exact_rationals() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::{One, ToPrimitive, Zero};
        let m_max = 120;
        let mut inv_fact = vec![BigRational::one()];
        for k in 1..=m_max + 1 {
            let prev = inv_fact[k - 1].clone();
            inv_fact.push(prev / BigRational::from_integer(BigInt::from(k)));
        }
        let mut exact = vec![BigRational::one()];
        for m in 1..=m_max {
            let s = (0..m).fold(BigRational::zero(), |acc, j| acc + &exact[j] * &inv_fact[m - j + 1]);
            exact.push(-s);
        }
        let b = bernoulli_scaled(m_max).unwrap();
        for m in (2..=m_max).step_by(2) {
            let e = exact[m].to_f64().unwrap();
            assert!(((b.coefficients()[m] - e) / e).abs() < 1e-13, "m = {m}");
        }
        for m in (3..=m_max).step_by(2) {
            assert!(exact[m].is_zero());
        }
    }

    #[test]
    fn bernoulli_decay_bound() {
        // |b_m| = 2 ζ(m) (2π)^-m for even m; ζ(m) ≤ 1.1 once m ≥ 4
        let b = bernoulli_scaled(MAX_BERNOULLI).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        for m in 4..=MAX_BERNOULLI {
            let bound = 2.0 * two_pi.powi(-(m as i32)) * 1.1;
            assert!(b.coefficients()[m].abs() <= bound, "m = {m}");
        }
        assert!(b.coefficients()[2].abs() <= 2.0 * two_pi.powi(-2) * 1.645);
    }

    #[test]
    fn bernoulli_series_is_psi1() {
        let b = bernoulli_scaled(40).unwrap();
        for &z in &[c(0.3, 0.0), c(-2.0, 0.0), c(1.0, 1.0), c(0.0, 2.0), c(-1.4, -1.4)] {
            let diff = (b.eval(z) - psi_scalar(1, z).unwrap()).norm();
            assert!(diff < 1e-12, "z = {z}: {diff}");
        }
    }

    #[test]
    fn conv_ratio_examples() {
        assert_eq!(conv_ratio(1, c(0.0, 0.0)).unwrap(), 0.0);
        let v = conv_ratio(1, c(0.0, std::f64::consts::PI)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = conv_ratio(1, c(-30.0, 0.0)).unwrap();
        assert!(v > 0.49 && v < 0.5);
        assert!(conv_ratio(0, c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn conv_ratio_ell1_closed_form() {
        // C₁(z) = |1 - e^z| / 2
        for &z in &[c(-0.1, 0.0), c(-3.0, 2.0), c(-0.5, -9.0), c(2.0, 1.0)] {
            let want = (Complex64::new(1.0, 0.0) - z.exp()).norm() / 2.0;
            assert!((conv_ratio(1, z).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn h_ell_examples() {
        assert_eq!(h_ell(2, 0.0).unwrap(), 0.0);
        assert!(h_ell(2, 5.0).unwrap() < 0.0);
        assert!(h_ell(16, 50.0).unwrap() < 0.0);
        assert!(h_ell(1, 1.0).is_err());
        assert!(h_ell(2, -1.0).is_err());
    }

    #[test]
    fn large_index_matches_series_near_switch() {
        // on both sides of |z| = ℓ the two branches agree
        for &z in &[c(-16.5, 0.0), c(0.0, 15.5), c(-11.0, 11.0)] {
            let a = phi_taylor(16, z, 400).unwrap();
            let b = phi_closed_form(16, z).unwrap();
            assert!(rel(a, b) < 1e-14, "z = {z}");
        }
    }
}
