//! Modified Bargmann transform between Hermite coefficients and the Fock
//! space of φ, with the ladder operators it intertwines.
//!
//! Square roots of φ_n are principal complex roots, so the maps stay
//! consistent for the Γ'-family whose φ₀ is negative. For positive families
//! all roots are real.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl_core::{self, PhiDescriptor, TruncatedSeries};
use crate::quad;

/// Coefficients f_n = ⟨h_n, f⟩ against the orthonormal Hermite functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteCoeffs {
    pub coeffs: Vec<Complex64>,
}

impl HermiteCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// δ_n of length n + 1.
    pub fn delta(n: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨f, g⟩ = Σ f̄_n g_n.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    /// Evaluates Σ f_n h_n(x).
    pub fn eval(&self, x: f64) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let h = quad::hermite_functions_upto(self.coeffs.len() - 1, x);
        self.coeffs.iter().zip(&h).map(|(c, hn)| c * hn).sum()
    }
}

fn require_entire(desc: &PhiDescriptor) -> Result<()> {
    if !desc.is_entire() {
        return Err(Error::NonEntire("the Bargmann transform needs an entire phi".into()));
    }
    Ok(())
}

/// Principal square root of φ_n.
fn sqrt_phi(desc: &PhiDescriptor, n: usize) -> Result<Complex64> {
    let (l, s) = desc.ln_coeff(n)?;
    let m = (0.5 * l).exp();
    if !m.is_normal() {
        return Err(Error::Overflow(format!("sqrt(phi_{n}) = exp({}) is outside the f64 range", 0.5 * l)));
    }
    Ok(if s < 0.0 { Complex64::new(0.0, m) } else { Complex64::new(m, 0.0) })
}

/// √φ_{n-1} / √φ_n for n ≥ 1, formed in log space.
pub fn ladder_ratio(desc: &PhiDescriptor, n: usize) -> Result<Complex64> {
    let (a, sa) = desc.ln_coeff(n - 1)?;
    let (b, sb) = desc.ln_coeff(n)?;
    let m = (0.5 * (a - b)).exp();
    let i = Complex64::new(0.0, 1.0);
    let mut r = Complex64::new(m, 0.0);
    if sa < 0.0 {
        r *= i;
    }
    if sb < 0.0 {
        r /= i;
    }
    Ok(r)
}

/// B̃f = Σ f_n √φ_n zⁿ.
pub fn bargmann_forward(desc: &PhiDescriptor, f: &HermiteCoeffs) -> Result<TruncatedSeries> {
    require_entire(desc)?;
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| Ok(c * sqrt_phi(desc, n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncatedSeries::new(coeffs))
}

/// f_n = F_n / √φ_n.
pub fn bargmann_inverse(desc: &PhiDescriptor, big_f: &TruncatedSeries) -> Result<HermiteCoeffs> {
    require_entire(desc)?;
    let coeffs = big_f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| Ok(c / sqrt_phi(desc, n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(HermiteCoeffs::new(coeffs))
}

/// Gauss–Hermite settings for [`bargmann_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteQuadrature {
    pub nodes: usize,
    /// Maximum change of any coefficient between `nodes` and `3·nodes/2`.
    pub tol: f64,
}

impl Default for HermiteQuadrature {
    fn default() -> Self {
        Self { nodes: 120, tol: 1e-9 }
    }
}

fn hermite_projection(f: &dyn Fn(f64) -> f64, n: usize, nodes: usize) -> Vec<f64> {
    let (x, w) = quad::gauss_hermite(nodes);
    let mut out = vec![0.0; n + 1];
    for (xi, wi) in x.iter().zip(&w) {
        let fx = f(*xi);
        if fx == 0.0 {
            continue;
        }
        let h = quad::hermite_functions_upto(n, *xi);
        for k in 0..=n {
            out[k] += wi * h[k] * fx;
        }
    }
    out
}

/// Projects a sampled function onto h₀ … h_N, then applies [`bargmann_forward`].
pub fn bargmann_sample(
    desc: &PhiDescriptor,
    f: &dyn Fn(f64) -> f64,
    n: usize,
    q: &HermiteQuadrature,
) -> Result<TruncatedSeries> {
    require_entire(desc)?;
    if n > 200 {
        return Err(Error::DegreeCap(format!("Hermite functions are evaluated up to n = 200, got {n}")));
    }
    let coarse = hermite_projection(f, n, q.nodes);
    let fine = hermite_projection(f, n, q.nodes + q.nodes / 2);
    let drift = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if drift > q.tol {
        return Err(Error::NonConvergence(format!(
            "Hermite coefficients moved by {drift:e} between {} and {} nodes",
            q.nodes,
            q.nodes + q.nodes / 2
        )));
    }
    let coeffs = fine.into_iter().map(|c| Complex64::new(c, 0.0)).collect();
    bargmann_forward(desc, &HermiteCoeffs::new(coeffs))
}

/// Raising operator: (a* f)_n = √(φ_{n-1}/φ_n) f_{n-1}; the length grows by one.
pub fn raise(desc: &PhiDescriptor, f: &HermiteCoeffs) -> Result<HermiteCoeffs> {
    require_entire(desc)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); f.len() + 1];
    for (k, c) in f.coeffs.iter().enumerate() {
        coeffs[k + 1] = c * ladder_ratio(desc, k + 1)?;
    }
    Ok(HermiteCoeffs::new(coeffs))
}

/// Lowering operator: (a f)_{n-1} = √(φ_{n-1}/φ_n) f_n; f₀ is annihilated.
pub fn lower(desc: &PhiDescriptor, f: &HermiteCoeffs) -> Result<HermiteCoeffs> {
    require_entire(desc)?;
    let coeffs = (1..f.len())
        .map(|n| Ok(f.coeffs[n] * ladder_ratio(desc, n)?))
        .collect::<Result<Vec<_>>>()?;
    if coeffs.is_empty() {
        return Ok(HermiteCoeffs::new(vec![Complex64::new(0.0, 0.0)]));
    }
    Ok(HermiteCoeffs::new(coeffs))
}

/// Coefficient-wise max of |B̃(a f) − D_φ B̃f| and |B̃(a* f) − z B̃f|.
pub fn intertwine_residuals(desc: &PhiDescriptor, f: &HermiteCoeffs) -> Result<(f64, f64)> {
    let bf = bargmann_forward(desc, f)?;
    let lhs = bargmann_forward(desc, &lower(desc, f)?)?;
    let rhs = gl_core::gl_derivative(desc, &bf)?;
    let r_lower = (&lhs - &rhs).max_abs();
    let lhs = bargmann_forward(desc, &raise(desc, f)?)?;
    let rhs = gl_core::multiply_z(&bf);
    let r_raise = (&lhs - &rhs).max_abs();
    Ok((r_lower, r_raise))
}

/// The diagonal entry of [a, a*] at δ_n: φ_n/φ_{n+1} − φ_{n-1}/φ_n
/// (the second term absent for n = 0).
pub fn commutator_diag(desc: &PhiDescriptor, n: usize) -> Result<f64> {
    let up = desc.ratio(n + 1)?;
    let down = if n == 0 { 0.0 } else { desc.ratio(n)? };
    Ok(up - down)
}
