//! ℓ²_φ and Fock inner products, radial weight kernels checked through their
//! Mellin moments, reproducing kernels and the M_z / D_φ duality.
//!
//! Weights are handled in the radial variable x = |z|²: the planar measure
//! (1/π) K̃(|z|²) dx dy becomes K̃(x) dx dθ/(2π), so ⟪zⁿ, zⁿ⟫ = ∫₀^∞ xⁿ K̃(x) dx.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl_core::{self, Family, PhiDescriptor, TruncatedSeries};
use crate::quad::{self, AdaptiveOptions};

/// Radial weight x ↦ K̃(x), x = |z|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "params")]
pub enum WeightForm {
    /// e^{-x}
    ExpWeight,
    /// ρ x^{ρμ-1} e^{-x^ρ}, the density whose moments are Γ(μ + n/ρ).
    MLWeight { rho: f64, mu: f64 },
    /// e^{-a x^b}
    StretchedExp { a: f64, b: f64 },
    /// 2 e^{-|z|²} lnⁿ|z| = 2 e^{-x} (ln x / 2)ⁿ
    LogWeight { n: u32 },
}

impl WeightForm {
    /// The form registered for a family, if there is one.
    pub fn registered_for(desc: &PhiDescriptor) -> Option<Self> {
        match desc.family() {
            Family::Exponential => Some(WeightForm::ExpWeight),
            Family::MittagLeffler { rho, mu } => Some(WeightForm::MLWeight { rho, mu }),
            Family::StretchedGamma { a, b } => Some(WeightForm::StretchedExp { a, b }),
            Family::GammaDeriv { n } => Some(WeightForm::LogWeight { n }),
            Family::DunklRankOne { .. } | Family::BackwardShift => None,
        }
    }

    /// K̃(x) for x ≥ 0.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            WeightForm::ExpWeight => (-x).exp(),
            WeightForm::MLWeight { rho, mu } => {
                if x == 0.0 {
                    return if rho * mu > 1.0 { 0.0 } else if rho * mu == 1.0 { rho } else { f64::INFINITY };
                }
                rho * ((rho * mu - 1.0) * x.ln() - x.powf(rho)).exp()
            }
            WeightForm::StretchedExp { a, b } => (-a * x.powf(b)).exp(),
            WeightForm::LogWeight { n } => 2.0 * (-x).exp() * (0.5 * x.ln()).powi(n as i32),
        }
    }

    /// True when K̃ changes sign on (0, ∞).
    pub fn is_signed(&self) -> bool {
        matches!(self, WeightForm::LogWeight { n } if n % 2 == 1)
    }

    pub fn positivity_domain(&self) -> &'static str {
        match self {
            WeightForm::LogWeight { n } if n % 2 == 1 => "x >= 1 only (negative on 0 < x < 1)",
            WeightForm::LogWeight { .. } => "x > 0, vanishing at x = 1",
            _ => "x >= 0",
        }
    }

    /// A natural length scale of the weight, used to place break points.
    fn scale(&self) -> f64 {
        match *self {
            WeightForm::ExpWeight | WeightForm::LogWeight { .. } => 1.0,
            WeightForm::MLWeight { rho, .. } => 1.0f64.max(1.0 / rho),
            WeightForm::StretchedExp { a, b } => a.powf(-1.0 / b),
        }
    }
}

/// A descriptor paired with a weight form. Use [`WeightKernel::verify`] to
/// obtain the [`VerifiedWeight`] token required by every Fock-side integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightKernel {
    pub desc: PhiDescriptor,
    pub form: WeightForm,
}

/// Radial rule for ∫₀^∞ g(x) dx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RadialRule {
    /// Gauss–Laguerre nodes with e^{x} folded into the weights.
    GaussLaguerre { nodes: usize },
    /// Adaptive Gauss–Kronrod on `nodes` equal pieces of [0, cut·scale],
    /// then a mapped tail.
    AdaptiveTail { cut: f64, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub radial: RadialRule,
    pub angular_nodes: usize,
    /// Relative tolerance of the adaptive radial rule.
    pub tol: f64,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self { radial: RadialRule::AdaptiveTail { cut: 64.0, nodes: 32 }, angular_nodes: 64, tol: 1e-12 }
    }
}

impl QuadratureScheme {
    /// Angular trapezoid sums are exact for f̄g when there are at least
    /// 2·deg + 2 nodes.
    pub fn check_angular(&self, degree: usize) -> Result<()> {
        let required = 2 * degree + 2;
        if self.angular_nodes < required {
            return Err(Error::InsufficientAngularNodes { required, got: self.angular_nodes });
        }
        Ok(())
    }

    /// Largest polynomial degree the angular rule handles exactly.
    pub fn max_degree(&self) -> usize {
        self.angular_nodes.saturating_sub(2) / 2
    }

    /// `magnitude` sets an absolute error floor `tol·magnitude`, needed when
    /// the integral cancels to zero (0 means purely relative).
    fn radial_integral<T: quad::Integrand>(
        &self,
        scale: f64,
        magnitude: f64,
        mut g: impl FnMut(f64) -> T,
    ) -> Result<T> {
        match self.radial {
            RadialRule::GaussLaguerre { nodes } => {
                let (x, w) = quad::gauss_laguerre(nodes);
                Ok(x.iter().zip(&w).fold(T::zero(), |acc, (&xi, &wi)| acc + g(xi) * wi))
            }
            RadialRule::AdaptiveTail { cut, nodes } => {
                if !(cut > 0.0) || nodes == 0 {
                    return Err(Error::Invalid("AdaptiveTail needs cut > 0 and nodes > 0".into()));
                }
                let end = cut * scale;
                // Geometric pieces near 0 resolve log and power singularities.
                let mut breaks = vec![0.0];
                let mut x = end / nodes as f64;
                let mut small = Vec::new();
                for _ in 0..8 {
                    x /= 4.0;
                    small.push(x);
                }
                small.reverse();
                breaks.extend(small);
                for i in 1..=nodes {
                    breaks.push(end * i as f64 / nodes as f64);
                }
                let abs_tol = (self.tol * magnitude).max(1e-300);
                let opts = AdaptiveOptions { abs_tol, rel_tol: self.tol, max_segments: 20_000 };
                Ok(quad::integrate_to_infinity(g, &breaks, opts)?.value)
            }
        }
    }
}

/// ∫₀^∞ xⁿ K̃(x) dx.
pub fn moment(wk: &WeightKernel, n: usize, quad: &QuadratureScheme) -> Result<f64> {
    moment_tracking(wk, n, quad, &Cell::new(f64::INFINITY))
}

fn moment_tracking(wk: &WeightKernel, n: usize, quad: &QuadratureScheme, min_weight: &Cell<f64>) -> Result<f64> {
    let form = wk.form;
    quad.radial_integral(form.scale(), 0.0, |x| {
        let w = form.eval(x);
        if w < min_weight.get() {
            min_weight.set(w);
        }
        if w == 0.0 {
            0.0
        } else {
            x.powi(n as i32) * w
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub moment: f64,
    pub target: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    pub tol: f64,
    pub failing: Vec<usize>,
    /// Set when the weight took a negative value on a quadrature node.
    pub signed_measure_warning: bool,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Checks |moment(n)·φ_n − 1| ≤ tol for n = 0..=n_max.
pub fn moment_check(
    desc: &PhiDescriptor,
    wk: &WeightKernel,
    n_max: usize,
    tol: f64,
    quad: &QuadratureScheme,
) -> Result<MomentReport> {
    if !desc.is_entire() {
        return Err(Error::NonEntire("moment identities need an entire phi".into()));
    }
    let min_weight = Cell::new(f64::INFINITY);
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut failing = Vec::new();
    for n in 0..=n_max {
        let m = moment_tracking(wk, n, quad, &min_weight)?;
        let phi = desc.coeff(n)?;
        let residual = (m * phi - 1.0).abs();
        if !(residual <= tol) {
            failing.push(n);
        }
        rows.push(MomentRow { n, moment: m, target: 1.0 / phi, residual });
    }
    Ok(MomentReport { rows, tol, failing, signed_measure_warning: min_weight.get() < 0.0 })
}

/// A weight kernel whose moments matched 1/φ_n. Only obtainable through
/// [`WeightKernel::verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedWeight {
    wk: WeightKernel,
    report: MomentReport,
}

impl WeightKernel {
    pub fn new(desc: PhiDescriptor, form: WeightForm) -> Self {
        Self { desc, form }
    }

    /// The registered pairing for the descriptor's family.
    pub fn registered(desc: &PhiDescriptor) -> Result<Self> {
        if !desc.is_entire() {
            return Err(Error::NonEntire(format!("{} is not entire and has no weight kernel", desc.family().name())));
        }
        let form = WeightForm::registered_for(desc)
            .ok_or_else(|| Error::Invalid(format!("no weight kernel is registered for {}", desc.family().name())))?;
        Ok(Self::new(desc.clone(), form))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.form.eval(x)
    }

    /// Runs [`moment_check`] and returns the verified token, or the list of
    /// failing n.
    pub fn verify(&self, n_max: usize, tol: f64, quad: &QuadratureScheme) -> Result<VerifiedWeight> {
        let report = moment_check(&self.desc, self, n_max, tol, quad)?;
        if !report.passed() {
            return Err(Error::WeightMismatch { failing: report.failing });
        }
        Ok(VerifiedWeight { wk: self.clone(), report })
    }
}

impl VerifiedWeight {
    pub fn kernel(&self) -> &WeightKernel {
        &self.wk
    }

    pub fn desc(&self) -> &PhiDescriptor {
        &self.wk.desc
    }

    pub fn report(&self) -> &MomentReport {
        &self.report
    }

    /// K̃(|z|²).
    pub fn weight_at(&self, z: Complex64) -> f64 {
        self.wk.form.eval(z.norm_sqr())
    }

    /// Rejects signed measures for norm-based operations.
    pub fn require_positive(&self) -> Result<()> {
        if self.wk.form.is_signed() || self.report.signed_measure_warning {
            return Err(Error::SignedMeasure(format!(
                "{:?} is negative on part of its domain ({})",
                self.wk.form,
                self.wk.form.positivity_domain()
            )));
        }
        Ok(())
    }
}

/// Σ_{n=1}^{N} |φ_n|^{-1/(2n)}.
pub fn carleman_partial(desc: &PhiDescriptor, n: usize) -> Result<f64> {
    let mut s = 0.0;
    for k in 1..=n {
        let (l, _) = desc.ln_coeff(k)?;
        s += (-l / (2.0 * k as f64)).exp();
    }
    Ok(s)
}

/// ⟨f, g⟩ = Σ f̄_k g_k / φ_k, conjugate-linear in f.
pub fn inner_product_l2phi(desc: &PhiDescriptor, f: &TruncatedSeries, g: &TruncatedSeries) -> Result<Complex64> {
    let n = f.degree_cap().min(g.degree_cap());
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let (a, b) = (f.coeff(k), g.coeff(k));
        if a == Complex64::new(0.0, 0.0) || b == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (l, sign) = desc.ln_coeff(k)?;
        s += a.conj() * b * (sign * (-l).exp());
    }
    Ok(s)
}

/// (1/π) ∫ f̄ g K̃(|z|²) dx dy by an angular trapezoid rule and the radial scheme.
pub fn inner_product_fock(
    vw: &VerifiedWeight,
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    quad: &QuadratureScheme,
) -> Result<Complex64> {
    let deg = f.degree_cap().max(g.degree_cap());
    quad.check_angular(deg)?;
    let m = quad.angular_nodes;
    let units: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
    let form = vw.wk.form;
    let magnitude = (l2phi_abs_norm_sq(vw.desc(), f)? * l2phi_abs_norm_sq(vw.desc(), g)?).sqrt();
    quad.radial_integral(form.scale(), magnitude, |x| {
        let w = form.eval(x);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let r = x.sqrt();
        let avg = units.iter().map(|u| f.eval(u * r).conj() * g.eval(u * r)).sum::<Complex64>() / m as f64;
        avg * w
    })
}

/// Σ |f_k|² / |φ_k|, a magnitude reference for quadrature floors.
fn l2phi_abs_norm_sq(desc: &PhiDescriptor, f: &TruncatedSeries) -> Result<f64> {
    let mut s = 0.0;
    for (k, a) in f.coeffs().iter().enumerate() {
        if a.norm() > 0.0 {
            s += a.norm_sqr() * (-desc.ln_coeff(k)?.0).exp();
        }
    }
    Ok(s)
}

/// e_n coefficient √φ_n.
pub fn orthonormal_basis_coeff(desc: &PhiDescriptor, n: usize) -> Result<f64> {
    let (l, s) = desc.ln_coeff(n)?;
    if s < 0.0 {
        return Err(Error::Domain(format!("phi_{n} < 0 has no real square root")));
    }
    Ok((0.5 * l).exp())
}

/// k_φ(z, w) = φ(z̄w), truncated at degree N.
pub fn discrete_kernel(desc: &PhiDescriptor, z: Complex64, w: Complex64, n: usize) -> Result<Complex64> {
    Ok(gl_core::phi_eval(desc, z.conj() * w, n)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub r: f64,
    /// φ(r²)
    pub phi_r2: f64,
    /// e^{σ r^{2ρ}} when growth is asserted.
    pub growth_bound: Option<f64>,
    /// max over the grid of ‖k_φ(z,·)‖² = Σ φ_n |z|^{2n}
    pub max_norm_sq: f64,
    pub kernel_ok: bool,
    pub growth_ok: Option<bool>,
    /// First grid point violating the kernel inequality.
    pub violation: Option<(f64, f64)>,
}

/// Checks ‖k_φ(z,·)‖² ≤ φ(r²) on a polar grid of |z| ≤ r, then
/// φ(r²) ≤ e^{σ r^{2ρ}} when (ρ, σ) are asserted.
pub fn kernel_norm_bound_check(desc: &PhiDescriptor, r: f64, n: usize, tol: f64) -> Result<KernelBoundReport> {
    if !desc.is_entire() {
        return Err(Error::NonEntire("kernel norm bound needs an entire phi".into()));
    }
    if r < 0.0 {
        return Err(Error::Domain(format!("radius must be non-negative, got {r}")));
    }
    let phi_r2 = gl_core::phi_eval(desc, Complex64::new(r * r, 0.0), n)?.value.re;
    let (radii, angles) = (16, 16);
    let mut max_norm_sq = f64::NEG_INFINITY;
    let mut violation = None;
    for i in 0..=radii {
        for j in 0..angles {
            let z = Complex64::from_polar(r * i as f64 / radii as f64, 2.0 * PI * j as f64 / angles as f64);
            // ‖k_φ(z,·)‖² = ⟨k, k⟩ = Σ φ_n² |z|^{2n} / φ_n
            let v = gl_core::phi_eval(desc, Complex64::new(z.norm_sqr(), 0.0), n)?.value.re;
            max_norm_sq = max_norm_sq.max(v);
            if violation.is_none() && v > phi_r2 * (1.0 + tol) {
                violation = Some((z.re, z.im));
            }
        }
    }
    let growth_bound = desc.growth().map(|g| (g.sigma * r.powf(2.0 * g.rho)).exp());
    let growth_ok = growth_bound.map(|b| phi_r2 <= b * (1.0 + tol));
    Ok(KernelBoundReport {
        r,
        phi_r2,
        growth_bound,
        max_norm_sq,
        kernel_ok: violation.is_none(),
        growth_ok,
        violation,
    })
}

/// (1/π) ∫ conj(k_φ(z,w)) f(w) K̃(|w|²) dA(w).
///
/// The kernel is truncated at the largest degree the angular rule resolves
/// exactly, which must be at least deg f.
pub fn reproduce(vw: &VerifiedWeight, f: &TruncatedSeries, z: Complex64, quad: &QuadratureScheme) -> Result<Complex64> {
    let nk = quad.max_degree();
    if nk < f.degree_cap() {
        return Err(Error::InsufficientAngularNodes { required: 2 * f.degree_cap() + 2, got: quad.angular_nodes });
    }
    let desc = vw.desc();
    // conj(φ(z̄w)) = Σ φ_k z^k w̄^k for real φ_k
    let kernel: Vec<Complex64> = (0..=nk)
        .map(|k| Ok(z.powu(k as u32) * desc.coeff(k)?))
        .collect::<Result<_>>()?;
    let m = quad.angular_nodes;
    let units: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
    let form = vw.wk.form;
    let magnitude = f.coeffs().iter().enumerate().map(|(j, a)| a.norm() * z.norm().powi(j as i32)).sum::<f64>();
    quad.radial_integral(form.scale(), magnitude, |x| {
        let w8 = form.eval(x);
        if w8 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let r = x.sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for u in &units {
            let w = u * r;
            let wb = w.conj();
            let k = kernel.iter().rev().fold(Complex64::new(0.0, 0.0), |a, &c| a * wb + c);
            acc += k * f.eval(w);
        }
        acc / m as f64 * w8
    })
}

/// |⟨M_z f, g⟩ − ⟨f, D_φ g⟩| in ℓ²_φ.
pub fn duality_check(desc: &PhiDescriptor, f: &TruncatedSeries, g: &TruncatedSeries) -> Result<f64> {
    let lhs = inner_product_l2phi(desc, &gl_core::multiply_z(f), g)?;
    let rhs = inner_product_l2phi(desc, f, &gl_core::gl_derivative(desc, g)?)?;
    Ok((lhs - rhs).norm())
}
