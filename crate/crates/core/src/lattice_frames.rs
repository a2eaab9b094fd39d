//! Beurling densities, translations, Gabor-type transforms and empirical
//! frame bounds on truncated Fock spaces.
//!
//! Time-frequency points (x, y) of size-s lattices map to Fock points
//! w = √π(x + iy), so the square lattice of size s = 1 becomes λ = √π in the
//! Fock plane.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bargmann::HermiteCoeffs;
use crate::error::{Error, Result};
use crate::fock_space::{VerifiedWeight, WeightKernel};
use crate::gl_core::{self, Family, PhiDescriptor, TruncatedSeries};
use crate::weierstrass::{LatticeSpec, PerturbedLattice};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A finite point set known to contain every point of the underlying
/// (infinite) set inside the square [−extent, extent]².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Complex64>,
    pub extent: f64,
    /// Shift range of the translates scanned per axis.
    pub period: f64,
}

impl PointSet {
    pub fn from_lattice(lat: LatticeSpec) -> Self {
        let points = lat.indices().into_iter().map(|(m, n)| lat.point(m, n)).collect();
        Self { points, extent: lat.lambda * lat.trunc_m as f64, period: lat.lambda }
    }

    pub fn from_perturbed(g: &PerturbedLattice) -> Self {
        let lat = g.lattice;
        Self {
            points: g.points.values().copied().collect(),
            extent: lat.lambda * lat.trunc_m as f64 - g.big_q,
            period: lat.lambda,
        }
    }

    pub fn empty() -> Self {
        Self { points: Vec::new(), extent: f64::INFINITY, period: 1.0 }
    }

    /// The set cΓ.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * factor).collect(),
            extent: self.extent * factor,
            period: self.period * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityNorm {
    /// n^±(r)/(2πr²)
    #[default]
    TwoPi,
    /// n^±(r)/r²
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub d_plus: f64,
    pub d_minus: f64,
    pub r_sequence: Vec<f64>,
    /// (n⁻(r), n⁺(r)) per radius.
    pub counts: Vec<(usize, usize)>,
}

/// Smallest and largest number of points in translates [a, a + r)² over a
/// shifts × shifts grid of corners; D^± come from the largest radius.
pub fn density(set: &PointSet, radii: &[f64], shifts: usize, norm: DensityNorm) -> Result<DensityReport> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("radii must be positive and increasing".into()));
    }
    let shifts = shifts.max(1);
    let mut counts = Vec::with_capacity(radii.len());
    for &r in radii {
        if !set.points.is_empty() && r / 2.0 + set.period / 2.0 > set.extent {
            return Err(Error::Margin(format!(
                "translates of side {r} reach {} but points are only known up to {}",
                r / 2.0 + set.period / 2.0,
                set.extent
            )));
        }
        let corner = |i: usize| -r / 2.0 + set.period * (i as f64 / shifts as f64 - 0.5);
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        for i in 0..shifts {
            for j in 0..shifts {
                let (ax, ay) = (corner(i), corner(j));
                let n = set
                    .points
                    .iter()
                    .filter(|p| p.re >= ax && p.re < ax + r && p.im >= ay && p.im < ay + r)
                    .count();
                lo = lo.min(n);
                hi = hi.max(n);
            }
        }
        counts.push((lo, hi));
    }
    let r = *radii.last().expect("radii is non-empty");
    let (lo, hi) = *counts.last().expect("one count per radius");
    let denom = match norm {
        DensityNorm::TwoPi => 2.0 * PI * r * r,
        DensityNorm::Lebesgue => r * r,
    };
    Ok(DensityReport { d_plus: hi as f64 / denom, d_minus: lo as f64 / denom, r_sequence: radii.to_vec(), counts })
}

/// (T_a f)(z) = √(K̃(|z − a|²)/K̃(|z|²)) f(z − a).
pub fn translation_apply(wk: &WeightKernel, a: Complex64, f: &dyn Fn(Complex64) -> Complex64, z: Complex64) -> Result<Complex64> {
    let den = wk.eval(z.norm_sqr());
    if !(den > 0.0) {
        return Err(Error::Domain(format!("weight vanishes at |z|^2 = {}", z.norm_sqr())));
    }
    Ok(f(z - a) * (wk.eval((z - a).norm_sqr()) / den).sqrt())
}

/// Extreme eigenvalues of the sampling matrix on span{e₀, …, e_N}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub basis_dim: usize,
    pub n_points: usize,
    /// B/A, infinite when A = 0.
    pub condition: f64,
    /// Largest relative change of A and B from N − 1 to N.
    pub stability: f64,
}

/// Rows v_j with S = Σ_j v̄_j v_jᵀ; A and B are its extreme eigenvalues, also
/// on the leading N × N block for the stability figure.
fn gram_report(rows: &[DVector<Complex64>], n: usize) -> Result<FrameReport> {
    let dim = n + 1;
    let mut s = DMatrix::<Complex64>::zeros(dim, dim);
    for v in rows {
        for i in 0..dim {
            let vi = v[i].conj();
            for j in 0..dim {
                s[(i, j)] += vi * v[j];
            }
        }
    }
    // Enforce exact Hermitian symmetry before the eigen solve.
    let s = (&s + s.adjoint()) * c(0.5);
    let extremes = |m: DMatrix<Complex64>| -> Result<(f64, f64)> {
        if m.nrows() == 0 {
            return Ok((0.0, 0.0));
        }
        let eig = m.try_symmetric_eigen(1e-15, 10_000).ok_or_else(|| Error::Eigen("Hermitian eigen solver did not converge".into()))?;
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo.max(0.0), hi.max(0.0)))
    };
    let (a, b) = extremes(s.clone())?;
    let stability = if n == 0 || rows.is_empty() {
        0.0
    } else {
        let (a0, b0) = extremes(s.view((0, 0), (n, n)).into_owned())?;
        let rel = |new: f64, old: f64| if new == 0.0 { if old == 0.0 { 0.0 } else { f64::INFINITY } } else { (new - old).abs() / new };
        rel(a, a0).max(rel(b, b0))
    };
    let condition = if a > 0.0 { b / a } else { f64::INFINITY };
    Ok(FrameReport { a, b, basis_dim: n, n_points: rows.len(), condition, stability })
}

/// √(w K̃(|z|²)) · √φ_k z^k for k = 0..=N, formed in log space.
fn weighted_basis_row(vw: &VerifiedWeight, z: Complex64, weight: f64, n: usize) -> Result<DVector<Complex64>> {
    let desc = vw.desc();
    let half_ln_w = 0.5 * (weight * vw.weight_at(z)).ln();
    let mut row = DVector::zeros(n + 1);
    for k in 0..=n {
        let (ln_phi, sign) = desc.ln_coeff(k)?;
        if sign < 0.0 {
            return Err(Error::Domain(format!("phi_{k} < 0 has no real square root")));
        }
        if z == c(0.0) {
            row[k] = if k == 0 { c((half_ln_w + 0.5 * ln_phi).exp()) } else { c(0.0) };
            continue;
        }
        let ln = half_ln_w + 0.5 * ln_phi + k as f64 * z.norm().ln();
        row[k] = Complex64::from_polar(ln.exp(), k as f64 * z.arg());
    }
    Ok(row)
}

/// S_{mn} = Σ_j K̃(|z_j|²) ē_m(z_j) e_n(z_j), e_n = √φ_n zⁿ.
pub fn frame_bounds(vw: &VerifiedWeight, points: &[Complex64], n: usize) -> Result<FrameReport> {
    let weights = vec![1.0; points.len()];
    frame_bounds_weighted(vw, points, &weights, n)
}

/// As [`frame_bounds`] with a positive weight per point, for quadrature
/// node sets.
pub fn frame_bounds_weighted(vw: &VerifiedWeight, points: &[Complex64], weights: &[f64], n: usize) -> Result<FrameReport> {
    vw.require_positive()?;
    if weights.len() != points.len() {
        return Err(Error::Invalid("one weight per point is required".into()));
    }
    let rows = points
        .iter()
        .zip(weights)
        .map(|(&z, &w)| {
            if !(w > 0.0) || !(vw.weight_at(z) > 0.0) {
                return Err(Error::NonPositiveWeight { re: z.re, im: z.im });
            }
            weighted_basis_row(vw, z, w, n)
        })
        .collect::<Result<Vec<_>>>()?;
    gram_report(&rows, n)
}

/// Weighted least-squares fit with a minimum-norm regularizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    pub series: TruncatedSeries,
    /// √(Σ_j K̃(|z_j|²)|f(z_j) − a_j|²)
    pub residual: f64,
    /// Singular values above 1e-12 of the largest.
    pub rank: usize,
    pub mu: f64,
}

/// Minimizes Σ_j K̃(|z_j|²)|f(z_j) − a_j|² + μ‖f‖² over deg f ≤ N with
/// μ = 1e-12·trace(VᴴV), solved through the SVD in orthonormal coordinates.
pub fn interpolate_ls(vw: &VerifiedWeight, points: &[Complex64], values: &[Complex64], n: usize) -> Result<InterpolationResult> {
    vw.require_positive()?;
    if points.is_empty() || points.len() != values.len() {
        return Err(Error::Invalid("need at least one point and one value per point".into()));
    }
    let p = points.len();
    let mut v = DMatrix::<Complex64>::zeros(p, n + 1);
    let mut y = DVector::<Complex64>::zeros(p);
    for (j, (&z, &a)) in points.iter().zip(values).enumerate() {
        let k = vw.weight_at(z);
        if !(k > 0.0) {
            return Err(Error::NonPositiveWeight { re: z.re, im: z.im });
        }
        v.set_row(j, &weighted_basis_row(vw, z, 1.0, n)?.transpose());
        y[j] = a * k.sqrt();
    }
    let trace: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let mu = 1e-12 * trace;
    let svd = v.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref().expect("u requested"), svd.v_t.as_ref().expect("v_t requested"));
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * smax).count();
    let mut b = DVector::<Complex64>::zeros(n + 1);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let proj = u.column(i).dotc(&y);
        b += vt.row(i).adjoint() * (proj * (s / (s * s + mu)));
    }
    let desc = vw.desc();
    let coeffs = (0..=n).map(|k| Ok(b[k] * desc.coeff(k)?.sqrt())).collect::<Result<Vec<_>>>()?;
    let residual = (&v * &b - &y).norm();
    Ok(InterpolationResult { series: TruncatedSeries::new(coeffs), residual, rank, mu })
}

/// φ(x) for real x ≥ 0, summed until the terms stop contributing.
fn phi_real(desc: &PhiDescriptor, x: f64) -> Result<f64> {
    if !desc.is_entire() {
        return Err(Error::NonEntire(format!("{} is not entire", desc.family().name())));
    }
    if desc.family() == Family::Exponential {
        return Ok(x.exp());
    }
    let mut term = desc.coeff(0)?;
    let mut sum = term;
    for k in 1..20_000 {
        term *= x / desc.ratio(k)?;
        sum += term;
        if k as f64 > x && term.abs() <= 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence(format!("phi({x}) did not settle")))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// V_{h_n}F(z) = e^{iπxy}/√(πⁿφ_n) · 1/φ(|z|²/2) · Σ_k C(n,k)(−πz̄)^k (D_φ^k F)(z).
pub fn gabor_transform(desc: &PhiDescriptor, n: usize, big_f: &TruncatedSeries, z: Complex64) -> Result<Complex64> {
    let phi_n = desc.coeff(n)?;
    if !(phi_n > 0.0) {
        return Err(Error::Domain(format!("phi_{n} = {phi_n} has no positive square root")));
    }
    let mut sum = c(0.0);
    let mut d = big_f.clone();
    let step = -PI * z.conj();
    let mut pow = c(1.0);
    for k in 0..=n {
        if k > 0 {
            d = gl_core::gl_derivative(desc, &d)?;
            pow *= step;
        }
        sum += d.eval(z) * pow * binomial(n, k);
    }
    let phase = Complex64::from_polar(1.0, PI * z.re * z.im);
    Ok(phase * sum / ((PI.powi(n as i32) * phi_n).sqrt() * phi_real(desc, z.norm_sqr() / 2.0)?))
}

/// Coefficients c₀…c_J of k(z, ·) = Σ c_j (z̄M_w + zD_φ)ʲ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralKernelSpec {
    pub c: Vec<Complex64>,
    pub n_window: usize,
}

/// Applies the operator word to 1 by repeated application, padded to cap N.
pub fn general_kernel_fockside(desc: &PhiDescriptor, spec: &GeneralKernelSpec, z: Complex64, n: usize) -> Result<TruncatedSeries> {
    let j_max = spec.c.len().saturating_sub(1);
    if 2 * j_max > n {
        return Err(Error::DegreeCap(format!("{} operator powers need cap >= {}, got {n}", j_max, 2 * j_max)));
    }
    let mut cur = TruncatedSeries::constant(c(1.0));
    let mut out = TruncatedSeries::zero(n);
    for (j, &cj) in spec.c.iter().enumerate() {
        if j > 0 {
            let shifted = gl_core::multiply_z(&cur).scale(z.conj());
            let lowered = gl_core::gl_derivative(desc, &cur)?.scale(z);
            cur = &shifted + &lowered;
        }
        out = &out + &cur.scale(cj);
    }
    Ok(out.padded(n))
}

/// Σ_{k=0}^{n} C(n,k)(−π)^k φ_j²/φ_{j+k} for j = 0..=J.
pub fn adjoint_kernel_coeffs(desc: &PhiDescriptor, n: usize, j_max: usize) -> Result<Vec<Complex64>> {
    if !desc.is_entire() {
        return Err(Error::NonEntire(format!("{} is not entire", desc.family().name())));
    }
    (0..=j_max)
        .map(|j| {
            let phi_j = desc.coeff(j)?;
            let mut s = 0.0;
            for k in 0..=n {
                s += binomial(n, k) * (-PI).powi(k as i32) * desc.ratio_span(j, k)?;
            }
            Ok(c(phi_j * s))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSize {
    pub s: f64,
    pub adjoint_scale: f64,
    pub density: f64,
}

/// s = |det C|, with the adjoint lattice s⁻¹Λ and density 1/s.
pub fn lattice_size(gen: &Matrix2<f64>) -> Result<LatticeSize> {
    let s = gen.determinant().abs();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Singular(format!("generator matrix has determinant {s}")));
    }
    Ok(LatticeSize { s, adjoint_scale: 1.0 / s, density: 1.0 / s })
}

/// Square lattice of size s mapped to the Fock plane.
pub fn fock_lattice_points(s: f64, m: usize) -> Result<Vec<Complex64>> {
    let lat = LatticeSpec::new(s.sqrt(), m)?;
    Ok(lat.indices().into_iter().map(|(a, b)| lat.point(a, b) * PI.sqrt()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub report: FrameReport,
}

/// Frame matrix of the window-n Gabor samples V_{h_n}(h_p) at the lattice of
/// size s, p = 0..=N, in the Fock plane.
pub fn gabor_frame_report(desc: &PhiDescriptor, window_n: usize, s: f64, n: usize, m: usize) -> Result<FrameReport> {
    let basis = (0..=n)
        .map(|p| Ok(TruncatedSeries::monomial(p, c(desc.coeff(p)?.sqrt()))))
        .collect::<Result<Vec<_>>>()?;
    let rows = fock_lattice_points(s, m)?
        .into_iter()
        .map(|w| {
            let mut row = DVector::zeros(n + 1);
            for (p, f) in basis.iter().enumerate() {
                row[p] = gabor_transform(desc, window_n, f, w)?;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    gram_report(&rows, n)
}

/// Frame reports for each lattice size, computed in parallel and returned
/// in the order of `s_values`; the first failing size aborts the sweep.
pub fn frame_sweep(vw: &VerifiedWeight, window_n: usize, s_values: &[f64], n: usize, m: usize) -> Result<Vec<SweepRow>> {
    frame_sweep_each(vw, window_n, s_values, n, m)?
        .into_iter()
        .map(|(s, r)| Ok(SweepRow { s, report: r? }))
        .collect()
}

/// As [`frame_sweep`], keeping each size's outcome separately.
pub fn frame_sweep_each(
    vw: &VerifiedWeight,
    window_n: usize,
    s_values: &[f64],
    n: usize,
    m: usize,
) -> Result<Vec<(f64, Result<FrameReport>)>> {
    vw.require_positive()?;
    Ok(s_values.par_iter().map(|&s| (s, gabor_frame_report(vw.desc(), window_n, s, n, m))).collect())
}

/// ⟨m|D(α)|k⟩ for m < dim, k < cols, with D(α) = exp(αa* − ᾱa) on the
/// Hermite basis, by the ladder recursions from the coherent-state column.
pub fn weyl_matrix(alpha: Complex64, dim: usize, cols: usize) -> DMatrix<Complex64> {
    let mut d = DMatrix::<Complex64>::zeros(dim, cols);
    if dim == 0 || cols == 0 {
        return d;
    }
    let mut v = c((-alpha.norm_sqr() / 2.0).exp());
    for mm in 0..dim {
        if mm > 0 {
            v = v * alpha / (mm as f64).sqrt();
        }
        d[(mm, 0)] = v;
    }
    for k in 0..cols - 1 {
        for mm in 0..dim {
            let up = if mm > 0 { d[(mm - 1, k)] * (mm as f64).sqrt() } else { c(0.0) };
            d[(mm, k + 1)] = (up - alpha.conj() * d[(mm, k)]) / ((k + 1) as f64).sqrt();
        }
    }
    d
}

/// Time-frequency shift of g by the point μ of the time-frequency plane,
/// α = √π μ, truncated to `dim` Hermite coefficients.
pub fn tf_shift(g: &HermiteCoeffs, mu: Complex64, dim: usize) -> DVector<Complex64> {
    let d = weyl_matrix(mu * PI.sqrt(), dim, g.len());
    let gv = DVector::from_iterator(g.len(), (0..g.len()).map(|k| g.get(k)));
    d * gv
}

/// Canonical dual S⁻¹g of the Gabor system {π(λ)g : λ ∈ Λ} on the square
/// lattice of size s, with S compressed to the first `dim` Hermite functions.
pub fn canonical_dual(window: &HermiteCoeffs, s: f64, m: usize, dim: usize) -> Result<HermiteCoeffs> {
    let lat = LatticeSpec::new(s.sqrt(), m)?;
    let mut frame = DMatrix::<Complex64>::zeros(dim, dim);
    for (a, b) in lat.indices() {
        let v = tf_shift(window, lat.point(a, b), dim);
        frame += &v * v.adjoint();
    }
    let gv = DVector::from_iterator(dim, (0..dim).map(|k| window.get(k)));
    let chol = frame.cholesky().ok_or_else(|| Error::Singular("truncated frame operator is not positive definite".into()))?;
    Ok(HermiteCoeffs::new(chol.solve(&gv).iter().copied().collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiorthogonalityReport {
    /// (μ, ⟨π(μ)g, γ⟩/s)
    pub rows: Vec<(Complex64, Complex64)>,
    pub max_residual: f64,
}

/// Residuals |⟨π(μ)g, γ⟩/s − δ_{μ,0}| at adjoint-lattice points μ. The 1/s
/// factor makes the canonical dual of a size-s lattice biorthogonal.
pub fn biorthogonality_check(
    desc: &PhiDescriptor,
    window: &HermiteCoeffs,
    dual: &HermiteCoeffs,
    adjoint_points: &[Complex64],
    s: f64,
    dim: usize,
) -> Result<BiorthogonalityReport> {
    if desc.family() != Family::Exponential {
        return Err(Error::Invalid("time-frequency shifts act on the Hermite basis of the exponential family only".into()));
    }
    if !(s > 0.0) {
        return Err(Error::Invalid(format!("lattice size must be positive, got {s}")));
    }
    let gamma = DVector::from_iterator(dim, (0..dim).map(|k| dual.get(k)));
    let mut rows = Vec::with_capacity(adjoint_points.len());
    let mut max_residual = 0.0f64;
    for &mu in adjoint_points {
        let v = tf_shift(window, mu, dim);
        let ip = gamma.dotc(&v) / s;
        let delta = if mu == c(0.0) { c(1.0) } else { c(0.0) };
        max_residual = max_residual.max((ip - delta).norm());
        rows.push((mu, ip));
    }
    Ok(BiorthogonalityReport { rows, max_residual })
}

/// Points of the adjoint lattice s⁻¹Λ (spacing 1/√s) with |μ| ≤ radius.
pub fn adjoint_points(s: f64, radius: f64) -> Vec<Complex64> {
    let step = 1.0 / s.sqrt();
    let k = (radius / step).floor() as i32;
    let mut pts = Vec::new();
    for a in -k..=k {
        for b in -k..=k {
            let p = Complex64::new(step * a as f64, step * b as f64);
            if p.norm() <= radius + 1e-12 {
                pts.push(p);
            }
        }
    }
    pts
}
