//! Generalized Weierstrass factors E(z) = (1 − z)φ(ψ₁z + ψ₂z²), the remainder
//! Ω(z) = (E(z) − 1)/z³, lattice products σ and g, and grid diagnostics for
//! their growth estimates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_space::{VerifiedWeight, WeightForm};
use crate::gl_core::{Family, PhiDescriptor, PhiSeries, TruncatedSeries};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// ψ₁ = 1/φ₁ and ψ₂ = (φ₁² − φ₂)/φ₁³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiPair {
    pub psi1: f64,
    pub psi2: f64,
}

/// Requires φ₀ = 1 and φ₁ > 0.
pub fn psi_pair(desc: &PhiDescriptor) -> Result<PsiPair> {
    let phi0 = desc.coeff(0)?;
    if (phi0 - 1.0).abs() > 1e-15 {
        return Err(Error::NormalizationMissing { phi0 });
    }
    let phi1 = desc.coeff(1)?;
    let phi2 = desc.coeff(2)?;
    if !(phi1 > 0.0) {
        return Err(Error::Domain(format!("psi coefficients need phi_1 > 0, got {phi1}")));
    }
    Ok(PsiPair { psi1: 1.0 / phi1, psi2: (phi1 * phi1 - phi2) / (phi1 * phi1 * phi1) })
}

/// E(z) = (1 − z)·Σ_{k≤N} φ_k (ψ₁z + ψ₂z²)^k.
pub fn weierstrass_factor(desc: &PhiDescriptor, z: Complex64, n: usize) -> Result<Complex64> {
    let psi = psi_pair(desc)?;
    let series = PhiSeries::new(desc, n)?;
    Ok((c(1.0) - z) * series.eval(z * psi.psi1 + z * z * psi.psi2)?.value)
}

/// Taylor coefficients of E(z) − 1 up to the given degree, by composing the
/// truncated φ with u = ψ₁z + ψ₂z².
pub fn e_minus_1_series(desc: &PhiDescriptor, degree: usize) -> Result<TruncatedSeries> {
    let psi = psi_pair(desc)?;
    let u = TruncatedSeries::from_real(&[0.0, psi.psi1, psi.psi2]);
    let truncate = |s: TruncatedSeries| {
        let mut v = s.into_coeffs();
        v.truncate(degree + 1);
        TruncatedSeries::new(v).padded(degree)
    };
    let mut acc = TruncatedSeries::constant(c(desc.coeff(degree)?));
    for k in (0..degree).rev() {
        acc = truncate(&(&acc * &u) + &TruncatedSeries::constant(c(desc.coeff(k)?)));
    }
    let one_minus_z = TruncatedSeries::from_real(&[1.0, -1.0]);
    let e = truncate(&acc * &one_minus_z);
    Ok(&e - &TruncatedSeries::constant(c(1.0)))
}

/// Ω(z) = (E(z) − 1)/z³ with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEval {
    pub value: Complex64,
    /// True when the Taylor series replaced the quotient.
    pub series_branch: bool,
    /// Set when |E(z) − 1| < 1e-12 away from the origin, where the quotient
    /// would be dominated by cancellation.
    pub cancellation_warning: bool,
}

const OMEGA_SERIES_RADIUS: f64 = 1e-3;
const OMEGA_SERIES_DEGREE: usize = 40;

pub fn omega(desc: &PhiDescriptor, z: Complex64, n: usize) -> Result<OmegaEval> {
    let from_series = |z: Complex64| -> Result<Complex64> {
        let s = e_minus_1_series(desc, OMEGA_SERIES_DEGREE)?;
        let tail = TruncatedSeries::new(s.coeffs()[3..].to_vec());
        Ok(tail.eval(z))
    };
    if z.norm() < OMEGA_SERIES_RADIUS {
        return Ok(OmegaEval { value: from_series(z)?, series_branch: true, cancellation_warning: false });
    }
    let e = weierstrass_factor(desc, z, n)?;
    let diff = e - c(1.0);
    if diff.norm() < 1e-12 && z.norm() < 1.0 {
        return Ok(OmegaEval { value: from_series(z)?, series_branch: true, cancellation_warning: true });
    }
    Ok(OmegaEval { value: diff / (z * z * z), series_branch: false, cancellation_warning: diff.norm() < 1e-12 })
}

/// Ω(0) = φ₃ψ₁³ + 2φ₂ψ₁ψ₂ − φ₂ψ₁² − φ₁ψ₂.
pub fn omega_at_zero(desc: &PhiDescriptor) -> Result<f64> {
    let PsiPair { psi1, psi2 } = psi_pair(desc)?;
    let (p1, p2, p3) = (desc.coeff(1)?, desc.coeff(2)?, desc.coeff(3)?);
    Ok(p3 * psi1.powi(3) + 2.0 * p2 * psi1 * psi2 - p2 * psi1 * psi1 - p1 * psi2)
}

/// Lower radius R_L = |ψ₁| + |ψ₂| and the convergence radius R_U of Σφ_k z^k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub r_l: f64,
    /// `f64::INFINITY` when the root trend is decreasing.
    pub r_u: f64,
    pub trend: RadiusTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusTrend {
    Finite,
    UnboundedTrend,
}

impl RadiusBounds {
    pub fn valid(&self) -> bool {
        self.r_l < self.r_u
    }
}

/// R_U from |φ_k|^{1/k} over k ∈ [N/2, N]: a drop below 0.95 of the value
/// at N/2 is read as the roots tending to zero.
pub fn radius_bounds(desc: &PhiDescriptor, n: usize) -> Result<RadiusBounds> {
    if n < 100 {
        return Err(Error::Invalid(format!("radius_bounds needs N >= 100, got {n}")));
    }
    let psi = psi_pair(desc)?;
    let r_l = psi.psi1.abs() + psi.psi2.abs();
    let root = |k: usize| -> Result<f64> { Ok((desc.ln_coeff(k)?.0 / k as f64).exp()) };
    let first = root(n / 2)?;
    let last = root(n)?;
    if last < 0.95 * first {
        return Ok(RadiusBounds { r_l, r_u: f64::INFINITY, trend: RadiusTrend::UnboundedTrend });
    }
    let mut sup = 0.0f64;
    for k in n / 2..=n {
        sup = sup.max(root(k)?);
    }
    Ok(RadiusBounds { r_l, r_u: 1.0 / sup, trend: RadiusTrend::Finite })
}

fn omega_tail(desc: &PhiDescriptor, r: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut k = 3usize;
    let mut prev = f64::INFINITY;
    loop {
        let (ln, _) = desc.ln_coeff(k)?;
        let term = (ln + k as f64 * r.ln()).exp();
        sum += term;
        if term <= 1e-17 * sum && term < prev {
            return Ok(2.0 * sum);
        }
        if k > 100_000 || !sum.is_finite() {
            return Err(Error::NonConvergence(format!("omega tail at radius {r} did not settle")));
        }
        prev = term;
        k += 1;
    }
}

fn check_radius(desc: &PhiDescriptor) -> Result<(PsiPair, f64)> {
    let psi = psi_pair(desc)?;
    let r_l = psi.psi1.abs() + psi.psi2.abs();
    let r_u = if desc.is_entire() { f64::INFINITY } else { radius_bounds(desc, 200)?.r_u };
    if r_l >= r_u {
        return Err(Error::RadiusViolation { r_l, r_u });
    }
    Ok((psi, r_l))
}

/// |φ₁ψ₂ − 2φ₂ψ₁ψ₂ + φ₂ψ₁²| + |φ₂ψ₁ψ₂² − 2φ₂ψ₁ψ₂| + |φ₂ψ₂²|
/// + 2Σ_{n≥3}|φ_n|(|ψ₁|+|ψ₂|)ⁿ, keeping the φ₂ψ₁ψ₂² term.
pub fn omega_bound(desc: &PhiDescriptor) -> Result<f64> {
    let (PsiPair { psi1, psi2 }, r) = check_radius(desc)?;
    let (p1, p2) = (desc.coeff(1)?, desc.coeff(2)?);
    Ok((p1 * psi2 - 2.0 * p2 * psi1 * psi2 + p2 * psi1 * psi1).abs()
        + (p2 * psi1 * psi2 * psi2 - 2.0 * p2 * psi1 * psi2).abs()
        + (p2 * psi2 * psi2).abs()
        + omega_tail(desc, r)?)
}

/// The same bound with the z⁴ coefficient of E − 1 expanded directly,
/// φ₂ψ₂² − 2φ₂ψ₁ψ₂. Coincides with [`omega_bound`] when ψ₁ = 1.
pub fn omega_bound_derived(desc: &PhiDescriptor) -> Result<f64> {
    let (PsiPair { psi1, psi2 }, r) = check_radius(desc)?;
    let (p1, p2) = (desc.coeff(1)?, desc.coeff(2)?);
    Ok((p1 * psi2 - 2.0 * p2 * psi1 * psi2 + p2 * psi1 * psi1).abs()
        + (p2 * psi2 * psi2 - 2.0 * p2 * psi1 * psi2).abs()
        + (p2 * psi2 * psi2).abs()
        + omega_tail(desc, r)?)
}

/// One grid point of a two-column comparison, written to CSV as
/// z_re, z_im, lhs, rhs, ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub z_re: f64,
    pub z_im: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl DiagRow {
    pub fn new(z: Complex64, lhs: f64, rhs: f64) -> Self {
        Self { z_re: z.re, z_im: z.im, lhs, rhs, ratio: lhs / rhs }
    }
}

pub fn rows_to_csv(rows: &[DiagRow]) -> String {
    let mut out = String::from("z_re,z_im,lhs,rhs,ratio\n");
    for r in rows {
        let _ = writeln!(out, "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", r.z_re, r.z_im, r.lhs, r.rhs, r.ratio);
    }
    out
}

/// Points of an n×n grid on [−1, 1]² that lie in the closed unit disk.
pub fn unit_disk_grid(n: usize) -> Vec<Complex64> {
    let step = if n > 1 { 2.0 / (n - 1) as f64 } else { 0.0 };
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(-1.0 + step * i as f64, -1.0 + step * j as f64);
            if z.norm() <= 1.0 {
                pts.push(z);
            }
        }
    }
    pts
}

/// |1 − E(z)| against |Ω(z)| on the unit-disk grid.
pub fn inequality_grid(desc: &PhiDescriptor, n_grid: usize, n: usize) -> Result<Vec<DiagRow>> {
    unit_disk_grid(n_grid)
        .into_iter()
        .map(|z| {
            let e = weierstrass_factor(desc, z, n)?;
            let om = omega(desc, z, n)?;
            Ok(DiagRow::new(z, (c(1.0) - e).norm(), om.value.norm()))
        })
        .collect()
}

/// Square lattice λ(m + in) with |m|, |n| ≤ M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lambda: f64,
    pub trunc_m: usize,
}

impl LatticeSpec {
    pub const DEFAULT_M: usize = 16;

    pub fn new(lambda: f64, trunc_m: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid(format!("lattice spacing must be positive, got {lambda}")));
        }
        if trunc_m > i32::MAX as usize / 2 {
            return Err(Error::Invalid(format!("truncation {trunc_m} is too large")));
        }
        Ok(Self { lambda, trunc_m })
    }

    pub fn point(&self, m: i32, n: i32) -> Complex64 {
        Complex64::new(self.lambda * m as f64, self.lambda * n as f64)
    }

    /// All indices with max(|m|, |n|) ≤ M, the origin included, in shell order.
    pub fn indices(&self) -> Vec<(i32, i32)> {
        let big_m = self.trunc_m as i32;
        let mut idx = vec![(0, 0)];
        for s in 1..=big_m {
            for m in -s..=s {
                for n in -s..=s {
                    if m.abs().max(n.abs()) == s {
                        idx.push((m, n));
                    }
                }
            }
        }
        idx
    }

    /// Number of lattice points with |λ_{m,n}| ≤ r.
    pub fn count_in_disk(&self, r: f64) -> usize {
        self.indices().into_iter().filter(|&(m, n)| self.point(m, n).norm() <= r).count()
    }
}

/// Points z_{m,n} with |z_{m,n} − λ_{m,n}| < Q and separation q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedLattice {
    pub lattice: LatticeSpec,
    #[serde(with = "point_map")]
    pub points: BTreeMap<(i32, i32), Complex64>,
    #[serde(rename = "Q")]
    pub big_q: f64,
    pub q: f64,
}

mod point_map {
    use std::collections::BTreeMap;

    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        m: i32,
        n: i32,
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<(i32, i32), Complex64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = map.iter().map(|(&(m, n), z)| Entry { m, n, re: z.re, im: z.im }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(i32, i32), Complex64>, D::Error> {
        let v = Vec::<Entry>::deserialize(d)?;
        Ok(v.into_iter().map(|e| ((e.m, e.n), Complex64::new(e.re, e.im))).collect())
    }
}

impl PerturbedLattice {
    /// Checks closeness against `big_q` and computes the separation q.
    /// Q = 0 is accepted only for the unperturbed lattice.
    pub fn new(lattice: LatticeSpec, points: BTreeMap<(i32, i32), Complex64>, big_q: f64) -> Result<Self> {
        let expected = lattice.indices();
        if points.len() != expected.len() || expected.iter().any(|k| !points.contains_key(k)) {
            return Err(Error::Invalid("perturbed points must cover every lattice index".into()));
        }
        for (&(m, n), z) in &points {
            let d = (z - lattice.point(m, n)).norm();
            if !(d < big_q || d == 0.0) {
                return Err(Error::Invalid(format!("|z_{{{m},{n}}} - lambda_{{{m},{n}}}| = {d} is not below Q = {big_q}")));
            }
        }
        let zs: Vec<Complex64> = points.values().copied().collect();
        let mut q = f64::INFINITY;
        for i in 0..zs.len() {
            for j in i + 1..zs.len() {
                q = q.min((zs[i] - zs[j]).norm());
            }
        }
        if !(q > 0.0) {
            return Err(Error::Invalid("perturbed points must be separated".into()));
        }
        Ok(Self { lattice, points, big_q, q })
    }

    pub fn unperturbed(lattice: LatticeSpec) -> Result<Self> {
        let points = lattice.indices().into_iter().map(|(m, n)| ((m, n), lattice.point(m, n))).collect();
        Self::new(lattice, points, 0.0)
    }

    /// Offsets drawn uniformly from the open disk of radius Q.
    pub fn random(lattice: LatticeSpec, big_q: f64, seed: u64) -> Result<Self> {
        if !(big_q > 0.0) {
            return Err(Error::Invalid(format!("Q must be positive, got {big_q}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = lattice
            .indices()
            .into_iter()
            .map(|(m, n)| {
                let r = big_q * rng.random_range(0.0..1.0f64).sqrt();
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                ((m, n), lattice.point(m, n) + Complex64::from_polar(r, t))
            })
            .collect();
        Self::new(lattice, points, big_q)
    }

    pub fn z00(&self) -> Complex64 {
        self.points[&(0, 0)]
    }

    /// Distance from z to the nearest stored point.
    pub fn dist(&self, z: Complex64) -> f64 {
        self.points.values().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Which denominator fills the second slot of the g factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GVariant {
    /// φ(ψ₁z/z_{m,n} + ψ₂z²/λ²_{m,n}).
    #[default]
    Printed,
    /// φ(ψ₁z/z_{m,n} + ψ₂z²/z²_{m,n}).
    AllGamma,
}

/// A truncated product lead(z)·Π(1 − z/ζ)φ(ψ₁z/ζ + ψ₂z²/η) evaluated in log
/// space.
#[derive(Debug, Clone)]
pub struct LatticeProduct {
    series: PhiSeries,
    exponential: bool,
    psi: PsiPair,
    lead: Complex64,
    /// (shell, ζ, η)
    factors: Vec<(usize, Complex64, Complex64)>,
    trunc_m: usize,
}

/// Value of a lattice product with its truncation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductEval {
    pub value: Complex64,
    /// Sum of principal logarithms; the real part is −∞ at a zero.
    pub ln_value: Complex64,
    /// |P_M/P_{M−1} − 1|, the effect of the outermost shell.
    pub rel_change: f64,
}

impl LatticeProduct {
    fn build(desc: &PhiDescriptor, n: usize, lead: Complex64, factors: Vec<(usize, Complex64, Complex64)>, trunc_m: usize) -> Result<Self> {
        let psi = psi_pair(desc)?;
        Ok(Self {
            series: PhiSeries::new(desc, n)?,
            exponential: desc.family() == Family::Exponential,
            psi,
            lead,
            factors,
            trunc_m,
        })
    }

    /// σ(z; Λ) = z Π (1 − z/λ)φ(ψ₁z/λ + ψ₂z²/λ²).
    pub fn sigma(desc: &PhiDescriptor, lat: LatticeSpec, n: usize) -> Result<Self> {
        let factors = lat
            .indices()
            .into_iter()
            .skip(1)
            .map(|(m, k)| {
                let l = lat.point(m, k);
                (m.unsigned_abs().max(k.unsigned_abs()) as usize, l, l * l)
            })
            .collect();
        Self::build(desc, n, c(0.0), factors, lat.trunc_m)
    }

    /// g(z; Γ) = (z − z₀₀) Π (1 − z/z_{m,n})φ(ψ₁z/z_{m,n} + ψ₂z²/η_{m,n}).
    pub fn g(desc: &PhiDescriptor, gamma: &PerturbedLattice, n: usize, variant: GVariant) -> Result<Self> {
        let lat = gamma.lattice;
        let factors = lat
            .indices()
            .into_iter()
            .skip(1)
            .map(|(m, k)| {
                let zeta = gamma.points[&(m, k)];
                let eta = match variant {
                    GVariant::Printed => lat.point(m, k) * lat.point(m, k),
                    GVariant::AllGamma => zeta * zeta,
                };
                (m.unsigned_abs().max(k.unsigned_abs()) as usize, zeta, eta)
            })
            .collect();
        Self::build(desc, n, gamma.z00(), factors, lat.trunc_m)
    }

    /// ln φ(u). The exponential family uses ln e^u = u, which stays exact
    /// where the truncated series would cancel.
    fn ln_phi(&self, u: Complex64) -> Result<Complex64> {
        if self.exponential {
            return Ok(u);
        }
        Ok(self.series.eval(u)?.value.ln())
    }

    pub fn eval(&self, z: Complex64) -> Result<ProductEval> {
        let zero = ProductEval { value: c(0.0), ln_value: c(f64::NEG_INFINITY), rel_change: 0.0 };
        if z == self.lead {
            return Ok(zero);
        }
        let mut ln = (z - self.lead).ln();
        let mut outer = c(0.0);
        for &(shell, zeta, eta) in &self.factors {
            if z == zeta {
                return Ok(zero);
            }
            let t = (c(1.0) - z / zeta).ln() + self.ln_phi(z * self.psi.psi1 / zeta + z * z * self.psi.psi2 / eta)?;
            ln += t;
            if shell == self.trunc_m {
                outer += t;
            }
        }
        let rel_change = if self.trunc_m == 0 { 0.0 } else { (outer.exp() - c(1.0)).norm() };
        Ok(ProductEval { value: ln.exp(), ln_value: ln, rel_change })
    }

    /// Central difference (g(z + h) − g(z − h))/2h.
    pub fn derivative_fd(&self, z: Complex64, h: f64) -> Result<Complex64> {
        Ok((self.eval(z + h)?.value - self.eval(z - h)?.value) / (2.0 * h))
    }
}

pub fn sigma_fn(desc: &PhiDescriptor, z: Complex64, lat: LatticeSpec, n: usize) -> Result<Complex64> {
    Ok(LatticeProduct::sigma(desc, lat, n)?.eval(z)?.value)
}

pub fn g_fn(desc: &PhiDescriptor, z: Complex64, gamma: &PerturbedLattice, n: usize, variant: GVariant) -> Result<Complex64> {
    Ok(LatticeProduct::g(desc, gamma, n, variant)?.eval(z)?.value)
}

/// Result of counting zeros by the argument principle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    pub count: i64,
    /// Total change of arg divided by 2π before rounding.
    pub winding: f64,
    pub contour_points: usize,
}

/// Winding number of the product along |z| = r. The contour is refined until
/// no step changes the argument by more than π/2.
pub fn zero_count(product: &LatticeProduct, r: f64, min_points: usize) -> Result<ZeroCount> {
    let mut n = min_points.max(16);
    loop {
        let args: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64);
                let p = product.eval(z)?;
                if !p.ln_value.re.is_finite() {
                    return Err(Error::Domain(format!("contour |z| = {r} passes through a zero at {z}")));
                }
                Ok(p.ln_value.im)
            })
            .collect::<Result<_>>()?;
        let mut total = 0.0;
        let mut max_step = 0.0f64;
        for k in 0..n {
            let d = args[(k + 1) % n] - args[k];
            let w = d - std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
            max_step = max_step.max(w.abs());
            total += w;
        }
        if max_step <= std::f64::consts::FRAC_PI_2 {
            let winding = total / std::f64::consts::TAU;
            return Ok(ZeroCount { count: winding.round() as i64, winding, contour_points: n });
        }
        if n > 1 << 22 {
            return Err(Error::NonConvergence(format!("argument steps stay above pi/2 at {n} contour points")));
        }
        n *= 2;
    }
}

/// K_φ(−|z|²)|σ(z)| against d(z, Λ) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerReport {
    pub rows: Vec<DiagRow>,
    /// Empirical constant C: the smallest ratio.
    pub min_ratio: f64,
}

pub fn sigma_lower_diag(vw: &VerifiedWeight, lat: LatticeSpec, grid: &[Complex64], n: usize) -> Result<LowerReport> {
    let product = LatticeProduct::sigma(vw.desc(), lat, n)?;
    let lattice = PerturbedLattice::unperturbed(lat)?;
    let rows = grid
        .par_iter()
        .map(|&z| {
            let d = lattice.dist(z);
            if d == 0.0 {
                return Err(Error::Domain(format!("grid point {z} is a lattice point")));
            }
            let p = product.eval(z)?;
            let ln_lhs = vw.weight_at(z).ln() + p.ln_value.re;
            Ok(DiagRow { z_re: z.re, z_im: z.im, lhs: ln_lhs.exp(), rhs: d, ratio: (ln_lhs - d.ln()).exp() })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(LowerReport { rows, min_ratio })
}

/// γ(z): 1 when the weight's reciprocal grows no faster than e^{|z|²},
/// otherwise |K_φ(z)| with the weight continued analytically in x.
pub fn growth_selector(form: &WeightForm, z: Complex64) -> f64 {
    match *form {
        WeightForm::ExpWeight | WeightForm::LogWeight { .. } => 1.0,
        WeightForm::StretchedExp { b, .. } | WeightForm::MLWeight { rho: b, .. } if b <= 1.0 => 1.0,
        WeightForm::StretchedExp { a, b } => (-a * (-z).powf(b)).exp().norm(),
        WeightForm::MLWeight { rho, mu } => (c(rho) * (-z).powf(rho * mu - 1.0) * (-(-z).powf(rho)).exp()).norm(),
    }
}

/// One point of the two-sided estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedRow {
    pub z_re: f64,
    pub z_im: f64,
    /// |K_φ(−|z|²) g(z)|
    pub value: f64,
    pub dist: f64,
    pub gamma: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedReport {
    pub rows: Vec<TwoSidedRow>,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub feasible: bool,
    pub note: String,
}

impl TwoSidedReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_re,z_im,value,dist,gamma,lower,upper\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.z_re, r.z_im, r.value, r.dist, r.gamma, r.lower, r.upper
            );
        }
        out
    }
}

fn z_log_z(z: Complex64) -> f64 {
    let r = z.norm();
    if r == 0.0 {
        0.0
    } else {
        r * r.ln()
    }
}

/// Fits c ≥ 0, then the tightest c₁, c₂, for
/// c₁γ(z)e^{−c|z|log|z|}d(z,Γ) ≤ |K_φ(−|z|²)g(z)| ≤ c₂γ(z)e^{c|z|log|z|},
/// choosing c to minimize ln(c₂/c₁) over the grid.
pub fn two_sided_diag(
    vw: &VerifiedWeight,
    gamma: &PerturbedLattice,
    grid: &[Complex64],
    n: usize,
    variant: GVariant,
) -> Result<TwoSidedReport> {
    let product = LatticeProduct::g(vw.desc(), gamma, n, variant)?;
    let form = vw.kernel().form;
    // (z, ln value, ln dist, ln gamma)
    let pts = grid
        .par_iter()
        .map(|&z| {
            let p = product.eval(z)?;
            Ok((z, vw.weight_at(z).ln() + p.ln_value.re, gamma.dist(z).ln(), growth_selector(&form, z).ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let infeasible = |note: String| TwoSidedReport {
        rows: Vec::new(),
        c: f64::NAN,
        c1: f64::NAN,
        c2: f64::NAN,
        feasible: false,
        note,
    };
    if pts.is_empty() {
        return Ok(infeasible("empty grid".into()));
    }
    for &(z, lv, ld, lg) in &pts {
        if lv.is_nan() || lv == f64::INFINITY || !lg.is_finite() || (lv == f64::NEG_INFINITY && ld > f64::NEG_INFINITY) {
            return Ok(infeasible(format!("no finite constants: value {} at {z} off the point set", lv.exp())));
        }
    }
    let ln_c1 = |cc: f64| {
        pts.iter()
            .filter(|p| p.2.is_finite())
            .map(|&(z, lv, ld, lg)| lv - lg - ld + cc * z_log_z(z))
            .fold(f64::INFINITY, f64::min)
    };
    let ln_c2 = |cc: f64| {
        pts.iter()
            .filter(|p| p.1.is_finite())
            .map(|&(z, lv, _, lg)| lv - lg - cc * z_log_z(z))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let objective = |cc: f64| ln_c2(cc) - ln_c1(cc);
    let (mut lo, mut hi) = (0.0f64, 50.0f64);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if objective(a) <= objective(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let cc = 0.5 * (lo + hi);
    let (l1, l2) = (ln_c1(cc), ln_c2(cc));
    let (c1, c2) = (l1.exp(), l2.exp());
    let rows = pts
        .iter()
        .map(|&(z, lv, ld, lg)| {
            let e = cc * z_log_z(z);
            TwoSidedRow {
                z_re: z.re,
                z_im: z.im,
                value: lv.exp(),
                dist: ld.exp(),
                gamma: lg.exp(),
                lower: (l1 + lg - e + ld).exp(),
                upper: (l2 + lg + e).exp(),
            }
        })
        .collect();
    let feasible = cc.is_finite() && c1.is_finite() && c2.is_finite() && c1 > 0.0;
    let note = if feasible { String::new() } else { format!("fit gave c = {cc}, c1 = {c1}, c2 = {c2}") };
    Ok(TwoSidedReport { rows, c: cc, c1, c2, feasible, note })
}

/// Lagrange-type interpolation Σ f(z_k)/g'(z_k) · g(z)/(z − z_k) with g' by
/// central differences of step 10⁻⁵·q.
pub struct LagrangeInterpolator<'a> {
    g_eval: &'a (dyn Fn(Complex64) -> Result<Complex64> + Sync),
    /// (node, f(node), f(node)/g'(node))
    nodes: Vec<(Complex64, Complex64, Complex64)>,
    pub warnings: Vec<String>,
}

impl<'a> LagrangeInterpolator<'a> {
    pub fn new(
        gamma: &PerturbedLattice,
        g_eval: &'a (dyn Fn(Complex64) -> Result<Complex64> + Sync),
        samples: &BTreeMap<(i32, i32), Complex64>,
        m_sum: usize,
    ) -> Result<Self> {
        let h = 1e-5 * gamma.q;
        let mut nodes = Vec::new();
        let mut warnings = Vec::new();
        for (&(m, n), &f) in samples {
            if m.unsigned_abs().max(n.unsigned_abs()) as usize > m_sum {
                continue;
            }
            let zk = *gamma
                .points
                .get(&(m, n))
                .ok_or_else(|| Error::Invalid(format!("sample index ({m},{n}) is not a lattice index")))?;
            let dg = (g_eval(zk + h)? - g_eval(zk - h)?) / (2.0 * h);
            if !(dg.norm() > 1e-300) || !dg.re.is_finite() || !dg.im.is_finite() {
                warnings.push(format!("g'(z_{{{m},{n}}}) = {dg} is not usable; node skipped"));
                continue;
            }
            nodes.push((zk, f, f / dg));
        }
        Ok(Self { g_eval, nodes, warnings })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let gz = (self.g_eval)(z)?;
        let mut sum = c(0.0);
        for &(zk, f, w) in &self.nodes {
            let d = z - zk;
            if d.norm() == 0.0 {
                // g(z)/(z − z_k) → g'(z_k), so the term is f(z_k).
                sum += f;
            } else {
                sum += w * gz / d;
            }
        }
        Ok(sum)
    }
}

pub fn lagrange_interp(
    gamma: &PerturbedLattice,
    g_eval: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
    samples: &BTreeMap<(i32, i32), Complex64>,
    z: Complex64,
    m_sum: usize,
) -> Result<(Complex64, Vec<String>)> {
    let interp = LagrangeInterpolator::new(gamma, g_eval, samples, m_sum)?;
    let v = interp.eval(z)?;
    Ok((v, interp.warnings))
}
