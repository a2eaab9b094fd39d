//! Quadrature primitives: adaptive Gauss-Kronrod on finite and semi-infinite
//! intervals, plus Gauss-Legendre, Gauss-Hermite and Gauss-Laguerre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: real or complex scalars.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let s = f1 + f2;
        kronrod = kronrod + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let result = kronrod * half;
    let err = ((kronrod - gauss) * half).magnitude();
    (result, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-300, rel_tol: 1e-12, max_segments: 4000 }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Globally adaptive Gauss-Kronrod integration over the finite segments
/// delimited by `breaks` (which must be increasing).
pub fn integrate<T: Integrand, F: FnMut(f64) -> T>(
    mut f: F,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<Estimate<T>> {
    if breaks.len() < 2 {
        return Err(Error::Invalid("need at least two break points".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Invalid(format!("break points not increasing: {} {}", w[0], w[1])));
        }
        let (value, err) = gk15(&mut f, w[0], w[1]);
        total = total + value;
        total_err += err;
        heap.push(Segment { a: w[0], b: w[1], value, err });
    }
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_segments {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature: error estimate {total_err:e} above target {target:e} after {} segments",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            return Err(Error::NonConvergence("adaptive quadrature: interval exhausted".into()));
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let mut value = T::zero();
    let mut error = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        error += s.err;
    }
    Ok(Estimate { value, error })
}

/// Integrates `f` over `[breaks[0], ∞)`. The finite segments between the
/// break points are handled directly; the tail beyond the last break point
/// is mapped onto `[0, 1)` via `x = last + t / (1 - t)`.
pub fn integrate_to_infinity<T: Integrand, F: FnMut(f64) -> T>(
    mut f: F,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<Estimate<T>> {
    let last = *breaks.last().ok_or_else(|| Error::Invalid("empty break list".into()))?;
    let n_finite = breaks.len() - 1;
    // Parametrise everything on a single axis so one adaptive pass balances
    // the error between the finite part and the tail.
    let mut axis: Vec<f64> = (0..=n_finite).map(|i| i as f64).collect();
    axis.push(n_finite as f64 + 1.0);
    let mapped = |u: f64| -> T {
        if u < n_finite as f64 {
            let i = (u.floor() as usize).min(n_finite - 1);
            let (a, b) = (breaks[i], breaks[i + 1]);
            let x = a + (u - i as f64) * (b - a);
            f(x) * (b - a)
        } else {
            let t = u - n_finite as f64;
            if t >= 1.0 {
                return T::zero();
            }
            let one_minus = 1.0 - t;
            let x = last + t / one_minus;
            let v = f(x);
            if v.magnitude() == 0.0 {
                v
            } else {
                v * (1.0 / (one_minus * one_minus))
            }
        }
    };
    integrate(mapped, &axis, opts)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Orthonormal Hermite functions h_0..h_{n} at `x`, via the normalized
/// three-term recurrence.
pub(crate) fn hermite_functions_upto(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(h0);
    if n == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * h0);
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Gauss-Hermite rule in "function" form: returns nodes `x_i` and weights
/// `W_i` such that `∫ g(x) dx ≈ Σ W_i g(x_i)` is exact whenever
/// `g(x) = p(x) e^{-x²}` with `deg p < 2n`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let off = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = off;
        jacobi[(i - 1, i)] = off;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        // Newton polish on h_n(x) = 0 with h_n' = sqrt(2n) h_{n-1} - x h_n.
        for _ in 0..8 {
            let h = hermite_functions_upto(n, *x);
            let d = (2.0 * n as f64).sqrt() * h[n - 1] - *x * h[n];
            if d == 0.0 {
                break;
            }
            let step = h[n] / d;
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        let h = hermite_functions_upto(n - 1, *x);
        let s: f64 = h.iter().map(|v| v * v).sum();
        weights.push(1.0 / s);
    }
    (nodes, weights)
}

/// Gauss-Laguerre rule (weight e^{-x}) in function form: `∫₀^∞ g(x) dx ≈
/// Σ W_i g(x_i)`, exact for `g = p(x) e^{-x}` with `deg p < 2n`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = (2 * i + 1) as f64;
        if i + 1 < n {
            let off = (i + 1) as f64;
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        // Orthonormal Laguerre functions l_k(x) = L_k(x) e^{-x/2} keep the
        // recurrence bounded for large x.
        let eval = |x: f64| -> (f64, f64, f64) {
            let (mut l0, mut l1) = ((-0.5 * x).exp(), (1.0 - x) * (-0.5 * x).exp());
            if n == 1 {
                return (l1, l0, 0.0);
            }
            let mut sum_sq = l0 * l0 + l1 * l1;
            for k in 1..n {
                let kf = k as f64;
                let l2 = ((2.0 * kf + 1.0 - x) * l1 - kf * l0) / (kf + 1.0);
                l0 = l1;
                l1 = l2;
                if k + 1 < n {
                    sum_sq += l1 * l1;
                }
            }
            (l1, l0, sum_sq)
        };
        for _ in 0..8 {
            let (ln, lnm1, _) = eval(*x);
            // L_n' = n (L_n - L_{n-1}) / x, carried over to the scaled values.
            let d = n as f64 * (ln - lnm1) / *x - 0.5 * ln;
            if d == 0.0 {
                break;
            }
            let step = ln / d;
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, _, sum_sq) = eval(*x);
        let sum_sq = if n == 1 { ((-0.5 * *x).exp()).powi(2) } else { sum_sq };
        weights.push(1.0 / sum_sq);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_handles_smooth_and_singular() {
        let est = integrate(|x: f64| x.sin(), &[0.0, std::f64::consts::PI], AdaptiveOptions::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-14);
        let est = integrate(|x: f64| x.sqrt().recip(), &[0.0, 1.0], AdaptiveOptions::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10, "{}", est.value);
    }

    #[test]
    fn semi_infinite_gamma_integral() {
        let est = integrate_to_infinity(|x: f64| x.powi(4) * (-x).exp(), &[0.0, 10.0], AdaptiveOptions::default())
            .unwrap();
        assert!((est.value - 24.0).abs() < 1e-11);
        let est = integrate_to_infinity(|x: f64| (-x * x).exp(), &[0.0], AdaptiveOptions::default()).unwrap();
        assert!((est.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hermite_rule_moments() {
        let (x, w) = gauss_hermite(30);
        let m0: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp()).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4) * (-x * x).exp()).sum();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((m0 - sqrt_pi).abs() < 1e-13);
        assert!((m4 - 0.75 * sqrt_pi).abs() < 1e-13);
    }

    #[test]
    fn laguerre_rule_moments() {
        let (x, w) = gauss_laguerre(20);
        for k in 0..10 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k) * (-x).exp()).sum();
            let fact: f64 = (1..=k).map(f64::from).product();
            assert!(((s - fact) / fact).abs() < 1e-12, "k={k} {s} {fact}");
        }
    }
}
