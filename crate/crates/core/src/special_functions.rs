//! Scalar special functions: Γ and its derivatives, digamma, Mittag-Leffler,
//! Kummer's ₁F₁, orthonormal Hermite functions and harmonic numbers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, AdaptiveOptions};

/// Largest argument for which Γ(x) is finite in double precision.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Truncation and quadrature settings shared by the series evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialFnConfig {
    /// Truncation tolerance, relative to `max(1, |partial sum|)`.
    pub series_tol: f64,
    pub max_terms: usize,
    /// Number of equal sub-segments used to seed the adaptive quadrature
    /// of the Γ-derivative integral around its peak.
    pub quad_points: usize,
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        Self { series_tol: 1e-17, max_terms: 20_000, quad_points: 32 }
    }
}

impl SpecialFnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_tol > 0.0) {
            return Err(Error::Invalid("series_tol must be positive".into()));
        }
        if self.max_terms < 16 || self.quad_points < 16 {
            return Err(Error::Invalid("max_terms and quad_points must be at least 16".into()));
        }
        Ok(())
    }
}

/// Γ(x) for real x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::Overflow(format!("gamma({x}) exceeds f64 range")));
    }
    if x.fract() == 0.0 {
        return Ok((2..x as u32).map(f64::from).product());
    }
    // Reduce to [1, 2) by the recurrence, where the Lanczos approximation
    // is most accurate, then multiply back up.
    if x < 1.0 {
        return Ok(statrs::function::gamma::gamma(x + 1.0) / x);
    }
    let mut y = x;
    let mut scale = 1.0;
    while y >= 2.0 {
        y -= 1.0;
        scale *= y;
    }
    Ok(scale * statrs::function::gamma::gamma(y))
}

/// ln Γ(x) for real x > 0.
///
/// Below the overflow threshold this is ln of [`gamma`], which is accurate
/// in absolute terms near the zeros of ln Γ at 1 and 2.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < GAMMA_MAX_ARG {
        if let Ok(g) = gamma(x) {
            if g > 0.0 && g.is_finite() {
                return g.ln();
            }
        }
    }
    statrs::function::gamma::ln_gamma(x)
}

/// ψ(x) = d/dx ln Γ(x) for real x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::digamma(x))
}

/// H_n = Σ_{k=1}^n 1/k, with H_0 = 0.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Rising factorial (a)_n = Γ(a+n)/Γ(a), computed as a product.
pub fn pochhammer(a: f64, n: u64) -> f64 {
    (0..n).map(|k| a + k as f64).product()
}

/// Γ^{(n)}(x) / Γ(x), i.e. the n-th moment of ln T for T ~ Gamma(x, 1).
///
/// The integral is split at t = 1. On (0, 1) the substitution t = e^{-u}
/// removes the lnⁿ singularity; on [1, ∞) the peak near t = x - 1 is
/// bracketed by explicit break points before the mapped tail.
pub fn gamma_deriv_scaled(n: u32, x: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("gamma_deriv requires x > 0, got {x}")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let lg = ln_gamma(x);
    let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol: 1e-13, max_segments: 400 * cfg.quad_points };
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };

    let inner = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        sign * (-u * x - (-u).exp() - lg + n as f64 * u.ln()).exp()
    };
    let u_scale = 1.0 / x;
    let mut inner_breaks = vec![0.0];
    let segs = (cfg.quad_points / 8).max(2);
    for i in 1..=segs {
        inner_breaks.push(i as f64 * (n as f64 + 4.0) * u_scale.max(1.0) / segs as f64);
    }
    let part_a = quad::integrate_to_infinity(inner, &inner_breaks, opts)?;

    let outer = |t: f64| -> f64 {
        let lt = t.ln();
        if lt == 0.0 {
            return 0.0;
        }
        let mag = ((x - 1.0) * lt - t - lg + n as f64 * lt.abs().ln()).exp();
        if lt < 0.0 && n % 2 == 1 {
            -mag
        } else {
            mag
        }
    };
    let peak = (x - 1.0).max(1.0);
    let width = x.max(1.0).sqrt();
    let lo = (peak - 10.0 * width).max(1.0);
    let hi = peak + 10.0 * width + 2.0 * n as f64 + 10.0;
    let mut outer_breaks = vec![1.0];
    if lo > 1.0 {
        outer_breaks.push(lo);
    }
    let segs = cfg.quad_points.max(2);
    let start = *outer_breaks.last().unwrap();
    for i in 1..=segs {
        outer_breaks.push(start + (hi - start) * i as f64 / segs as f64);
    }
    let part_b = quad::integrate_to_infinity(outer, &outer_breaks, opts)?;
    Ok(part_a.value + part_b.value)
}

/// Γ^{(n)}(x) = ∫₀^∞ t^{x-1} e^{-t} lnⁿ(t) dt.
pub fn gamma_deriv(n: u32, x: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    let g = gamma(x)?;
    Ok(g * gamma_deriv_scaled(n, x, cfg)?)
}

/// E_{1/ρ,μ}(z) = Σ_k z^k / Γ(μ + k/ρ), evaluated by its power series.
pub fn mittag_leffler(rho: f64, mu: f64, z: Complex64, cfg: &SpecialFnConfig) -> Result<Complex64> {
    if !(rho > 0.0 && mu > 0.0) {
        return Err(Error::Domain(format!("mittag_leffler needs rho, mu > 0 (got {rho}, {mu})")));
    }
    let first = Complex64::new((-ln_gamma(mu)).exp(), 0.0);
    if z == Complex64::new(0.0, 0.0) {
        return Ok(first);
    }
    let ln_z = z.ln();
    let mut sum = first;
    let mut small_run = 0;
    for k in 1..cfg.max_terms {
        let kf = k as f64;
        let term = (ln_z * kf - ln_gamma(mu + kf / rho)).exp();
        if !term.re.is_finite() || !term.im.is_finite() {
            return Err(Error::Overflow(format!("Mittag-Leffler term {k} overflowed at |z| = {}", z.norm())));
        }
        sum += term;
        // Terms decrease once Γ(μ + k/ρ) outgrows |z|^k.
        let decreasing = kf / rho + mu > z.norm().powf(rho) + 1.0;
        if decreasing && term.norm() <= cfg.series_tol * sum.norm().max(1.0) {
            small_run += 1;
            if small_run >= 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence(format!(
        "Mittag-Leffler series did not reach tolerance in {} terms",
        cfg.max_terms
    )))
}

/// Kummer's confluent hypergeometric function M(a, b, z) = ₁F₁(a; b; z).
pub fn hyp1f1(a: f64, b: f64, z: Complex64, cfg: &SpecialFnConfig) -> Result<Complex64> {
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(Error::Pole(format!("hyp1f1: b = {b} is a non-positive integer")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small_run = 0;
    for k in 0..cfg.max_terms {
        let kf = k as f64;
        term *= z * ((a + kf) / ((b + kf) * (kf + 1.0)));
        if term == Complex64::new(0.0, 0.0) {
            return Ok(sum);
        }
        if !term.re.is_finite() || !term.im.is_finite() {
            return Err(Error::Overflow(format!("hyp1f1 term {k} overflowed")));
        }
        sum += term;
        let decreasing = ((a + kf + 1.0) / ((b + kf + 1.0) * (kf + 2.0))).abs() * z.norm() < 1.0;
        if decreasing && term.norm() <= cfg.series_tol * sum.norm().max(1.0) {
            small_run += 1;
            if small_run >= 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence(format!("hyp1f1 did not reach tolerance in {} terms", cfg.max_terms)))
}

/// Orthonormal Hermite function h_n(x) = H_n(x) e^{-x²/2} / (π^{1/4} 2^{n/2} √n!).
///
/// Evaluated with the normalized three-term recurrence; raw H_n is never formed.
pub fn hermite_fn(n: usize, x: f64) -> f64 {
    quad::hermite_functions_upto(n, x)[n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> SpecialFnConfig {
        SpecialFnConfig::default()
    }

    #[test]
    fn gamma_examples() {
        assert_relative_eq!(gamma(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(0.5).unwrap(), std::f64::consts::PI.sqrt(), max_relative = 1e-14);
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(172.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn gamma_reference_values() {
        let table = [
            (0.37, 2.403_550_020_078_653_278_3),
            (1.0001, 0.999_942_288_323_162_425_44),
            (1.3, 0.897_470_696_306_277_181_75),
            (1.9999, 0.999_957_725_684_811_892_71),
            (7.7, 2_769.830_362_327_314_632),
            (50.5, 4.290_462_912_351_959_810_9e63),
            (150.25, 1.332_150_776_195_163_484_3e261),
        ];
        for (x, expected) in table {
            let g = gamma(x).unwrap();
            assert!(((g - expected) / expected).abs() <= 1e-13, "x = {x}: {g} vs {expected}");
        }
    }

    #[test]
    fn gamma_matches_factorials_up_to_170() {
        let mut fact = 1.0f64;
        for n in 1..=170u32 {
            fact *= n as f64;
            let g = gamma(n as f64 + 1.0).unwrap();
            assert!(((g - fact) / fact).abs() <= 1e-13, "n = {n}: {g} vs {fact}");
        }
    }

    #[test]
    fn digamma_examples() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-12);
        // ψ(10) from the recurrence ψ(x+1) = ψ(x) + 1/x starting at ψ(1).
        let mut psi = -EULER_GAMMA;
        for k in 1..10 {
            psi += 1.0 / k as f64;
        }
        assert!((digamma(10.0).unwrap() - psi).abs() < 1e-12);
        assert!(digamma(-1.0).is_err());
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
        // ψ(n) = -γ + H_{n-1} with H_0 = 0.
        for n in 1..20u64 {
            assert!((digamma(n as f64).unwrap() - (-EULER_GAMMA + harmonic(n - 1))).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_deriv_examples() {
        assert_relative_eq!(gamma_deriv(0, 3.0, &cfg()).unwrap(), 2.0, max_relative = 1e-13);
        assert_relative_eq!(gamma_deriv(1, 2.0, &cfg()).unwrap(), 1.0 - EULER_GAMMA, max_relative = 1e-10);
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert_relative_eq!(
            gamma_deriv(2, 1.0, &cfg()).unwrap(),
            EULER_GAMMA * EULER_GAMMA + pi2_6,
            max_relative = 1e-10
        );
    }

    #[test]
    fn gamma_deriv_matches_gamma_times_digamma() {
        for &x in &[0.5, 1.0, 2.0, 5.0, 10.0] {
            let lhs = gamma_deriv(1, x, &cfg()).unwrap();
            let rhs = gamma(x).unwrap() * digamma(x).unwrap();
            assert!(((lhs - rhs) / rhs).abs() <= 1e-8, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn gamma_deriv_of_factorials() {
        // Γ'(n+1) = n! (-γ + H_n)
        let mut fact = 1.0;
        for n in 0..40u64 {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = fact * (-EULER_GAMMA + harmonic(n));
            let got = gamma_deriv(1, n as f64 + 1.0, &cfg()).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-10, "n = {n}: {got} vs {expected}");
        }
    }

    #[test]
    fn gamma_recurrence_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.1..50.0);
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!(((lhs - rhs) / lhs).abs() <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn mittag_leffler_examples() {
        let e = mittag_leffler(1.0, 1.0, Complex64::new(1.0, 0.0), &cfg()).unwrap();
        assert!((e.re - std::f64::consts::E).abs() < 1e-14 && e.im == 0.0);
        let at_zero = mittag_leffler(2.5, 1.7, Complex64::new(0.0, 0.0), &cfg()).unwrap();
        assert_relative_eq!(at_zero.re, 1.0 / gamma(1.7).unwrap(), max_relative = 1e-14);
        // 200-term direct sum of 1/Γ(1 + k/2), terms taken largest-index first.
        let direct: f64 = (0..200).rev().map(|k| 1.0 / gamma(1.0 + k as f64 / 2.0).unwrap()).sum();
        let v = mittag_leffler(2.0, 1.0, Complex64::new(1.0, 0.0), &cfg()).unwrap();
        assert_relative_eq!(v.re, direct, max_relative = 1e-14);
        // E_{1/2,1}(1) = e erfc(-1), to 20 digits.
        assert_relative_eq!(v.re, 5.008_980_080_762_283_466_3, max_relative = 1e-14);
    }

    #[test]
    fn mittag_leffler_is_exp_on_grid() {
        for i in 0..5 {
            for j in 0..5 {
                let z = Complex64::new(-2.0 + i as f64, -2.0 + j as f64);
                let v = mittag_leffler(1.0, 1.0, z, &cfg()).unwrap();
                assert!((v - z.exp()).norm() <= 1e-10, "z = {z}");
            }
        }
    }

    #[test]
    fn mittag_leffler_non_convergence() {
        let tight = SpecialFnConfig { max_terms: 16, ..cfg() };
        let r = mittag_leffler(1.0, 1.0, Complex64::new(30.0, 0.0), &tight);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }

    #[test]
    fn hyp1f1_examples() {
        let z0 = hyp1f1(0.3, 1.2, Complex64::new(0.0, 0.0), &cfg()).unwrap();
        assert_eq!(z0, Complex64::new(1.0, 0.0));
        let z = Complex64::new(0.7, -1.1);
        assert!((hyp1f1(1.0, 1.0, z, &cfg()).unwrap() - z.exp()).norm() < 1e-14);
        // 200-term direct sum of (1/2)_k / (2)_k (-2)^k / k!
        let mut term = 1.0f64;
        let mut terms = vec![term];
        for k in 0..200 {
            let kf = k as f64;
            term *= (0.5 + kf) / (2.0 + kf) * -2.0 / (kf + 1.0);
            terms.push(term);
        }
        let direct: f64 = terms.iter().rev().sum();
        let v = hyp1f1(0.5, 2.0, Complex64::new(-2.0, 0.0), &cfg()).unwrap();
        assert!((v.re - direct).abs() < 1e-15, "{} vs {direct}", v.re);
        assert!(matches!(hyp1f1(1.0, -2.0, z, &cfg()), Err(Error::Pole(_))));
    }

    #[test]
    fn hyp1f1_contiguous_derivative_relation() {
        // z M'(a,b,z) = a (M(a+1,b,z) - M(a,b,z)) and M'(a,b,z) = (a/b) M(a+1,b+1,z).
        let (a, b) = (0.7, 2.4);
        for k in 0..10 {
            let z = Complex64::from_polar(0.3 + 0.35 * k as f64, 0.6 * k as f64);
            let lhs = hyp1f1(a + 1.0, b + 1.0, z, &cfg()).unwrap() * (a / b) * z;
            let rhs = (hyp1f1(a + 1.0, b, z, &cfg()).unwrap() - hyp1f1(a, b, z, &cfg()).unwrap()) * a;
            assert!((lhs - rhs).norm() <= 1e-8, "z = {z}");
        }
    }

    #[test]
    fn hermite_examples() {
        assert_relative_eq!(hermite_fn(0, 0.0), std::f64::consts::PI.powf(-0.25), max_relative = 1e-15);
        assert_eq!(hermite_fn(1, 0.0), 0.0);
        // Explicit H_5(x) = 32x^5 - 160x^3 + 120x.
        let x: f64 = 1.3;
        let h5 = 32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x;
        let norm = std::f64::consts::PI.powf(0.25) * 2f64.powf(2.5) * 120f64.sqrt();
        assert_relative_eq!(hermite_fn(5, x), h5 * (-x * x / 2.0).exp() / norm, max_relative = 1e-13);
    }

    #[test]
    fn hermite_orthonormality_under_200_node_rule() {
        let (nodes, weights) = quad::gauss_hermite(200);
        let table: Vec<Vec<f64>> = nodes.iter().map(|&x| quad::hermite_functions_upto(20, x)).collect();
        for m in 0..=20 {
            for n in 0..=20 {
                let s: f64 = table.iter().zip(&weights).map(|(h, w)| w * h[m] * h[n]).sum();
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((s - expected).abs() <= 1e-8, "m={m} n={n}: {s}");
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(SpecialFnConfig { max_terms: 4, ..cfg() }.validate().is_err());
        assert!(SpecialFnConfig { series_tol: 0.0, ..cfg() }.validate().is_err());
    }
}
