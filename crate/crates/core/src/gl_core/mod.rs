//! φ descriptors, truncated power series, the Gelfond–Leontiev derivative
//! D_φ and the multiplication operator M_z.

mod phi;
mod series;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use phi::{DescriptorJson, Family, Growth, PhiDescriptor, GAMMA_DERIV_MAX_INDEX};
pub use series::TruncatedSeries;

use crate::error::{Error, Result};

/// φ_k for the descriptor (divided by the raw φ₀ when normalized).
pub fn phi_coeff(desc: &PhiDescriptor, k: usize) -> Result<f64> {
    desc.coeff(k)
}

/// D_φ f: a_k z^k ↦ a_k (φ_{k-1}/φ_k) z^{k-1}. The cap drops by one; a
/// constant maps to the zero series with cap 0.
pub fn gl_derivative(desc: &PhiDescriptor, f: &TruncatedSeries) -> Result<TruncatedSeries> {
    let n = f.degree_cap();
    if n == 0 {
        return Ok(TruncatedSeries::zero(0));
    }
    let coeffs = (1..=n)
        .map(|k| Ok(f.coeff(k) * desc.ratio(k)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncatedSeries::new(coeffs))
}

/// D_φ^k f by k successive applications. Once the cap reaches 0 the result
/// stays the zero series.
pub fn gl_derivative_pow(desc: &PhiDescriptor, f: &TruncatedSeries, k: usize) -> Result<TruncatedSeries> {
    let mut out = f.clone();
    for _ in 0..k {
        out = gl_derivative(desc, &out)?;
    }
    Ok(out)
}

/// M_z f = z f; the cap grows by one.
pub fn multiply_z(f: &TruncatedSeries) -> TruncatedSeries {
    let mut coeffs = Vec::with_capacity(f.degree_cap() + 2);
    coeffs.push(Complex64::new(0.0, 0.0));
    coeffs.extend_from_slice(f.coeffs());
    TruncatedSeries::new(coeffs)
}

/// Partial sum of φ(z) with the magnitude of its last term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEval {
    pub value: Complex64,
    pub last_term: f64,
}

/// φ truncated at degree N with its coefficient ratios cached, for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct PhiSeries {
    c0: f64,
    ratios: Vec<f64>,
    entire: bool,
}

impl PhiSeries {
    pub fn new(desc: &PhiDescriptor, n: usize) -> Result<Self> {
        let ratios = (1..=n).map(|k| desc.ratio(k)).collect::<Result<Vec<_>>>()?;
        Ok(Self { c0: desc.coeff(0)?, ratios, entire: desc.is_entire() })
    }

    pub fn degree(&self) -> usize {
        self.ratios.len()
    }

    /// Terms are generated by t_k = t_{k-1} z / (φ_{k-1}/φ_k), so no φ_k
    /// is formed on its own.
    pub fn eval(&self, z: Complex64) -> Result<PhiEval> {
        if !self.entire && z.norm() >= 1.0 {
            return Err(Error::Divergence(format!("phi(z) = 1/(1-z) series diverges at |z| = {}", z.norm())));
        }
        let mut term = Complex64::new(self.c0, 0.0);
        let mut sum = term;
        for r in &self.ratios {
            term = term * z / r;
            sum += term;
        }
        if !sum.re.is_finite() || !sum.im.is_finite() {
            return Err(Error::Overflow(format!("phi({z}) overflowed")));
        }
        Ok(PhiEval { value: sum, last_term: term.norm() })
    }
}

/// Σ_{k=0}^{N} φ_k z^k with the magnitude of the last term.
pub fn phi_eval(desc: &PhiDescriptor, z: Complex64, n: usize) -> Result<PhiEval> {
    if !desc.is_entire() && z.norm() >= 1.0 {
        return Err(Error::Divergence(format!("phi(z) = 1/(1-z) series diverges at |z| = {}", z.norm())));
    }
    PhiSeries::new(desc, n)?.eval(z)
}

/// Fitted order and type next to the asserted values, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rho_hat: f64,
    pub sigma_hat: f64,
    pub asserted: Option<Growth>,
}

/// Estimates (ρ, σ) from lim k^{1/ρ} |φ_k|^{1/k} = (σeρ)^{1/ρ}.
///
/// Over k ∈ [K/2, K], -ln|φ_k| is fitted by least squares to
/// α k ln k + β k + γ ln k + δ, the form Stirling's formula gives for every
/// Γ-based family. Then ρ̂ = 1/α and ln(σ̂eρ̂) = -β/α.
pub fn order_degree_check(desc: &PhiDescriptor, k_max: usize) -> Result<GrowthFit> {
    if !desc.is_entire() {
        return Err(Error::NonEntire("order and type are defined for entire phi only".into()));
    }
    if k_max < 50 {
        return Err(Error::Invalid(format!("order_degree_check needs K >= 50, got {k_max}")));
    }
    let ks: Vec<usize> = (k_max / 2..=k_max).collect();
    let kf = k_max as f64;
    // Columns scaled to comparable magnitude before the solve.
    let scales = [kf * kf.ln(), kf, kf.ln(), 1.0];
    let a = nalgebra::DMatrix::from_fn(ks.len(), 4, |i, j| {
        let k = ks[i] as f64;
        let v = match j {
            0 => k * k.ln(),
            1 => k,
            2 => k.ln(),
            _ => 1.0,
        };
        v / scales[j]
    });
    let y = ks
        .iter()
        .map(|&k| Ok(-desc.ln_coeff(k)?.0))
        .collect::<Result<Vec<_>>>()?;
    let y = nalgebra::DVector::from_vec(y);
    let sol = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Singular(format!("growth fit: {e}")))?;
    let alpha = sol[0] / scales[0];
    let beta = sol[1] / scales[1];
    let rho_hat = 1.0 / alpha;
    let sigma_hat = (-beta / alpha).exp() / (std::f64::consts::E * rho_hat);
    Ok(GrowthFit { rho_hat, sigma_hat, asserted: desc.growth() })
}

/// |φ_{k-1}/φ_k|^{1/k} for k in `lo..=hi`; tends to 1 for entire φ.
pub fn ratio_root_trend(desc: &PhiDescriptor, lo: usize, hi: usize) -> Result<Vec<f64>> {
    (lo.max(1)..=hi).map(|k| Ok(desc.ratio(k)?.abs().powf(1.0 / k as f64))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn entire_families() -> Vec<PhiDescriptor> {
        vec![
            PhiDescriptor::exponential(),
            PhiDescriptor::mittag_leffler(2.0, 1.0).unwrap(),
            PhiDescriptor::mittag_leffler(0.7, 1.3).unwrap(),
            PhiDescriptor::stretched_gamma(1.5, 2.0).unwrap(),
            PhiDescriptor::gamma_deriv(1).unwrap(),
            PhiDescriptor::gamma_deriv(2).unwrap(),
            PhiDescriptor::dunkl(0.5).unwrap(),
            PhiDescriptor::dunkl(1.0).unwrap(),
        ]
    }

    #[test]
    fn derivative_examples() {
        let e = PhiDescriptor::exponential();
        let d = gl_derivative(&e, &TruncatedSeries::from_real(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(d.degree_cap(), 1);
        assert!((d.coeff(0)).norm() == 0.0 && (d.coeff(1) - c(2.0)).norm() < 1e-14);
        let d = gl_derivative(&e, &TruncatedSeries::constant(c(5.0))).unwrap();
        assert!(d.is_zero() && d.degree_cap() == 0);
        let b = PhiDescriptor::backward_shift();
        let f = TruncatedSeries::from_real(&[3.0, -1.0, 2.0]);
        assert_eq!(gl_derivative(&b, &f).unwrap().coeffs(), &[c(-1.0), c(2.0)]);
    }

    #[test]
    fn derivative_power_examples() {
        let e = PhiDescriptor::exponential();
        let z3 = TruncatedSeries::monomial(3, c(1.0));
        let d2 = gl_derivative_pow(&e, &z3, 2).unwrap();
        assert!((d2.coeff(1) - c(6.0)).norm() < 1e-13 && d2.coeff(0).norm() == 0.0);
        let f = TruncatedSeries::from_real(&[1.0, 2.0, 3.0]);
        assert_eq!(gl_derivative_pow(&e, &f, 0).unwrap(), f);
        let dk = PhiDescriptor::dunkl(1.0).unwrap();
        let z4 = TruncatedSeries::monomial(4, c(2.5));
        let d4 = gl_derivative_pow(&dk, &z4, 4).unwrap();
        let expected = 2.5 * dk.coeff(0).unwrap() / dk.coeff(4).unwrap();
        assert_eq!(d4.degree_cap(), 0);
        assert_relative_eq!(d4.coeff(0).re, expected, max_relative = 1e-12);
        assert!(gl_derivative_pow(&e, &z3, 7).unwrap().is_zero());
    }

    #[test]
    fn multiply_z_examples() {
        assert_eq!(multiply_z(&TruncatedSeries::constant(c(1.0))).coeffs(), &[c(0.0), c(1.0)]);
        let f = TruncatedSeries::from_real(&[4.0, 5.0]);
        assert_eq!(multiply_z(&f).coeffs(), &[c(0.0), c(4.0), c(5.0)]);
        let z = multiply_z(&TruncatedSeries::zero(2));
        assert!(z.is_zero() && z.degree_cap() == 3);
    }

    #[test]
    fn phi_eval_examples() {
        let e = phi_eval(&PhiDescriptor::exponential(), c(1.0), 60).unwrap();
        assert!((e.value.re - std::f64::consts::E).abs() < 1e-14);
        assert!(e.last_term < 1e-80);
        let b = phi_eval(&PhiDescriptor::backward_shift(), c(0.5), 60).unwrap();
        assert!((b.value.re - 2.0).abs() < 1e-14);
        assert!(matches!(phi_eval(&PhiDescriptor::backward_shift(), c(1.0), 10), Err(Error::Divergence(_))));
        let ml = phi_eval(&PhiDescriptor::mittag_leffler(2.0, 1.0).unwrap(), c(1.0), 200).unwrap();
        let oracle = crate::special_functions::mittag_leffler(2.0, 1.0, c(1.0), &Default::default()).unwrap();
        assert!((ml.value - oracle).norm() < 1e-14);
    }

    #[test]
    fn order_degree_examples() {
        let g = order_degree_check(&PhiDescriptor::exponential(), 200).unwrap();
        assert!((g.rho_hat - 1.0).abs() < 0.05 && (g.sigma_hat - 1.0).abs() < 0.05, "{g:?}");
        let g = order_degree_check(&PhiDescriptor::mittag_leffler(2.0, 1.0).unwrap(), 400).unwrap();
        assert!((g.rho_hat - 2.0).abs() < 0.2, "{g:?}");
        assert!((g.sigma_hat - 1.0).abs() < 0.05, "{g:?}");
        let g = order_degree_check(&PhiDescriptor::stretched_gamma(0.5, 3.0).unwrap(), 300).unwrap();
        assert!((g.rho_hat - 3.0).abs() < 0.15 && (g.sigma_hat - 0.5).abs() < 0.025, "{g:?}");
        let g = order_degree_check(&PhiDescriptor::stretched_gamma(1.0, 1.0).unwrap(), 200).unwrap();
        assert!((g.rho_hat - 1.0).abs() < 0.05, "{g:?}");
        assert!(matches!(order_degree_check(&PhiDescriptor::backward_shift(), 100), Err(Error::NonEntire(_))));
        assert!(order_degree_check(&PhiDescriptor::exponential(), 10).is_err());
    }

    #[test]
    fn eigenfunction_property() {
        for d in entire_families() {
            let n = 25;
            let phi = TruncatedSeries::new((0..=n).map(|k| c(d.coeff(k).unwrap())).collect());
            let dphi = gl_derivative(&d, &phi).unwrap();
            for k in 0..n {
                let expected = d.coeff(k).unwrap();
                assert!((dphi.coeff(k).re - expected).abs() <= 1e-13 * expected.abs(), "{:?} k={k}", d.family());
            }
        }
    }

    #[test]
    fn radius_inheritance_trend() {
        for d in entire_families() {
            let t = ratio_root_trend(&d, 50, 200).unwrap();
            let last = *t.last().unwrap();
            assert!((last - 1.0).abs() < 0.1, "{:?}: {last}", d.family());
            // band narrows toward 1
            assert!((t[0] - 1.0).abs() + 1e-12 >= (last - 1.0).abs(), "{:?}", d.family());
        }
        let b = ratio_root_trend(&PhiDescriptor::backward_shift(), 1, 50).unwrap();
        assert!(b.iter().all(|&r| r == 1.0));
    }

    fn series_strategy(max_deg: usize) -> impl Strategy<Value = TruncatedSeries> {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..=max_deg + 1)
            .prop_map(|v| TruncatedSeries::new(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn derivative_is_linear(f in series_strategy(20), g in series_strategy(20),
                                a in -3.0f64..3.0, b in -3.0f64..3.0, fam in 0usize..8) {
            let d = &entire_families()[fam];
            let (a, b) = (c(a), c(b));
            let lhs = gl_derivative(d, &(&f.scale(a) + &g.scale(b))).unwrap();
            let rhs = &gl_derivative(d, &f.padded(g.degree_cap())).unwrap().scale(a)
                + &gl_derivative(d, &g.padded(f.degree_cap())).unwrap().scale(b);
            for k in 0..=lhs.degree_cap() {
                let scale = 1.0 + lhs.coeff(k).norm();
                prop_assert!((lhs.coeff(k) - rhs.coeff(k)).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn power_matches_telescoped_ratio(f in series_strategy(30), k in 0usize..=6, fam in 0usize..8) {
            let d = &entire_families()[fam];
            let p = gl_derivative_pow(d, &f, k).unwrap();
            if k <= f.degree_cap() {
                prop_assert_eq!(p.degree_cap(), f.degree_cap() - k);
                for j in 0..=p.degree_cap() {
                    let expected = f.coeff(j + k) * d.ratio_span(j, k).unwrap();
                    prop_assert!((p.coeff(j) - expected).norm() <= 1e-12 * expected.norm().max(1e-300));
                }
            } else {
                prop_assert!(p.is_zero());
            }
        }

        #[test]
        fn derivative_undoes_multiplication_for_exponential(f in series_strategy(15)) {
            // D(zf) - z Df = f for φ = e^z (the canonical commutator)
            let e = PhiDescriptor::exponential();
            let lhs = gl_derivative(&e, &multiply_z(&f)).unwrap();
            let zdf = multiply_z(&gl_derivative(&e, &f).unwrap());
            let diff = &lhs - &zdf;
            for k in 0..=f.degree_cap() {
                prop_assert!((diff.coeff(k) - f.coeff(k)).norm() <= 1e-12 * (1.0 + f.coeff(k).norm() * k as f64));
            }
        }
    }
}
