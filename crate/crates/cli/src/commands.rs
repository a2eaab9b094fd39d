use glfock::bargmann::{bargmann_forward, bargmann_inverse, intertwine_residuals, HermiteCoeffs};
use glfock::fock_space::{duality_check, moment_check, reproduce, VerifiedWeight};
use glfock::gl_core::{order_degree_check, PhiDescriptor, TruncatedSeries};
use glfock::lattice_frames::{density, frame_sweep_each, DensityNorm, PointSet};
use glfock::weierstrass::{inequality_grid, omega_bound, psi_pair, radius_bounds, LatticeSpec, PerturbedLattice, RadiusTrend};
use glfock::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::report::{Cell, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Moments,
    Duality,
    Bargmann,
    Weierstrass,
    Reproduce,
}

impl Suite {
    pub fn default_tol(self) -> f64 {
        match self {
            Suite::Moments => 1e-8,
            Suite::Duality => 1e-12,
            Suite::Bargmann => 1e-13,
            // Rounding slack on |1 − E| ≤ |Ω| where |z| = 1 makes them equal.
            Suite::Weierstrass => 1e-12,
            Suite::Reproduce => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum NormArg {
    #[default]
    TwoPi,
    Lebesgue,
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn unit(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Σ b_k √|φ_k| z^k with b_k uniform in the unit square.
fn orthonormal_series(rng: &mut ChaCha8Rng, desc: &PhiDescriptor, deg: usize) -> Result<TruncatedSeries> {
    let coeffs = (0..=deg).map(|k| Ok(unit(rng) * desc.coeff(k)?.abs().sqrt())).collect::<Result<Vec<_>>>()?;
    Ok(TruncatedSeries::new(coeffs))
}

fn verified(cfg: &RunConfig, n_max: usize, tol: f64) -> Result<VerifiedWeight> {
    cfg.weight_kernel()?.verify(n_max, tol, &cfg.quadrature)
}

pub fn phi_info(cfg: &RunConfig) -> Result<Report> {
    let desc = &cfg.phi;
    let mut r = Report::new("phi-info", &["key", "value"]);
    let mut put = |k: &str, v: Cell| r.row(vec![k.into(), v]);
    put("family", desc.family().name().into());
    for k in 0..10 {
        put(&format!("phi_{k}"), desc.coeff(k)?.into());
    }
    match order_degree_check(desc, cfg.truncation.series_n.max(60)) {
        Ok(fit) => {
            put("rho_hat", fit.rho_hat.into());
            put("sigma_hat", fit.sigma_hat.into());
        }
        Err(e) => {
            put("rho_hat", format!("n/a ({e})").into());
            put("sigma_hat", "n/a".into());
        }
    }
    // ψ and the radii are defined for φ₀ = 1.
    let norm = desc.normalized();
    match psi_pair(&norm) {
        Ok(psi) => {
            put("psi1", psi.psi1.into());
            put("psi2", psi.psi2.into());
            let rb = radius_bounds(&norm, cfg.truncation.series_n.max(100))?;
            put("r_l", rb.r_l.into());
            put("r_u", rb.r_u.into());
            put(
                "r_u_trend",
                match rb.trend {
                    RadiusTrend::Finite => "finite",
                    RadiusTrend::UnboundedTrend => "unbounded-trend",
                }
                .into(),
            );
        }
        Err(e) => {
            put("psi1", format!("n/a ({e})").into());
            put("psi2", "n/a".into());
        }
    }
    Ok(r)
}

pub fn check(cfg: &RunConfig, suite: Suite, tol: Option<f64>, n_max: Option<usize>) -> Result<Report> {
    let tol = tol.unwrap_or(suite.default_tol());
    match suite {
        Suite::Moments => check_moments(cfg, tol, n_max.unwrap_or(15)),
        Suite::Duality => check_duality(cfg, tol, n_max.unwrap_or(20)),
        Suite::Bargmann => check_bargmann(cfg, tol, n_max.unwrap_or(15)),
        Suite::Weierstrass => check_weierstrass(cfg, tol),
        Suite::Reproduce => check_reproduce(cfg, tol, n_max.unwrap_or(10)),
    }
}

fn check_moments(cfg: &RunConfig, tol: f64, n_max: usize) -> Result<Report> {
    let rep = moment_check(&cfg.phi, &cfg.weight_kernel()?, n_max, tol, &cfg.quadrature)?;
    let mut r = Report::new("moments", &["n", "moment", "target", "residual"]);
    r.field("tol", tol);
    for row in &rep.rows {
        r.row(vec![row.n.into(), row.moment.into(), row.target.into(), row.residual.into()]);
        r.check(row.residual <= tol, || format!("moment {} residual {:.3e} exceeds {tol:.1e}", row.n, row.residual));
    }
    r.check(!rep.signed_measure_warning, || "weight is negative on part of the quadrature".into());
    Ok(r)
}

fn check_duality(cfg: &RunConfig, tol: f64, max_deg: usize) -> Result<Report> {
    let mut g = rng(cfg);
    let mut r = Report::new("duality", &["pair", "degree_f", "degree_g", "residual"]);
    r.field("tol", tol);
    for i in 0..100usize {
        let (df, dg) = (g.random_range(0..=max_deg), g.random_range(0..=max_deg));
        let f = orthonormal_series(&mut g, &cfg.phi, df)?;
        let h = orthonormal_series(&mut g, &cfg.phi, dg)?;
        let res = duality_check(&cfg.phi, &f, &h)?;
        r.row(vec![i.into(), df.into(), dg.into(), res.into()]);
        r.check(res <= tol, || format!("pair {i} residual {res:.3e} exceeds {tol:.1e}"));
    }
    Ok(r)
}

fn check_bargmann(cfg: &RunConfig, tol: f64, deg: usize) -> Result<Report> {
    let mut g = rng(cfg);
    let mut r = Report::new("bargmann", &["sample", "roundtrip_ulps", "lower_residual", "raise_residual"]);
    r.field("tol", tol);
    for i in 0..20usize {
        let f = HermiteCoeffs::new((0..=deg).map(|_| unit(&mut g)).collect());
        let back = bargmann_inverse(&cfg.phi, &bargmann_forward(&cfg.phi, &f)?)?;
        let ulps = roundtrip_ulps(&f, &back);
        let (lo, hi) = intertwine_residuals(&cfg.phi, &f)?;
        r.row(vec![i.into(), ulps.into(), lo.into(), hi.into()]);
        r.check(ulps <= 4.0, || format!("sample {i} roundtrip is off by {ulps} ulps"));
        r.check(lo <= tol && hi <= tol, || format!("sample {i} intertwining residuals {lo:.3e}, {hi:.3e} exceed {tol:.1e}"));
    }
    Ok(r)
}

/// Largest coefficient error of a roundtrip in units of ε|a_k|.
pub fn roundtrip_ulps(f: &HermiteCoeffs, back: &HermiteCoeffs) -> f64 {
    (0..f.len())
        .map(|k| {
            let a = f.get(k);
            let d = (a - back.get(k)).norm();
            if d == 0.0 {
                0.0
            } else {
                d / (f64::EPSILON * a.norm())
            }
        })
        .fold(0.0, f64::max)
}

fn check_weierstrass(cfg: &RunConfig, tol: f64) -> Result<Report> {
    let desc = cfg.phi.normalized();
    let rows = inequality_grid(&desc, 41, cfg.truncation.series_n)?;
    let bound = omega_bound(&desc)?;
    let mut r = Report::new("weierstrass", &["z_re", "z_im", "lhs", "rhs", "ratio"]);
    r.field("omega_bound", bound);
    let mut sup = 0.0f64;
    for row in &rows {
        sup = sup.max(row.rhs);
        r.row(vec![row.z_re.into(), row.z_im.into(), row.lhs.into(), row.rhs.into(), row.ratio.into()]);
        r.check(row.lhs <= row.rhs * (1.0 + tol), || {
            format!("|1 - E| = {:.6e} > |Omega| = {:.6e} at ({}, {})", row.lhs, row.rhs, row.z_re, row.z_im)
        });
    }
    r.field("sup_omega", sup);
    r.check(sup <= bound, || format!("sup |Omega| = {sup:.6e} exceeds the bound {bound:.6e}"));
    Ok(r)
}

fn check_reproduce(cfg: &RunConfig, tol: f64, max_deg: usize) -> Result<Report> {
    let vw = verified(cfg, max_deg, 1e-6)?;
    let quad = glfock::fock_space::QuadratureScheme {
        angular_nodes: cfg.quadrature.angular_nodes.max(2 * max_deg + 2),
        ..cfg.quadrature
    };
    let mut g = rng(cfg);
    let mut r = Report::new("reproduce", &["poly", "z_re", "z_im", "value_re", "value_im", "error"]);
    r.field("tol", tol);
    for i in 0..20usize {
        let deg = g.random_range(0..=max_deg);
        let f = TruncatedSeries::new((0..=deg).map(|_| unit(&mut g)).collect());
        for _ in 0..10 {
            let z = Complex64::from_polar(g.random_range(0.0..1.5), g.random_range(0.0..std::f64::consts::TAU));
            let v = reproduce(&vw, &f, z, &quad)?;
            let err = (v - f.eval(z)).norm();
            r.row(vec![i.into(), z.re.into(), z.im.into(), v.re.into(), v.im.into(), err.into()]);
            r.check(err <= tol, || format!("polynomial {i} at {z}: error {err:.3e} exceeds {tol:.1e}"));
        }
    }
    Ok(r)
}

/// Evenly spaced sizes from s_min to s_max, both included.
pub fn sweep_sizes(s_min: f64, s_max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![s_min],
        _ => (0..steps).map(|i| s_min + (s_max - s_min) * i as f64 / (steps - 1) as f64).collect(),
    }
}

pub fn frames_sweep(cfg: &RunConfig, s_min: f64, s_max: f64, steps: usize, window_n: usize) -> Result<Report> {
    if !(s_min > 0.0 && s_min < s_max) {
        return Err(Error::Invalid(format!("need 0 < s_min < s_max, got {s_min} and {s_max}")));
    }
    let mut r = Report::new("frames-sweep", &["s", "A", "B", "condition", "basis_dim", "stability", "status"]);
    let sizes = sweep_sizes(s_min, s_max, steps);
    if sizes.is_empty() {
        return Ok(r);
    }
    let t = cfg.truncation;
    let vw = verified(cfg, t.basis_n, 1e-6)?;
    for (s, res) in frame_sweep_each(&vw, window_n, &sizes, t.basis_n, t.lattice_m)? {
        match res {
            Ok(f) => r.row(vec![s.into(), f.a.into(), f.b.into(), f.condition.into(), f.basis_dim.into(), f.stability.into(), "ok".into()]),
            Err(e) => {
                let nan = || Cell::Num(f64::NAN);
                r.row(vec![s.into(), nan(), nan(), nan(), t.basis_n.into(), nan(), format!("error: {e}").replace(',', ";").into()])
            }
        }
    }
    Ok(r)
}

pub fn weierstrass_table(cfg: &RunConfig, grid: usize) -> Result<Report> {
    let desc = cfg.phi.normalized();
    let rows = inequality_grid(&desc, grid, cfg.truncation.series_n)?;
    let mut r = Report::new("weierstrass-table", &["z_re", "z_im", "lhs", "rhs", "ratio"]);
    let psi = psi_pair(&desc)?;
    r.field("psi1", psi.psi1);
    r.field("psi2", psi.psi2);
    match omega_bound(&desc) {
        Ok(b) => r.field("omega_bound", b),
        Err(e) => r.field("omega_bound", format!("n/a ({e})")),
    }
    for row in rows {
        r.row(vec![row.z_re.into(), row.z_im.into(), row.lhs.into(), row.rhs.into(), row.ratio.into()]);
    }
    Ok(r)
}

pub fn density_cmd(cfg: &RunConfig, lambda: f64, radii: &[f64], big_q: f64, shifts: usize, norm: NormArg) -> Result<Report> {
    let lat = LatticeSpec::new(lambda, cfg.truncation.lattice_m)?;
    let set = if big_q > 0.0 {
        PointSet::from_perturbed(&PerturbedLattice::random(lat, big_q, cfg.seed)?)
    } else {
        PointSet::from_lattice(lat)
    };
    let norm = match norm {
        NormArg::TwoPi => DensityNorm::TwoPi,
        NormArg::Lebesgue => DensityNorm::Lebesgue,
    };
    let rep = density(&set, radii, shifts, norm)?;
    let mut r = Report::new("density", &["r", "n_minus", "n_plus"]);
    r.field("d_minus", rep.d_minus);
    r.field("d_plus", rep.d_plus);
    for (rad, (lo, hi)) in rep.r_sequence.iter().zip(&rep.counts) {
        r.row(vec![(*rad).into(), (*lo).into(), (*hi).into()]);
    }
    Ok(r)
}

pub fn bargmann_roundtrip(cfg: &RunConfig, degree: usize, samples: usize) -> Result<Report> {
    let mut g = rng(cfg);
    let mut r = Report::new("bargmann-roundtrip", &["sample", "roundtrip_ulps", "norm_before", "norm_after"]);
    for i in 0..samples {
        let f = HermiteCoeffs::new((0..=degree).map(|_| unit(&mut g)).collect());
        let big_f = bargmann_forward(&cfg.phi, &f)?;
        let back = bargmann_inverse(&cfg.phi, &big_f)?;
        let ulps = roundtrip_ulps(&f, &back);
        r.row(vec![i.into(), ulps.into(), f.norm().into(), back.norm().into()]);
        r.check(ulps <= 4.0, || format!("sample {i} roundtrip is off by {ulps} ulps"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use glfock::gl_core::PhiDescriptor;

    fn cfg(phi: PhiDescriptor) -> RunConfig {
        RunConfig { phi, ..RunConfig::default() }
    }

    fn value<'a>(r: &'a Report, key: &str) -> &'a Cell {
        &r.rows.iter().find(|row| row[0] == Cell::Text(key.into())).unwrap()[1]
    }

    #[test]
    fn phi_info_examples() {
        let r = phi_info(&cfg(PhiDescriptor::exponential())).unwrap();
        assert_eq!(value(&r, "psi1"), &Cell::Num(1.0));
        assert_eq!(value(&r, "psi2"), &Cell::Num(0.5));
        assert_eq!(value(&r, "r_l"), &Cell::Num(1.5));
        assert_eq!(value(&r, "r_u_trend"), &Cell::Text("unbounded-trend".into()));
        let b = phi_info(&cfg(PhiDescriptor::backward_shift())).unwrap();
        assert_eq!(value(&b, "r_l"), &Cell::Num(1.0));
        assert_eq!(value(&b, "r_u"), &Cell::Num(1.0));
    }

    #[test]
    fn sweep_sizes_include_both_ends() {
        assert!(sweep_sizes(0.3, 1.5, 0).is_empty());
        assert_eq!(sweep_sizes(0.3, 1.5, 1), vec![0.3]);
        let s = sweep_sizes(0.3, 1.5, 13);
        assert_eq!(s.len(), 13);
        assert_eq!((s[0], s[12]), (0.3, 1.5));
        assert!((s[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn suites_pass_for_the_classic_case() {
        let c = cfg(PhiDescriptor::exponential());
        for suite in [Suite::Moments, Suite::Duality, Suite::Bargmann, Suite::Weierstrass, Suite::Reproduce] {
            let r = check(&c, suite, None, None).unwrap();
            assert_eq!(r.passed, Some(true), "{suite:?}: {:?}", r.failure);
        }
    }

    #[test]
    fn quadrature_suites_reject_backward_shift() {
        let c = cfg(PhiDescriptor::backward_shift());
        assert!(matches!(check(&c, Suite::Moments, None, None), Err(Error::NonEntire(_))));
    }

    #[test]
    fn mittag_leffler_bargmann_suite_passes() {
        let c = cfg(PhiDescriptor::mittag_leffler(2.0, 1.0).unwrap());
        assert_eq!(check(&c, Suite::Bargmann, None, None).unwrap().passed, Some(true));
    }

    #[test]
    fn frames_sweep_trend() {
        let c = cfg(PhiDescriptor::exponential());
        let r = frames_sweep(&c, 0.3, 1.5, 13, 0).unwrap();
        assert_eq!(r.rows.len(), 13);
        let a: Vec<f64> = r.rows.iter().map(|row| if let Cell::Num(v) = row[1] { v } else { f64::NAN }).collect();
        assert!(a[0] > 0.0);
        assert!(a[12] < 0.1 * a[0], "{a:?}");
        assert!(frames_sweep(&c, 0.3, 1.5, 0, 0).unwrap().rows.is_empty());
        assert!(matches!(frames_sweep(&c, 1.5, 0.3, 3, 0), Err(Error::Invalid(_))));
        let n1 = frames_sweep(&c, 0.3, 0.6, 4, 1).unwrap();
        assert!(n1.rows.iter().all(|row| matches!(row[1], Cell::Num(v) if v > 0.0)));
    }
}
