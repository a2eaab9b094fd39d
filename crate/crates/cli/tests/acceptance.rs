//! One pass/fail line per acceptance criterion, with its runtime and limit.
//! Run with `cargo test -p glfock-cli --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use glfock::bargmann::{bargmann_forward, bargmann_inverse, intertwine_residuals, HermiteCoeffs};
use glfock::fock_space::{duality_check, moment_check, reproduce, QuadratureScheme, WeightKernel};
use glfock::gl_core::{PhiDescriptor, TruncatedSeries};
use glfock::lattice_frames::frame_sweep;
use glfock::special_functions::gamma;
use glfock::weierstrass::{
    inequality_grid, omega, psi_pair, radius_bounds, two_sided_diag, weierstrass_factor, zero_count, GVariant,
    LatticeProduct, LatticeSpec, PerturbedLattice,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn cz(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit(rng: &mut ChaCha8Rng) -> Complex64 {
    cz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ml(rho: f64, mu: f64) -> PhiDescriptor {
    PhiDescriptor::mittag_leffler(rho, mu).unwrap()
}

fn entire_families() -> Vec<PhiDescriptor> {
    vec![
        PhiDescriptor::exponential(),
        ml(2.0, 1.0),
        ml(0.7, 1.3),
        PhiDescriptor::stretched_gamma(1.5, 2.0).unwrap(),
        PhiDescriptor::gamma_deriv(1).unwrap(),
        PhiDescriptor::gamma_deriv(2).unwrap(),
        PhiDescriptor::dunkl(0.5).unwrap(),
    ]
}

fn moments() -> Outcome {
    let q = QuadratureScheme::default();
    let exp = PhiDescriptor::exponential();
    let e = moment_check(&exp, &WeightKernel::registered(&exp).unwrap(), 15, 1e-8, &q).map_err(|e| e.to_string())?;
    let m = ml(2.0, 1.0);
    let r = moment_check(&m, &WeightKernel::registered(&m).unwrap(), 8, 1e-6, &q).map_err(|e| e.to_string())?;
    let worst = |rows: &[glfock::fock_space::MomentRow]| rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let (we, wm) = (worst(&e.rows), worst(&r.rows));
    ensure(we <= 1e-8, || format!("exponential residual {we:.3e}"))?;
    ensure(wm <= 1e-6, || format!("Mittag-Leffler residual {wm:.3e}"))?;
    Ok(format!("max residual exp {we:.1e}, ML(2,1) {wm:.1e}"))
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut families = entire_families();
    families.push(PhiDescriptor::backward_shift());
    let mut worst = 0.0f64;
    for d in &families {
        let series = |rng: &mut ChaCha8Rng| {
            let deg = rng.random_range(0..=20usize);
            TruncatedSeries::new((0..=deg).map(|k| unit(rng) * d.coeff(k).unwrap().abs().sqrt()).collect())
        };
        for _ in 0..100 {
            let (f, g) = (series(&mut rng), series(&mut rng));
            let res = duality_check(d, &f, &g).map_err(|e| e.to_string())?;
            ensure(res <= 1e-12, || format!("{} residual {res:.3e}", d.family().name()))?;
            worst = worst.max(res);
        }
    }
    Ok(format!("{} families x 100 pairs, max residual {worst:.1e}", families.len()))
}

fn bargmann() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut worst_ulps, mut worst_res) = (0.0f64, 0.0f64);
    for d in entire_families() {
        for _ in 0..20 {
            let f = HermiteCoeffs::new((0..=15).map(|_| unit(&mut rng)).collect());
            let back = bargmann_inverse(&d, &bargmann_forward(&d, &f).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let ulps = (0..f.len())
                .map(|k| (f.get(k) - back.get(k)).norm() / (f64::EPSILON * f.get(k).norm()))
                .fold(0.0, f64::max);
            let (lo, hi) = intertwine_residuals(&d, &f).map_err(|e| e.to_string())?;
            ensure(ulps <= 4.0, || format!("{} roundtrip off by {ulps} ulps", d.family().name()))?;
            ensure(lo <= 1e-13 && hi <= 1e-13, || format!("{} intertwining {lo:.3e}, {hi:.3e}", d.family().name()))?;
            worst_ulps = worst_ulps.max(ulps);
            worst_res = worst_res.max(lo).max(hi);
        }
    }
    Ok(format!("roundtrip within {worst_ulps:.1} ulps, intertwining {worst_res:.1e}"))
}

fn weierstrass_values() -> Outcome {
    let exp = PhiDescriptor::exponential();
    let psi = psi_pair(&exp).map_err(|e| e.to_string())?;
    ensure(psi.psi1 == 1.0 && psi.psi2 == 0.5, || format!("exponential psi = ({}, {})", psi.psi1, psi.psi2))?;
    let r = radius_bounds(&exp, 100).map_err(|e| e.to_string())?;
    ensure(r.r_l == 1.5, || format!("exponential R_L = {}", r.r_l))?;

    let bs = PhiDescriptor::backward_shift();
    let rb = radius_bounds(&bs, 100).map_err(|e| e.to_string())?;
    ensure(rb.r_l == 1.0 && rb.r_u == 1.0, || format!("backward shift R_L, R_U = {}, {}", rb.r_l, rb.r_u))?;
    for z in [cz(0.0, 0.0), cz(0.4, 0.0), cz(-0.3, 0.5), cz(0.0, 0.9)] {
        let e = weierstrass_factor(&bs, z, 2000).map_err(|e| e.to_string())?;
        let o = omega(&bs, z, 2000).map_err(|e| e.to_string())?.value;
        ensure((e - 1.0).norm() <= 1e-15 && o == cz(0.0, 0.0), || format!("backward shift E = {e}, Omega = {o} at {z}"))?;
    }

    for (rho, mu) in [(2.0, 1.0), (0.7, 1.3), (1.5, 0.4)] {
        let d = ml(rho, mu).normalized();
        let (g0, g1, g2) = (gamma(mu).unwrap(), gamma(mu + 1.0 / rho).unwrap(), gamma(mu + 2.0 / rho).unwrap());
        let psi1 = g1 / g0;
        let r_l = 2.0 * g1 / g0 - g1.powi(3) / (g2 * g0 * g0);
        let got = psi_pair(&d).map_err(|e| e.to_string())?;
        let rr = radius_bounds(&d, 200).map_err(|e| e.to_string())?;
        ensure((got.psi1 - psi1).abs() <= 1e-12 * psi1, || format!("ML({rho},{mu}) psi1 {} vs {psi1}", got.psi1))?;
        ensure((rr.r_l - r_l).abs() <= 1e-12, || format!("ML({rho},{mu}) R_L {} vs {r_l}", rr.r_l))?;
    }
    Ok("exponential, backward shift and three Mittag-Leffler cases exact".into())
}

fn inequality() -> Outcome {
    let families = vec![
        PhiDescriptor::exponential(),
        ml(2.0, 1.0).normalized(),
        PhiDescriptor::dunkl(0.5).unwrap().normalized(),
        PhiDescriptor::stretched_gamma(1.0, 2.0).unwrap().normalized(),
    ];
    let mut worst = 0.0f64;
    for d in &families {
        let rows = inequality_grid(d, 41, 80).map_err(|e| e.to_string())?;
        let bound = glfock::weierstrass::omega_bound(d).map_err(|e| e.to_string())?;
        let sup = rows.iter().map(|r| r.rhs).fold(0.0, f64::max);
        ensure(sup <= bound, || format!("{}: sup |Omega| {sup} > bound {bound}", d.family().name()))?;
        for r in &rows {
            // |1 − E| and |Ω| coincide on |z| = 1; allow rounding there.
            ensure(r.lhs <= r.rhs * (1.0 + 1e-12), || format!("{} fails at ({}, {})", d.family().name(), r.z_re, r.z_im))?;
            worst = worst.max(r.ratio);
        }
    }
    Ok(format!("4 families, max |1-E|/|Omega| = {worst:.12}"))
}

fn zeros() -> Outcome {
    let lat = LatticeSpec::new(1.0, 12).unwrap();
    let p = LatticeProduct::sigma(&PhiDescriptor::exponential(), lat, 80).map_err(|e| e.to_string())?;
    let zc = zero_count(&p, 2.5, 2048).map_err(|e| e.to_string())?;
    let want = lat.count_in_disk(2.5);
    ensure(zc.count == want as i64, || format!("contour count {} vs {want} lattice points", zc.count))?;
    Ok(format!("{} zeros inside |z| <= 2.5, winding {:.9}", zc.count, zc.winding))
}

fn two_sided() -> Outcome {
    let exp = PhiDescriptor::exponential();
    let vw = WeightKernel::registered(&exp)
        .and_then(|w| w.verify(10, 1e-8, &QuadratureScheme::default()))
        .map_err(|e| e.to_string())?;
    let g = PerturbedLattice::random(LatticeSpec::new(1.0, 12).unwrap(), 0.1, 42).map_err(|e| e.to_string())?;
    let step = 4.0 / 20.0;
    let grid: Vec<Complex64> = (0..20)
        .flat_map(|i| (0..20).map(move |j| cz(-2.0 + step * (i as f64 + 0.5), -2.0 + step * (j as f64 + 0.5))))
        .collect();
    let rep = two_sided_diag(&vw, &g, &grid, 60, GVariant::Printed).map_err(|e| e.to_string())?;
    ensure(rep.feasible && rep.c1 > 0.0 && rep.c2.is_finite(), || format!("infeasible: {}", rep.note))?;
    Ok(format!("c = {:.4}, c1 = {:.4e}, c2 = {:.4e}", rep.c, rep.c1, rep.c2))
}

fn frames() -> Outcome {
    let exp = PhiDescriptor::exponential();
    let vw = WeightKernel::registered(&exp)
        .and_then(|w| w.verify(24, 1e-8, &QuadratureScheme::default()))
        .map_err(|e| e.to_string())?;
    let half = &frame_sweep(&vw, 0, &[0.5], 12, 10).map_err(|e| e.to_string())?[0].report;
    ensure(half.a > 0.0 && half.stability < 0.05, || format!("s = 0.5: A = {:.3e}, stability {:.3e}", half.a, half.stability))?;
    let a: Vec<f64> = [8, 12, 16, 24]
        .iter()
        .map(|&n| frame_sweep(&vw, 0, &[2.0], n, 10).map(|r| r[0].report.a))
        .collect::<glfock::Result<_>>()
        .map_err(|e| e.to_string())?;
    ensure(a.windows(2).all(|w| w[1] < w[0]) && a[3] < 1e-6 * a[0], || format!("s = 2: A over N = 8, 12, 16, 24 is {a:?}"))?;
    let sizes: Vec<f64> = (0..13).map(|i| 0.3 + 0.1 * i as f64).collect();
    let sweep = frame_sweep(&vw, 0, &sizes, 12, 10).map_err(|e| e.to_string())?;
    let brk = sweep.iter().find(|r| r.report.a < 1e-2 * sweep[0].report.a).map(|r| r.s);
    Ok(format!(
        "s = 0.5: A = {:.3}, stability {:.1e}; s = 2: A {:.1e} -> {:.1e}; empirical break {}",
        half.a,
        half.stability,
        a[0],
        a[3],
        brk.map_or("beyond 1.5".into(), |s| format!("near s = {s:.1}"))
    ))
}

fn reproducing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let quad = QuadratureScheme { angular_nodes: QuadratureScheme::default().angular_nodes.max(22), ..QuadratureScheme::default() };
    let mut worst = 0.0f64;
    for d in [PhiDescriptor::exponential(), ml(2.0, 1.0)] {
        let vw = WeightKernel::registered(&d).and_then(|w| w.verify(10, 1e-6, &quad)).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let deg = rng.random_range(0..=10usize);
            let f = TruncatedSeries::new((0..=deg).map(|_| unit(&mut rng)).collect());
            for _ in 0..10 {
                let z = Complex64::from_polar(rng.random_range(0.0..1.5), rng.random_range(0.0..std::f64::consts::TAU));
                let err = (reproduce(&vw, &f, z, &quad).map_err(|e| e.to_string())? - f.eval(z)).norm();
                ensure(err <= 1e-6, || format!("{} error {err:.3e} at {z}", d.family().name()))?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("2 families x 200 evaluations, max error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_glfock"))
            .args(["--seed", "7", "check", "--suite", "duality"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("exit status {}", out.status))?;
        Ok::<_, String>(Sha256::digest(&out.stdout))
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "CSV hashes differ".into())?;
    let hex: String = a.iter().take(8).map(|b| format!("{b:02x}")).collect();
    Ok(format!("two runs hash to {hex}..."))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("moment identities", moments, Duration::from_secs(10)),
        ("duality", duality, Duration::from_secs(1)),
        ("Bargmann unitarity and intertwining", bargmann, Duration::from_secs(1)),
        ("Weierstrass exact values", weierstrass_values, Duration::from_secs(1)),
        ("inequality grids", inequality, Duration::from_secs(5)),
        ("sigma zero count", zeros, Duration::from_secs(10)),
        ("two-sided estimate feasibility", two_sided, Duration::from_secs(30)),
        ("frame-bound calibration", frames, Duration::from_secs(120)),
        ("reproducing property", reproducing, Duration::from_secs(30)),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = Vec::new();
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let dt = t.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if dt <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {dt:.2?}, limit {limit:.0?}")),
            Err(e) => (false, e),
        };
        println!("criterion {:>2} {:<36} {} ({dt:.2?}) {detail}", i + 1, name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
