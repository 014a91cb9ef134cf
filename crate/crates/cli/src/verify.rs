//! Identity and structure suite behind `fiberlay verify`.

use fiberlay::dynamics::{simulate, simulate_stream, NormalStream, Trajectory};
use fiberlay::ergodics::audit::Z_FLAG;
use fiberlay::ergodics::{hypocoercivity_rate, run_batches, stationarity_audit_trajectories, RateParams};
use fiberlay::geometry::{
    angles_from_point, embed_angles, gauss_moment, hormander_rank, laplace_beltrami, laplace_beltrami_local,
    local_derivatives_fd, metric_factor, push_forward, sphere_grad_linear, sphere_quadrature, AmbientFunction,
    Differentiation, RuleKind, SphereFunction, UnitVector,
};
use fiberlay::operators::{
    apply_diffusion, apply_fokker_planck, bs_identity_check, check_conjugation, check_invariance,
    check_symmetry_split, ProductQuadrature, TestFunction,
};
use fiberlay::potential::by_name;
use fiberlay::{Angles, InitialState, Potential, PotentialSpec, SimConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{write_json, Outcome, FORMAT_TAG};
use crate::config::{Defaults, RunArgs, RunConfig, CODE_VERSION};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub parameters: Value,
    pub statistic: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn record(name: &str, parameters: Value, statistic: f64, tolerance: f64) -> CheckRecord {
    CheckRecord {
        check_name: name.into(),
        parameters,
        statistic,
        tolerance,
        pass: statistic <= tolerance,
    }
}

fn unit(noise: &mut NormalStream, d: usize) -> Vec<f64> {
    loop {
        let mut v = vec![0.0; d];
        noise.fill(&mut v);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn points(d: usize, n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut noise = NormalStream::new(seed, d as u64);
    (0..n)
        .map(|_| {
            let mut xi = vec![0.0; d];
            noise.fill(&mut xi);
            xi.iter_mut().for_each(|x| *x *= 0.8);
            (xi, unit(&mut noise, d))
        })
        .collect()
}

fn laplacian_eigen() -> CliResult<CheckRecord> {
    let mut worst = 0.0_f64;
    for d in [2, 3, 5] {
        for (xi, v) in points(d, 100, 1) {
            for i in 0..d {
                let f = TestFunction::v_coordinate(i, d);
                let lap = apply_diffusion(&f, &xi, &v, 2f64.sqrt())?;
                let expect = -(d as f64 - 1.0) * v[i];
                worst = worst.max((lap - expect).abs() / expect.abs().max(1e-12));
            }
        }
    }
    Ok(record("laplace_beltrami_coordinate_eigenfunctions", json!({"d": [2, 3, 5], "points": 100}), worst, 1e-8))
}

fn probe_function(d: usize) -> AmbientFunction<f64> {
    let a: Vec<f64> = (0..d).map(|i| 0.7 - 0.3 * i as f64).collect();
    let b: Vec<f64> = (0..d).map(|i| 0.2 + 0.25 * i as f64).collect();
    let (a1, b1, a2, b2) = (a.clone(), b.clone(), a.clone(), b.clone());
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    AmbientFunction::new(move |v: &[f64]| dot(&a, v).exp() + dot(&b, v).powi(2))
        .with_gradient(move |v: &[f64]| {
            let (e, s) = (dot(&a1, v).exp(), dot(&b1, v));
            (0..v.len()).map(|i| e * a1[i] + 2.0 * s * b1[i]).collect()
        })
        .with_hessian(move |v: &[f64]| {
            let e = dot(&a2, v).exp();
            let n = v.len();
            (0..n * n).map(|k| e * a2[k / n] * a2[k % n] + 2.0 * b2[k / n] * b2[k % n]).collect()
        })
}

/// Sphere gradient and Laplace-Beltrami operator of one function computed
/// in the ambient space and in the angle chart.
pub fn local_ambient_defects(d: usize, n: usize, seed: u64) -> CliResult<(f64, f64)> {
    let f = probe_function(d);
    let mut noise = NormalStream::new(seed, 100 + d as u64);
    let (mut grad_err, mut lap_err) = (0.0_f64, 0.0_f64);
    let mut done = 0;
    while done < n {
        let v = unit(&mut noise, d);
        let Ok(theta) = angles_from_point::<f64>(&v) else { continue };
        if (2..d).any(|j| theta.angle(j).sin().abs() < 0.1) {
            continue;
        }
        let v = embed_angles(&theta);
        let on_chart = |t: &[f64]| f.value(&embed_angles(&Angles::new(t.to_vec()).expect("finite angles")));
        let local = local_derivatives_fd(on_chart, &theta);
        let coeffs: Vec<f64> = (1..d)
            .map(|j| metric_factor(&theta, j).powi(2) * local.first[j - 1])
            .collect();
        let local_grad = push_forward(&coeffs, &theta);
        let ambient_grad = sphere_grad_linear(&f.gradient(&v).unwrap(), &v);
        for (p, q) in local_grad.iter().zip(&ambient_grad) {
            grad_err = grad_err.max((p - q).abs());
        }
        let ambient = laplace_beltrami(&f, &v, Differentiation::AnalyticOnly)?;
        lap_err = lap_err.max((laplace_beltrami_local(&local, &theta) - ambient).abs());
        done += 1;
    }
    Ok((grad_err, lap_err))
}

fn local_vs_ambient() -> CliResult<Vec<CheckRecord>> {
    let (mut g, mut l) = (0.0_f64, 0.0_f64);
    for d in [2, 3, 5] {
        let (a, b) = local_ambient_defects(d, 100, 2)?;
        g = g.max(a);
        l = l.max(b);
    }
    let p = json!({"d": [2, 3, 5], "points": 100});
    Ok(vec![
        record("local_vs_ambient_gradient", p.clone(), g, 1e-6),
        record("local_vs_ambient_laplacian", p, l, 1e-6),
    ])
}

fn moment_lemma() -> CliResult<CheckRecord> {
    let mut worst = 0.0_f64;
    let mut noise = NormalStream::new(3, 0);
    for d in [2, 3] {
        let q = sphere_quadrature::<f64>(d, RuleKind::Deterministic, 8)?;
        for _ in 0..20 {
            let mut b = vec![0.0; d * d];
            noise.fill(&mut b);
            let tr: f64 = (0..d).map(|i| b[i * d + i]).sum();
            worst = worst.max((gauss_moment(&b, &q).value - tr / d as f64).abs());
        }
    }
    Ok(record("gauss_moment_trace_over_d", json!({"d": [2, 3], "rule": "deterministic", "matrices": 20}), worst, 1e-12))
}

fn hormander() -> CliResult<CheckRecord> {
    let mut deficient = 0usize;
    for d in [2, 3] {
        for sigma in [0.1, 1.0] {
            for pot in [Potential::zero(d), Potential::radial_quadratic(d)] {
                for (xi, v) in points(d, 100, 4) {
                    let v = UnitVector::new(v)?;
                    if hormander_rank(&xi, &v, sigma, &pot).rank != 2 * d {
                        deficient += 1;
                    }
                }
            }
        }
    }
    Ok(record(
        "hormander_rank_full",
        json!({"d": [2, 3], "sigma": [0.1, 1.0], "phi": ["zero", "radial-quadratic"], "points": 100}),
        deficient as f64,
        0.0,
    ))
}

fn anisotropic(d: usize) -> CliResult<Potential> {
    let a: Vec<f64> = (0..d).map(|i| 0.5 + 0.3 * i as f64).collect();
    Ok(Potential::anisotropic_quadratic(&a)?)
}

fn fokker_planck() -> CliResult<CheckRecord> {
    let mut worst = 0.0_f64;
    for d in [2, 3, 5] {
        let pot = anisotropic(d)?;
        for kappa in [1.0, 1.0 / (d as f64 - 1.0)] {
            let f = TestFunction::boltzmann(&pot, (d as f64 - 1.0) * kappa);
            for (xi, v) in points(d, 50, 5) {
                worst = worst.max(apply_fokker_planck(&f, &xi, &v, 0.9, &pot, kappa)?.abs());
            }
        }
    }
    Ok(record("fokker_planck_annihilates_invariant_density", json!({"d": [2, 3, 5], "points": 50}), worst, 1e-8))
}

fn invariance() -> CliResult<CheckRecord> {
    let pot = Potential::radial_quadratic(2).shifted(std::f64::consts::PI.ln());
    let f = TestFunction::bump_quadratic(vec![0.3, -0.2], 0.7, 0.0, vec![1.0, 0.0], vec![0.0; 4]);
    let q = ProductQuadrature::mu_grid(&pot, 64, 64)?;
    let r = check_invariance(&f, &q, 1.0, &pot)?;
    Ok(record("invariance_quadrature", json!({"d": 2, "grid": [64, 64], "sigma": 1.0}), r.value.abs(), 1e-3))
}

fn split() -> CliResult<Vec<CheckRecord>> {
    let pot = Potential::radial_quadratic(2);
    let q = ProductQuadrature::mu_grid(&pot, 40, 32)?;
    let (mut s, mut a, mut diss) = (0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    for seed in 0..5 {
        let g = TestFunction::random_smooth(2, seed);
        let h = TestFunction::random_smooth(2, seed + 100);
        let r = check_symmetry_split(&g, &h, &q, 1.0, &pot)?;
        s = s.max(r.s_defect.abs());
        a = a.max(r.a_defect.abs());
        diss = diss.max(check_symmetry_split(&g, &g, &q, 1.0, &pot)?.dissipation);
    }
    let p = json!({"d": 2, "grid": [40, 32], "pairs": 5});
    Ok(vec![
        record("symmetric_part_defect", p.clone(), s, 1e-3),
        record("antisymmetric_part_defect", p.clone(), a, 1e-3),
        record("dissipation_nonpositive", p, diss, 1e-10),
    ])
}

fn conjugation() -> CliResult<CheckRecord> {
    let mut worst = 0.0_f64;
    for d in [2, 3, 5] {
        let pot = anisotropic(d)?;
        let pts = points(d, 100, 6);
        for seed in 0..3 {
            worst = worst.max(check_conjugation(&TestFunction::random_smooth(d, seed), &pts, 0.8, &pot)?);
        }
    }
    Ok(record("conjugation_identity", json!({"d": [2, 3, 5], "points": 100, "functions": 3}), worst, 1e-6))
}

fn bs_identity() -> CliResult<CheckRecord> {
    let mut worst = 0.0_f64;
    for (d, n_xi, n_v) in [(2, 16, 16), (3, 10, 8)] {
        let q = ProductQuadrature::mu_grid(&Potential::radial_quadratic(d), n_xi, n_v)?;
        let hs = [TestFunction::random_smooth(d, 40)];
        let r = bs_identity_check(&TestFunction::random_smooth(d, 7), &hs, &q, 0.9)?;
        worst = worst.max(r.pointwise);
    }
    Ok(record("bs_precursor_identity_pointwise", json!({"d": [2, 3], "sigma": 0.9}), worst, 1e-6))
}

fn unit_speed() -> CliResult<Vec<CheckRecord>> {
    let pot = Potential::radial_quadratic(3);
    let cfg = SimConfig::new(3, 4.0, 1e-2, 10_000, 8).with_record_stride(100);
    let tr = simulate(&cfg, &pot, &InitialState::origin(3)).map_err(|f| CliError::from(f.error))?;
    let norm_err = tr
        .directions()
        .iter()
        .map(|v| (v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut ratio = 0.0_f64;
    for s in 0..tr.len() {
        for t in s + 1..tr.len() {
            let dist = tr.xi[t].iter().zip(&tr.xi[s]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            ratio = ratio.max(dist / ((tr.times[t] - tr.times[s]) * (1.0 + 10.0 * cfg.dt)));
        }
    }
    let p = json!({"d": 3, "sigma": 4.0, "dt": 1e-2, "steps": 10_000});
    Ok(vec![
        record("embedded_unit_speed", p.clone(), norm_err, 1e-12),
        record("embedded_speed_bound_ratio", p, ratio, 1.0),
    ])
}

fn derivatives() -> CliResult<CheckRecord> {
    let mut worst = 0.0_f64;
    for d in [2, 3, 5] {
        let params: Vec<f64> = (0..d).map(|i| 0.5 + i as f64).collect();
        for name in ["radial-quadratic", "anisotropic-quadratic", "zero", "quartic", "linear"] {
            worst = worst.max(by_name::<f64>(name, d, &params)?.derivative_consistency(100, 3));
        }
    }
    Ok(record("potential_derivative_consistency", json!({"d": [2, 3, 5], "points": 100}), worst, 1e-5))
}

fn rate_formula() -> CliResult<CheckRecord> {
    let p = RateParams {
        eta: 1.0,
        sigma: 1.0,
        k1: 1.0,
        k2: 1.0,
        k3: 1.0,
    };
    let err = (hypocoercivity_rate(&p)? - 1.0 / 6.0).abs();
    Ok(record("rate_formula_unit_constants", json!(p), err, 1e-12))
}

/// `Phi` with its force reversed, as a mutation of the drift sign.
pub fn reversed_force(pot: &Potential) -> CliResult<Potential> {
    let (p, g, h) = (pot.clone(), pot.clone(), pot.clone());
    Ok(PotentialSpec::custom(
        pot.dim(),
        "reversed-force",
        move |x: &[f64]| -p.value(x),
        move |x: &[f64], out: &mut [f64]| {
            g.grad_into(x, out);
            out.iter_mut().for_each(|o| *o = -*o);
        },
        move |x: &[f64], out: &mut [f64]| out.iter_mut().zip(h.hess(x)).for_each(|(o, y)| *o = -y),
        true,
    )?)
}

fn stationarity(cfg: &RunConfig) -> CliResult<CheckRecord> {
    let pot = cfg.potential()?;
    let driven = if cfg.inject_drift_sign_error { reversed_force(&pot)? } else { pot.clone() };
    let batches = run_batches(cfg.n_paths, Vec::new, |acc: &mut Vec<Trajectory<f64>>, p| {
        acc.push(simulate_stream(&cfg.sim, &driven, &cfg.init, p).map_err(|f| f.error)?);
        Ok(())
    })?;
    let trajs: Vec<_> = batches.into_iter().flatten().collect();
    let audit = stationarity_audit_trajectories(&trajs, &pot, cfg.burn_in)?;
    let mut r = record(
        "stationarity_audit",
        json!({
            "d": cfg.sim.d,
            "sigma": cfg.sim.sigma,
            "dt": cfg.sim.dt,
            "T": cfg.sim.horizon(),
            "n_paths": cfg.n_paths,
            "burn_in": cfg.burn_in,
            "phi": cfg.phi,
            "seed": cfg.sim.seed,
        }),
        audit.max_abs_z(),
        Z_FLAG,
    );
    r.pass = !audit.any_flagged();
    Ok(r)
}

pub fn run_checks(cfg: &RunConfig) -> CliResult<Vec<CheckRecord>> {
    let mut out = vec![laplacian_eigen()?];
    out.extend(local_vs_ambient()?);
    out.push(moment_lemma()?);
    out.push(hormander()?);
    out.push(derivatives()?);
    out.push(fokker_planck()?);
    out.push(invariance()?);
    out.extend(split()?);
    out.push(conjugation()?);
    out.push(bs_identity()?);
    out.extend(unit_speed()?);
    out.push(rate_formula()?);
    out.push(stationarity(cfg)?);
    Ok(out)
}

pub fn verify_cmd(args: &RunArgs) -> CliResult<Outcome> {
    let cfg = RunConfig::resolve("verify", args, &Defaults::verify())?;
    let mut out = Outcome::default();
    out.files.push(cfg.write_manifest()?);
    let checks = run_checks(&cfg)?;
    for c in &checks {
        let flag = if c.pass { "PASS" } else { "FAIL" };
        out.lines.push(format!("{flag} {} statistic = {:e} tolerance = {:e}", c.check_name, c.statistic, c.tolerance));
    }
    let path = cfg.out.join("verify.json");
    write_json(
        &path,
        &json!({"format": FORMAT_TAG, "code_version": CODE_VERSION, "checks": checks}),
    )?;
    out.files.push(path);
    out.failed = checks.iter().filter(|c| !c.pass).map(|c| c.check_name.clone()).collect();
    Ok(out)
}
