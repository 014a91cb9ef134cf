use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fiberlay::dynamics::{
    picard_solve_2d, planar_drift, simulate, wiener_path, InitialState, Scheme, SimConfig,
};
use fiberlay::ergodics::{
    fit_decay, hypocoercivity_rate, maximal_rate, mixing_series, optimal_sigma, time_averages, Observable,
    RateParams,
};
use fiberlay::geometry::{
    angles_from_point, embed_angles, gauss_moment, hormander_rank, laplace_beltrami, laplace_beltrami_local,
    local_derivatives_fd, metric_factor, push_forward, random_unit_vector, sphere_grad_linear, sphere_quadrature,
    AmbientFunction, Differentiation, Estimate, RuleKind, SphereFunction, UnitVector,
};
use fiberlay::operators::{
    apply_fokker_planck, bs_identity_check, check_conjugation, check_invariance, check_symmetry_split,
    gap_refinement, ProductQuadrature, TestFunction,
};
use fiberlay::{Angles, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail; each one is analysed in the project notes.
const KNOWN_RED: &[usize] = &[8];

/// Regression snapshots.
const DECAY_RATE_SNAPSHOT: f64 = 0.37922;
const DECAY_RATE_SNAPSHOT_RTOL: f64 = 0.05;
const GAP_SNAPSHOT: f64 = 0.4060845541;
const GAP_SNAPSHOT_RTOL: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (usize, &'static str, u64, fn() -> Verdict);

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(a: Estimate, target: f64, k: f64) -> bool {
    (a.value - target).abs() <= k * a.std_error
}

fn agree(a: Estimate, b: Estimate, k: f64) -> bool {
    (a.value - b.value).abs() <= k * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    random_unit_vector::<f64, _>(d, rng).into_vec()
}

fn phase_points(d: usize, n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let xi = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            (xi, unit(&mut rng, d))
        })
        .collect()
}

fn coordinate(i: usize, d: usize) -> AmbientFunction<f64> {
    AmbientFunction::new(move |v: &[f64]| v[i])
        .with_gradient(move |_: &[f64]| (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .with_hessian(move |_: &[f64]| vec![0.0; d * d])
}

/// `f(v) = c . v + (b . v)^3`.
fn cubic(d: usize) -> AmbientFunction<f64> {
    let c: Vec<f64> = (0..d).map(|i| 1.0 - 0.4 * i as f64).collect();
    let b: Vec<f64> = (0..d).map(|i| 0.3 + 0.2 * i as f64).collect();
    let (c1, b1, b2) = (c.clone(), b.clone(), b.clone());
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    AmbientFunction::new(move |v: &[f64]| dot(&c, v) + dot(&b, v).powi(3))
        .with_gradient(move |v: &[f64]| {
            let s = dot(&b1, v);
            (0..v.len()).map(|i| c1[i] + 3.0 * s * s * b1[i]).collect()
        })
        .with_hessian(move |v: &[f64]| {
            let s = dot(&b2, v);
            let n = v.len();
            (0..n * n).map(|k| 6.0 * s * b2[k / n] * b2[k % n]).collect()
        })
}

fn c1_geometry() -> Verdict {
    let mut eig = 0.0_f64;
    for d in [2, 3, 5] {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + d as u64);
        for _ in 0..100 {
            let v = UnitVector::new(unit(&mut rng, d)).unwrap();
            for i in 0..d {
                let lap = laplace_beltrami(&coordinate(i, d), &v, Differentiation::AnalyticOnly).unwrap();
                let expect = -(d as f64 - 1.0) * v[i];
                eig = eig.max((lap - expect).abs() / expect.abs().max(1e-300));
            }
        }
    }
    let (mut grad, mut lap) = (0.0_f64, 0.0_f64);
    for d in [2, 3, 5] {
        let f = cubic(d);
        let mut rng = ChaCha8Rng::seed_from_u64(20 + d as u64);
        let mut n = 0;
        while n < 100 {
            let Ok(theta) = angles_from_point::<f64>(&unit(&mut rng, d)) else { continue };
            if (2..d).any(|j| theta.angle(j).sin().abs() < 0.1) {
                continue;
            }
            let v = embed_angles(&theta);
            let local = local_derivatives_fd(|t: &[f64]| f.value(&embed_angles(&Angles::new(t.to_vec()).unwrap())), &theta);
            let coeffs: Vec<f64> = (1..d).map(|j| metric_factor(&theta, j).powi(2) * local.first[j - 1]).collect();
            let ambient = sphere_grad_linear(&f.gradient(&v).unwrap(), &v);
            for (p, q) in push_forward(&coeffs, &theta).iter().zip(&ambient) {
                grad = grad.max((p - q).abs());
            }
            let exact = laplace_beltrami(&f, &v, Differentiation::AnalyticOnly).unwrap();
            lap = lap.max((laplace_beltrami_local(&local, &theta) - exact).abs());
            n += 1;
        }
    }
    verdict(
        eig <= 1e-8 && grad <= 1e-6 && lap <= 1e-6,
        format!("eigen rel {eig:.2e} <= 1e-8, local/ambient grad {grad:.2e} lap {lap:.2e} <= 1e-6"),
    )
}

fn c2_moment_lemma() -> Verdict {
    let mut exact = 0.0_f64;
    let mut worst_z = 0.0_f64;
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in [2, 3] {
        let q = sphere_quadrature::<f64>(d, RuleKind::Deterministic, 8).unwrap();
        for _ in 0..10 {
            let b: Vec<f64> = (0..d * d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let tr: f64 = (0..d).map(|i| b[i * d + i]).sum();
            exact = exact.max((gauss_moment(&b, &q).value - tr / d as f64).abs());
        }
    }
    pass &= exact <= 1e-12;
    for d in [4, 6] {
        let q = sphere_quadrature::<f64>(d, RuleKind::MonteCarlo { seed: 40 + d as u64 }, 1_000_000).unwrap();
        let b: Vec<f64> = (0..d * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let tr: f64 = (0..d).map(|i| b[i * d + i]).sum();
        let e = gauss_moment(&b, &q);
        worst_z = worst_z.max((e.value - tr / d as f64).abs() / e.std_error);
        pass &= within(e, tr / d as f64, 3.0);
    }
    verdict(pass, format!("deterministic {exact:.2e} <= 1e-12, Monte-Carlo max |z| {worst_z:.2} <= 3"))
}

fn c3_hormander() -> Verdict {
    let mut checked = 0;
    let mut deficient = 0;
    for d in [2, 3] {
        for sigma in [0.1, 1.0] {
            for pot in [Potential::zero(d), Potential::radial_quadratic(d)] {
                for (xi, v) in phase_points(d, 100, 30 + d as u64) {
                    let r = hormander_rank(&xi, &UnitVector::new(v).unwrap(), sigma, &pot);
                    checked += 1;
                    if r.rank != 2 * d {
                        deficient += 1;
                    }
                }
            }
        }
    }
    verdict(deficient == 0, format!("rank 2d at {}/{checked} points", checked - deficient))
}

fn c4_operators() -> Verdict {
    let mut fp = 0.0_f64;
    for d in [2, 3, 5] {
        let a: Vec<f64> = (0..d).map(|i| 0.4 + 0.35 * i as f64).collect();
        for pot in [Potential::radial_quadratic(d), Potential::anisotropic_quadratic(&a).unwrap()] {
            for kappa in [1.0, 1.0 / (d as f64 - 1.0)] {
                let f = TestFunction::boltzmann(&pot, (d as f64 - 1.0) * kappa);
                for (xi, v) in phase_points(d, 100, 40 + d as u64) {
                    let r = apply_fokker_planck(&f, &xi, &v, 0.7, &pot, kappa).unwrap();
                    fp = fp.max(r.abs() / f.value(&xi, &v).max(1e-300));
                }
            }
        }
    }

    let shifted = Potential::radial_quadratic(2).shifted(std::f64::consts::PI.ln());
    let probe = TestFunction::bump_quadratic(vec![0.3, -0.2], 0.7, 0.0, vec![1.0, 0.0], vec![0.0; 4]);
    let inv: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let q = ProductQuadrature::mu_grid(&shifted, n, n).unwrap();
            check_invariance(&probe, &q, 1.0, &shifted).unwrap().value.abs()
        })
        .collect();
    let decreasing = inv.windows(2).all(|w| w[1] < w[0] || w[1] <= 1e-15);

    let pot = Potential::radial_quadratic(2);
    let q = ProductQuadrature::mu_grid(&pot, 40, 32).unwrap();
    let (mut s, mut a) = (0.0_f64, 0.0_f64);
    for seed in 0..5 {
        let r = check_symmetry_split(
            &TestFunction::random_smooth(2, seed),
            &TestFunction::random_smooth(2, 50 + seed),
            &q,
            1.0,
            &pot,
        )
        .unwrap();
        s = s.max(r.s_defect.abs());
        a = a.max(r.a_defect.abs());
    }

    let mut conj = 0.0_f64;
    for d in [2, 3] {
        let pot = Potential::radial_quadratic(d);
        let pts = phase_points(d, 100, 60 + d as u64);
        for seed in 0..3 {
            conj = conj.max(check_conjugation(&TestFunction::random_smooth(d, seed), &pts, 1.0, &pot).unwrap());
        }
    }

    let mut bs = 0.0_f64;
    for (d, n_xi, n_v) in [(2, 16, 16), (3, 10, 8)] {
        let q = ProductQuadrature::mu_grid(&Potential::radial_quadratic(d), n_xi, n_v).unwrap();
        let r = bs_identity_check(&TestFunction::random_smooth(d, 70), &[TestFunction::random_smooth(d, 71)], &q, 1.0)
            .unwrap();
        bs = bs.max(r.pointwise);
    }

    let pass = fp <= 1e-8 && inv[3] <= 1e-3 && decreasing && s <= 1e-3 && a <= 1e-3 && conj <= 1e-6 && bs <= 1e-6;
    verdict(
        pass,
        format!(
            "FP rel {fp:.1e}, int Lf dmu {:.1e} at 64 (refinement {}), S {s:.1e} A {a:.1e}, conjugation {conj:.1e}, BS {bs:.1e}",
            inv[3],
            inv.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn c5_manifold() -> Verdict {
    let mut norm = 0.0_f64;
    let mut ratio = 0.0_f64;
    for (d, sigma, dt, seed) in [(2, 1.0, 1e-3, 5u64), (3, 4.0, 1e-2, 6)] {
        let pot = Potential::radial_quadratic(d);
        let cfg = SimConfig::new(d, sigma, dt, 100_000, seed);
        let tr = simulate(&cfg, &pot, &InitialState::origin(d)).unwrap();
        for v in tr.directions() {
            norm = norm.max((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs());
        }
        let dist = |s: usize, t: usize| tr.xi[t].iter().zip(&tr.xi[s]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        // consecutive records bound every pair through the triangle inequality
        for k in 1..tr.len() {
            ratio = ratio.max(dist(k - 1, k) / ((tr.times[k] - tr.times[k - 1]) * (1.0 + 10.0 * dt)));
        }
        let sub: Vec<usize> = (0..tr.len()).step_by(100).collect();
        for (i, &s) in sub.iter().enumerate() {
            for &t in &sub[i + 1..] {
                ratio = ratio.max(dist(s, t) / ((tr.times[t] - tr.times[s]) * (1.0 + 10.0 * dt)));
            }
        }
    }
    verdict(norm <= 1e-12 && ratio <= 1.0, format!("max ||v|-1| {norm:.1e} <= 1e-12, max speed ratio {ratio:.6} <= 1"))
}

fn c6_scheme_agreement() -> Verdict {
    let mut pass = true;
    let mut worst = 0.0_f64;
    for d in [2, 3] {
        let pot = Potential::radial_quadratic(d);
        let obs = [Observable::Xi(0), Observable::XiNormSq, Observable::V(0)];
        let mut xi0 = vec![0.0; d];
        xi0[0] = 0.5;
        let init = InitialState::new(xi0, (1..=d).map(|i| i as f64).collect());
        for sigma in [0.5, 1.0] {
            let base = SimConfig::new(d, sigma, 1e-3, 5000, 600 + d as u64).with_record_stride(5000);
            let emb = mixing_series(&base, &pot, &obs, 10_000, &init).unwrap();
            let local_cfg = SimConfig { seed: base.seed + 1000, ..base.clone() }.with_scheme(Scheme::LocalEuler);
            let loc = mixing_series(&local_cfg, &pot, &obs, 10_000, &init).unwrap();
            for (a, b) in emb.iter().zip(&loc) {
                let est = |s: &fiberlay::ergodics::ObservableSeries| Estimate { value: s.means[1], std_error: s.std_errors[1] };
                let (ea, eb) = (est(a), est(b));
                let z = (ea.value - eb.value).abs() / (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt();
                worst = worst.max(z);
                pass &= agree(ea, eb, 3.0);
            }
        }
    }
    verdict(pass, format!("max combined |z| {worst:.2} <= 3 over 12 comparisons"))
}

fn c7_ergodicity() -> Verdict {
    let pot = Potential::radial_quadratic(2);
    let cfg = SimConfig::new(2, 1.0, 1e-3, 20_000, 7).with_record_stride(10);
    let obs = [
        Observable::XiXi(0, 0),
        Observable::XiXi(1, 1),
        Observable::VV(0, 0),
        Observable::VV(1, 1),
        Observable::VV(0, 1),
        Observable::V(0),
        Observable::V(1),
    ];
    // xi-marginal exp(-|xi|^2)/pi and uniform v on the circle
    let oracle = [0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0];
    let a = time_averages(&cfg, &pot, &obs, 10_000, &InitialState::origin(2), 0.5).unwrap();
    let other = InitialState::new(vec![2.0, 0.0], vec![0.0, 1.0]);
    let b = time_averages(&SimConfig { seed: 8, ..cfg.clone() }, &pot, &obs, 10_000, &other, 0.5).unwrap();
    let mut pass = true;
    let (mut zt, mut zb, mut zs) = (0.0_f64, 0.0_f64, 0.0_f64);
    for ((ea, eb), t) in a.iter().zip(&b).zip(oracle) {
        zt = zt.max((ea.value - t).abs() / ea.std_error);
        pass &= within(*ea, t, 3.0);
        zb = zb.max((eb.value - t).abs() / eb.std_error);
        zs = zs.max((ea.value - eb.value).abs() / (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt());
        pass &= agree(*ea, *eb, 3.0);
    }
    verdict(
        pass,
        format!("max |z| vs closed form {zt:.2}, between starts {zs:.2} (<= 3); second start vs closed form {zb:.2}"),
    )
}

fn c8_decay() -> Verdict {
    let pot = Potential::radial_quadratic(2);
    let cfg = SimConfig::new(2, 1.0, 1e-3, 20_000, 9).with_record_stride(100);
    let init = InitialState::new(vec![2.0, 0.0], vec![0.0, 1.0]);
    let s = mixing_series(&cfg, &pot, &[Observable::Xi(0)], 10_000, &init).unwrap().remove(0);
    match fit_decay(&s, 0.0) {
        Ok(f) => {
            let snap = (f.lambda_hat / DECAY_RATE_SNAPSHOT - 1.0).abs() <= DECAY_RATE_SNAPSHOT_RTOL;
            verdict(
                f.lambda_hat > 0.0 && f.r_squared >= 0.9 && snap,
                format!(
                    "lambda_hat {:.6} (snapshot {DECAY_RATE_SNAPSHOT}), r^2 {:.4} >= 0.9 required, window {:?}, {} points",
                    f.lambda_hat, f.r_squared, f.window, f.n_points
                ),
            )
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn c9_rate() -> Verdict {
    let p = |eta, sigma, k1, k2, k3| RateParams { eta, sigma, k1, k2, k3 };
    let hand = [
        (p(1.0, 1.0, 1.0, 1.0, 1.0), 1.0 / 6.0),
        (p(2.0, 0.5, 3.0, 0.5, 2.0), 0.4),
        (p(3.0, 2.0, 1.0, 0.25, 0.0625), 1.0),
    ];
    let hand_err = hand
        .iter()
        .map(|(q, expect)| (hypocoercivity_rate(q).unwrap() - expect).abs())
        .fold(0.0, f64::max);
    let mut argmax_err = 0.0_f64;
    for k3 in [16.0, 2.2, 0.3] {
        let base = p(1.0, 1.0, 1.3, 0.7, k3);
        let rate = |s: f64| hypocoercivity_rate(&RateParams { sigma: s, ..base }).unwrap();
        let (mut lo, mut hi) = (-6.0_f64, 6.0_f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-12 {
            let (c, d) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if rate(c.exp()) > rate(d.exp()) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let numeric = ((lo + hi) / 2.0).exp();
        argmax_err = argmax_err.max((numeric - optimal_sigma(k3).unwrap()).abs());
        argmax_err = argmax_err.max((rate(numeric) - maximal_rate(&base).unwrap()).abs());
    }
    let base = p(1.0, 1.0, 1.0, 1.0, 1.0);
    let at = |s: f64| hypocoercivity_rate(&RateParams { sigma: s, ..base }).unwrap();
    let small = [1e-2, 1e-4, 1e-8].map(at);
    let large = [1e2, 1e4, 1e8].map(at);
    let limits = small.windows(2).all(|w| w[1] < w[0])
        && large.windows(2).all(|w| w[1] < w[0])
        && small[2] < 1e-15
        && large[2] < 1e-15;
    verdict(
        hand_err <= 1e-12 && argmax_err <= 1e-6 && limits,
        format!("hand {hand_err:.1e} <= 1e-12, argmax {argmax_err:.1e} <= 1e-6, limits {:.1e} {:.1e}", small[2], large[2]),
    )
}

fn c10_picard() -> Verdict {
    let dt = 1e-4;
    let n = 10_000;
    let sigma = 1.0;
    let path = wiener_path(10, 1, dt, n).unwrap();
    let psi = |x: [f64; 2]| [-2.0 * x[0], -2.0 * x[1]];
    let x0 = [0.4, -0.3, 1.1];
    let sol = picard_solve_2d(&psi, &path, x0, sigma, 30).unwrap();
    let live: Vec<f64> = sol.gaps.iter().copied().filter(|&g| g > 1e-13).collect();
    // the xi-part lags alpha by one iterate, so gaps fall in pairs
    let ratios: Vec<f64> = live.windows(3).map(|w| w[2] / w[0]).collect();
    let early = ratios.iter().take(2).fold(0.0, |a: f64, &b| a.max(b));
    let late = ratios.iter().skip(ratios.len() / 2).fold(0.0, |a: f64, &b| a.max(b));
    let factorial = ratios.len() >= 8 && late < 0.1 * early;
    let mut x = x0;
    let mut worst = 0.0_f64;
    for k in 0..n {
        let b = planar_drift(&psi, &x);
        let dw = path.increment(k)[0];
        x = [x[0] + b[0] * dt, x[1] + b[1] * dt, x[2] + b[2] * dt + sigma * dw];
        let p = sol.path[k + 1];
        worst = worst.max((0..3).map(|i| (p[i] - x[i]).abs()).fold(0.0, f64::max));
    }
    verdict(
        factorial && worst <= 1e-3,
        format!(
            "two-step gap ratios {} (late max {late:.3} < 0.1 x early {early:.2}), Euler sup distance {worst:.1e} <= 1e-3",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# fiberlay-format v1"));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (cols, rows)
}

/// `sum_k |xi_{k+1} - xi_k - v_k (t_{k+1} - t_k)|^2` from a trajectory file.
fn roughness(path: &Path, d: usize) -> f64 {
    let (cols, rows) = read_csv(path);
    assert_eq!(cols.len(), 1 + 2 * d, "{cols:?}");
    rows.windows(2)
        .map(|w| {
            let h = w[1][0] - w[0][0];
            (0..d).map(|i| (w[1][1 + i] - w[0][1 + i] - w[0][1 + d + i] * h).powi(2)).sum::<f64>()
        })
        .sum()
}

fn c11_figures() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for d in [2usize, 3] {
        let mut bytes_sigma0 = Vec::new();
        for seed in ["11", "12"] {
            let dir = tmp.path().join(format!("d{d}_{seed}"));
            let o = Command::new(env!("CARGO_BIN_EXE_fiberlay"))
                .args(["figures", "--d", &d.to_string(), "--seed", seed, "--out", dir.to_str().unwrap()])
                .output()
                .unwrap();
            if !o.status.success() {
                return verdict(false, String::from_utf8_lossy(&o.stderr).into_owned());
            }
            let n_csv = fs::read_dir(&dir)
                .unwrap()
                .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
                .count();
            pass &= n_csv == 4 && dir.join(format!("figure_d{d}.gp")).exists();
            let r: Vec<f64> = [0.0, 0.1, 0.5, 4.0]
                .iter()
                .map(|s| roughness(&dir.join(format!("figure_d{d}_sigma_{s}.csv")), d))
                .collect();
            pass &= r.windows(2).all(|w| w[1] > w[0]);
            notes.push(format!("d={d} seed {seed}: {}", r.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" < ")));
            bytes_sigma0.push(fs::read(dir.join(format!("figure_d{d}_sigma_0.csv"))).unwrap());
        }
        pass &= bytes_sigma0[0] == bytes_sigma0[1];
    }
    verdict(pass, format!("4 CSVs + script, sigma=0 seed-free, roughness {}", notes.join("; ")))
}

fn c12_galerkin() -> Verdict {
    let r = gap_refinement(&Potential::radial_quadratic(2), 1.0, (8, 9), (12, 13)).unwrap();
    let snap = (r.fine.gap / GAP_SNAPSHOT - 1.0).abs() <= GAP_SNAPSHOT_RTOL;
    verdict(
        r.stable && r.relative_change <= 0.05 && r.fine.gap > 0.0 && snap,
        format!(
            "gap {:.10} -> {:.10} (change {:.2}% <= 5%, snapshot {GAP_SNAPSHOT}), leading {:?}",
            r.coarse.gap,
            r.fine.gap,
            100.0 * r.relative_change,
            r.fine.leading.first()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "identity suite (geometry)", 10, c1_geometry),
        (2, "moment lemma", 30, c2_moment_lemma),
        (3, "Hormander rank", 30, c3_hormander),
        (4, "operator structure", 120, c4_operators),
        (5, "manifold preservation and speed bound", 30, c5_manifold),
        (6, "scheme agreement", 300, c6_scheme_agreement),
        (7, "ergodicity", 300, c7_ergodicity),
        (8, "exponential decay fit", 300, c8_decay),
        (9, "rate formula", 60, c9_rate),
        (10, "Picard validation", 60, c10_picard),
        (11, "figure reproduction", 180, c11_figures),
        (12, "Galerkin gap", 120, c12_galerkin),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut run = 0;
    for (id, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = v.pass && in_time;
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} C{id:<2} {name}: {} [{:.1} s of {budget} s]",
            v.detail,
            elapsed.as_secs_f64()
        );
        if pass {
            passed += 1;
            if KNOWN_RED.contains(&id) {
                println!("     C{id} is listed as known red but passed");
            }
        } else if !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/{run} criteria pass; known red: {KNOWN_RED:?}");
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
