use fiberlay::dynamics::{simulate, wiener_path, ChartKind};
use fiberlay::ergodics::{hypocoercivity_rate, maximal_rate, RateParams};
use fiberlay::geometry::*;
use fiberlay::linalg::max_abs_diff;
use fiberlay::operators::*;
use fiberlay::potential::audit_h4;
use fiberlay::{FiberError, InitialState, PotentialSpec, SimConfig};
use proptest::prelude::*;

fn unit(raw: &[f64]) -> Option<Vec<f64>> {
    let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-3).then(|| raw.iter().map(|x| x / n).collect())
}

fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3usize), Just(5usize)]
}

fn point(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-2.0..2.0f64, d),
        prop::collection::vec(-1.0..1.0f64, d).prop_filter_map("zero", |r| unit(&r)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_round_trip(v in dim().prop_flat_map(|d| point(d).prop_map(|p| p.1))) {
        match angles_from_point::<f64>(&v) {
            Ok(theta) => {
                let back = embed_angles(&theta);
                prop_assert!(max_abs_diff(&back, &v) <= 1e-10);
            }
            Err(FiberError::PoleSingularity { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn tangent_gradient((d, z, v) in dim().prop_flat_map(|d| (Just(d), prop::collection::vec(-3.0..3.0f64, d), point(d).prop_map(|p| p.1)))) {
        let g = sphere_grad_linear(&z, &v);
        prop_assert_eq!(g.len(), d);
        prop_assert!(g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn coordinate_eigenfunctions((d, (xi, v), i) in dim().prop_flat_map(|d| (Just(d), point(d), 0..d))) {
        let f = TestFunction::v_coordinate(i, d);
        // sigma = sqrt 2 turns S into the Laplace-Beltrami operator
        let lap = apply_diffusion(&f, &xi, &v, 2f64.sqrt()).unwrap();
        let expect = -(d as f64 - 1.0) * v[i];
        prop_assert!((lap - expect).abs() <= 1e-8 * expect.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn bracket_antisymmetry(p in prop::collection::vec(-1.0..1.0f64, 3)) {
        let a = |x: &[f64]| vec![x[1] * x[2], x[0].sin(), x[0] * x[0]];
        let b = |x: &[f64]| vec![x[2].cos(), x[0] * x[1], -x[1]];
        let ab = lie_bracket(&a, &b, &p, 1e-5);
        let ba = lie_bracket(&b, &a, &p, 1e-5);
        prop_assert!(ab.iter().zip(&ba).all(|(x, y)| (x + y).abs() <= 1e-8));
    }

    #[test]
    fn deterministic_rules_hit_trace_over_d(d in 2usize..4, b in prop::collection::vec(-2.0..2.0f64, 9)) {
        let m: Vec<f64> = (0..d * d).map(|k| b[(k / d) * 3 + k % d]).collect();
        let q = sphere_quadrature::<f64>(d, RuleKind::Deterministic, 8).unwrap();
        let e = gauss_moment(&m, &q);
        let tr: f64 = (0..d).map(|i| m[i * d + i]).sum();
        prop_assert!((e.value - tr / d as f64).abs() <= 1e-12);
    }

    #[test]
    fn fokker_planck_annihilates_invariant_density((d, (xi, v)) in dim().prop_flat_map(|d| (Just(d), point(d))), kappa in 0.1..2.0f64, sigma in 0.0..3.0f64) {
        let a: Vec<f64> = (0..d).map(|i| 0.5 + 0.3 * i as f64).collect();
        let pot = PotentialSpec::anisotropic_quadratic(&a).unwrap();
        let f = TestFunction::boltzmann(&pot, (d as f64 - 1.0) * kappa);
        let r = apply_fokker_planck(&f, &xi, &v, sigma, &pot, kappa).unwrap();
        prop_assert!(r.abs() <= 1e-8, "{}", r);
    }

    #[test]
    fn kolmogorov_on_position_functions((d, (xi, v)) in dim().prop_flat_map(|d| (Just(d), point(d))), sigma in 0.0..3.0f64) {
        let pot = PotentialSpec::radial_quadratic(d);
        let f = TestFunction::bump_quadratic(vec![0.1; d], 0.9, 1.0, vec![0.0; d], vec![0.0; d * d]);
        let l = apply_kolmogorov(&f, &xi, &v, sigma, &pot, 1.0).unwrap();
        let g = f.grad_xi(&xi, &v).unwrap();
        prop_assert_eq!(l, g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>());
    }

    #[test]
    fn conjugation_identity((d, (xi, v)) in dim().prop_flat_map(|d| (Just(d), point(d))), seed in 0u64..1000, sigma in 0.1..2.0f64) {
        let pot = PotentialSpec::radial_quadratic(d);
        let h = TestFunction::random_smooth(d, seed);
        prop_assert!(check_conjugation(&h, &[(xi, v)], sigma, &pot).unwrap() <= 1e-6);
    }

    #[test]
    fn coercivity_positive(d in 2usize..8, sigma in 1e-3..10.0f64, lambda in 1e-3..100.0f64) {
        let c = coercivity_constants(d, sigma, lambda).unwrap();
        prop_assert!(c.microscopic > 0.0 && c.macroscopic > 0.0 && c.projected_bound > 0.0);
        let bigger = coercivity_constants(d, sigma, 2.0 * lambda).unwrap();
        prop_assert!(bigger.projected_bound > c.projected_bound);
    }

    #[test]
    fn rate_bounded_and_monotone(eta in 1e-2..1e2f64, sigma in 1e-2..1e2f64, k in prop::array::uniform3(1e-2..1e2f64)) {
        let p = RateParams { eta, sigma, k1: k[0], k2: k[1], k3: k[2] };
        let r = hypocoercivity_rate(&p).unwrap();
        prop_assert!(r > 0.0);
        prop_assert!(r <= maximal_rate(&p).unwrap() * (1.0 + 1e-12));
        let doubled = RateParams { eta: 2.0 * eta, ..p };
        prop_assert!(hypocoercivity_rate(&doubled).unwrap() > r);
    }

    #[test]
    fn h4_bound_grows_with_sample(pts in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 2..30), extra in prop::collection::vec(prop::collection::vec(-6.0..6.0f64, 2), 1..10)) {
        let p = PotentialSpec::<f64>::quartic(2);
        let small = audit_h4(&p, &pts).unwrap().max_ratio;
        let mut all = pts.clone();
        all.extend(extra);
        prop_assert!(audit_h4(&p, &all).unwrap().max_ratio >= small);
    }

    #[test]
    fn wiener_paths_are_reproducible(seed in any::<u64>(), dims in 1usize..4, n in 1usize..200) {
        let a = wiener_path(seed, dims, 1e-2, n).unwrap();
        let b = wiener_path(seed, dims, 1e-2, n).unwrap();
        prop_assert_eq!(a.increments(), b.increments());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn embedded_paths_stay_on_sphere_at_unit_speed(d in 2usize..4, sigma in 0.0..4.0f64, seed in any::<u64>(), dt in prop_oneof![Just(1e-3), Just(1e-2)]) {
        let pot = PotentialSpec::<f64>::radial_quadratic(d);
        let cfg = SimConfig::new(d, sigma, dt, 2000, seed).with_record_stride(20);
        let tr = simulate(&cfg, &pot, &InitialState::origin(d)).unwrap();
        prop_assert_eq!(tr.chart, ChartKind::Global);
        for v in tr.directions() {
            prop_assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= 1e-12);
        }
        for s in 0..tr.len() {
            for t in s + 1..tr.len() {
                let dist = tr.xi[t].iter().zip(&tr.xi[s]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dist <= (tr.times[t] - tr.times[s]) * (1.0 + 10.0 * dt));
            }
        }
        let again = simulate(&cfg, &pot, &InitialState::origin(d)).unwrap();
        prop_assert_eq!(tr.xi, again.xi);
    }
}
