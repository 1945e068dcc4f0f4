use proptest::prelude::*;

use divlab::blowup::{quadratic_margin, rescale};
use divlab::calculus::{gauss_green_residual, mollify, numeric_divergence, MollifierKernel, Omega, TestFunction};
use divlab::fields::{
    field_from_registry, make_counterexample_field, make_twisting_field, twisting, CylindricalPotential, Gamma,
    VectorField,
};
use divlab::rigidity::{certify_potential, integrate_flow, strip_identity_2d};
use divlab::calculus::GridSpec;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn sup_bound_is_respected(name in prop::sample::select(vec![
        "stream:bump", "capillary:R=1", "twisting:levels=6", "counterexample:n=4:gamma=auto",
    ]), u in prop::collection::vec(-1.0f64..1.0, 4)) {
        let f = field_from_registry(name).unwrap();
        let x: Vec<f64> = match f.dim {
            2 if name.starts_with("capillary") => vec![0.7 * u[0], 0.7 * u[1]],
            2 if name.starts_with("twisting") => vec![0.5 + 0.5 * u[0], 0.25 * (u[1] + 1.0)],
            2 => vec![2.0 * u[0], 2.0 + 1.5 * u[1]],
            _ => vec![2.0 * u[0], 2.0 * u[1], 2.0 * u[2], 2.0 * u[3] + 0.01],
        };
        let v = f.eval_or_zero(&x).unwrap();
        prop_assert!(norm(&v) <= f.sup_bound * (1.0 + 1e-12), "{x:?}: {} > {}", norm(&v), f.sup_bound);
    }

    #[test]
    fn counterexample_vanishes_continuously_at_z0(rho in 0.0f64..3.0, dz in 1e-9f64..1e-6) {
        let f = make_counterexample_field(4, Gamma::Auto).unwrap();
        let above = f.eval(&[rho, 0.0, 0.0, dz]).unwrap();
        let below = f.eval(&[rho, 0.0, 0.0, -dz]).unwrap();
        prop_assert!(norm(&below) == 0.0);
        prop_assert!(norm(&above) <= 1e-5, "{}", norm(&above));
    }

    #[test]
    fn quadratic_identity(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let xi = [a, b, c];
        let r2 = a * a + b * b + c * c;
        let m = quadratic_margin(&xi);
        prop_assert!((m - 0.5 * (1.0 - r2)).abs() <= 1e-12);
    }

    #[test]
    fn rescale_preserves_sup_and_composes(x0 in prop::collection::vec(-1.0f64..1.0, 2),
                                          r in 0.1f64..2.0, s in 0.1f64..2.0,
                                          y in prop::collection::vec(-1.0f64..1.0, 2)) {
        let f = field_from_registry("stream:bump").unwrap();
        let g = rescale(&f, &x0, r).unwrap();
        prop_assert_eq!(g.sup_bound, f.sup_bound);
        // (f_{x0,r})_{0,s} = f_{x0,rs}
        let twice = rescale(&g, &[0.0, 0.0], s).unwrap();
        let once = rescale(&f, &x0, r * s).unwrap();
        let (p, q) = (twice.eval(&y).unwrap(), once.eval(&y).unwrap());
        prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn finite_differences_converge_at_second_order(x in -0.5f64..0.5, y in 1.6f64..2.4) {
        // the identity field has divergence exactly 2 but a curved field is needed for truncation error
        let f = field_from_registry("capillary:R=4").unwrap();
        let g = f.combine(1.0, &field_from_registry("stream:bump").unwrap(), 1.0).unwrap();
        let exact = 2.0 / 4.0;
        let e1 = (numeric_divergence(&g, &[x, y], 1e-2).unwrap() - exact).abs();
        let e2 = (numeric_divergence(&g, &[x, y], 5e-3).unwrap() - exact).abs();
        prop_assert!(e2 <= e1 / 3.0 + 1e-9, "{e1:e} -> {e2:e}");
    }

    #[test]
    fn mollification_contracts_sup(x in -2.0f64..2.0, y in 0.0f64..4.0, eps in 0.05f64..0.5) {
        let f = field_from_registry("stream:bump").unwrap();
        let m = mollify(&f, &MollifierKernel::new(2, eps).unwrap(), false).unwrap();
        prop_assert!(m.sup_bound <= f.sup_bound);
        prop_assert!(norm(&m.eval(&[x, y]).unwrap()) <= f.sup_bound * (1.0 + 1e-12));
    }

    #[test]
    fn gauss_green_is_linear_in_psi(a in -2.0f64..2.0, b in -2.0f64..2.0,
                                    cx in 0.2f64..0.8, cy in 0.2f64..0.8) {
        let f = field_from_registry("capillary:R=2").unwrap();
        let omega = Omega::unit_square();
        let p1 = TestFunction::gaussian(&[cx, cy], 0.3);
        let p2 = TestFunction::gaussian(&[0.5, 0.5], 0.2);
        let g1 = gauss_green_residual(&f, &omega, &p1).unwrap();
        let g2 = gauss_green_residual(&f, &omega, &p2).unwrap();
        let g = gauss_green_residual(&f, &omega, &TestFunction::combination(vec![(a, p1), (b, p2)])).unwrap();
        let lin = a * g1.boundary_term + b * g2.boundary_term;
        prop_assert!((g.boundary_term - lin).abs() <= 1e-8 * (1.0 + lin.abs()));
        prop_assert!(g.residual.abs() <= 1e-8);
    }

    #[test]
    fn flow_is_a_semigroup(x in -0.6f64..0.6, h1 in 0.5f64..2.5, h2 in 2.5f64..4.0) {
        let eta = field_from_registry("stream:bump").unwrap();
        let xf = eta.plus_constant(&[0.0, 2.0 * eta.sup_bound]);
        let direct = integrate_flow(&xf, &[x, 0.0], h2).unwrap();
        let mid = integrate_flow(&xf, &[x, 0.0], h1).unwrap();
        let stage = integrate_flow(&xf, &mid.position, h2).unwrap();
        prop_assert!((direct.position[0] - stage.position[0]).abs() <= 1e-7);
        prop_assert!((direct.delta - mid.delta * stage.delta).abs() <= 1e-7);
        let still = integrate_flow(&xf, &[x, 0.0], 0.0).unwrap();
        prop_assert!((still.delta - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn strip_identity_is_translation_invariant(s in -1.5f64..1.5, r in 1.0f64..4.0, t in 0.5f64..3.5) {
        let eta = field_from_registry("stream:bump").unwrap();
        let a = strip_identity_2d(&eta, r, t, None).unwrap();
        let b = strip_identity_2d(&eta.translated(&[s, 0.0]), r + s.abs() + 1.0, t, None).unwrap();
        prop_assert!(a.passed() && b.passed());
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn certificate_is_monotone_in_gamma(k in 0u32..6) {
        let gamma = 2f64.powf(-8.0 / 3.0) * (0.25 + 0.15 * k as f64);
        let grid = GridSpec::uniform_box(&[0.01, 0.01], &[3.0, 3.0], 40).unwrap();
        let p = CylindricalPotential::counterexample(4, Gamma::Value(gamma)).unwrap();
        prop_assert!(certify_potential(&p, &grid, 1.0).unwrap().certified());
        let big = CylindricalPotential::counterexample(4, Gamma::Value(1.0 + k as f64)).unwrap();
        prop_assert!(!certify_potential(&big, &grid, 1.0).unwrap().certified());
    }
}

#[test]
fn twisting_balls_are_disjoint() {
    for levels in 1..=10 {
        twisting::check_disjoint(levels).unwrap();
    }
    assert!(make_twisting_field(8, None).is_ok());
}

#[test]
fn pairing_is_linear_in_the_field() {
    let a = field_from_registry("capillary:R=2").unwrap();
    let b = VectorField::constant(&[0.3, -0.7]);
    let c = a.combine(2.0, &b, -3.0).unwrap();
    let omega = Omega::unit_square();
    let psis = [TestFunction::bump(&[0.5, 0.5], 0.4), TestFunction::gaussian(&[0.3, 0.6], 0.2)];
    let pa = divlab::trace::weak_trace_pairing(&a, &omega, &psis).unwrap();
    let pb = divlab::trace::weak_trace_pairing(&b, &omega, &psis).unwrap();
    let pc = divlab::trace::weak_trace_pairing(&c, &omega, &psis).unwrap();
    for i in 0..psis.len() {
        assert!((pc[i] - (2.0 * pa[i] - 3.0 * pb[i])).abs() < 1e-9);
    }
}

#[test]
fn sums_of_bumps_have_compact_support() {
    let s = TestFunction::combination(vec![
        (1.0, TestFunction::bump(&[0.2, 0.5], 0.2)),
        (-2.0, TestFunction::bump(&[0.7, 0.5], 0.25)),
    ]);
    let (c, r) = s.support().unwrap();
    for p in [[0.0, 0.5], [0.95, 0.5], [0.7, 0.75], [0.2, 0.3]] {
        assert!(((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() <= r + 1e-12);
    }
    let f = field_from_registry("capillary:R=2").unwrap();
    let g = gauss_green_residual(&f, &Omega::unit_square(), &s).unwrap();
    assert!(g.residual.abs() <= 1e-8);
    let with_gaussian = TestFunction::combination(vec![(1.0, s), (1.0, TestFunction::gaussian(&[0.0, 0.0], 1.0))]);
    assert!(with_gaussian.support().is_none());
}
