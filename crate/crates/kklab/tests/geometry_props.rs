//! Cross-module property tests: randomized chart-calculus invariants,
//! two-route agreements on the catalog bundles, and stochastic
//! consistency checks that sit outside the acceptance gate.

use kklab::catalog;
use kklab::chart::{self, Axis, ChartedMetric, SignConvention};
use kklab::fd::{FdOrder, FdScheme};
use kklab::kk;
use kklab::lie;
use kklab::mc::{self, SdeSpec};
use kklab::quantum::PhysicalParams;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

fn catalog_bundles() -> Vec<kk::KKBundle> {
    vec![
        catalog::hopf(),
        catalog::trivial_su2_product(),
        catalog::warped_su2(),
        catalog::warped_u1_line(0.4),
        catalog::warped_u1_gauss(),
    ]
}

#[test]
fn ambient_and_reduced_second_fundamental_forms_agree_at_random_points() {
    let s = FdScheme::default();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for b in catalog_bundles() {
        for _ in 0..3 {
            let x = catalog::random_interior_point(b.base_axes(), s.margin(2) + 0.05, &mut rng);
            let j_red = kk::second_fundamental_form(&b, &x, &s).unwrap();
            let j_amb = kk::second_fundamental_form_ambient(&b, &x, &s).unwrap();
            for k in 0..b.base_dim() {
                for al in 0..b.dim_g() {
                    for be in 0..b.dim_g() {
                        let d = (j_red.get(k, al, be) - j_amb.get(k, al, be)).abs();
                        assert!(
                            d < 1e-4,
                            "{} at {x:?}: component ({k},{al},{be}) differs by {d:.3e}",
                            b.label()
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn jacobian_routes_agree_at_random_points() {
    let s = FdScheme::default();
    let mut rng = ChaCha12Rng::seed_from_u64(55);
    for b in [catalog::warped_su2(), catalog::warped_u1_line(0.7)] {
        for _ in 0..5 {
            let x = catalog::random_interior_point(b.base_axes(), s.margin(2) + 0.05, &mut rng);
            let direct = kk::jacobian_tilde_direct(&b, &x, &s).unwrap();
            let geometric = kk::jacobian_tilde_geometric(&b, &x, &s).unwrap();
            assert!(
                (direct - geometric).abs() < 1e-4,
                "{} at {x:?}: {direct} vs {geometric}",
                b.label()
            );
        }
    }
}

#[test]
fn horizontal_basis_gamma_route_agrees_at_random_points() {
    let s = FdScheme::default();
    let mut rng = ChaCha12Rng::seed_from_u64(56);
    for b in [catalog::warped_su2(), catalog::warped_u1_line(0.7)] {
        for _ in 0..3 {
            let x = catalog::random_interior_point(b.base_axes(), s.margin(3) + 0.05, &mut rng);
            let rep = kk::decomposition_report(&b, &x, &s, SignConvention::PositiveSpheres)
                .unwrap();
            let lifted = kk::horizontal_basis_gamma_terms(&b, &x, &s).unwrap();
            let expanded = rep.dgamma2_term + rep.j_tilde_direct;
            assert!(
                (expanded - lifted).abs() < 1e-4,
                "{} at {x:?}: {expanded} vs {lifted}",
                b.label()
            );
        }
    }
}

#[test]
fn weak_convergence_halving_dt_stays_within_statistical_error() {
    let params = PhysicalParams::default();
    let circle = ChartedMetric::new(
        "circle",
        vec![Axis::periodic(0.0, 2.0 * PI)],
        |_p, out| {
            out[(0, 0)] = 1.0;
        },
    );
    let spec = SdeSpec::new(circle, params);
    let w = 0.1;
    let n = 100_000;
    let coarse =
        mc::feynman_kac_kernel(&spec, &[1.0], 0.0, &[1.7], 0.4, 1e-3, n, w, 500).unwrap();
    let fine =
        mc::feynman_kac_kernel(&spec, &[1.0], 0.0, &[1.7], 0.4, 5e-4, n, w, 501).unwrap();
    let combined = (coarse.std_error.powi(2) + fine.std_error.powi(2)).sqrt();
    assert!(
        (coarse.value - fine.value).abs() < 3.0 * combined,
        "dt bias visible above noise: {} vs {} +- {combined}",
        coarse.value,
        fine.value
    );
}

#[test]
fn all_decomposition_scalars_are_gauge_invariant_under_fibre_coordinate_choice() {
    // Evaluating the total-space curvature slightly off the identity
    // section must not change the scalar terms (they are functions of x
    // only); checks the a-independence claim behind evaluating at a = e.
    let s = FdScheme::default();
    let b = catalog::warped_su2();
    let total = kk::assemble_kk_metric(&b);
    let x = [1.3, 2.1];
    let mut q = b.section_point(&x);
    let r_at_e = chart::curvature_pack(&total, &q, &s, SignConvention::PositiveSpheres)
        .unwrap()
        .scalar;
    q[2] = 0.2;
    q[3] = -0.15;
    q[4] = 0.1;
    let r_off = chart::curvature_pack(&total, &q, &s, SignConvention::PositiveSpheres)
        .unwrap()
        .scalar;
    assert!(
        (r_at_e - r_off).abs() < 1e-6,
        "scalar curvature must be constant along the fibre: {r_at_e} vs {r_off}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Christoffel lower-index symmetry is exact and the Riemann tensor
    /// is exactly antisymmetric in its last index pair, for randomized
    /// diagonal trigonometric metrics on the 2-torus.
    #[test]
    fn chart_calculus_symmetries_hold_for_random_metrics(
        a1 in 0.2f64..1.5,
        a2 in 0.2f64..1.5,
        ph in 0.0f64..6.2,
        px in 0.3f64..6.0,
        py in 0.3f64..6.0,
    ) {
        let m = ChartedMetric::new(
            "random-diag",
            vec![Axis::periodic(0.0, 2.0 * PI), Axis::periodic(0.0, 2.0 * PI)],
            move |p, out| {
                out.fill(0.0);
                out[(0, 0)] = 1.0 + a1 * (p[1] + ph).sin().powi(2);
                out[(1, 1)] = 1.0 + a2 * (p[0]).cos().powi(2);
            },
        );
        let s = FdScheme::default();
        let pack = chart::curvature_pack(&m, &[px, py], &s, SignConvention::PositiveSpheres).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    prop_assert_eq!(pack.christoffel.get(a, b, c), pack.christoffel.get(a, c, b));
                    for d in 0..2 {
                        prop_assert_eq!(
                            pack.riemann.get(a, b, c, d),
                            -pack.riemann.get(a, b, d, c)
                        );
                    }
                }
            }
        }
        let asym = (&pack.ricci - pack.ricci.transpose()).abs().max();
        prop_assert!(asym < 1e-6);
    }

    /// Group chart coherence at random points: u_bar inverts v_bar and
    /// the adjoint is a homomorphism against the composition function.
    #[test]
    fn su2_chart_identities_hold_at_random_points(
        ax in -1.5f64..1.5, ay in -1.5f64..1.5, az in -1.5f64..1.5,
        bx in -1.5f64..1.5, by in -1.5f64..1.5, bz in -1.5f64..1.5,
    ) {
        let g = lie::build_su2();
        let a = [ax, ay, az];
        let b = [bx, by, bz];
        let prod = g.chart.u_bar(&a) * g.chart.v_bar(&a);
        prop_assert!((prod - nalgebra::DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-10);
        let ab = g.chart.compose(&a, &b);
        let lhs = g.chart.rho(&ab);
        let rhs = g.chart.rho(&a) * g.chart.rho(&b);
        prop_assert!((lhs - rhs).abs().max() < 1e-10);
    }

    /// Haar weights stay normalized at every resolution.
    #[test]
    fn haar_weights_sum_to_one(res in 1usize..7) {
        let su2 = lie::build_su2();
        let q = lie::haar_quadrature(&su2.chart, res);
        let sum: f64 = q.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        let u1 = lie::build_abelian(1);
        let q = lie::haar_quadrature(&u1.chart, res);
        let sum: f64 = q.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    /// The determinant factorization of the assembled metric holds at
    /// arbitrary chart points.
    #[test]
    fn determinant_identity_holds_for_random_configurations(
        x1 in 0.5f64..5.5, x2 in 0.5f64..5.5,
        a1 in -1.2f64..1.2, a2 in -1.2f64..1.2, a3 in -1.2f64..1.2,
    ) {
        let b = catalog::warped_su2();
        let ratio = kk::det_identity_ratio(&b, &[x1, x2], &[a1, a2, a3]).unwrap();
        prop_assert!((ratio - 1.0).abs() < 1e-10);
    }
}

#[test]
fn spd_guard_rejects_ill_conditioned_metrics() {
    let mut rng = ChaCha12Rng::seed_from_u64(8);
    // a metric with condition number beyond the guard
    let m = ChartedMetric::new(
        "ill",
        vec![Axis::bounded(-1.0, 1.0), Axis::bounded(-1.0, 1.0)],
        |_p, out| {
            out.fill(0.0);
            out[(0, 0)] = 1.0;
            out[(1, 1)] = 1e-14;
        },
    );
    let p = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    assert!(chart::christoffel(&m, &p, &FdScheme::default()).is_err());
}

#[test]
fn richardson_extrapolation_sharpens_order_two_curvature() {
    let m = catalog::s2(1.0);
    let p = [1.1, 0.3];
    let plain = chart::curvature_pack(
        &m,
        &p,
        &FdScheme::new(4e-3, FdOrder::Two, false),
        SignConvention::PositiveSpheres,
    )
    .unwrap()
    .scalar;
    let extrapolated = chart::curvature_pack(
        &m,
        &p,
        &FdScheme::new(4e-3, FdOrder::Two, true),
        SignConvention::PositiveSpheres,
    )
    .unwrap()
    .scalar;
    let e_plain = (plain - 2.0).abs();
    let e_rich = (extrapolated - 2.0).abs();
    assert!(
        e_rich < e_plain / 4.0,
        "richardson should sharpen the estimate: {e_plain:.3e} -> {e_rich:.3e}"
    );
}
