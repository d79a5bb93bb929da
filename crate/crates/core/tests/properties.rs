use std::f64::consts::PI;

use aklab::certify::{distance_to_cone, l2_certificate, Setting};
use aklab::counterexample::WitnessSpec;
use aklab::grid::torus_distance;
use aklab::model::{apply_f, consumption, ModelParams, PolicyConstants, DEFAULT_RHO};
use aklab::spectral::{principal_eigenpair, EigenOptions, EigenPair};
use aklab::{Field, TorusGrid};
use proptest::prelude::*;

fn field(n: usize) -> impl Strategy<Value = Field> {
    prop::collection::vec(-5.0f64..5.0, n)
        .prop_map(move |v| Field::new(TorusGrid::new(n).unwrap(), v).unwrap())
}

/// Heterogeneous productivity `A(θ) = a0 + a1 cos(2πθ + φ)` with a0 > |a1|.
fn hetero_params(n: usize) -> impl Strategy<Value = ModelParams> {
    (0.005f64..0.02, 0.0f64..0.004, 0.0f64..1.0, 0.001f64..0.05).prop_map(
        move |(a0, a1, phase, sigma)| {
            let grid = TorusGrid::new(n).unwrap();
            let a = grid
                .sample(|t| a0 + a1 * (2.0 * PI * (t + phase)).cos())
                .unwrap();
            ModelParams::new(sigma, 0.2, 0.5, 1.0, a, grid.constant(0.01).unwrap()).unwrap()
        },
    )
}

fn table1(n: usize) -> (ModelParams, EigenPair, PolicyConstants) {
    let grid = TorusGrid::new(n).unwrap();
    let params = ModelParams::table1(grid, DEFAULT_RHO).unwrap();
    let eig = EigenPair::constant(grid, 0.01);
    let pc = PolicyConstants::new(&params, &eig).unwrap();
    (params, eig, pc)
}

proptest! {
    #[test]
    fn torus_distance_is_a_symmetric_metric(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let d = torus_distance(x, y);
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert_eq!(d, torus_distance(y, x));
        prop_assert!(torus_distance(x, x + 1.0) < 1e-12);
    }

    #[test]
    fn parts_split_the_field(f in field(32)) {
        let recon = f.positive_part().sub(&f.negative_part()).unwrap();
        prop_assert_eq!(recon.values(), f.values());
        let product = f.positive_part().mul(&f.negative_part()).unwrap();
        prop_assert!(product.values().iter().all(|&v| v == 0.0));
        prop_assert!(f.negative_part().min() >= 0.0);
    }

    #[test]
    fn quadrature_is_linear(f in field(32), g in field(32), c in -3.0f64..3.0) {
        let lhs = f.axpy(c, &g).unwrap().integrate();
        let rhs = f.integrate() + c * g.integrate();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn cone_distance_is_positively_homogeneous(f in field(32), c in 0.01f64..100.0) {
        for setting in [Setting::L2, Setting::Sup] {
            let scaled = distance_to_cone(&f.scale(c), setting);
            let base = distance_to_cone(&f, setting);
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (1.0 + c * base));
        }
    }

    #[test]
    fn forcing_operator_is_linear(f in field(32), g in field(32), c in -3.0f64..3.0) {
        let (params, _, pc) = table1(32);
        let lhs = apply_f(&f.axpy(c, &g).unwrap(), &pc, &params).unwrap();
        let rhs = apply_f(&f, &pc, &params).unwrap()
            .axpy(c, &apply_f(&g, &pc, &params).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_sup() < 1e-9);
    }

    #[test]
    fn l2_terms_reassemble(f in field(64)) {
        let (params, _, pc) = table1(64);
        let report = l2_certificate(&f, 1.0, 1.0, &pc, &params).unwrap();
        if let Some(parts) = report.decomposition {
            prop_assert!(parts.boundary_residual <= 0.0);
            prop_assert!((parts.total() - report.lhs).abs() <= 1e-9 * (1.0 + report.lhs.abs()));
        } else {
            prop_assert!(f.min() >= 0.0);
        }
    }

    #[test]
    fn certificate_lhs_is_affine_in_plateau_height(delta in 0.02f64..0.2, big_c in 1.0f64..100.0) {
        let (params, _, pc) = table1(128);
        let lhs = |c_star: f64| {
            WitnessSpec::new(Setting::L2, delta, big_c, c_star).unwrap()
                .certify(&pc, &params, 1e-9).unwrap().lhs
        };
        let (l1, l2, l3) = (lhs(1.0), lhs(3.0), lhs(5.0));
        prop_assert!((l3 - 2.0 * l2 + l1).abs() <= 1e-8 * (1.0 + l3.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalue_obeys_rayleigh_bounds(params in hetero_params(32)) {
        let eig = principal_eigenpair(&params, EigenOptions::default()).unwrap();
        let a = params.a();
        prop_assert!(eig.lambda0 >= a.mean() - 1e-12);
        prop_assert!(eig.lambda0 <= a.max() + 1e-12);
        prop_assert!(eig.b0.min() > 0.0);
        prop_assert!((eig.b0.integrate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn policy_ignores_eigenvector_normalization(params in hetero_params(32), f in field(32)) {
        let eig = principal_eigenpair(&params, EigenOptions::default()).unwrap();
        let base = PolicyConstants::new(&params, &eig).unwrap();
        let k = f.map(|v| v.abs() + 0.1);
        let c_base = consumption(&k, &base, &params).unwrap();
        for c in [0.1, 10.0] {
            let other = PolicyConstants::new(&params, &eig.scaled(c)).unwrap();
            prop_assert!((other.g - base.g).abs() < 1e-12);
            let drift = apply_f(&k, &other, &params).unwrap()
                .sub(&apply_f(&k, &base, &params).unwrap()).unwrap().norm_sup();
            prop_assert!(drift < 1e-12);
            let c_other = consumption(&k, &other, &params).unwrap();
            prop_assert!(c_other.sub(&c_base).unwrap().norm_sup() <= 1e-12 * (1.0 + c_base.norm_sup()));
        }
    }

    #[test]
    fn aggregate_grows_at_rate_g(params in hetero_params(32), f in field(32)) {
        let eig = principal_eigenpair(&params, EigenOptions::default()).unwrap();
        let pc = PolicyConstants::new(&params, &eig).unwrap();
        let lhs = apply_f(&f, &pc, &params).unwrap().inner(&eig.b0).unwrap();
        let rhs = pc.g * f.inner(&eig.b0).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }
}
