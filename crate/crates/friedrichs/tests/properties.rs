mod common;

use std::sync::Arc;

use friedrichs::boundary;
use friedrichs::clifford::{dirac_system, CliffordRep};
use friedrichs::geometry::{Point, Profile, SpacetimeChart};
use friedrichs::linalg::{self, c, Mat, Vect, C64};
use friedrichs::solver::{self, energy_trace, SolveOptions};
use friedrichs::system::FriedrichsSystem;
use proptest::prelude::*;

use common::strip;

fn cmat(n: usize, m: usize, v: &[(f64, f64)]) -> Mat {
    Mat::from_fn(n, m, |i, j| {
        let (re, im) = v[i * m + j];
        C64::new(re, im)
    })
}

fn entries(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), len)
}

fn hermitian(n: usize, v: &[(f64, f64)]) -> Mat {
    linalg::herm_part(&cmat(n, n, v))
}

fn random_system(a0: &[(f64, f64)], a1: &[(f64, f64)], cm: &[(f64, f64)]) -> FriedrichsSystem {
    let n = 3;
    let a0 = hermitian(n, a0) + linalg::identity(n) * c(6.0);
    FriedrichsSystem::constant("random", strip(1, 1.0), vec![a0, hermitian(n, a1)], cmat(n, n, cm), linalg::identity(n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_is_linear(a0 in entries(9), a1 in entries(9), cm in entries(9),
                        xi in prop::array::uniform2(-3.0..3.0f64), eta in prop::array::uniform2(-3.0..3.0f64),
                        a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let sys = random_system(&a0, &a1, &cm);
        let p = Point::at(0.3, 0.6);
        let mix = [a * xi[0] + b * eta[0], a * xi[1] + b * eta[1]];
        let lhs = sys.symbol(&p, &mix);
        let rhs = sys.symbol(&p, &xi) * c(a) + sys.symbol(&p, &eta) * c(b);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn lambda_shift_moves_only_zero_order(a0 in entries(9), a1 in entries(9), cm in entries(9), lambda in 0.0..5.0f64) {
        let sys = random_system(&a0, &a1, &cm);
        let k = sys.lambda_shift(lambda);
        let p = Point::at(0.1, 0.2);
        let (s, t) = (sys.coefficients(&p), k.coefficients(&p));
        for (x, y) in s.a.iter().zip(&t.a) {
            prop_assert!((x - y).norm() < 1e-14);
        }
        prop_assert!((&t.c - &s.c - &s.a[0] * c(lambda)).norm() < 1e-12);
    }

    #[test]
    fn beta_normalization_scales_boundary_form(beta in 0.3..3.0f64, v in entries(2)) {
        let rep = CliffordRep::build(2).unwrap();
        let chart = Arc::new(SpacetimeChart::custom("lapse", (0.0, 1.0), vec![1.0], Profile::Constant(beta), vec![Profile::Constant(1.0)]).unwrap());
        let sys = dirac_system(&rep, chart, None).unwrap();
        let pts = sys.chart().sample_points(Default::default());
        let norm = sys.beta_normalize(&pts[..8]).unwrap();
        prop_assert!(norm.metric_positive());
        let v = Vect::from_iterator(2, v.iter().map(|&(re, im)| C64::new(re, im)));
        for q in sys.chart().boundary_samples(2) {
            let f = linalg::form(&sys.boundary_form(&q).unwrap(), &v);
            let fb = linalg::form(&norm.boundary_form(&q).unwrap(), &v);
            prop_assert!((fb - beta * f).abs() < 1e-10 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn kernel_is_orthonormal_null_space(v in entries(8), w in entries(8)) {
        let low = cmat(4, 2, &v) * cmat(2, 4, &w);
        let k = linalg::kernel(&low, 1e-9);
        prop_assert!(k.gram_defect() < 1e-10);
        prop_assert!((&low * k.basis()).norm() < 1e-8 * (1.0 + low.norm()));
        prop_assert!(k.rank() >= 2);
    }

    #[test]
    fn eigenvalues_sum_to_trace(v in entries(36)) {
        let m = hermitian(6, &v);
        let e = linalg::herm_eigen(&m).unwrap();
        let tr: f64 = (0..6).map(|i| m[(i, i)].re).sum();
        prop_assert!((e.values.iter().sum::<f64>() - tr).abs() < 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn mit_admissible_for_any_lapse(beta in 0.3..3.0f64, sign in prop::bool::ANY) {
        let rep = CliffordRep::build(2).unwrap();
        let chart = Arc::new(SpacetimeChart::custom("lapse", (0.0, 1.0), vec![1.0], Profile::Constant(beta), vec![Profile::Constant(1.0)]).unwrap());
        let sys = dirac_system(&rep, chart, None).unwrap();
        let bc = boundary::mit_bag(&sys, if sign { 1.0 } else { -1.0 }).unwrap();
        let rep = boundary::admissibility(&sys, &bc, &sys.chart().boundary_samples(3)).unwrap();
        prop_assert!(rep.admissible);
        prop_assert!(rep.min_restricted_eigenvalue.abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dirac_energy_is_nonnegative(a in -1.0..1.0f64, b in -1.0..1.0f64, k in 1.0..6.0f64) {
        let rep = CliffordRep::build(2).unwrap();
        let sys = dirac_system(&rep, strip(1, 0.1), None).unwrap();
        let bcs = boundary::FaceConditions::both(boundary::mit_bag(&sys, -1.0).unwrap());
        let init = common::field(move |p| {
            let w = common::bump((p.x[0] - 0.5) / 0.3);
            vec![C64::new(a, b) * w * (k * p.x[0]).sin(), c(w * (k * p.x[0]).cos() * b)]
        });
        let sol = solver::solve(&sys, &bcs, None, &init, &SolveOptions::new(64)).unwrap();
        let tr = energy_trace(&sys, &sol);
        prop_assert!(tr.non_negative());
        prop_assert!(tr.within_growth(0.0));
    }
}
