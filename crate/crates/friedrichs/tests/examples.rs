mod common;

use std::sync::Arc;

use friedrichs::boundary::{self, BoundaryCondition, FaceConditions};
use friedrichs::clifford::{dirac_system, CliffordRep};
use friedrichs::geometry::{max_characteristic_speed, Point, Profile, Sampling, SpacetimeChart};
use friedrichs::linalg::{self, c, Mat, Vect, C64};
use friedrichs::reduction::{self, FieldFn, SecondOrderProblem};
use friedrichs::solver::{self, io, Scheme, SolveOptions};
use friedrichs::system::FriedrichsSystem;
use friedrichs::Error;

use common::{advection, bump, dirac_1d, field, inflow, real_field, strip};

fn coarse(sys: &FriedrichsSystem) -> Vec<Point> {
    sys.chart().sample_points(Sampling {
        per_axis: 9,
        time_levels: 3,
    })
}

fn bump_d(s: f64) -> f64 {
    if s.abs() < 1.0 {
        -2.0 * s / (1.0 - s * s).powi(2) * bump(s)
    } else {
        0.0
    }
}

fn wave_1d(t1: f64) -> FriedrichsSystem {
    reduction::wave_to_first_order(&SecondOrderProblem::wave(strip(1, t1), 1)).unwrap()
}

/// Resting bump `u = φ((x − 0.5)/w)` as `(∂_t u, ∂_x u, u)`.
fn wave_bump(w: f64) -> FieldFn {
    real_field(move |p| {
        let s = (p.x[0] - 0.5) / w;
        vec![0.0, bump_d(s) / w, bump(s)]
    })
}

#[test]
fn characteristic_speeds() {
    let adv = advection(1.0);
    assert!((max_characteristic_speed(&adv, &coarse(&adv)).unwrap() - 1.0).abs() < 1e-12);
    let wave = wave_1d(1.0);
    assert!((max_characteristic_speed(&wave, &coarse(&wave)).unwrap() - 1.0).abs() < 1e-10);
    let fast = FriedrichsSystem::constant("fast", strip(1, 1.0), vec![linalg::identity(1), linalg::identity(1) * c(2.0)], linalg::zeros(1, 1), linalg::identity(1)).unwrap();
    assert!((max_characteristic_speed(&fast, &coarse(&fast)).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn kg_is_not_dt_positive_but_wave_is() {
    let kg = reduction::kg_to_first_order(&SecondOrderProblem::klein_gordon(strip(1, 1.0), 1, 1.0)).unwrap();
    let wave = wave_1d(1.0);
    assert!(!kg.dt_positive(&coarse(&kg)));
    assert!(wave.dt_positive(&coarse(&wave)));
    let rep = wave.check_hyperbolic(&coarse(&wave), 8, 1).unwrap();
    assert!(rep.hyperbolic);
}

#[test]
fn negative_reaction_needs_lambda_two() {
    let rd = reduction::reaction_diffusion_to_first_order(&SecondOrderProblem::reaction_diffusion(strip(1, 1.0), 1, -1.0), 0.0).unwrap();
    assert!(!rd.check_positive(&[0.0, 0.5, 1.0], 9).pass);
    assert_eq!(rd.find_lambda(5, &[0.0, 0.5, 1.0], 9), Some(2));
}

#[test]
fn beta_normalized_dirac_keeps_mit_verdict() {
    let rep = CliffordRep::build(2).unwrap();
    let chart = Arc::new(SpacetimeChart::custom("lapse", (0.0, 1.0), vec![1.0], Profile::Constant(2.0), vec![Profile::Constant(1.0)]).unwrap());
    let sys = dirac_system(&rep, chart, None).unwrap();
    let norm = sys.beta_normalize(&coarse(&sys)).unwrap();
    assert!(norm.metric_positive());
    let samples = sys.chart().boundary_samples(6);
    for sign in [-1.0, 1.0] {
        let a = boundary::admissibility(&sys, &boundary::mit_bag(&sys, sign).unwrap(), &samples).unwrap();
        let b = boundary::admissibility(&norm, &boundary::mit_bag(&sys, sign).unwrap(), &samples).unwrap();
        assert!(a.admissible && b.admissible);
    }
}

#[test]
fn neumann_like_space_dimension() {
    let chart = strip(2, 1.0);
    let wave = reduction::wave_to_first_order(&SecondOrderProblem::wave(chart, 2)).unwrap();
    let bc = boundary::neumann_like(&wave).unwrap();
    for q in wave.chart().boundary_samples(3) {
        assert_eq!(bc.space(&q).rank(), 3 * 2);
    }
}

#[test]
fn transparent_form_is_twice_b_time_derivative_squared() {
    let wave = wave_1d(1.0);
    for b in [0.5, 1.0, 2.0] {
        let bc = boundary::transparent(&wave, b).unwrap();
        for q in wave.chart().boundary_samples(2) {
            let f = wave.boundary_form(&q).unwrap();
            let space = bc.space(&q);
            for i in 0..space.rank() {
                let v = space.vector(i);
                let value = linalg::form(&f, &v);
                assert!((value - 2.0 * b * v[0].norm_sqr()).abs() < 1e-12, "{value}");
            }
        }
    }
}

#[test]
fn robin_zero_one_is_dirichlet() {
    let kg = reduction::kg_to_first_order(&SecondOrderProblem::klein_gordon(strip(1, 1.0), 1, 1.0)).unwrap();
    let bc = boundary::robin(&kg, 0.0, 1.0).unwrap();
    let lay = kg.layout().unwrap().clone();
    for q in kg.chart().boundary_samples(2) {
        let space = bc.space(&q);
        assert_eq!(space.rank(), kg.rank() - 1);
        for i in 0..space.rank() {
            assert!(space.vector(i)[lay.u_index(0)].norm() < 1e-12);
        }
    }
}

#[test]
fn characteristic_kernel_lies_in_both_spaces() {
    let wave = wave_1d(1.0);
    for bc in [boundary::neumann_like(&wave).unwrap(), boundary::transparent(&wave, 0.5).unwrap()] {
        for q in wave.chart().boundary_samples(2) {
            let ker = linalg::kernel(&wave.boundary_symbol(&q).unwrap(), 1e-9);
            assert!(ker.rank() > 0);
            assert!(bc.space(&q).contains(&ker) < 1e-10);
            let dagger = boundary::adjoint_boundary_space(&wave, &bc, &q).unwrap();
            assert!(dagger.contains(&ker) < 1e-10);
        }
    }
}

#[test]
fn mit_adjoint_space_is_one_dimensional() {
    let (_, sys) = dirac_1d(1.0);
    for sign in [-1.0, 1.0] {
        let bc = boundary::mit_bag(&sys, sign).unwrap();
        for q in sys.chart().boundary_samples(2) {
            let chk = boundary::check_adjoint_space(&sys, &bc, &q).unwrap();
            assert_eq!(chk.dim, 1);
            assert!(chk.annihilation < 1e-12);
        }
    }
}

fn negative_projector(f: &Mat) -> Mat {
    let e = linalg::herm_eigen(f).unwrap();
    let cols: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] < 0.0).collect();
    let v = e.vectors.select_columns(&cols);
    &v * v.adjoint()
}

#[test]
fn nonnegative_eigenspace_has_nonpositive_adjoint() {
    let (_, sys) = dirac_1d(1.0);
    let s = sys.clone();
    let bc = BoundaryCondition::new("nonneg", vec![], Arc::new(move |q| negative_projector(&s.boundary_form(q).unwrap())));
    for q in sys.chart().boundary_samples(2) {
        let f = sys.boundary_form(&q).unwrap();
        let e = linalg::herm_eigen(&f).unwrap();
        let cols: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] <= 0.0).collect();
        let expected = linalg::Subspace::span(&e.vectors.select_columns(&cols));
        let dagger = boundary::adjoint_boundary_space(&sys, &bc, &q).unwrap();
        assert_eq!(dagger.rank(), expected.rank());
        assert!(dagger.contains(&expected) < 1e-10);
    }
    assert!(boundary::admissibility(&sys, &bc, &sys.chart().boundary_samples(4)).unwrap().admissible);
}

#[test]
fn dirac_bump_stays_inside_light_cone() {
    let (_, sys) = dirac_1d(0.2);
    let bcs = FaceConditions::both(boundary::mit_bag(&sys, -1.0).unwrap());
    let init = field(|p| {
        let s = (p.x[0] - 0.5) / 0.1;
        vec![c(bump(s)), C64::new(0.0, 0.5 * bump(s))]
    });
    let sol = solver::solve(&sys, &bcs, None, &init, &SolveOptions::new(400)).unwrap();
    let g = &sol.grid;
    let (a, b) = solver::support_hull(&sol.field, g, 0, 1e-12).unwrap();
    assert!(a >= 0.4 - g.dx && b <= 0.6 + g.dx, "{a} {b}");
    // upwind smearing: modified-equation diffusion c·Δx(1 − ν)/2 over time t
    let spread = (g.dx * (1.0 - g.cfl) * g.t_end()).sqrt();
    let tol = 2.0 * g.dx + 3.0 * spread;
    let (a, b) = solver::support_hull(&sol.field, g, g.nt, 1e-3).unwrap();
    assert!(a >= 0.2 - tol && b <= 0.8 + tol, "{a} {b}");
    // the explicit stencil widens the support by at most one cell per step
    let reach = g.nt as f64 * g.dx;
    let (a, b) = solver::support_hull(&sol.field, g, g.nt, 1e-300).unwrap();
    assert!(a >= 0.4 - reach - g.dx && b <= 0.6 + reach + g.dx, "{a} {b}");
}

#[test]
fn zero_data_gives_zero_energy() {
    let (_, sys) = dirac_1d(0.3);
    let bcs = FaceConditions::both(boundary::mit_bag(&sys, 1.0).unwrap());
    let zero = real_field(|_| vec![0.0, 0.0]);
    let sol = solver::solve(&sys, &bcs, None, &zero, &SolveOptions::new(32)).unwrap();
    assert!(solver::energy_trace(&sys, &sol).energy.iter().all(|&e| e == 0.0));
}

#[test]
fn absorbing_wave_loses_energy() {
    let wave = wave_1d(1.5);
    let bcs = FaceConditions::both(boundary::transparent(&wave, 1.0).unwrap());
    let sol = solver::solve(&wave, &bcs, None, &wave_bump(0.2), &SolveOptions::new(200)).unwrap();
    let g = &sol.grid;
    let hyperbolic: Vec<f64> = (0..=g.nt)
        .map(|n| (0..g.nx).map(|i| sol.field.cell(n, i)[..2].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() * g.dx)
        .collect();
    assert!(hyperbolic.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(hyperbolic[g.nt] < 1e-3 * hyperbolic[0]);
}

#[test]
fn energy_respects_growth_estimate() {
    let sys = FriedrichsSystem::constant("growing", strip(1, 0.5), vec![linalg::identity(1), linalg::identity(1)], linalg::identity(1) * c(-0.5), linalg::identity(1)).unwrap();
    let rate = solver::energy::growth_rate(&sys, &coarse(&sys));
    assert!((rate - 1.0).abs() < 1e-8);
    let init = real_field(|p| vec![bump((p.x[0] - 0.4) / 0.2)]);
    let sol = solver::solve(&sys, &inflow(), None, &init, &SolveOptions::new(128)).unwrap();
    let tr = solver::energy_trace(&sys, &sol);
    assert!(tr.within_growth(1.1 * rate));
    assert!(!tr.within_growth(0.0));
}

#[test]
fn non_admissible_closure_runs_when_forced() {
    let (_, sys) = dirac_1d(0.5);
    let bcs = FaceConditions::both(boundary::riemannian_mit(&sys, 1.0).unwrap());
    let init = field(|p| vec![c(bump((p.x[0] - 0.5) / 0.3)), c(0.0)]);
    assert!(solver::solve(&sys, &bcs, None, &init, &SolveOptions::new(64)).is_err());
    match solver::solve(&sys, &bcs, None, &init, &SolveOptions::new(64).forced(true)) {
        Ok(sol) => {
            let tr = solver::energy_trace(&sys, &sol);
            println!("forced riemannian_mit(+1): E(T)/E(0) = {:.4}", tr.ratio());
        }
        Err(e) => println!("forced riemannian_mit(+1): {e}"),
    }
}

#[test]
fn green_operators_on_zero_and_early_sources() {
    let (_, sys) = dirac_1d(0.4);
    let bcs = FaceConditions::both(boundary::mit_bag(&sys, -1.0).unwrap());
    let zero = real_field(|_| vec![0.0, 0.0]);
    let opts = SolveOptions::new(64);
    assert_eq!(solver::green_plus(&sys, &bcs, &zero, &opts).unwrap().field.max_norm(), 0.0);
    assert_eq!(solver::green_minus(&sys, &bcs, &zero, &opts).unwrap().field.max_norm(), 0.0);
    let early = real_field(|p| vec![bump((p.x[0] - 0.5) / 0.2), 0.0]);
    assert!(matches!(solver::green_plus(&sys, &bcs, &early, &opts), Err(Error::Precondition(_))));
}

#[test]
fn zero_lambda_is_exact_and_scaling_holds() {
    let adv = advection(0.4);
    let init = real_field(|p| vec![bump((p.x[0] - 0.3) / 0.2)]);
    let opts = SolveOptions::new(128);
    let r0 = solver::lambda_equivalence_check(&adv, 0.0, &inflow(), None, &init, &opts).unwrap();
    assert_eq!(r0.discrepancy, 0.0);
    assert!(r0.pass);
    let r1 = solver::lambda_equivalence_check(&adv, 1.0, &inflow(), None, &init, &opts).unwrap();
    assert!(r1.pass);
    assert!(r1.energy_mismatch < 0.05, "{}", r1.energy_mismatch);
}

#[test]
fn implicit_scheme_matches_explicit_for_advection() {
    let adv = advection(0.3);
    let init = real_field(|p| vec![bump((p.x[0] - 0.3) / 0.2)]);
    let ex = solver::solve(&adv, &inflow(), None, &init, &SolveOptions::new(256).scheme(Scheme::Explicit)).unwrap();
    let im = solver::solve(&adv, &inflow(), None, &init, &SolveOptions::new(256).scheme(Scheme::Implicit)).unwrap();
    let diff: f64 = (0..256)
        .map(|i| (ex.field.value(ex.grid.nt, i) - im.field.value(im.grid.nt, i)).norm_squared() * ex.grid.dx)
        .sum::<f64>()
        .sqrt();
    assert!(diff < 0.05, "{diff}");
}

#[test]
fn output_files_have_expected_shape() {
    let adv = advection(0.2);
    let init = real_field(|p| vec![bump((p.x[0] - 0.3) / 0.2)]);
    let sol = solver::solve(&adv, &inflow(), None, &init, &SolveOptions::new(32)).unwrap();
    let mut e = Vec::new();
    io::write_energy_csv(&mut e, &solver::energy_trace(&adv, &sol)).unwrap();
    let text = String::from_utf8(e).unwrap();
    assert_eq!(text.lines().next(), Some("t,E,flux"));
    assert_eq!(text.lines().count(), sol.grid.nt + 2);

    let mut f = Vec::new();
    io::write_field(&mut f, &sol).unwrap();
    let nl = f.iter().position(|&b| b == b'\n').unwrap();
    let header = std::str::from_utf8(&f[..nl]).unwrap();
    let parts: Vec<&str> = header.split_whitespace().collect();
    assert_eq!(parts[..4], [&*(sol.grid.nt + 1).to_string(), "32", "1", "complex128-le"]);
    assert_eq!(f.len() - nl - 1, (sol.grid.nt + 1) * 32 * 16);

    let mut again = Vec::new();
    io::write_field(&mut again, &solver::solve(&adv, &inflow(), None, &init, &SolveOptions::new(32)).unwrap()).unwrap();
    assert_eq!(f, again);
}

/// `Σ A^μ ∂_μ Ψ + C Ψ` with centered differences of a closed-form `Ψ`.
fn apply(sys: &FriedrichsSystem, psi: &dyn Fn(&Point) -> Vect, p: &Point, h: f64) -> Vect {
    let co = sys.coefficients(p);
    let mut out = &co.c * psi(p);
    for (mu, a) in co.a.iter().enumerate() {
        let d = (psi(&p.shifted(mu, h)) - psi(&p.shifted(mu, -h))) * c(0.5 / h);
        out += a * d;
    }
    out
}

fn manufactured_defect(sys: &FriedrichsSystem, psi: &dyn Fn(&Point) -> Vect, rhs: &dyn Fn(&Point) -> Vect, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for p in coarse(sys) {
        worst = worst.max((apply(sys, psi, &p, h) - rhs(&p)).norm());
    }
    worst
}

#[test]
fn wave_reduction_reproduces_curved_laplacian() {
    let scale = Profile::Linear {
        value: 1.0,
        gradient: vec![0.5],
        rate: 0.0,
    };
    let chart = Arc::new(SpacetimeChart::ultrastatic((0.0, 1.0), vec![1.0], vec![scale]).unwrap());
    let sys = reduction::wave_to_first_order(&SecondOrderProblem::wave(chart, 1)).unwrap();
    // u = sin(2x)cos(t), a = 1 + x/2
    let psi = |p: &Point| {
        let (t, x) = (p.t, p.x[0]);
        Vect::from_vec(vec![c(-(2.0 * x).sin() * t.sin()), c(2.0 * (2.0 * x).cos() * t.cos()), c((2.0 * x).sin() * t.cos())])
    };
    let rhs = |p: &Point| {
        let (t, x) = (p.t, p.x[0]);
        let a = 1.0 + 0.5 * x;
        let (ux, uxx, ut2) = (2.0 * (2.0 * x).cos() * t.cos(), -4.0 * (2.0 * x).sin() * t.cos(), -(2.0 * x).sin() * t.cos());
        // −(1/a)∂_x(u_x/a) = −u_xx/a² + a' u_x/a³
        Vect::from_vec(vec![c(ut2 - uxx / (a * a) + 0.5 * ux / a.powi(3)), c(0.0), c(0.0)])
    };
    let e1 = manufactured_defect(&sys, &psi, &rhs, 1e-2);
    let e2 = manufactured_defect(&sys, &psi, &rhs, 5e-3);
    assert!(e1 < 1e-3 && e2 < e1 / 3.0, "{e1} {e2}");
}

#[test]
fn kg_and_rd_reductions_reproduce_operators() {
    let m = 1.5;
    let kg = reduction::kg_to_first_order(&SecondOrderProblem::klein_gordon(strip(1, 1.0), 1, m)).unwrap();
    let u = |t: f64, x: f64| (3.0 * x).sin() * (2.0 * t).cos();
    let psi = move |p: &Point| {
        let (t, x) = (p.t, p.x[0]);
        Vect::from_vec(vec![c(u(t, x)), c(-2.0 * (3.0 * x).sin() * (2.0 * t).sin()), c(3.0 * (3.0 * x).cos() * (2.0 * t).cos())])
    };
    // u_tt − u_xx + m²u
    let rhs = move |p: &Point| Vect::from_vec(vec![c((-4.0 + 9.0 + m * m) * u(p.t, p.x[0])), c(0.0), c(0.0)]);
    assert!(manufactured_defect(&kg, &psi, &rhs, 1e-3) < 1e-4);

    let r = 2.0;
    let rd = reduction::reaction_diffusion_to_first_order(&SecondOrderProblem::reaction_diffusion(strip(1, 1.0), 1, r), 0.0).unwrap();
    let psi = move |p: &Point| {
        let (t, x) = (p.t, p.x[0]);
        Vect::from_vec(vec![c(u(t, x)), c(3.0 * (3.0 * x).cos() * (2.0 * t).cos())])
    };
    // u_t − u_xx + r u
    let rhs = move |p: &Point| {
        let (t, x) = (p.t, p.x[0]);
        Vect::from_vec(vec![c(-2.0 * (3.0 * x).sin() * (2.0 * t).sin() + (9.0 + r) * u(t, x)), c(0.0)])
    };
    assert!(manufactured_defect(&rd, &psi, &rhs, 1e-3) < 1e-4);
}

/// `|∫⟨SΦ,Φ⟩_G − ⟨Φ,S†Φ⟩_G ρ|` over a grid of spacing `h` for compactly supported `Φ`.
fn green_defect(sys: &FriedrichsSystem, phi: &dyn Fn(&Point) -> Vect, h: f64) -> (f64, f64) {
    let adj = sys.formal_adjoint();
    let n = (1.0 / h).round() as usize;
    let mut defect = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for it in 0..n {
        for ix in 0..n {
            let p = Point::at((it as f64 + 0.5) * h, (ix as f64 + 0.5) * h);
            let v = phi(&p);
            if v.norm() == 0.0 {
                continue;
            }
            let g = sys.metric(&p);
            let w = sys.chart().volume_density(&p) * h * h;
            let sv = apply(sys, phi, &p, h);
            let av = apply(&adj, phi, &p, h);
            defect += ((&g * &sv).dotc(&v) - (&g * &v).dotc(&av)) * c(w);
            scale += sv.norm() * v.norm() * w;
        }
    }
    (defect.norm(), scale)
}

#[test]
fn discrete_green_identity_vanishes_with_refinement() {
    let lapse = Profile::Linear {
        value: 1.0,
        gradient: vec![0.3],
        rate: 0.0,
    };
    let scale = Profile::Sine {
        value: 1.0,
        amplitude: 0.2,
        axis: 0,
        wavenumber: 3.0,
        rate: 0.0,
    };
    let chart = Arc::new(SpacetimeChart::custom("curved", (0.0, 1.0), vec![1.0], lapse, vec![scale]).unwrap());
    let sys = reduction::wave_to_first_order(&SecondOrderProblem::wave(chart, 1)).unwrap();
    let phi = |p: &Point| {
        let w = bump((p.t - 0.5) / 0.35) * bump((p.x[0] - 0.5) / 0.35);
        Vect::from_vec(vec![C64::new(w, 0.3 * w), c(w * (4.0 * p.x[0]).sin()), C64::new(0.0, w * p.t)])
    };
    let (d1, s1) = green_defect(&sys, &phi, 1.0 / 40.0);
    let (d2, _) = green_defect(&sys, &phi, 1.0 / 80.0);
    assert!(d1 < 0.05 * s1, "{d1} {s1}");
    assert!(d2 < d1 / 1.8, "{d1} {d2}");
}
