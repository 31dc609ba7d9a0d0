use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use friedrichs::boundary::{self, BoundaryCondition};
use friedrichs::geometry::{BoundaryPoint, Face, Point};
use friedrichs::linalg::{self, Mat, Vect, C64};
use friedrichs::reduction::{self, CompatSettings, FieldFn};
use friedrichs::solver::{self, io as sio, Solution};
use friedrichs::system::FriedrichsSystem;
use sha2::{Digest, Sha256};

use crate::config::{BcKind, ChartSpec, Data, Direction, Model, RunConfig, SystemSpec};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub config_text: String,
    pub out: PathBuf,
    pub force: bool,
    pub seed: u64,
}

/// Key-value report with a fixed preamble.
struct Report {
    text: String,
}

impl Report {
    fn new(task: &str, args: &RunArgs) -> Self {
        let digest: String = Sha256::digest(args.config_text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        let mut r = Report { text: String::new() };
        r.line("friedrichs", env!("CARGO_PKG_VERSION"));
        r.line("task", task);
        r.line("config_digest", format!("sha256:{digest}"));
        r.line("seed", args.seed);
        r.line("force", args.force);
        r
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}: {value}");
    }

    fn section(&mut self, name: &str) {
        let _ = writeln!(self.text, "\n[{name}]");
    }

    fn save(&self, out: &Path) -> Result<(), CliError> {
        fs::write(out.join("report.txt"), &self.text)?;
        Ok(())
    }
}

fn model_err(task: &'static str) -> impl Fn(friedrichs::Error) -> CliError {
    move |source| CliError::Model { task, source }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn bc_label(kind: &BcKind) -> String {
    match kind {
        BcKind::MitBag { sign } => format!("mit_bag sign={sign}"),
        BcKind::Chirality { sign } => format!("chirality sign={sign}"),
        BcKind::RiemannianMit { sign } => format!("riemannian_mit sign={sign}"),
        BcKind::RiemannianChirality { sign } => format!("riemannian_chirality sign={sign}"),
        BcKind::Robin { a, b } => format!("robin a={a} b={b}"),
        BcKind::NeumannLike => "neumann_like".into(),
        BcKind::Transparent { b } => format!("transparent b={b}"),
        BcKind::Dirichlet => "dirichlet".into(),
        BcKind::Free => "free".into(),
    }
}

fn vector_text(v: &Vect) -> String {
    let parts: Vec<String> = v.iter().map(|z| format!("({:.6e},{:.6e})", z.re, z.im)).collect();
    format!("[{}]", parts.join(", "))
}

fn point_text(q: &BoundaryPoint) -> String {
    format!("t={:.6} x={:?} face={}", q.t, q.x, q.face)
}

fn is_lower(face: Face) -> bool {
    matches!(face, Face::Lower(_))
}

/// Parsed and validated inputs shared by the tasks.
struct Setup {
    cfg: RunConfig,
    model: Model,
}

impl Setup {
    fn new(args: &RunArgs) -> Result<Self, CliError> {
        let cfg = crate::config::parse(&args.config_text)?;
        let model = cfg.model()?;
        cfg.face_kinds()?;
        Ok(Setup { cfg, model })
    }

    fn sys(&self) -> &FriedrichsSystem {
        &self.model.sys
    }
}

/// Validates the whole config before anything is written.
pub fn prepare(args: &RunArgs) -> Result<(), CliError> {
    let s = Setup::new(args)?;
    s.cfg.boundary(&s.model)?;
    fs::create_dir_all(&args.out)?;
    Ok(())
}

pub fn check(args: &RunArgs) -> Result<bool, CliError> {
    let s = Setup::new(args)?;
    let bcs = s.cfg.boundary(&s.model)?;
    let sys = s.sys();
    let err = model_err("check");
    let samp = &s.cfg.sampling;
    let samples = sys.chart().boundary_samples(samp.boundary);
    let cls = sys.classify(samp.sampling(), samp.cone, args.seed, &samples).map_err(&err)?;
    let slices: Vec<f64> = cls.positivity.slices.iter().map(|s| s.0).collect();
    let lambda = sys.find_lambda(samp.max_lambda, &slices, samp.per_axis);

    let mut r = Report::new("check", args);
    r.line("system", sys.name());
    r.line("rank", sys.rank());
    r.section("classification");
    r.line("symmetric", cls.symmetry.symmetric);
    r.line("max_asymmetry", format!("{:.3e}", cls.symmetry.max_asymmetry));
    match &cls.hyperbolic {
        Some(h) => {
            r.line("hyperbolic", h.hyperbolic);
            r.line("min_cone_eigenvalue", format!("{:.6e}", h.min_eigenvalue));
            r.line("dt_positive", h.dt_positive);
            r.line("cone_directions", h.cone_directions);
        }
        None => r.line("hyperbolic", "not checked (system not symmetric)"),
    }
    r.line("positive", cls.positivity.pass);
    r.line("positivity_bound", format!("{:.6e}", cls.positivity.min_bound));
    match lambda {
        Some(l) => r.line("lambda_for_positivity", l),
        None => r.line("lambda_for_positivity", format!("none up to {}", samp.max_lambda)),
    }
    r.line("constant_characteristic", cls.constant_characteristic.0);
    r.line("characteristic_dim", cls.constant_characteristic.1);

    let (lk, uk) = s.cfg.face_kinds()?;
    let mut spectrum = String::from("face,t,x,index,eigenvalue\n");
    let mut all_admissible = true;
    for (name, kind, bc, lower) in [("lower", &lk, &bcs.lower, true), ("upper", &uk, &bcs.upper, false)] {
        let pts: Vec<BoundaryPoint> = samples.iter().filter(|q| is_lower(q.face) == lower).cloned().collect();
        let adm = boundary::admissibility(sys, bc, &pts).map_err(&err)?;
        all_admissible &= adm.admissible;
        r.section(&format!("face {name}"));
        r.line("bc", bc_label(kind));
        r.line("admissible", adm.admissible);
        r.line("semidefinite", adm.semidefinite);
        r.line("min_restricted_eigenvalue", format!("{:.6e}", adm.min_restricted_eigenvalue));
        r.line("rank_constant", adm.rank_constant);
        r.line("rank_matches_nonneg_count", adm.rank_matches_nonneg_count);
        r.line("counts", format!("{:?}", adm.counts));
        if let Some(cause) = &adm.cause {
            r.line("cause", cause);
        }
        if let Some(w) = &adm.witness {
            r.line("witness_point", point_text(&w.point));
            r.line("witness_form_value", format!("{:.6e}", w.form_value));
            r.line("witness_vector", vector_text(&w.vector));
        }
        for q in &pts {
            let f = sys.boundary_form(q).map_err(&err)?;
            let e = linalg::herm_eigen(&f).map_err(&err)?;
            for (i, v) in e.values.iter().enumerate() {
                let _ = writeln!(spectrum, "{},{:.17e},{:.17e},{i},{v:.17e}", q.face, q.t, q.x[0]);
            }
        }
    }
    let pass = cls.symmetry.symmetric && all_admissible && lambda.is_some();
    r.section("verdict");
    r.line("pass", pass);
    r.save(&args.out)?;
    fs::write(args.out.join("spectrum.csv"), spectrum)?;
    println!("check: {} (admissible: {all_admissible})", if pass { "pass" } else { "fail" });
    Ok(pass)
}

fn write_solution(out: &Path, sys: &FriedrichsSystem, sol: &Solution, r: &mut Report) -> Result<f64, CliError> {
    let trace = solver::energy_trace(sys, sol);
    sio::write_energy_csv(create(out, "energy.csv")?, &trace)?;
    let mut w = create(out, "field.bin")?;
    sio::write_field(&mut w, sol)?;
    w.flush()?;
    let g = &sol.grid;
    r.line("scheme", format!("{:?}", sol.scheme));
    r.line("nx", g.nx);
    r.line("nt", g.nt);
    r.line("dx", format!("{:.6e}", g.dx));
    r.line("dt", format!("{:.6e}", g.dt));
    r.line("t_end", format!("{:.6}", g.t_end()));
    r.line("energy_initial", format!("{:.6e}", trace.energy[0]));
    r.line("energy_final", format!("{:.6e}", trace.energy[g.nt]));
    r.line("energy_ratio", format!("{:.6e}", trace.ratio()));
    r.line("boundary_flux", format!("{:.6e}", trace.flux.last().copied().unwrap_or(0.0)));
    Ok(trace.ratio())
}

pub fn solve(args: &RunArgs) -> Result<bool, CliError> {
    let s = Setup::new(args)?;
    let bcs = s.cfg.boundary(&s.model)?;
    let sys = s.sys();
    let init = s.cfg.initial(sys)?.field();
    let forcing = s.cfg.forcing(sys)?;
    let sol = solver::solve(sys, &bcs, forcing.as_ref(), &init, &s.cfg.solve_options(args.force)).map_err(model_err("solve"))?;
    let mut r = Report::new("solve", args);
    r.line("system", sys.name());
    let ratio = write_solution(&args.out, sys, &sol, &mut r)?;
    r.save(&args.out)?;
    println!("solve: energy ratio {ratio:.6e} after {} steps", sol.grid.nt);
    Ok(true)
}

pub fn green(args: &RunArgs) -> Result<bool, CliError> {
    let s = Setup::new(args)?;
    let bcs = s.cfg.boundary(&s.model)?;
    let sys = s.sys();
    let f = s
        .cfg
        .forcing(sys)?
        .ok_or_else(|| CliError::Usage("green: a nonzero [forcing] table is required".into()))?;
    let opts = s.cfg.solve_options(args.force);
    let err = model_err("green");
    let sol = match s.cfg.green.direction {
        Direction::Plus => solver::green_plus(sys, &bcs, &f, &opts),
        Direction::Minus => solver::green_minus(sys, &bcs, &f, &opts),
    }
    .map_err(err)?;
    let res = solver::residual(sys, &sol, Some(&f));
    let mut r = Report::new("green", args);
    r.line("direction", format!("{:?}", s.cfg.green.direction).to_lowercase());
    let ratio = write_solution(&args.out, sys, &sol, &mut r)?;
    r.line("relative_residual", format!("{res:.6e}"));
    r.save(&args.out)?;
    println!("green: relative residual {res:.3e}, energy ratio {ratio:.3e}");
    Ok(true)
}

/// Closed-form solution from the initial shape, where one is available.
fn exact_solution(cfg: &RunConfig, data: Data) -> Result<FieldFn, CliError> {
    let flat_1d = matches!(&cfg.chart, ChartSpec::MinkowskiStrip { extent, .. } if extent.len() == 1);
    let t0 = match &cfg.chart {
        ChartSpec::MinkowskiStrip { t_range, .. } | ChartSpec::Ultrastatic { t_range, .. } | ChartSpec::Custom { t_range, .. } => t_range[0],
    };
    match &cfg.system {
        SystemSpec::Advection { speed } if flat_1d => {
            let c = *speed;
            Ok(Arc::new(move |p: &Point| {
                let y = p.x[0] - c * (p.t - t0);
                data.lift(data.shape.value(y), data.shape.slope(y), 0.0)
            }))
        }
        SystemSpec::WaveReduction { potential, .. } if flat_1d && *potential == 0.0 => Ok(Arc::new(move |p: &Point| {
            let (x, s) = (p.x[0], p.t - t0);
            let sh = &data.shape;
            let u = 0.5 * (sh.value(x - s) + sh.value(x + s));
            let ux = 0.5 * (sh.slope(x - s) + sh.slope(x + s));
            let ut = 0.5 * (sh.slope(x + s) - sh.slope(x - s));
            data.lift(u, ux, ut)
        })),
        _ => Err(CliError::Usage(
            "converge: a closed-form solution exists only for advection or an undamped wave_reduction on a 1D minkowski_strip".into(),
        )),
    }
}

pub fn converge(args: &RunArgs) -> Result<bool, CliError> {
    let s = Setup::new(args)?;
    let bcs = s.cfg.boundary(&s.model)?;
    let sys = s.sys();
    let exact = exact_solution(&s.cfg, s.cfg.initial(sys)?)?;
    let forcing = s.cfg.forcing(sys)?;
    let spec = &s.cfg.converge;
    let rep = solver::convergence_study(sys, &bcs, forcing.as_ref(), &exact, &spec.grids, &s.cfg.solve_options(args.force))
        .map_err(model_err("converge"))?;
    sio::write_errors_csv(create(&args.out, "errors.csv")?, &rep)?;
    let pass = rep.orders_within(spec.min_order, spec.max_order);
    let mut r = Report::new("converge", args);
    r.line("system", sys.name());
    r.line("grids", format!("{:?}", rep.grids));
    r.line("errors", format!("{:?}", rep.errors.iter().map(|e| format!("{e:.6e}")).collect::<Vec<_>>()));
    r.line("orders", format!("{:?}", rep.orders.iter().map(|o| format!("{o:.4}")).collect::<Vec<_>>()));
    r.line("order_window", format!("[{}, {}]", spec.min_order, spec.max_order));
    r.line("pass", pass);
    r.save(&args.out)?;
    let last = rep.orders.last().copied().unwrap_or(f64::NAN);
    println!("converge: observed order {last:.3} ({})", if pass { "pass" } else { "fail" });
    Ok(pass)
}

pub fn compat(args: &RunArgs) -> Result<bool, CliError> {
    let s = Setup::new(args)?;
    let bcs = s.cfg.boundary(&s.model)?;
    let sys = s.sys();
    let h = s.cfg.initial(sys)?.field();
    let rank = sys.rank();
    let f = s.cfg.forcing(sys)?.unwrap_or_else(|| Arc::new(move |_: &Point| Vect::zeros(rank)));
    let c = &s.cfg.compat;
    let settings = CompatSettings {
        nodes: c.nodes,
        stencil_width: c.stencil_width,
        time_step: c.time_step,
        tolerance: c.tolerance,
    };
    let faces: Vec<(Face, BoundaryCondition)> = vec![(Face::Lower(0), bcs.lower.clone()), (Face::Upper(0), bcs.upper.clone())];
    let rep = reduction::compatibility_check(sys, &faces, &f, &h, c.order, settings).map_err(model_err("compat"))?;
    let pass = rep.pass.last().copied().unwrap_or(false);
    let mut r = Report::new("compat", args);
    r.line("order", rep.order);
    r.line("tolerance", format!("{:.3e}", rep.tolerance));
    for (k, res) in rep.residuals.iter().enumerate() {
        r.line(&format!("residual_{k}"), format!("{res:.6e}"));
    }
    for (face, res) in &rep.per_face {
        let v: Vec<String> = res.iter().map(|x| format!("{x:.3e}")).collect();
        r.line(&format!("face {face}"), v.join(" "));
    }
    r.line("pass", pass);
    r.save(&args.out)?;
    let worst = rep.residuals.iter().copied().fold(0.0, f64::max);
    println!("compat: max residual {worst:.3e} ({})", if pass { "pass" } else { "fail" });
    Ok(pass)
}

fn matrix_rows(out: &mut String, p: &Point, name: &str, m: &Mat) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z: C64 = m[(i, j)];
            let _ = writeln!(out, "{:.17e},{:.17e},{name},{i},{j},{:.17e},{:.17e}", p.t, p.x[0], z.re, z.im);
        }
    }
}

pub fn reduce(args: &RunArgs) -> Result<bool, CliError> {
    let s = Setup::new(args)?;
    let sys = s.sys();
    let lay = sys
        .layout()
        .cloned()
        .ok_or_else(|| CliError::Usage("reduce: builder must be wave_reduction, kg_reduction or reaction_diffusion".into()))?;
    let pts = sys.chart().sample_points(s.cfg.sampling.sampling());
    let mut csv = String::from("t,x,matrix,row,col,re,im\n");
    for (p, co, g) in reduction::coefficient_table(sys, &pts) {
        for (mu, a) in co.a.iter().enumerate() {
            matrix_rows(&mut csv, &p, &format!("A{mu}"), a);
        }
        matrix_rows(&mut csv, &p, "C", &co.c);
        matrix_rows(&mut csv, &p, "G", &g);
    }
    let samp = &s.cfg.sampling;
    let sym = sys.check_symmetric(&pts);
    let mut r = Report::new("reduce", args);
    r.line("system", sys.name());
    r.line("rank", sys.rank());
    r.line("bundle_rank", lay.k);
    r.line("u_offset", lay.u);
    r.line("gradient_offset", lay.grad);
    r.line("time_derivative", lay.time_derivative.map_or("none".into(), |t| t.to_string()));
    r.line("metric_positive", sys.metric_positive());
    r.line("symmetric", sym.symmetric);
    r.line("dt_positive", sys.dt_positive(&pts));
    r.line("samples", pts.len());
    r.line("per_axis", samp.per_axis);
    r.save(&args.out)?;
    fs::write(args.out.join("coefficients.csv"), csv)?;
    println!("reduce: {} samples of rank-{} coefficients", pts.len(), sys.rank());
    Ok(sym.symmetric)
}
