//! One-dimensional solver for `SΨ = f`, `Ψ|_{t₀} = h`, `Ψ|_{∂M} ∈ B`.
//!
//! Hyperbolic systems use forward Euler with a local-characteristic upwind
//! flux; symmetric positive systems with singular `σ(dt)` use backward Euler
//! with a Euclidean split of the boundary form.

pub mod convergence;
pub mod energy;
pub mod green;
pub mod io;
pub mod support;

use crate::boundary::{self, FaceConditions};
use crate::error::{Error, Result};
use crate::geometry::{self, BoundaryPoint, Face, Point};
use crate::linalg::{self, c, Mat, Vect, C64, RANK_TOL};
use crate::reduction::FieldFn;
use crate::system::FriedrichsSystem;

pub use convergence::{convergence_study, lambda_equivalence_check, ConvergenceReport, LambdaReport};
pub use energy::{energy_trace, EnergyTrace};
pub use green::{green_minus, green_plus, residual, time_reversed};
pub use support::{support_hull, support_intervals};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Auto,
    Explicit,
    Implicit,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub nx: usize,
    pub cfl: f64,
    /// Defaults to the chart's time range.
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    /// Proceed past admissibility and closure defects.
    pub force: bool,
    pub scheme: Scheme,
}

impl SolveOptions {
    pub fn new(nx: usize) -> Self {
        SolveOptions {
            nx,
            cfl: 0.5,
            t_start: None,
            t_end: None,
            force: false,
            scheme: Scheme::Auto,
        }
    }

    pub fn cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn until(mut self, t: f64) -> Self {
        self.t_end = Some(t);
        self
    }

    pub fn from(mut self, t: f64) -> Self {
        self.t_start = Some(t);
        self
    }

    pub fn forced(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    pub cfl: f64,
    pub t0: f64,
    pub length: f64,
    /// Characteristic speed used for the step (0 on the implicit path).
    pub speed: f64,
}

impl Grid {
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.nt)
    }
}

/// Values on time levels × cells × fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub levels: usize,
    pub nx: usize,
    pub rank: usize,
    data: Vec<C64>,
}

impl GridField {
    pub fn zeros(levels: usize, nx: usize, rank: usize) -> Self {
        GridField {
            levels,
            nx,
            rank,
            data: vec![C64::new(0.0, 0.0); levels * nx * rank],
        }
    }

    fn offset(&self, n: usize, i: usize) -> usize {
        (n * self.nx + i) * self.rank
    }

    pub fn cell(&self, n: usize, i: usize) -> &[C64] {
        let o = self.offset(n, i);
        &self.data[o..o + self.rank]
    }

    pub fn cell_mut(&mut self, n: usize, i: usize) -> &mut [C64] {
        let o = self.offset(n, i);
        &mut self.data[o..o + self.rank]
    }

    pub fn level(&self, n: usize) -> &[C64] {
        let o = self.offset(n, 0);
        &self.data[o..o + self.nx * self.rank]
    }

    fn level_mut(&mut self, n: usize) -> &mut [C64] {
        let o = self.offset(n, 0);
        let len = self.nx * self.rank;
        &mut self.data[o..o + len]
    }

    pub fn value(&self, n: usize, i: usize) -> Vect {
        Vect::from_column_slice(self.cell(n, i))
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Euclidean norm of the fiber value in each cell.
    pub fn cell_norm(&self, n: usize, i: usize) -> f64 {
        self.cell(n, i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.levels)
            .flat_map(|n| (0..self.nx).map(move |i| (n, i)))
            .map(|(n, i)| self.cell_norm(n, i))
            .fold(0.0, f64::max)
    }

    /// Reverses the order of the time levels.
    pub fn reversed(&self) -> GridField {
        let mut out = GridField::zeros(self.levels, self.nx, self.rank);
        for n in 0..self.levels {
            out.level_mut(self.levels - 1 - n).copy_from_slice(self.level(n));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: Grid,
    pub field: GridField,
    /// Time-integrated outward boundary form, per level.
    pub flux: Vec<f64>,
    pub scheme: Scheme,
}

/// `out = m v`.
fn mv(m: &Mat, v: &[C64], out: &mut [C64]) {
    let (r, cols) = m.shape();
    for (i, o) in out.iter_mut().enumerate().take(r) {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..cols {
            acc += m[(i, j)] * v[j];
        }
        *o = acc;
    }
}

/// `out += s·m v`.
fn mv_acc(m: &Mat, v: &[C64], s: f64, out: &mut [C64]) {
    let (r, cols) = m.shape();
    for (i, o) in out.iter_mut().enumerate().take(r) {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..cols {
            acc += m[(i, j)] * v[j];
        }
        *o += acc * s;
    }
}

/// Ghost-state map `Ψ_ghost = T Ψ_interior` at one boundary face.
#[derive(Debug, Clone)]
pub struct Closure {
    pub transfer: Mat,
    pub incoming: usize,
    pub codim: usize,
    /// Smallest singular value of `G_B` on the incoming modes, relative.
    pub conditioning: f64,
    pub form: Mat,
}

/// Splits modes of the boundary form `F` relative to `H`, keeps outgoing and
/// zero modes from the interior and solves `G_B (Ψ_g + Ψ_i)/2 = 0` for the
/// incoming ones.
pub fn boundary_closure(form: &Mat, weight: &Mat, gb: &Mat, face: Face, force: bool) -> Result<Closure> {
    let n = form.nrows();
    let e = linalg::gen_herm_eigen(form, weight)?;
    let tol = 1e-9 * e.values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let cols = |pred: &dyn Fn(f64) -> bool| -> Mat {
        let idx: Vec<usize> = (0..n).filter(|&k| pred(e.values[k])).collect();
        Mat::from_fn(n, idx.len(), |r, k| e.vectors[(r, idx[k])])
    };
    let keep = cols(&|v| v >= -tol);
    let inc = cols(&|v| v < -tol);
    let p_keep = &keep * keep.adjoint() * weight;
    let codim = n - linalg::kernel(gb, RANK_TOL).rank();
    let m = gb * &inc;
    let sv = linalg::singular_values(&m);
    let gmax = linalg::spectral_norm(gb).max(f64::MIN_POSITIVE);
    let conditioning = sv.last().copied().unwrap_or(1.0) / gmax;
    let defect = inc.ncols() != codim || (inc.ncols() > 0 && conditioning < 1e-8);
    if defect && !force {
        return Err(Error::BoundaryClosure {
            face: face.to_string(),
            reason: format!(
                "{} incoming characteristic modes but codim B = {} (conditioning {conditioning:.2e})",
                inc.ncols(),
                codim
            ),
        });
    }
    let rhs = -(gb * (&p_keep + linalg::identity(n)));
    let transfer = &p_keep + &inc * linalg::pinv(&m, 1e-10) * rhs;
    Ok(Closure {
        transfer,
        incoming: inc.ncols(),
        codim,
        conditioning,
        form: form.clone(),
    })
}

fn face_point(sys: &FriedrichsSystem, t: f64, face: Face) -> BoundaryPoint {
    sys.chart().boundary_point(t, face, &[]).expect("one-dimensional chart")
}

fn check_admissible(sys: &FriedrichsSystem, bcs: &FaceConditions, t0: f64, t1: f64) -> Result<()> {
    for face in [Face::Lower(0), Face::Upper(0)] {
        let samples: Vec<BoundaryPoint> = (0..4)
            .map(|k| face_point(sys, t0 + (t1 - t0) * k as f64 / 3.0, face))
            .collect();
        let rep = boundary::admissibility(sys, bcs.get(face), &samples)?;
        if !rep.admissible {
            return Err(Error::Precondition(format!(
                "boundary condition {} on face {face} is not admissible: {}",
                bcs.get(face),
                rep.cause.unwrap_or_default()
            )));
        }
    }
    Ok(())
}

fn setup(sys: &FriedrichsSystem, opts: &SolveOptions) -> Result<(f64, f64, f64)> {
    let chart = sys.chart();
    if chart.dim_space() != 1 {
        return Err(Error::Unsupported("the solver is one-dimensional".into()));
    }
    if opts.nx < 2 {
        return Err(Error::Grid(format!("need at least two cells, got {}", opts.nx)));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 0.9) {
        return Err(Error::Grid(format!("CFL number {} outside (0, 0.9]", opts.cfl)));
    }
    let (ta, tb) = chart.t_range();
    let t0 = opts.t_start.unwrap_or(ta);
    let t1 = opts.t_end.unwrap_or(tb);
    if t1 < t0 {
        return Err(Error::Grid(format!("end time {t1} before start {t0}")));
    }
    Ok((t0, t1, chart.extent()[0] / opts.nx as f64))
}

fn steps(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    if t1 == t0 {
        return (0, dt);
    }
    let nt = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    (nt, (t1 - t0) / nt as f64)
}

pub fn select_scheme(sys: &FriedrichsSystem, requested: Scheme) -> Scheme {
    match requested {
        Scheme::Auto => {
            let pts = sys.chart().sample_points(geometry::Sampling {
                per_axis: 9,
                time_levels: 3,
            });
            if sys.dt_positive(&pts) {
                Scheme::Explicit
            } else {
                Scheme::Implicit
            }
        }
        s => s,
    }
}

pub fn solve(
    sys: &FriedrichsSystem,
    bcs: &FaceConditions,
    forcing: Option<&FieldFn>,
    initial: &FieldFn,
    opts: &SolveOptions,
) -> Result<Solution> {
    let (t0, t1, _) = setup(sys, opts)?;
    if !opts.force {
        check_admissible(sys, bcs, t0, t1)?;
    }
    let sol = match select_scheme(sys, opts.scheme) {
        Scheme::Implicit => implicit(sys, bcs, forcing, initial, opts)?,
        _ => explicit(sys, bcs, forcing, initial, opts)?,
    };
    if !sol.field.is_finite() {
        return Err(Error::Grid("solution contains non-finite values".into()));
    }
    Ok(sol)
}

fn sample_initial(initial: &FieldFn, grid: &Grid, rank: usize, field: &mut GridField) -> Result<()> {
    for i in 0..grid.nx {
        let v = initial(&Point::at(grid.t0, grid.x(i)));
        if v.len() != rank {
            return Err(Error::Contract(format!("initial data has {} components, rank {rank}", v.len())));
        }
        field.cell_mut(0, i).copy_from_slice(v.as_slice());
    }
    Ok(())
}

struct FaceOps {
    plus: Vec<Mat>,
    minus: Vec<Mat>,
}

/// Explicit face splits `Â± = V Λ± V* H` with `H = Gσ(dt)`.
fn explicit_faces(sys: &FriedrichsSystem, t: f64, nx: usize, dx: f64) -> Result<FaceOps> {
    let mut plus = Vec::with_capacity(nx + 1);
    let mut minus = Vec::with_capacity(nx + 1);
    for f in 0..=nx {
        let p = Point::at(t, f as f64 * dx);
        let co = sys.coefficients(&p);
        let g = sys.metric(&p);
        let h = linalg::herm_part(&(&g * &co.a[0]));
        let k = linalg::herm_part(&(&g * &co.a[1]));
        let e = linalg::gen_herm_eigen(&k, &h).map_err(|_| {
            Error::NotHyperbolic(format!("σ(dt) form not positive definite at t={t}, x={}", p.x[0]))
        })?;
        let vh = e.vectors.adjoint() * &h;
        let lp = Mat::from_diagonal(&Vect::from_iterator(e.values.len(), e.values.iter().map(|&l| c(l.max(0.0)))));
        let lm = Mat::from_diagonal(&Vect::from_iterator(e.values.len(), e.values.iter().map(|&l| c(l.min(0.0)))));
        plus.push(&e.vectors * lp * &vh);
        minus.push(&e.vectors * lm * &vh);
    }
    Ok(FaceOps { plus, minus })
}

struct CellOps {
    zero: Vec<Mat>,
    inv_a0: Vec<Mat>,
}

fn explicit_cells(sys: &FriedrichsSystem, t: f64, grid: &Grid) -> Result<CellOps> {
    let mut zero = Vec::with_capacity(grid.nx);
    let mut inv_a0 = Vec::with_capacity(grid.nx);
    for i in 0..grid.nx {
        let co = sys.coefficients(&Point::at(t, grid.x(i)));
        let inv = linalg::inverse(&co.a[0])?;
        zero.push(&inv * &co.c);
        inv_a0.push(inv);
    }
    Ok(CellOps { zero, inv_a0 })
}

fn closures(sys: &FriedrichsSystem, bcs: &FaceConditions, t: f64, explicit: bool, force: bool) -> Result<[(Closure, f64); 2]> {
    let mk = |face: Face| -> Result<(Closure, f64)> {
        let q = face_point(sys, t, face);
        let p = q.point();
        let form = sys.boundary_form(&q)?;
        let weight = if explicit {
            linalg::herm_part(&(sys.metric(&p) * &sys.coefficients(&p).a[0]))
        } else {
            linalg::identity(sys.rank())
        };
        let cl = boundary_closure(&form, &weight, &bcs.get(face).matrix(&q), face, force)?;
        let chart = sys.chart();
        let w = chart.volume_density(&p) * chart.h_inv(&p)[(0, 0)].sqrt();
        Ok((cl, w))
    };
    Ok([mk(Face::Lower(0))?, mk(Face::Upper(0))?])
}

fn boundary_flux(cl: &Closure, weight: f64, interior: &[C64], ghost: &[C64]) -> f64 {
    let avg = Vect::from_iterator(interior.len(), interior.iter().zip(ghost).map(|(a, b)| (a + b) * 0.5));
    weight * linalg::form(&cl.form, &avg)
}

fn explicit(
    sys: &FriedrichsSystem,
    bcs: &FaceConditions,
    forcing: Option<&FieldFn>,
    initial: &FieldFn,
    opts: &SolveOptions,
) -> Result<Solution> {
    let (t0, t1, dx) = setup(sys, opts)?;
    let nx = opts.nx;
    let rank = sys.rank();
    let chart = sys.chart();
    let probe_times: Vec<f64> = if sys.time_independent() {
        vec![t0]
    } else {
        (0..5).map(|k| t0 + (t1 - t0) * k as f64 / 4.0).collect()
    };
    let probe: Vec<Point> = probe_times
        .iter()
        .flat_map(|&t| (0..=nx).map(move |f| Point::at(t, f as f64 * dx)))
        .collect();
    let speed = geometry::max_characteristic_speed(sys, &probe)?;
    let dt_target = if speed > 0.0 { opts.cfl * dx / speed } else { opts.cfl * dx };
    let (nt, dt) = steps(t0, t1, dt_target);
    let grid = Grid {
        nx,
        nt,
        dx,
        dt,
        cfl: opts.cfl,
        t0,
        length: chart.extent()[0],
        speed,
    };
    let mut field = GridField::zeros(nt + 1, nx, rank);
    sample_initial(initial, &grid, rank, &mut field)?;
    let mut flux = vec![0.0; nt + 1];

    let mut faces = explicit_faces(sys, t0, nx, dx)?;
    let mut cells = explicit_cells(sys, t0, &grid)?;
    let mut bc = closures(sys, bcs, t0, true, opts.force)?;
    let r = dt / dx;
    let mut ghost_l = vec![C64::new(0.0, 0.0); rank];
    let mut ghost_r = vec![C64::new(0.0, 0.0); rank];
    let mut diff = vec![C64::new(0.0, 0.0); rank];
    let mut tmp = vec![C64::new(0.0, 0.0); rank];
    let mut fvals: Vec<Vect> = Vec::new();
    for n in 0..nt {
        let t = grid.t(n);
        if n > 0 && !sys.time_independent() {
            faces = explicit_faces(sys, t, nx, dx)?;
            cells = explicit_cells(sys, t, &grid)?;
            bc = closures(sys, bcs, t, true, opts.force)?;
        }
        if let Some(f) = forcing {
            fvals = (0..nx).map(|i| f(&Point::at(t, grid.x(i)))).collect();
        }
        let (prev, next) = {
            let split = (n + 1) * nx * rank;
            let (a, b) = field.data.split_at_mut(split);
            (&a[n * nx * rank..], &mut b[..nx * rank])
        };
        let cell = |i: usize| &prev[i * rank..(i + 1) * rank];
        mv(&bc[0].0.transfer, cell(0), &mut ghost_l);
        mv(&bc[1].0.transfer, cell(nx - 1), &mut ghost_r);
        let step_flux = boundary_flux(&bc[0].0, bc[0].1, cell(0), &ghost_l)
            + boundary_flux(&bc[1].0, bc[1].1, cell(nx - 1), &ghost_r);
        flux[n + 1] = flux[n] + dt * step_flux;
        for i in 0..nx {
            let here = cell(i);
            let left = if i == 0 { &ghost_l[..] } else { cell(i - 1) };
            let right = if i == nx - 1 { &ghost_r[..] } else { cell(i + 1) };
            let out = &mut next[i * rank..(i + 1) * rank];
            out.copy_from_slice(here);
            for k in 0..rank {
                diff[k] = here[k] - left[k];
            }
            mv_acc(&faces.plus[i], &diff, -r, out);
            for k in 0..rank {
                diff[k] = right[k] - here[k];
            }
            mv_acc(&faces.minus[i + 1], &diff, -r, out);
            mv_acc(&cells.zero[i], here, -dt, out);
            if forcing.is_some() {
                mv(&cells.inv_a0[i], fvals[i].as_slice(), &mut tmp);
                for k in 0..rank {
                    out[k] += tmp[k] * dt;
                }
            }
        }
    }
    Ok(Solution {
        grid,
        field,
        flux,
        scheme: Scheme::Explicit,
    })
}

struct ImplicitOps {
    a0: Vec<Mat>,
    /// Modified diagonal inverses and sub-diagonal multipliers of the block
    /// Thomas factorization.
    dinv: Vec<Mat>,
    mult: Vec<Mat>,
    upper: Vec<Mat>,
    bc: [(Closure, f64); 2],
}

fn implicit_ops(sys: &FriedrichsSystem, bcs: &FaceConditions, t: f64, grid: &Grid, force: bool) -> Result<ImplicitOps> {
    let nx = grid.nx;
    let (dx, dt) = (grid.dx, grid.dt);
    let rank = sys.rank();
    let mut ap = Vec::with_capacity(nx + 1);
    let mut am = Vec::with_capacity(nx + 1);
    for f in 0..=nx {
        let p = Point::at(t, f as f64 * dx);
        let g = sys.metric(&p);
        let ginv = linalg::inverse(&g)?;
        let form = linalg::herm_part(&(&g * &sys.coefficients(&p).a[1]));
        let e = linalg::herm_eigen(&form)?;
        let part = |pos: bool| {
            let d = Vect::from_iterator(
                rank,
                e.values.iter().map(|&l| c(if pos { l.max(0.0) } else { l.min(0.0) })),
            );
            &ginv * (&e.vectors * Mat::from_diagonal(&d) * e.vectors.adjoint())
        };
        ap.push(part(true));
        am.push(part(false));
    }
    let bc = closures(sys, bcs, t, false, force)?;
    let mut a0 = Vec::with_capacity(nx);
    let mut lower = Vec::with_capacity(nx);
    let mut diag = Vec::with_capacity(nx);
    let mut upper = Vec::with_capacity(nx);
    for i in 0..nx {
        let co = sys.coefficients(&Point::at(t, grid.x(i)));
        let l = &ap[i] * c(-1.0 / dx);
        let u = &am[i + 1] * c(1.0 / dx);
        let mut d = &co.a[0] * c(1.0 / dt) + &co.c + (&ap[i] - &am[i + 1]) * c(1.0 / dx);
        if i == 0 {
            d += &l * &bc[0].0.transfer;
        }
        if i == nx - 1 {
            d += &u * &bc[1].0.transfer;
        }
        a0.push(co.a[0].clone());
        lower.push(l);
        diag.push(d);
        upper.push(u);
    }
    let mut dinv = Vec::with_capacity(nx);
    let mut mult = Vec::with_capacity(nx);
    dinv.push(linalg::inverse(&diag[0])?);
    mult.push(linalg::zeros(rank, rank));
    for i in 1..nx {
        let w = &lower[i] * &dinv[i - 1];
        let d = &diag[i] - &w * &upper[i - 1];
        dinv.push(linalg::inverse(&d)?);
        mult.push(w);
    }
    Ok(ImplicitOps {
        a0,
        dinv,
        mult,
        upper,
        bc,
    })
}

fn implicit(
    sys: &FriedrichsSystem,
    bcs: &FaceConditions,
    forcing: Option<&FieldFn>,
    initial: &FieldFn,
    opts: &SolveOptions,
) -> Result<Solution> {
    let (t0, t1, dx) = setup(sys, opts)?;
    let nx = opts.nx;
    let rank = sys.rank();
    let (nt, dt) = steps(t0, t1, opts.cfl * dx);
    let grid = Grid {
        nx,
        nt,
        dx,
        dt,
        cfl: opts.cfl,
        t0,
        length: sys.chart().extent()[0],
        speed: 0.0,
    };
    let mut field = GridField::zeros(nt + 1, nx, rank);
    sample_initial(initial, &grid, rank, &mut field)?;
    let mut flux = vec![0.0; nt + 1];
    let mut ops = implicit_ops(sys, bcs, grid.t(1.min(nt)), &grid, opts.force)?;
    let mut y: Vec<Vect> = vec![Vect::zeros(rank); nx];
    let mut ghost = vec![C64::new(0.0, 0.0); rank];
    for n in 0..nt {
        let t = grid.t(n + 1);
        if n > 0 && !sys.time_independent() {
            ops = implicit_ops(sys, bcs, t, &grid, opts.force)?;
        }
        for i in 0..nx {
            let mut rhs = &ops.a0[i] * field.value(n, i) * c(1.0 / dt);
            if let Some(f) = forcing {
                rhs += f(&Point::at(t, grid.x(i)));
            }
            y[i] = if i == 0 { rhs } else { rhs - &ops.mult[i] * &y[i - 1] };
        }
        let mut next: Vec<Vect> = vec![Vect::zeros(rank); nx];
        next[nx - 1] = &ops.dinv[nx - 1] * &y[nx - 1];
        for i in (0..nx - 1).rev() {
            next[i] = &ops.dinv[i] * (&y[i] - &ops.upper[i] * &next[i + 1]);
        }
        for (i, v) in next.iter().enumerate() {
            field.cell_mut(n + 1, i).copy_from_slice(v.as_slice());
        }
        let mut step_flux = 0.0;
        for (side, i) in [(0usize, 0usize), (1, nx - 1)] {
            let (cl, w) = &ops.bc[side];
            mv(&cl.transfer, field.cell(n + 1, i), &mut ghost);
            step_flux += boundary_flux(cl, *w, field.cell(n + 1, i), &ghost);
        }
        flux[n + 1] = flux[n] + dt * step_flux;
    }
    Ok(Solution {
        grid,
        field,
        flux,
        scheme: Scheme::Implicit,
    })
}
