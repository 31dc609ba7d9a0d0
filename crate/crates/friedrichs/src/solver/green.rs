//! Retarded and advanced solution operators with zero Cauchy data.

use std::sync::Arc;

use crate::boundary::{BoundaryCondition, FaceConditions};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Point};
use crate::linalg::{c, Vect};
use crate::reduction::FieldFn;
use crate::system::{CoeffFn, Coefficients, FriedrichsSystem};

use super::{energy::pairwise_sum, solve, GridField, Solution, SolveOptions};

fn interval(sys: &FriedrichsSystem, opts: &SolveOptions) -> (f64, f64) {
    let (a, b) = sys.chart().t_range();
    (opts.t_start.unwrap_or(a), opts.t_end.unwrap_or(b))
}

fn vanishes_on_slice(sys: &FriedrichsSystem, f: &FieldFn, t: f64, nx: usize) -> Result<()> {
    let len = sys.chart().extent()[0];
    let n = nx.max(64);
    for i in 0..=n {
        let x = len * i as f64 / n as f64;
        let v = f(&Point::at(t, x));
        if v.iter().any(|z| z.norm() > 0.0) {
            return Err(Error::Precondition(format!(
                "forcing support touches the slice t={t} (x={x})"
            )));
        }
    }
    Ok(())
}

/// `G⁺f`: solves `SΨ = f` from zero data on the initial slice.
pub fn green_plus(sys: &FriedrichsSystem, bcs: &FaceConditions, f: &FieldFn, opts: &SolveOptions) -> Result<Solution> {
    let (t0, _) = interval(sys, opts);
    vanishes_on_slice(sys, f, t0, opts.nx)?;
    let rank = sys.rank();
    let zero: FieldFn = Arc::new(move |_| Vect::zeros(rank));
    solve(sys, bcs, Some(f), &zero, opts)
}

/// The system and boundary conditions in the reflected time `s = t₀ + t₁ − t`,
/// multiplied by −1 so that `σ(ds)` keeps its sign.
pub fn time_reversed(sys: &FriedrichsSystem, bcs: &FaceConditions, t0: f64, t1: f64) -> Result<(FriedrichsSystem, FaceConditions)> {
    if !sys.chart().flags().h_static {
        return Err(Error::Unsupported("time reversal needs a static spatial metric".into()));
    }
    let mirror = move |p: &Point| Point::new(t0 + t1 - p.t, p.x.clone());
    let inner = sys.clone();
    let coeffs: CoeffFn = Arc::new(move |p| {
        let co = inner.coefficients(&mirror(p));
        let mut a = co.a;
        for m in a.iter_mut().skip(1) {
            *m = -m.clone();
        }
        Coefficients { a, c: -co.c }
    });
    let g = sys.clone();
    let mut rev = FriedrichsSystem::new(
        format!("{}_reversed", sys.name()),
        sys.rank(),
        sys.chart_arc(),
        coeffs,
        Arc::new(move |p| g.metric(&mirror(p))),
        sys.metric_positive(),
        sys.time_independent(),
    )?;
    if let Some(l) = sys.layout() {
        rev = rev.with_layout(l.clone());
    }
    let wrap = |bc: &BoundaryCondition| {
        let bc2 = bc.clone();
        BoundaryCondition::new(
            bc.name(),
            bc.params().to_vec(),
            Arc::new(move |q: &BoundaryPoint| {
                let mut q2 = q.clone();
                q2.t = t0 + t1 - q.t;
                bc2.matrix(&q2)
            }),
        )
    };
    Ok((
        rev,
        FaceConditions {
            lower: wrap(&bcs.lower),
            upper: wrap(&bcs.upper),
        },
    ))
}

/// `G⁻f`: solves `SΨ = f` from zero data on the final slice, backwards.
pub fn green_minus(sys: &FriedrichsSystem, bcs: &FaceConditions, f: &FieldFn, opts: &SolveOptions) -> Result<Solution> {
    let (a, b) = interval(sys, opts);
    vanishes_on_slice(sys, f, b, opts.nx)?;
    let (ta, tb) = sys.chart().t_range();
    let (rev, rbcs) = time_reversed(sys, bcs, ta, tb)?;
    let f2 = f.clone();
    let rf: FieldFn = Arc::new(move |p| -f2(&Point::new(ta + tb - p.t, p.x.clone())));
    let mut ro = opts.clone();
    ro.t_start = Some(ta + tb - b);
    ro.t_end = Some(ta + tb - a);
    let rank = sys.rank();
    let zero: FieldFn = Arc::new(move |_| Vect::zeros(rank));
    let sol = solve(&rev, &rbcs, Some(&rf), &zero, &ro)?;
    let mut grid = sol.grid;
    grid.t0 = a;
    Ok(Solution {
        grid,
        field: sol.field.reversed(),
        flux: sol.flux.iter().rev().copied().collect(),
        scheme: sol.scheme,
    })
}

/// Relative discrete L² norm of `SΨ − f` with centered space-time
/// differences at interior nodes; absolute when `f` vanishes there.
pub fn residual(sys: &FriedrichsSystem, sol: &Solution, f: Option<&FieldFn>) -> f64 {
    let g = &sol.grid;
    let field: &GridField = &sol.field;
    if g.nt < 2 || g.nx < 3 {
        return 0.0;
    }
    let mut res = Vec::new();
    let mut rhs = Vec::new();
    for n in 1..g.nt {
        for i in 1..g.nx - 1 {
            let p = Point::at(g.t(n), g.x(i));
            let co = sys.coefficients(&p);
            let dt = (field.value(n + 1, i) - field.value(n - 1, i)) * c(0.5 / g.dt);
            let dx = (field.value(n, i + 1) - field.value(n, i - 1)) * c(0.5 / g.dx);
            let fv = f.map(|f| f(&p)).unwrap_or_else(|| Vect::zeros(sys.rank()));
            let r = &co.a[0] * dt + &co.a[1] * dx + &co.c * field.value(n, i) - &fv;
            res.push(r.norm_squared());
            rhs.push(fv.norm_squared());
        }
    }
    let num = pairwise_sum(&res).sqrt();
    let den = pairwise_sum(&rhs).sqrt();
    if den > 0.0 {
        num / den
    } else {
        num * (g.dt * g.dx).sqrt()
    }
}
