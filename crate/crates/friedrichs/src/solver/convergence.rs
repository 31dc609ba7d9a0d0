use std::sync::Arc;

use crate::boundary::FaceConditions;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::c;
use crate::reduction::FieldFn;
use crate::system::FriedrichsSystem;

use super::energy::{energy_trace, pairwise_sum};
use super::{solve, GridField, Solution, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub grids: Vec<usize>,
    /// Discrete L² error at the final level.
    pub errors: Vec<f64>,
    /// `log₂(e_i/e_{i+1})`, one fewer than `errors`.
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn orders_within(&self, lo: f64, hi: f64) -> bool {
        !self.orders.is_empty() && self.orders.iter().all(|o| (lo..=hi).contains(o))
    }
}

fn l2_error(sol: &Solution, exact: &FieldFn) -> f64 {
    let g = &sol.grid;
    let t = g.t_end();
    let terms: Vec<f64> = (0..g.nx)
        .map(|i| (sol.field.value(g.nt, i) - exact(&Point::at(t, g.x(i)))).norm_squared() * g.dx)
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// Solves from the exact data on each grid and compares at the final time.
pub fn convergence_study(
    sys: &FriedrichsSystem,
    bcs: &FaceConditions,
    forcing: Option<&FieldFn>,
    exact: &FieldFn,
    grids: &[usize],
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    if grids.is_empty() {
        return Err(Error::Grid("no grids given".into()));
    }
    let mut errors = Vec::with_capacity(grids.len());
    for &nx in grids {
        let mut o = opts.clone();
        o.nx = nx;
        let sol = solve(sys, bcs, forcing, exact, &o)?;
        errors.push(l2_error(&sol, exact));
    }
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceReport {
        grids: grids.to_vec(),
        errors,
        orders,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaReport {
    pub lambda: f64,
    /// `‖e^{−λ(T−t₀)}Ψ − Ψ̃‖` at the final level.
    pub discrepancy: f64,
    /// `e^{−λ(T−t₀)}‖Ψ_h − RΨ_{h/2}‖`, `R` averaging fine-cell pairs.
    pub estimate: f64,
    pub pass: bool,
    /// Relative mismatch of `E[Ψ̃](T)` against `e^{−2λ(T−t₀)}E[Ψ](T)`.
    pub energy_mismatch: f64,
}

fn restricted_difference(coarse: &GridField, fine: &GridField) -> Vec<f64> {
    let (nc, nf) = (coarse.levels - 1, fine.levels - 1);
    (0..coarse.nx)
        .map(|i| {
            let avg = (fine.value(nf, 2 * i) + fine.value(nf, 2 * i + 1)) * c(0.5);
            (coarse.value(nc, i) - avg).norm_squared()
        })
        .collect()
}

/// Compares the solution of `S` rescaled by `e^{−λ(t−t₀)}` with the solution
/// of `S + λσ(dt)` driven by `e^{−λ(t−t₀)}f` from the same data.
pub fn lambda_equivalence_check(
    sys: &FriedrichsSystem,
    lambda: f64,
    bcs: &FaceConditions,
    forcing: Option<&FieldFn>,
    initial: &FieldFn,
    opts: &SolveOptions,
) -> Result<LambdaReport> {
    let shifted = sys.lambda_shift(lambda);
    let plain = solve(sys, bcs, forcing, initial, opts)?;
    let t0 = plain.grid.t0;
    let scaled_f: Option<FieldFn> = forcing.map(|f| {
        let f = f.clone();
        let g: FieldFn = Arc::new(move |p: &Point| f(p) * c((-lambda * (p.t - t0)).exp()));
        g
    });
    let tilde = solve(&shifted, bcs, scaled_f.as_ref(), initial, opts)?;
    let factor = (-lambda * (plain.grid.t_end() - t0)).exp();
    let g = &plain.grid;
    let terms: Vec<f64> = (0..g.nx)
        .map(|i| (plain.field.value(g.nt, i) * c(factor) - tilde.field.value(tilde.grid.nt, i)).norm_squared() * g.dx)
        .collect();
    let discrepancy = pairwise_sum(&terms).sqrt();

    let mut fine_opts = opts.clone();
    fine_opts.nx = 2 * opts.nx;
    let fine = solve(sys, bcs, forcing, initial, &fine_opts)?;
    let diff: Vec<f64> = restricted_difference(&plain.field, &fine.field)
        .into_iter()
        .map(|d| d * g.dx)
        .collect();
    let estimate = factor * pairwise_sum(&diff).sqrt();

    let e_plain = *energy_trace(sys, &plain).energy.last().expect("levels");
    let e_tilde = *energy_trace(&shifted, &tilde).energy.last().expect("levels");
    let target = factor * factor * e_plain;
    let energy_mismatch = if target.abs() > 0.0 {
        (e_tilde - target).abs() / target.abs()
    } else {
        e_tilde.abs()
    };
    Ok(LambdaReport {
        lambda,
        discrepancy,
        estimate,
        pass: discrepancy <= 5.0 * estimate,
        energy_mismatch,
    })
}
