use crate::geometry::Point;
use crate::linalg::{self, Vect};
use crate::numdiff;
use crate::system::FriedrichsSystem;

use super::{Grid, GridField, Solution};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    /// Accumulated outward boundary form; `E(t) + flux(t)` is non-increasing
    /// for the upwind scheme.
    pub flux: Vec<f64>,
}

impl EnergyTrace {
    pub fn ratio(&self) -> f64 {
        let e0 = self.energy[0];
        let e1 = *self.energy.last().expect("at least one level");
        if e0 == 0.0 {
            if e1 == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            e1 / e0
        }
    }

    pub fn non_negative(&self) -> bool {
        self.energy.iter().all(|&e| e >= 0.0)
    }

    /// `E(t) ≤ E(t₀)·e^{rate(t−t₀)}` at every level, up to round-off.
    pub fn within_growth(&self, rate: f64) -> bool {
        let e0 = self.energy[0];
        let t0 = self.t[0];
        self.t
            .iter()
            .zip(&self.energy)
            .all(|(&t, &e)| e <= e0 * (rate * (t - t0)).exp() * (1.0 + 1e-12) + 1e-300)
    }
}

/// Fixed-order pairwise sum.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn level_energy(sys: &FriedrichsSystem, grid: &Grid, field: &GridField, n: usize) -> f64 {
    let chart = sys.chart();
    let t = grid.t(n);
    let terms: Vec<f64> = (0..grid.nx)
        .map(|i| {
            let p = Point::at(t, grid.x(i));
            let co = sys.coefficients(&p);
            let h = linalg::herm_part(&(sys.metric(&p) * &co.a[0]));
            chart.beta(&p) * linalg::form(&h, &field.value(n, i)) * chart.h(&p).determinant().sqrt() * grid.dx
        })
        .collect();
    pairwise_sum(&terms)
}

pub fn energy_trace(sys: &FriedrichsSystem, sol: &Solution) -> EnergyTrace {
    let grid = &sol.grid;
    let t: Vec<f64> = (0..=grid.nt).map(|n| grid.t(n)).collect();
    let energy = (0..=grid.nt).map(|n| level_energy(sys, grid, &sol.field, n)).collect();
    EnergyTrace {
        t,
        energy,
        flux: sol.flux.clone(),
    }
}

/// Growth rate `C` for `E(t) ≤ e^{C(t−t₀)}E(t₀)`: the largest eigenvalue of
/// `Σ∂_μ(ρGA^μ)/ρ − 2 Re(GC)` relative to `GA⁰` over the sample points, with
/// `ρ` the volume density.
pub fn growth_rate(sys: &FriedrichsSystem, points: &[Point]) -> f64 {
    let chart = sys.chart();
    let dim = chart.dim_space() + 1;
    let weighted = |p: &Point, mu: usize| {
        let m = sys.metric(p) * &sys.coefficients(p).a[mu];
        linalg::herm_part(&m) * linalg::c(chart.volume_density(p))
    };
    let mut rate: f64 = 0.0;
    for p in points {
        let co = sys.coefficients(p);
        let g = sys.metric(p);
        let rho = chart.volume_density(p);
        let mut q = linalg::herm_part(&(&g * &co.c)) * linalg::c(-2.0);
        for mu in 0..dim {
            let h = numdiff::centered_step(p.coord(mu));
            let lo = p.shifted(mu, -h);
            let hi = p.shifted(mu, h);
            let (lo, hi, span) = match (chart.contains(&lo), chart.contains(&hi)) {
                (true, true) => (lo, hi, 2.0 * h),
                (false, _) => (p.clone(), hi, h),
                (_, false) => (lo, p.clone(), h),
            };
            q += (weighted(&hi, mu) - weighted(&lo, mu)) * linalg::c(1.0 / (span * rho));
        }
        let h0 = linalg::herm_part(&(&g * &co.a[0]));
        if let Ok(e) = linalg::gen_herm_eigen(&q, &h0) {
            rate = rate.max(e.max());
        }
    }
    rate
}

/// Energy of a single level sampled from a closed-form field.
pub fn sampled_energy(sys: &FriedrichsSystem, grid: &Grid, t: f64, f: &dyn Fn(&Point) -> Vect) -> f64 {
    let mut field = GridField::zeros(1, grid.nx, sys.rank());
    for i in 0..grid.nx {
        field.cell_mut(0, i).copy_from_slice(f(&Point::at(t, grid.x(i))).as_slice());
    }
    let g = Grid { t0: t, nt: 0, ..*grid };
    level_energy(sys, &g, &field, 0)
}
