//! First-order reductions of second-order operators and the corner
//! compatibility checker.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::geometry::{Face, Point, ScalarFn, SpacetimeChart};
use crate::linalg::{self, c, Mat, Vect};
use crate::numdiff;
use crate::system::{CoeffFn, Coefficients, FriedrichsSystem, MetricFn};

/// Sampled section of the bundle: `p ↦ Ψ(p)`.
pub type FieldFn = Arc<dyn Fn(&Point) -> Vect + Send + Sync>;

/// Where `u`, `∂_t u` and the gradient slots live in a reduced fiber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub k: usize,
    pub rank: usize,
    pub u: usize,
    pub grad: usize,
    /// Slot of the first spatial gradient component (1 when slot 0 is `dt`).
    pub spatial_slot: usize,
    pub time_derivative: Option<usize>,
}

impl BlockLayout {
    pub fn u_index(&self, i: usize) -> usize {
        self.u + i
    }

    pub fn spatial_grad_index(&self, axis: usize, i: usize) -> usize {
        self.grad + (self.spatial_slot + axis) * self.k + i
    }

    pub fn time_derivative_index(&self, i: usize) -> Option<usize> {
        self.time_derivative.map(|t| t + i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    NormallyHyperbolic,
    KleinGordon,
    ReactionDiffusion,
}

pub type VectorFn = Arc<dyn Fn(&Point) -> Vec<f64> + Send + Sync>;
pub type BundleMatFn = Arc<dyn Fn(&Point) -> Mat + Send + Sync>;

/// `(1/β²)∂_t² + b₀∂_t + Δ_h + b·∇ + c` (normally hyperbolic),
/// `∇*∇ + m²` (Klein–Gordon) or `∂_t − Δ_h + c` (reaction–diffusion),
/// on the trivial bundle of rank `k`.
#[derive(Clone)]
pub struct SecondOrderProblem {
    pub kind: ProblemKind,
    pub k: usize,
    pub chart: Arc<SpacetimeChart>,
    /// `None` selects the values of the d'Alembertian of the chart.
    pub b0: Option<ScalarFn>,
    pub b: Option<VectorFn>,
    pub potential: BundleMatFn,
    pub mass: f64,
    /// Curvature block `R_{∂_t,·}`, `nk × k`.
    pub curvature: Option<BundleMatFn>,
}

impl SecondOrderProblem {
    fn base(kind: ProblemKind, chart: Arc<SpacetimeChart>, k: usize) -> Self {
        SecondOrderProblem {
            kind,
            k,
            chart,
            b0: None,
            b: None,
            potential: Arc::new(move |_| linalg::zeros(k, k)),
            mass: 0.0,
            curvature: None,
        }
    }

    pub fn wave(chart: Arc<SpacetimeChart>, k: usize) -> Self {
        Self::base(ProblemKind::NormallyHyperbolic, chart, k)
    }

    pub fn klein_gordon(chart: Arc<SpacetimeChart>, k: usize, mass: f64) -> Self {
        SecondOrderProblem {
            mass,
            ..Self::base(ProblemKind::KleinGordon, chart, k)
        }
    }

    /// Constant scalar reaction coefficient `c·Id`.
    pub fn reaction_diffusion(chart: Arc<SpacetimeChart>, k: usize, reaction: f64) -> Self {
        SecondOrderProblem {
            potential: Arc::new(move |_| linalg::identity(k) * c(reaction)),
            ..Self::base(ProblemKind::ReactionDiffusion, chart, k)
        }
    }

    pub fn with_potential(mut self, potential: BundleMatFn) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_curvature(mut self, r: BundleMatFn) -> Self {
        self.curvature = Some(r);
        self
    }

    pub fn with_damping(mut self, b0: ScalarFn, b: VectorFn) -> Self {
        self.b0 = Some(b0);
        self.b = Some(b);
        self
    }
}

/// `(1/√h) ∂_i(√h h^{ij})` for each `j`.
fn laplace_divergence(chart: &SpacetimeChart, p: &Point) -> Vec<f64> {
    let n = chart.dim_space();
    let weighted = |q: &Point| chart.h_inv(q) * chart.h(q).determinant().sqrt();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let step = numdiff::centered_step(p.x[i]);
        let d: DMatrix<f64> = (weighted(&p.shifted(i + 1, step)) - weighted(&p.shifted(i + 1, -step))) * (0.5 / step);
        for (j, o) in out.iter_mut().enumerate() {
            *o += d[(i, j)];
        }
    }
    let sq = chart.h(p).determinant().sqrt();
    out.iter().map(|v| v / sq).collect()
}

/// `(1/√|g|) ∂_μ(√|g| g^{μλ})` for each `λ`.
fn wave_divergence(chart: &SpacetimeChart, p: &Point) -> Vec<f64> {
    let n = chart.dim_space();
    let weighted = |q: &Point| chart.g_inv(q) * chart.volume_density(q);
    let mut out = vec![0.0; n + 1];
    for mu in 0..=n {
        let step = numdiff::centered_step(p.coord(mu));
        let d: DMatrix<f64> = (weighted(&p.shifted(mu, step)) - weighted(&p.shifted(mu, -step))) * (0.5 / step);
        for (l, o) in out.iter_mut().enumerate() {
            *o += d[(mu, l)];
        }
    }
    let rho = chart.volume_density(p);
    out.iter().map(|v| v / rho).collect()
}

/// Damping coefficients of the d'Alembertian in the split form.
pub fn geometric_damping(chart: &SpacetimeChart, p: &Point) -> (f64, Vec<f64>) {
    let n = chart.dim_space();
    let beta = chart.beta(p);
    let b2 = beta * beta;
    let step = numdiff::centered_step(p.t);
    let dh = (chart.h(&p.shifted(0, step)) - chart.h(&p.shifted(0, -step))) * (0.5 / step);
    let dbeta2 = (chart.beta(&p.shifted(0, step)).powi(2) - chart.beta(&p.shifted(0, -step)).powi(2)) * (0.5 / step);
    let hi = chart.h_inv(p);
    let b0 = ((&hi * dh).trace() - dbeta2 / b2) / (2.0 * b2);
    let mut grad = vec![0.0; n];
    for (i, g) in grad.iter_mut().enumerate() {
        let s = numdiff::centered_step(p.x[i]);
        *g = (chart.beta(&p.shifted(i + 1, s)).powi(2) - chart.beta(&p.shifted(i + 1, -s)).powi(2)) * (0.5 / s);
    }
    let b = (0..n)
        .map(|j| -(0..n).map(|i| hi[(j, i)] * grad[i]).sum::<f64>() / (2.0 * b2))
        .collect();
    (b0, b)
}

fn put(m: &mut Mat, r: usize, col: usize, block: &Mat) {
    m.view_mut((r, col), (block.nrows(), block.ncols())).copy_from(block);
}

fn metric_block(k: usize, inner: &DMatrix<f64>) -> Mat {
    linalg::from_real(inner).kronecker(&linalg::identity(k))
}

pub fn wave_layout(k: usize, n: usize) -> BlockLayout {
    BlockLayout {
        k,
        rank: k * (n + 2),
        u: k * (n + 1),
        grad: k,
        spatial_slot: 0,
        time_derivative: Some(0),
    }
}

/// `Ψ = (∂_t u, ∇^Σ u, u)`, fiber rank `k(n+2)`.
pub fn wave_to_first_order(prob: &SecondOrderProblem) -> Result<FriedrichsSystem> {
    if prob.kind != ProblemKind::NormallyHyperbolic {
        return Err(Error::Contract(format!("wave reduction of a {:?} problem", prob.kind)));
    }
    let k = prob.k;
    let chart = prob.chart.clone();
    let n = chart.dim_space();
    let rank = k * (n + 2);
    let lay = wave_layout(k, n);
    let p2 = prob.clone();
    let ch = chart.clone();
    let id = linalg::identity(k);
    let coeffs: CoeffFn = Arc::new(move |p| {
        let beta = ch.beta(p);
        let hi = ch.h_inv(p);
        let mut a = Vec::with_capacity(n + 1);
        let mut a0 = linalg::identity(rank);
        put(&mut a0, 0, 0, &(&id * c(1.0 / (beta * beta))));
        a.push(a0);
        for j in 0..n {
            let mut aj = linalg::zeros(rank, rank);
            for s in 0..n {
                put(&mut aj, 0, lay.spatial_grad_index(s, 0), &(&id * c(-hi[(j, s)])));
            }
            put(&mut aj, lay.spatial_grad_index(j, 0), 0, &(&id * c(-1.0)));
            a.push(aj);
        }
        let (gb0, gb) = geometric_damping(&ch, p);
        let b0 = p2.b0.as_ref().map(|f| f(p)).unwrap_or(gb0);
        let b = p2.b.as_ref().map(|f| f(p)).unwrap_or(gb);
        let div = laplace_divergence(&ch, p);
        let mut cm = linalg::zeros(rank, rank);
        put(&mut cm, 0, 0, &(&id * c(b0)));
        for s in 0..n {
            // coordinate form of the Laplacian contributes −(1/√h)∂_i(√h h^{is})
            put(&mut cm, 0, lay.spatial_grad_index(s, 0), &(&id * c(b[s] - div[s])));
        }
        put(&mut cm, 0, lay.u, &(p2.potential)(p));
        // the Weingarten entry cancels against the coordinate connection of T*Σ
        if let Some(r) = &p2.curvature {
            put(&mut cm, k, lay.u, &r(p));
        }
        put(&mut cm, lay.u, 0, &(&id * c(-1.0)));
        Coefficients { a, c: cm }
    });
    let ch = chart.clone();
    let metric: MetricFn = Arc::new(move |p| {
        let mut g = linalg::identity(rank);
        put(&mut g, k, k, &metric_block(k, &ch.h_inv(p)));
        g
    });
    let ti = chart.is_static();
    Ok(FriedrichsSystem::new("wave_reduction", rank, chart, coeffs, metric, true, ti)?.with_layout(wave_layout(k, n)))
}

pub fn kg_layout(k: usize, n: usize) -> BlockLayout {
    BlockLayout {
        k,
        rank: k * (n + 2),
        u: 0,
        grad: k,
        spatial_slot: 1,
        time_derivative: Some(k),
    }
}

/// `Ψ = (u, ∇u)` on `V ⊕ T*M⊗V` with the indefinite metric `diag(1, g⁻¹)`.
pub fn kg_to_first_order(prob: &SecondOrderProblem) -> Result<FriedrichsSystem> {
    if prob.kind != ProblemKind::KleinGordon {
        return Err(Error::Contract(format!("Klein-Gordon reduction of a {:?} problem", prob.kind)));
    }
    let k = prob.k;
    let chart = prob.chart.clone();
    let n = chart.dim_space();
    let rank = k * (n + 2);
    let lay = kg_layout(k, n);
    let m2 = prob.mass * prob.mass;
    let ch = chart.clone();
    let id = linalg::identity(k);
    let coeffs: CoeffFn = Arc::new(move |p| {
        let gi = ch.g_inv(p);
        let a = (0..=n)
            .map(|mu| {
                let mut am = linalg::zeros(rank, rank);
                for nu in 0..=n {
                    put(&mut am, 0, k + nu * k, &(&id * c(-gi[(mu, nu)])));
                }
                put(&mut am, k + mu * k, 0, &(&id * c(-1.0)));
                am
            })
            .collect();
        let div = wave_divergence(&ch, p);
        let mut cm = linalg::identity(rank);
        put(&mut cm, 0, 0, &(&id * c(m2)));
        for (l, d) in div.iter().enumerate() {
            put(&mut cm, 0, k + l * k, &(&id * c(-d)));
        }
        Coefficients { a, c: cm }
    });
    let ch = chart.clone();
    let metric: MetricFn = Arc::new(move |p| {
        let mut g = linalg::identity(rank);
        put(&mut g, k, k, &metric_block(k, &ch.g_inv(p)));
        g
    });
    let ti = chart.is_static();
    Ok(FriedrichsSystem::new("kg_reduction", rank, chart, coeffs, metric, false, ti)?.with_layout(lay))
}

pub fn rd_layout(k: usize, n: usize) -> BlockLayout {
    BlockLayout {
        k,
        rank: k * (n + 1),
        u: 0,
        grad: k,
        spatial_slot: 0,
        time_derivative: None,
    }
}

/// `Ψ = (u, ∇^Σ u)`, shifted by `λ σ(dt)`.
pub fn reaction_diffusion_to_first_order(prob: &SecondOrderProblem, lambda: f64) -> Result<FriedrichsSystem> {
    if prob.kind != ProblemKind::ReactionDiffusion {
        return Err(Error::Contract(format!("reaction-diffusion reduction of a {:?} problem", prob.kind)));
    }
    let k = prob.k;
    let chart = prob.chart.clone();
    let n = chart.dim_space();
    let rank = k * (n + 1);
    let lay = rd_layout(k, n);
    let p2 = prob.clone();
    let ch = chart.clone();
    let id = linalg::identity(k);
    let coeffs: CoeffFn = Arc::new(move |p| {
        let hi = ch.h_inv(p);
        let mut a = Vec::with_capacity(n + 1);
        let mut a0 = linalg::zeros(rank, rank);
        put(&mut a0, 0, 0, &id);
        a.push(a0);
        for j in 0..n {
            let mut aj = linalg::zeros(rank, rank);
            for s in 0..n {
                put(&mut aj, 0, lay.spatial_grad_index(s, 0), &(&id * c(-hi[(j, s)])));
            }
            put(&mut aj, lay.spatial_grad_index(j, 0), 0, &(&id * c(-1.0)));
            a.push(aj);
        }
        let div = laplace_divergence(&ch, p);
        let mut cm = linalg::identity(rank);
        put(&mut cm, 0, 0, &(p2.potential)(p));
        for (s, d) in div.iter().enumerate() {
            put(&mut cm, 0, lay.spatial_grad_index(s, 0), &(&id * c(-d)));
        }
        Coefficients { a, c: cm }
    });
    let ch = chart.clone();
    let metric: MetricFn = Arc::new(move |p| {
        let mut g = linalg::identity(rank);
        put(&mut g, k, k, &metric_block(k, &ch.h_inv(p)));
        g
    });
    let ti = chart.is_static();
    Ok(FriedrichsSystem::new("reaction_diffusion", rank, chart, coeffs, metric, true, ti)?
        .with_layout(rd_layout(k, n))
        .lambda_shift(lambda))
}

/// Step of the 9-point stencil used for gradients of closed-form data.
const DATA_STEP: f64 = 1e-3;

fn numeric_gradient(h: &FieldFn, p: &Point, n: usize) -> Vec<Vect> {
    (0..n)
        .map(|a| {
            numdiff::derivative9(
                |s| {
                    let mut q = p.clone();
                    q.x[a] = s;
                    h(&q)
                },
                p.x[a],
                DATA_STEP,
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FirstOrderData {
    pub points: Vec<Point>,
    pub psi: Vec<Vect>,
    pub constraint_residual: f64,
}

/// Assembles `(h′, ∇h, h)` in the given layout with the gradient block taken
/// from `h` itself.
pub fn constrain_initial_data(layout: &BlockLayout, h: &FieldFn, h_prime: &FieldFn, points: &[Point]) -> FirstOrderData {
    let psi: Vec<Vect> = points
        .iter()
        .map(|p| {
            let n = p.x.len();
            let mut v = Vect::zeros(layout.rank);
            let u = h(p);
            for i in 0..layout.k {
                v[layout.u_index(i)] = u[i];
            }
            if layout.time_derivative.is_some() {
                let ut = h_prime(p);
                for i in 0..layout.k {
                    v[layout.time_derivative_index(i).expect("checked")] = ut[i];
                }
            }
            for (a, g) in numeric_gradient(h, p, n).iter().enumerate() {
                for i in 0..layout.k {
                    v[layout.spatial_grad_index(a, i)] = g[i];
                }
            }
            v
        })
        .collect();
    let constraint_residual = constraint_residual(layout, h, points, &psi);
    FirstOrderData {
        points: points.to_vec(),
        psi,
        constraint_residual,
    }
}

/// `‖gradient block − ∇h‖ / ‖∇h‖` over the points (absolute if `∇h = 0`).
pub fn constraint_residual(layout: &BlockLayout, h: &FieldFn, points: &[Point], psi: &[Vect]) -> f64 {
    let mut err = 0.0;
    let mut norm = 0.0;
    for (p, v) in points.iter().zip(psi) {
        for (a, g) in numeric_gradient(h, p, p.x.len()).iter().enumerate() {
            for i in 0..layout.k {
                err += (v[layout.spatial_grad_index(a, i)] - g[i]).norm_sqr();
                norm += g[i].norm_sqr();
            }
        }
    }
    if norm > 0.0 {
        (err / norm).sqrt()
    } else {
        err.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub order: usize,
    pub tolerance: f64,
    /// Largest boundary residual per order `0..=K`.
    pub residuals: Vec<f64>,
    pub per_face: Vec<(Face, Vec<f64>)>,
    /// `pass[k]`: orders `0..=k` all below tolerance.
    pub pass: Vec<bool>,
    pub nodes: Vec<f64>,
    /// `𝔥_k` at the nodes.
    pub h_k: Vec<Vec<Vect>>,
}

/// Settings for the corner compatibility recursion on a node grid including
/// both boundary points.
#[derive(Debug, Clone, Copy)]
pub struct CompatSettings {
    pub nodes: usize,
    pub stencil_width: usize,
    pub time_step: f64,
    pub tolerance: f64,
}

impl Default for CompatSettings {
    fn default() -> Self {
        CompatSettings {
            nodes: 64,
            stencil_width: 7,
            time_step: 1e-2,
            tolerance: 1e-8,
        }
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn time_derivatives<T, F>(f: F, t0: f64, step: f64, order: usize, constant: bool) -> Vec<T>
where
    F: Fn(f64) -> T,
    T: numdiff::Scale,
{
    if constant {
        let v = f(t0);
        let mut out = vec![v.clone()];
        out.extend((0..order).map(|_| v.clone().scale(0.0)));
        return out;
    }
    numdiff::stencil_derivatives(f, t0, step, (order + 2).max(9) | 1, order)
}

pub fn spatial_nodes(chart: &SpacetimeChart, count: usize) -> Vec<f64> {
    let l = chart.extent()[0];
    (0..count).map(|i| l * i as f64 / (count - 1) as f64).collect()
}

/// Corner conditions `Σ_j binom(k,j) (∂_t^j G_B) 𝔥_{k−j} = 0` for `k = 0..=order`
/// on a one-dimensional strip.
pub fn compatibility_check(
    sys: &FriedrichsSystem,
    bcs: &[(Face, BoundaryCondition)],
    f: &FieldFn,
    h: &FieldFn,
    order: usize,
    settings: CompatSettings,
) -> Result<CompatibilityReport> {
    let chart = sys.chart();
    if chart.dim_space() != 1 {
        return Err(Error::Unsupported("compatibility check is one-dimensional".into()));
    }
    let t0 = chart.t_range().0;
    let nodes = spatial_nodes(chart, settings.nodes);
    let d = numdiff::derivative_matrix(&nodes, settings.stencil_width);
    let m = nodes.len();
    let rank = sys.rank();
    let steady = sys.time_independent();
    let jmax = order.saturating_sub(1);

    // time derivatives of σ(dt)⁻¹σ(dx), σ(dt)⁻¹C and σ(dt)⁻¹f at each node
    let mut adv = Vec::with_capacity(m);
    let mut zero = Vec::with_capacity(m);
    let mut forcing = Vec::with_capacity(m);
    for &x in &nodes {
        let normalized = |t: f64| -> Result<(Mat, Mat, Mat)> {
            let p = Point::at(t, x);
            let co = sys.coefficients(&p);
            let inv = linalg::inverse(&co.a[0])
                .map_err(|_| Error::Precondition(format!("σ(dt) singular at t={t}, x={x}")))?;
            let fv = f(&p);
            Ok((&inv * &co.a[1], &inv * &co.c, &inv * Mat::from_column_slice(rank, 1, fv.as_slice())))
        };
        normalized(t0)?;
        let pick = |which: usize| {
            move |t: f64| {
                let (a, b, cc) = normalized(t).expect("checked at t0");
                match which {
                    0 => a,
                    1 => b,
                    _ => cc,
                }
            }
        };
        adv.push(time_derivatives(pick(0), t0, settings.time_step, jmax, steady));
        zero.push(time_derivatives(pick(1), t0, settings.time_step, jmax, steady));
        forcing.push(time_derivatives(pick(2), t0, settings.time_step, jmax, false));
    }

    let apply_d = |v: &[Vect]| -> Vec<Vect> {
        (0..m)
            .map(|i| {
                let mut acc = Vect::zeros(rank);
                for (l, w) in d[i].iter().enumerate() {
                    if *w != 0.0 {
                        acc += &v[l] * c(*w);
                    }
                }
                acc
            })
            .collect()
    };

    let mut hk: Vec<Vec<Vect>> = vec![nodes.iter().map(|&x| h(&Point::at(t0, x))).collect()];
    for k in 1..=order {
        let mut next: Vec<Vect> = (0..m).map(|i| forcing[i][k - 1].column(0).into_owned()).collect();
        for j in 0..k {
            let prev = &hk[k - 1 - j];
            let dv = apply_d(prev);
            let w = binom(k - 1, j);
            for i in 0..m {
                let hv = -(&adv[i][j] * &dv[i]) - &zero[i][j] * &prev[i];
                next[i] += hv * c(w);
            }
        }
        hk.push(next);
    }

    let mut per_face = Vec::new();
    let mut residuals = vec![0.0f64; order + 1];
    for (face, bc) in bcs {
        let q0 = chart.boundary_point(t0, *face, &[])?;
        let idx = match face {
            Face::Lower(_) => 0,
            Face::Upper(_) => m - 1,
        };
        let gdiff = numdiff::stencil_derivatives(
            |t| {
                let mut q = q0.clone();
                q.t = t;
                bc.matrix(&q)
            },
            t0,
            settings.time_step,
            (order + 2).max(9) | 1,
            order,
        );
        let mut res = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut r = Vect::zeros(rank);
            for (j, gj) in gdiff.iter().enumerate().take(k + 1) {
                let gj = if j == 0 { bc.matrix(&q0) } else { gj.clone() };
                r += gj * &hk[k - j][idx] * c(binom(k, j));
            }
            res.push(r.norm());
            residuals[k] = residuals[k].max(r.norm());
        }
        per_face.push((*face, res));
    }
    let mut pass = Vec::with_capacity(order + 1);
    let mut ok = true;
    for r in &residuals {
        ok &= *r <= settings.tolerance;
        pass.push(ok);
    }
    Ok(CompatibilityReport {
        order,
        tolerance: settings.tolerance,
        residuals,
        per_face,
        pass,
        nodes,
        h_k: hk,
    })
}

/// Samples of the metric used in coefficient tables.
pub fn coefficient_table(sys: &FriedrichsSystem, points: &[Point]) -> Vec<(Point, Coefficients, Mat)> {
    points
        .iter()
        .map(|p| (p.clone(), sys.coefficients(p), sys.metric(p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sampling;

    fn flat(n: usize) -> Arc<SpacetimeChart> {
        Arc::new(SpacetimeChart::minkowski_strip((0.0, 1.0), vec![1.0; n]).unwrap())
    }

    #[test]
    fn wave_reduction_is_symmetric_hyperbolic() {
        let sys = wave_to_first_order(&SecondOrderProblem::wave(flat(1), 1)).unwrap();
        let pts = sys.chart().sample_points(Sampling {
            per_axis: 6,
            time_levels: 3,
        });
        assert!(sys.check_symmetric(&pts).symmetric);
        assert!(sys.check_hyperbolic(&pts, 16, 3).unwrap().hyperbolic);
        let (constant, dim) = sys.constant_characteristic(&sys.chart().boundary_samples(4)).unwrap();
        assert!(constant && dim == 1);
    }

    #[test]
    fn kg_positivity_bound() {
        let sys = kg_to_first_order(&SecondOrderProblem::klein_gordon(flat(1), 1, 1.0)).unwrap();
        let r = sys.check_positive(&[0.0, 0.5], 5);
        assert!(r.pass && (r.min_bound - 2.0).abs() < 1e-6, "{r:?}");
        let sys0 = kg_to_first_order(&SecondOrderProblem::klein_gordon(flat(1), 1, 0.0)).unwrap();
        assert!(!sys0.check_positive(&[0.0], 5).pass);
    }

    #[test]
    fn rd_is_not_hyperbolic() {
        let sys = reaction_diffusion_to_first_order(&SecondOrderProblem::reaction_diffusion(flat(1), 1, 0.0), 1.0).unwrap();
        let pts = sys.chart().sample_points(Sampling {
            per_axis: 5,
            time_levels: 2,
        });
        assert!(!sys.check_hyperbolic(&pts, 4, 0).unwrap().dt_positive);
        assert!(sys.check_positive(&[0.0], 5).pass);
        let heat = reaction_diffusion_to_first_order(&SecondOrderProblem::reaction_diffusion(flat(1), 1, 0.0), 0.0).unwrap();
        assert!(!heat.check_positive(&[0.0], 5).pass);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let prob = SecondOrderProblem::wave(flat(1), 1);
        assert!(kg_to_first_order(&prob).is_err());
        assert!(reaction_diffusion_to_first_order(&prob, 0.0).is_err());
    }

    #[test]
    fn constant_data_has_zero_gradient() {
        let lay = wave_layout(1, 1);
        let h: FieldFn = Arc::new(|_| Vect::from_element(1, c(3.0)));
        let hp: FieldFn = Arc::new(|_| Vect::from_element(1, c(0.0)));
        let pts: Vec<Point> = (0..5).map(|i| Point::at(0.0, i as f64 / 4.0)).collect();
        let data = constrain_initial_data(&lay, &h, &hp, &pts);
        for v in &data.psi {
            assert!(v[lay.spatial_grad_index(0, 0)].norm() < 1e-10);
        }
        assert_eq!(data.constraint_residual, 0.0);
    }

    #[test]
    fn sine_data_gradient() {
        let lay = wave_layout(1, 1);
        let tau = std::f64::consts::TAU;
        let h: FieldFn = Arc::new(move |p| Vect::from_element(1, c((tau * p.x[0]).sin())));
        let hp: FieldFn = Arc::new(|_| Vect::zeros(1));
        let pts: Vec<Point> = (0..33).map(|i| Point::at(0.0, i as f64 / 32.0)).collect();
        let data = constrain_initial_data(&lay, &h, &hp, &pts);
        let mut err: f64 = 0.0;
        for (p, v) in pts.iter().zip(&data.psi) {
            err = err.max((v[1] - c(tau * (tau * p.x[0]).cos())).norm() / tau);
        }
        assert!(err < 1e-10, "{err}");
        let zeroed: Vec<Vect> = data
            .psi
            .iter()
            .map(|v| {
                let mut w = v.clone();
                w[1] = c(0.0);
                w
            })
            .collect();
        assert!(constraint_residual(&lay, &h, &pts, &zeroed) > 0.5);
    }
}
