//! First-order operators `S = Σ_μ A^μ ∂_μ + C` with a Hermitian fiber metric.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Point, Sampling, SpacetimeChart};
use crate::linalg::{self, c, Mat, RANK_TOL};
use crate::numdiff;
use crate::reduction::BlockLayout;

/// Coefficient matrices at one point: `a[μ] = σ_S(dx^μ)` with `a[0]` the time
/// coefficient, and the zero-order term `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub a: Vec<Mat>,
    pub c: Mat,
}

impl Coefficients {
    fn scaled_add(&self, other: &Coefficients, w: f64) -> Coefficients {
        Coefficients {
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y * c(w)).collect(),
            c: &self.c + &other.c * c(w),
        }
    }
}

pub type CoeffFn = Arc<dyn Fn(&Point) -> Coefficients + Send + Sync>;
pub type MetricFn = Arc<dyn Fn(&Point) -> Mat + Send + Sync>;

#[derive(Clone)]
pub struct FriedrichsSystem {
    name: String,
    rank: usize,
    chart: Arc<SpacetimeChart>,
    coeffs: CoeffFn,
    metric: MetricFn,
    metric_positive: bool,
    time_independent: bool,
    layout: Option<BlockLayout>,
}

impl fmt::Debug for FriedrichsSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FriedrichsSystem")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .field("chart", &self.chart.name())
            .field("metric_positive", &self.metric_positive)
            .field("time_independent", &self.time_independent)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub symmetric: bool,
    pub max_asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicReport {
    /// Positive for every sampled future timelike covector.
    pub hyperbolic: bool,
    pub min_eigenvalue: f64,
    /// Positivity of `⟨σ(dt)·,·⟩` alone.
    pub dt_positive: bool,
    pub dt_min_eigenvalue: f64,
    pub cone_directions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    /// `(t, c_t)` per slice; `c_t = −∞` when no lower bound exists.
    pub slices: Vec<(f64, f64)>,
    pub min_bound: f64,
    pub pass: bool,
}

/// Description of how the positivity bound is computed, for reports.
pub const POSITIVITY_INTERPRETATION: &str =
    "c_t = inf over slice points of sup{c : Q - c G >= 0}, Q = Hermitian part of G (C + C^dagger)";

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub symmetry: SymmetryReport,
    pub hyperbolic: Option<HyperbolicReport>,
    pub positivity: PositivityReport,
    pub constant_characteristic: (bool, usize),
}

impl FriedrichsSystem {
    pub fn new(
        name: impl Into<String>,
        rank: usize,
        chart: Arc<SpacetimeChart>,
        coeffs: CoeffFn,
        metric: MetricFn,
        metric_positive: bool,
        time_independent: bool,
    ) -> Result<Self> {
        let sys = FriedrichsSystem {
            name: name.into(),
            rank,
            chart,
            coeffs,
            metric,
            metric_positive,
            time_independent,
            layout: None,
        };
        let (t0, _) = sys.chart.t_range();
        let probe = Point::new(t0, sys.chart.extent().iter().map(|l| 0.5 * l).collect());
        let co = sys.coefficients(&probe);
        let n = sys.chart.dim_space();
        if co.a.len() != n + 1 {
            return Err(Error::Contract(format!(
                "{} symbol coefficients for {} spacetime dimensions",
                co.a.len(),
                n + 1
            )));
        }
        for m in co.a.iter().chain(std::iter::once(&co.c)).chain(std::iter::once(&sys.metric(&probe))) {
            if m.shape() != (rank, rank) {
                return Err(Error::Contract(format!("coefficient of shape {:?}, rank {rank}", m.shape())));
            }
        }
        Ok(sys)
    }

    pub fn with_layout(mut self, layout: BlockLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `∂_t Ψ + v ∂_{x¹} Ψ` on a scalar bundle with the Euclidean metric.
    pub fn advection(chart: Arc<SpacetimeChart>, speed: f64) -> Result<Self> {
        let n = chart.dim_space();
        Self::constant(
            "advection",
            chart,
            (0..=n)
                .map(|mu| {
                    Mat::from_element(
                        1,
                        1,
                        c(match mu {
                            0 => 1.0,
                            1 => speed,
                            _ => 0.0,
                        }),
                    )
                })
                .collect(),
            linalg::zeros(1, 1),
            linalg::identity(1),
        )
    }

    /// Constant coefficient tables.
    pub fn constant(name: &str, chart: Arc<SpacetimeChart>, a: Vec<Mat>, cm: Mat, g: Mat) -> Result<Self> {
        let rank = cm.nrows();
        let positive = linalg::herm_eigen(&g).map(|e| e.min() > 0.0).unwrap_or(false);
        let co = Coefficients { a, c: cm };
        Self::new(
            name,
            rank,
            chart,
            Arc::new(move |_| co.clone()),
            Arc::new(move |_| g.clone()),
            positive,
            true,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn chart(&self) -> &SpacetimeChart {
        &self.chart
    }

    pub fn chart_arc(&self) -> Arc<SpacetimeChart> {
        self.chart.clone()
    }

    pub fn layout(&self) -> Option<&BlockLayout> {
        self.layout.as_ref()
    }

    pub fn metric_positive(&self) -> bool {
        self.metric_positive
    }

    pub fn time_independent(&self) -> bool {
        self.time_independent
    }

    pub fn coefficients(&self, p: &Point) -> Coefficients {
        (self.coeffs)(p)
    }

    pub fn metric(&self, p: &Point) -> Mat {
        (self.metric)(p)
    }

    /// `σ_S(ξ) = Σ_μ ξ_μ A^μ`.
    pub fn symbol(&self, p: &Point, xi: &[f64]) -> Mat {
        let co = self.coefficients(p);
        assert_eq!(xi.len(), co.a.len(), "covector has {} components", xi.len());
        let mut s = linalg::zeros(self.rank, self.rank);
        for (x, a) in xi.iter().zip(&co.a) {
            s += a * c(*x);
        }
        s
    }

    /// `σ_S(n♭)` at a boundary point.
    pub fn boundary_symbol(&self, q: &BoundaryPoint) -> Result<Mat> {
        let n = self.chart.outward_normal(q)?;
        Ok(self.symbol(&q.point(), &n))
    }

    /// `G σ_S(n♭)`, the Hermitian boundary form.
    pub fn boundary_form(&self, q: &BoundaryPoint) -> Result<Mat> {
        let s = self.boundary_symbol(q)?;
        Ok(linalg::herm_part(&(self.metric(&q.point()) * s)))
    }

    pub fn check_symmetric(&self, points: &[Point]) -> SymmetryReport {
        let mut worst: f64 = 0.0;
        for p in points {
            let g = self.metric(p);
            for a in &self.coefficients(p).a {
                let ga = &g * a;
                worst = worst.max(linalg::hermitian_defect(&ga) / ga.norm().max(1.0));
            }
        }
        SymmetryReport {
            symmetric: worst < 1e-10,
            max_asymmetry: worst,
        }
    }

    /// `count` spatial unit directions and radii defining covectors
    /// `τ = dt + (r/β) u` with `|u|_{h⁻¹} = 1`, `r < 1`.
    fn cone_seeds(&self, count: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.chart.dim_space();
        (0..count)
            .map(|_| {
                let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let u = if u.iter().all(|&x| x == 0.0) { vec![1.0; n] } else { u };
                (u, rng.random_range(0.0..0.999))
            })
            .collect()
    }

    /// Future timelike covectors at `p`: `dt` first, then the seeded cone.
    pub fn timelike_cone(&self, p: &Point, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let beta = self.chart.beta(p);
        let hi = self.chart.h_inv(p);
        let mut out = vec![{
            let mut dt = vec![0.0; self.chart.dim_space() + 1];
            dt[0] = 1.0;
            dt
        }];
        for (u, r) in self.cone_seeds(count, seed) {
            let uv = nalgebra::DVector::from_vec(u);
            let norm = (uv.transpose() * &hi * &uv)[(0, 0)].sqrt();
            let mut tau = vec![1.0];
            tau.extend(uv.iter().map(|x| r * x / (norm * beta)));
            out.push(tau);
        }
        out
    }

    pub fn check_hyperbolic(&self, points: &[Point], cone: usize, seed: u64) -> Result<HyperbolicReport> {
        let sym = self.check_symmetric(points);
        if !sym.symmetric {
            return Err(Error::Contract(format!(
                "hyperbolicity check needs a symmetric system (asymmetry {:.3e})",
                sym.max_asymmetry
            )));
        }
        let mut min_all = f64::INFINITY;
        let mut min_dt = f64::INFINITY;
        let mut ok_all = true;
        let mut ok_dt = true;
        for p in points {
            let g = self.metric(p);
            for (k, tau) in self.timelike_cone(p, cone, seed).iter().enumerate() {
                let f = linalg::herm_part(&(&g * self.symbol(p, tau)));
                let e = linalg::herm_eigen(&f)?.min();
                let ok = e > 1e-10 * linalg::spectral_norm(&f).max(f64::MIN_POSITIVE);
                min_all = min_all.min(e);
                ok_all &= ok;
                if k == 0 {
                    min_dt = min_dt.min(e);
                    ok_dt &= ok;
                }
            }
        }
        Ok(HyperbolicReport {
            hyperbolic: ok_all,
            min_eigenvalue: min_all,
            dt_positive: ok_dt,
            dt_min_eigenvalue: min_dt,
            cone_directions: cone,
        })
    }

    /// `σ(dt)`-form positive definite at every point.
    pub fn dt_positive(&self, points: &[Point]) -> bool {
        points.iter().all(|p| {
            let f = linalg::herm_part(&(self.metric(p) * &self.coefficients(p).a[0]));
            linalg::is_positive_definite(&f)
        })
    }

    /// Formal adjoint with respect to `∫⟨·,·⟩_G β√det h`.
    pub fn formal_adjoint(&self) -> FriedrichsSystem {
        let base = self.clone();
        let chart = self.chart.clone();
        let n = chart.dim_space();
        let coeffs: CoeffFn = Arc::new(move |p| {
            let g = base.metric(p);
            let ginv = linalg::inverse(&g).expect("fiber metric must be nondegenerate");
            let co = base.coefficients(p);
            let a: Vec<Mat> = co.a.iter().map(|am| -&ginv * (&g * am).adjoint()).collect();
            let weighted = |mu: usize, q: &Point| {
                let rho = chart.volume_density(q);
                (base.metric(q) * &base.coefficients(q).a[mu]).adjoint() * c(rho)
            };
            let rho = chart.volume_density(p);
            let mut div = linalg::zeros(base.rank, base.rank);
            for mu in 0..=n {
                let h = numdiff::centered_step(p.coord(mu));
                let fwd = weighted(mu, &p.shifted(mu, h));
                let bwd = weighted(mu, &p.shifted(mu, -h));
                div += (fwd - bwd) * c(0.5 / h);
            }
            let cm = &ginv * ((&g * &co.c).adjoint() - div * c(1.0 / rho));
            Coefficients { a, c: cm }
        });
        let metric = self.metric.clone();
        FriedrichsSystem {
            name: format!("{}^dagger", self.name),
            rank: self.rank,
            chart: self.chart.clone(),
            coeffs,
            metric,
            metric_positive: self.metric_positive,
            time_independent: self.time_independent,
            layout: self.layout.clone(),
        }
    }

    /// Hermitian part of `G (C + C†)` at `p`.
    pub fn positivity_form(&self, adjoint: &FriedrichsSystem, p: &Point) -> Mat {
        let g = self.metric(p);
        linalg::herm_part(&(&g * (self.coefficients(p).c + adjoint.coefficients(p).c)))
    }

    pub fn check_positive(&self, slices: &[f64], per_axis: usize) -> PositivityReport {
        let adj = self.formal_adjoint();
        let mut out = Vec::with_capacity(slices.len());
        for &t in slices {
            let ct = self
                .chart
                .slice_points(t, per_axis)
                .iter()
                .map(|p| relative_lower_bound(&self.positivity_form(&adj, p), &self.metric(p)))
                .fold(f64::INFINITY, f64::min);
            out.push((t, ct));
        }
        let min_bound = out.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        PositivityReport {
            slices: out,
            min_bound,
            pass: min_bound > 1e-10,
        }
    }

    pub fn constant_characteristic(&self, samples: &[BoundaryPoint]) -> Result<(bool, usize)> {
        let mut dims = Vec::with_capacity(samples.len());
        for q in samples {
            dims.push(linalg::kernel(&self.boundary_symbol(q)?, RANK_TOL).rank());
        }
        let first = dims.first().copied().unwrap_or(0);
        let constant = dims.iter().all(|&d| d == first);
        Ok((constant, dims.into_iter().max().unwrap_or(0)))
    }

    /// `σ(dt)⁻¹ S` with metric `β G σ(dt)`.
    pub fn beta_normalize(&self, points: &[Point]) -> Result<FriedrichsSystem> {
        let mut positive = true;
        for p in points {
            let a0 = self.coefficients(p).a[0].clone();
            let s = linalg::singular_values(&a0);
            if s.last().copied().unwrap_or(0.0) <= 1e-12 * s.first().copied().unwrap_or(0.0) {
                return Err(Error::Normalization(format!(
                    "σ(dt) is singular at t={}, x={:?}",
                    p.t, p.x
                )));
            }
            let gn = linalg::herm_part(&(self.metric(p) * a0 * c(self.chart.beta(p))));
            positive &= linalg::is_positive_definite(&gn);
        }
        let base = self.clone();
        let coeffs: CoeffFn = Arc::new(move |p| {
            let co = base.coefficients(p);
            let inv = linalg::inverse(&co.a[0]).unwrap_or_else(|_| linalg::pinv(&co.a[0], RANK_TOL));
            Coefficients {
                a: co.a.iter().map(|a| &inv * a).collect(),
                c: &inv * &co.c,
            }
        });
        let base = self.clone();
        let metric: MetricFn = Arc::new(move |p| {
            let a0 = base.coefficients(p).a[0].clone();
            linalg::herm_part(&(base.metric(p) * a0 * c(base.chart.beta(p))))
        });
        Ok(FriedrichsSystem {
            name: format!("{}_beta", self.name),
            rank: self.rank,
            chart: self.chart.clone(),
            coeffs,
            metric,
            metric_positive: positive,
            time_independent: self.time_independent,
            layout: self.layout.clone(),
        })
    }

    /// `K_λ = S + λ σ(dt)`.
    pub fn lambda_shift(&self, lambda: f64) -> FriedrichsSystem {
        if lambda == 0.0 {
            return self.clone();
        }
        let base = self.clone();
        let coeffs: CoeffFn = Arc::new(move |p| {
            let co = base.coefficients(p);
            let shift = Coefficients {
                a: co.a.iter().map(|a| a * c(0.0)).collect(),
                c: co.a[0].clone(),
            };
            co.scaled_add(&shift, lambda)
        });
        FriedrichsSystem {
            name: format!("{}_shift{lambda}", self.name),
            coeffs,
            ..self.clone()
        }
    }

    /// Smallest integer `λ ∈ [0, max]` for which `K_λ` passes the positivity check.
    pub fn find_lambda(&self, max: u32, slices: &[f64], per_axis: usize) -> Option<u32> {
        (0..=max).find(|&l| self.lambda_shift(l as f64).check_positive(slices, per_axis).pass)
    }

    pub fn classify(&self, sampling: Sampling, cone: usize, seed: u64, boundary: &[BoundaryPoint]) -> Result<Classification> {
        let pts = self.chart.sample_points(sampling);
        let symmetry = self.check_symmetric(&pts);
        let hyperbolic = if symmetry.symmetric {
            Some(self.check_hyperbolic(&pts, cone, seed)?)
        } else {
            None
        };
        let (t0, t1) = self.chart.t_range();
        let slices: Vec<f64> = (0..sampling.time_levels.max(1))
            .map(|i| t0 + (t1 - t0) * i as f64 / (sampling.time_levels.max(2) - 1) as f64)
            .collect();
        Ok(Classification {
            symmetry,
            hyperbolic,
            positivity: self.check_positive(&slices, sampling.per_axis),
            constant_characteristic: self.constant_characteristic(boundary)?,
        })
    }
}

/// `sup{c : Q − c G ⪰ 0}`, or `−∞` when the set is empty.
pub fn relative_lower_bound(q: &Mat, g: &Mat) -> f64 {
    if let Ok(e) = linalg::gen_herm_eigen(q, g) {
        return e.min();
    }
    let phi = |x: f64| {
        linalg::herm_eigen(&linalg::herm_part(&(q - g * c(x))))
            .map(|e| e.min())
            .unwrap_or(f64::NEG_INFINITY)
    };
    let geig = linalg::herm_eigen(g).expect("metric is Hermitian");
    let gmin = geig
        .values
        .iter()
        .map(|v| v.abs())
        .filter(|&v| v > 1e-14)
        .fold(f64::INFINITY, f64::min);
    let qn = linalg::spectral_norm(q);
    let r = 2.0 * (qn + 1.0) / gmin.min(1e14);
    // golden section for the maximum of the concave φ
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-r, r);
    let mut x1 = b - inv * (b - a);
    let mut x2 = a + inv * (b - a);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv * (b - a);
            f2 = phi(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv * (b - a);
            f1 = phi(x1);
        }
    }
    let cstar = 0.5 * (a + b);
    let tol = 1e-9 * qn.max(1.0);
    if phi(cstar) < -tol {
        return f64::NEG_INFINITY;
    }
    let (mut lo, mut hi) = (cstar, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= -tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use crate::linalg::C64;

    fn flat() -> Arc<SpacetimeChart> {
        Arc::new(SpacetimeChart::minkowski_strip((0.0, 1.0), vec![1.0]).unwrap())
    }

    fn small() -> Sampling {
        Sampling {
            per_axis: 8,
            time_levels: 3,
        }
    }

    fn m2(v: [f64; 4]) -> Mat {
        Mat::from_row_slice(2, 2, &v.map(c))
    }

    #[test]
    fn symbol_of_advection() {
        let s = FriedrichsSystem::advection(flat(), 1.0).unwrap();
        let p = Point::at(0.0, 0.5);
        assert_eq!(s.symbol(&p, &[0.0, 0.0])[(0, 0)], c(0.0));
        assert_eq!(s.symbol(&p, &[1.0, 0.0])[(0, 0)], c(1.0));
    }

    #[test]
    fn non_hermitian_symbol_is_rejected() {
        let s = FriedrichsSystem::constant(
            "nilpotent",
            flat(),
            vec![linalg::identity(2), m2([0.0, 1.0, 0.0, 0.0])],
            linalg::zeros(2, 2),
            linalg::identity(2),
        )
        .unwrap();
        let pts = s.chart().sample_points(small());
        assert!(!s.check_symmetric(&pts).symmetric);
        assert!(matches!(s.check_hyperbolic(&pts, 4, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn advection_is_hyperbolic() {
        let s = FriedrichsSystem::advection(flat(), 1.0).unwrap();
        let pts = s.chart().sample_points(small());
        let r = s.check_hyperbolic(&pts, 16, 1).unwrap();
        assert!(r.hyperbolic && r.dt_positive);
    }

    #[test]
    fn adjoint_of_time_derivative() {
        let s = FriedrichsSystem::constant("dt", flat(), vec![linalg::identity(1), linalg::zeros(1, 1)], linalg::zeros(1, 1), linalg::identity(1)).unwrap();
        let adj = s.formal_adjoint();
        let co = adj.coefficients(&Point::at(0.3, 0.4));
        assert!((co.a[0][(0, 0)] + c(1.0)).norm() < 1e-15);
        assert!(co.c.norm() < 1e-15);
    }

    #[test]
    fn adjoint_of_variable_coefficient_scalar() {
        // S = ∂_t + a(x) ∂_x on a flat chart: S† = −∂_t − a ∂_x − a'.
        let chart = flat();
        let coeffs: CoeffFn = Arc::new(|p| Coefficients {
            a: vec![linalg::identity(1), Mat::from_element(1, 1, c(1.0 + p.x[0] * p.x[0]))],
            c: linalg::zeros(1, 1),
        });
        let s = FriedrichsSystem::new("var", 1, chart, coeffs, Arc::new(|_| linalg::identity(1)), true, true).unwrap();
        let adj = s.formal_adjoint();
        let x = 0.3;
        let co = adj.coefficients(&Point::at(0.2, x));
        assert!((co.c[(0, 0)] - c(-2.0 * x)).norm() < 1e-8);
        assert!((co.a[1][(0, 0)] - c(-(1.0 + x * x))).norm() < 1e-14);
    }

    #[test]
    fn lambda_shift_keeps_symbols() {
        let s = FriedrichsSystem::advection(flat(), 2.0).unwrap();
        assert!(Arc::ptr_eq(&s.lambda_shift(0.0).coeffs, &s.coeffs));
        let k = s.lambda_shift(1.5);
        let p = Point::at(0.2, 0.1);
        assert_eq!(k.symbol(&p, &[0.3, -0.7]), s.symbol(&p, &[0.3, -0.7]));
        assert!((k.coefficients(&p).c[(0, 0)] - c(1.5)).norm() < 1e-15);
    }

    #[test]
    fn beta_normalize_identity_case() {
        let s = FriedrichsSystem::advection(flat(), 1.0).unwrap();
        let pts = s.chart().sample_points(small());
        let n = s.beta_normalize(&pts).unwrap();
        let p = Point::at(0.5, 0.5);
        assert_eq!(n.coefficients(&p), s.coefficients(&p));
        assert_eq!(n.metric(&p), s.metric(&p));
    }

    #[test]
    fn beta_normalize_rejects_singular_time_symbol() {
        let s = FriedrichsSystem::constant("deg", flat(), vec![linalg::zeros(1, 1), linalg::identity(1)], linalg::zeros(1, 1), linalg::identity(1)).unwrap();
        let pts = s.chart().sample_points(small());
        assert!(matches!(s.beta_normalize(&pts), Err(Error::Normalization(_))));
    }

    #[test]
    fn relative_bound_positive_metric() {
        let q = m2([2.0, 0.0, 0.0, 6.0]);
        let g = m2([1.0, 0.0, 0.0, 2.0]);
        assert!((relative_lower_bound(&q, &g) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relative_bound_indefinite_metric() {
        // Q = diag(2m², 2 g⁻¹), G = diag(1, g⁻¹): bound 2 iff m² ≥ 1.
        let g = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0), c(1.0)]));
        let q = |m2: f64| Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0 * m2), c(-2.0), c(2.0)]));
        assert!((relative_lower_bound(&q(1.0), &g) - 2.0).abs() < 1e-6);
        assert!((relative_lower_bound(&q(4.0), &g) - 2.0).abs() < 1e-6);
        assert_eq!(relative_lower_bound(&q(0.0), &g), f64::NEG_INFINITY);
    }

    #[test]
    fn cone_covectors_are_timelike() {
        let chart = Arc::new(
            SpacetimeChart::custom("c", (0.0, 1.0), vec![1.0], Profile::Constant(2.0), vec![Profile::Constant(0.5)]).unwrap(),
        );
        let s = FriedrichsSystem::advection(chart.clone(), 1.0).unwrap();
        let p = Point::at(0.1, 0.2);
        let gi = chart.g_inv(&p);
        for tau in s.timelike_cone(&p, 16, 9) {
            let v = nalgebra::DVector::from_vec(tau);
            assert!((v.transpose() * &gi * &v)[(0, 0)] < 0.0);
        }
    }

    #[test]
    fn positivity_of_damped_advection() {
        let s = FriedrichsSystem::advection(flat(), 1.0).unwrap().lambda_shift(0.5);
        let r = s.check_positive(&[0.0, 0.5], 8);
        assert!(r.pass && (r.min_bound - 1.0).abs() < 1e-6);
        let _ = C64::new(0.0, 0.0);
    }
}
