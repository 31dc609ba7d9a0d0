//! Product strips `[t_a, t_b] × Π[0, L_j]` with metric `g = −β² dt² + h_t`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::system::FriedrichsSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Point {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Point { t, x }
    }

    pub fn at(t: f64, x: f64) -> Self {
        Point { t, x: vec![x] }
    }

    /// Coordinate `μ` with `0 = t`.
    pub fn coord(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.t
        } else {
            self.x[mu - 1]
        }
    }

    pub fn shifted(&self, mu: usize, h: f64) -> Point {
        let mut q = self.clone();
        if mu == 0 {
            q.t += h;
        } else {
            q.x[mu - 1] += h;
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    /// `x_axis = 0`
    Lower(usize),
    /// `x_axis = L_axis`
    Upper(usize),
}

impl Face {
    pub fn axis(self) -> usize {
        match self {
            Face::Lower(a) | Face::Upper(a) => a,
        }
    }

    pub fn outward_sign(self) -> f64 {
        match self {
            Face::Lower(_) => -1.0,
            Face::Upper(_) => 1.0,
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Face::Lower(a) => write!(f, "x{}=0", a + 1),
            Face::Upper(a) => write!(f, "x{}=L", a + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub t: f64,
    pub face: Face,
    /// Full spatial coordinates; the face coordinate is pinned to the face.
    pub x: Vec<f64>,
}

impl BoundaryPoint {
    pub fn point(&self) -> Point {
        Point::new(self.t, self.x.clone())
    }
}

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;

/// Closed-form scalar evaluators selectable by name from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `value + gradient·x + rate·t`
    Linear { value: f64, gradient: Vec<f64>, rate: f64 },
    /// `value + amplitude·sin(wavenumber·x_axis + rate·t)`
    Sine {
        value: f64,
        amplitude: f64,
        axis: usize,
        wavenumber: f64,
        rate: f64,
    },
}

impl Profile {
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::Linear { value, gradient, rate } => {
                value + gradient.iter().zip(&p.x).map(|(g, x)| g * x).sum::<f64>() + rate * p.t
            }
            Profile::Sine {
                value,
                amplitude,
                axis,
                wavenumber,
                rate,
            } => value + amplitude * (wavenumber * p.x[*axis] + rate * p.t).sin(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Constant(_) => true,
            Profile::Linear { gradient, rate, .. } => *rate == 0.0 && gradient.iter().all(|&g| g == 0.0),
            Profile::Sine { amplitude, .. } => *amplitude == 0.0,
        }
    }

    pub fn is_static(&self) -> bool {
        match self {
            Profile::Constant(_) => true,
            Profile::Linear { rate, .. } | Profile::Sine { rate, .. } => *rate == 0.0 || self.is_constant(),
        }
    }

    fn into_fn(self) -> ScalarFn {
        Arc::new(move |p| self.eval(p))
    }
}

/// Time-independence and constancy of the chart data, used to decide whether
/// spin connection terms can be dropped and coefficients cached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartFlags {
    pub beta_constant: bool,
    pub beta_static: bool,
    pub h_constant: bool,
    pub h_static: bool,
}

#[derive(Clone)]
pub struct SpacetimeChart {
    name: String,
    dim_space: usize,
    t_range: (f64, f64),
    extent: Vec<f64>,
    beta: ScalarFn,
    h: MatrixFn,
    flags: ChartFlags,
}

impl fmt::Debug for SpacetimeChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpacetimeChart")
            .field("name", &self.name)
            .field("dim_space", &self.dim_space)
            .field("t_range", &self.t_range)
            .field("extent", &self.extent)
            .field("flags", &self.flags)
            .finish()
    }
}

/// Resolution of the uniform tensor sample grid used by pointwise checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub per_axis: usize,
    pub time_levels: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            per_axis: 64,
            time_levels: 16,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl SpacetimeChart {
    pub fn new(
        name: impl Into<String>,
        t_range: (f64, f64),
        extent: Vec<f64>,
        beta: ScalarFn,
        h: MatrixFn,
        flags: ChartFlags,
    ) -> Result<Self> {
        let dim_space = extent.len();
        if dim_space == 0 {
            return Err(Error::Domain("chart needs at least one spatial axis".into()));
        }
        if t_range.0.partial_cmp(&t_range.1) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Domain(format!("empty time range {t_range:?}")));
        }
        if let Some(l) = extent.iter().find(|&&l| l.is_nan() || l <= 0.0) {
            return Err(Error::Domain(format!("non-positive spatial extent {l}")));
        }
        let chart = SpacetimeChart {
            name: name.into(),
            dim_space,
            t_range,
            extent,
            beta,
            h,
            flags,
        };
        let probe = chart.sample_points(Sampling {
            per_axis: 5,
            time_levels: 3,
        });
        chart.validate(&probe)?;
        Ok(chart)
    }

    /// Flat strip: `β = 1`, `h = δ`.
    pub fn minkowski_strip(t_range: (f64, f64), extent: Vec<f64>) -> Result<Self> {
        let n = extent.len();
        Self::new(
            "minkowski_strip",
            t_range,
            extent,
            Arc::new(|_| 1.0),
            Arc::new(move |_| DMatrix::identity(n, n)),
            ChartFlags {
                beta_constant: true,
                beta_static: true,
                h_constant: true,
                h_static: true,
            },
        )
    }

    /// `β = 1` and time-independent diagonal `h = diag(a_j(x)²)`.
    pub fn ultrastatic(t_range: (f64, f64), extent: Vec<f64>, scale: Vec<Profile>) -> Result<Self> {
        if let Some(p) = scale.iter().find(|p| !p.is_static()) {
            return Err(Error::Domain(format!("ultrastatic chart needs static spatial metric, got {p:?}")));
        }
        Self::custom("ultrastatic", t_range, extent, Profile::Constant(1.0), scale)
    }

    /// Lapse `β` and diagonal `h = diag(a_j²)` from named profiles.
    pub fn custom(
        name: &str,
        t_range: (f64, f64),
        extent: Vec<f64>,
        beta: Profile,
        scale: Vec<Profile>,
    ) -> Result<Self> {
        let n = extent.len();
        if scale.len() != n {
            return Err(Error::Domain(format!(
                "{} metric scale profiles for {} axes",
                scale.len(),
                n
            )));
        }
        let flags = ChartFlags {
            beta_constant: beta.is_constant(),
            beta_static: beta.is_static(),
            h_constant: scale.iter().all(Profile::is_constant),
            h_static: scale.iter().all(Profile::is_static),
        };
        let h: MatrixFn = Arc::new(move |p| {
            DMatrix::from_fn(n, n, |i, j| if i == j { scale[i].eval(p).powi(2) } else { 0.0 })
        });
        Self::new(name, t_range, extent, beta.into_fn(), h, flags)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_space(&self) -> usize {
        self.dim_space
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn flags(&self) -> ChartFlags {
        self.flags
    }

    /// Spin connection coefficients vanish in the coordinate frame.
    pub fn is_flat_compatible(&self) -> bool {
        self.flags.beta_constant && self.flags.h_static && (self.dim_space == 1 || self.flags.h_constant)
    }

    pub fn is_static(&self) -> bool {
        self.flags.beta_static && self.flags.h_static
    }

    pub fn beta(&self, p: &Point) -> f64 {
        (self.beta)(p)
    }

    pub fn h(&self, p: &Point) -> DMatrix<f64> {
        (self.h)(p)
    }

    pub fn h_inv(&self, p: &Point) -> DMatrix<f64> {
        self.h(p).try_inverse().expect("validated chart has invertible h")
    }

    /// Inverse spacetime metric `g⁻¹ = diag(−1/β², h⁻¹)`, index 0 is time.
    pub fn g_inv(&self, p: &Point) -> DMatrix<f64> {
        let n = self.dim_space;
        let b = self.beta(p);
        let hi = self.h_inv(p);
        let mut g = DMatrix::zeros(n + 1, n + 1);
        g[(0, 0)] = -1.0 / (b * b);
        g.view_mut((1, 1), (n, n)).copy_from(&hi);
        g
    }

    pub fn volume_density(&self, p: &Point) -> f64 {
        self.beta(p) * self.h(p).determinant().sqrt()
    }

    pub fn contains(&self, p: &Point) -> bool {
        let eps = 1e-12;
        p.x.len() == self.dim_space
            && p.t >= self.t_range.0 - eps
            && p.t <= self.t_range.1 + eps
            && p.x.iter().zip(&self.extent).all(|(&x, &l)| x >= -eps && x <= l + eps)
    }

    pub fn boundary_point(&self, t: f64, face: Face, tangential: &[f64]) -> Result<BoundaryPoint> {
        let axis = face.axis();
        if axis >= self.dim_space {
            return Err(Error::Domain(format!("face {face} on a {}-dimensional chart", self.dim_space)));
        }
        if tangential.len() + 1 != self.dim_space {
            return Err(Error::Domain(format!(
                "{} tangential coordinates for a {}-dimensional chart",
                tangential.len(),
                self.dim_space
            )));
        }
        let mut x = Vec::with_capacity(self.dim_space);
        let mut it = tangential.iter();
        for a in 0..self.dim_space {
            if a == axis {
                x.push(match face {
                    Face::Lower(_) => 0.0,
                    Face::Upper(_) => self.extent[a],
                });
            } else {
                x.push(*it.next().expect("length checked"));
            }
        }
        Ok(BoundaryPoint { t, face, x })
    }

    /// Spatial test only: time derivatives at the initial slice sample
    /// boundary maps slightly outside the time range.
    fn on_face(&self, q: &BoundaryPoint) -> bool {
        let a = q.face.axis();
        let eps = 1e-12;
        if a >= self.dim_space
            || q.x.len() != self.dim_space
            || !q.x.iter().zip(&self.extent).all(|(&x, &l)| x >= -eps && x <= l + eps)
        {
            return false;
        }
        let target = match q.face {
            Face::Lower(_) => 0.0,
            Face::Upper(_) => self.extent[a],
        };
        (q.x[a] - target).abs() <= 1e-12 * self.extent[a].max(1.0)
    }

    /// Outward unit conormal `n♭ = ±dx^a / √(h^{aa})`, as `n+1` components with time first.
    pub fn outward_normal(&self, q: &BoundaryPoint) -> Result<Vec<f64>> {
        if !self.on_face(q) {
            return Err(Error::Domain(format!("point {:?} is not on face {}", q.x, q.face)));
        }
        let a = q.face.axis();
        let hi = self.h_inv(&q.point());
        let mut n = vec![0.0; self.dim_space + 1];
        n[a + 1] = q.face.outward_sign() / hi[(a, a)].sqrt();
        Ok(n)
    }

    pub fn faces(&self) -> Vec<Face> {
        (0..self.dim_space)
            .flat_map(|a| [Face::Lower(a), Face::Upper(a)])
            .collect()
    }

    /// Uniform tensor grid including the endpoints of every axis.
    pub fn sample_points(&self, s: Sampling) -> Vec<Point> {
        let ts = linspace(self.t_range.0, self.t_range.1, s.time_levels);
        let axes: Vec<Vec<f64>> = self.extent.iter().map(|&l| linspace(0.0, l, s.per_axis)).collect();
        let mut out = Vec::new();
        for &t in &ts {
            let mut idx = vec![0usize; self.dim_space];
            loop {
                out.push(Point::new(t, idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect()));
                let mut a = 0;
                loop {
                    if a == self.dim_space {
                        break;
                    }
                    idx[a] += 1;
                    if idx[a] < axes[a].len() {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if a == self.dim_space {
                    break;
                }
            }
        }
        out
    }

    /// Spatial sample points on one time slice.
    pub fn slice_points(&self, t: f64, per_axis: usize) -> Vec<Point> {
        let mut pts = self.sample_points(Sampling {
            per_axis,
            time_levels: 1,
        });
        for p in &mut pts {
            p.t = t;
        }
        pts
    }

    /// `count` points per face; times uniform, tangential coordinates from a
    /// Weyl sequence.
    pub fn boundary_samples(&self, count: usize) -> Vec<BoundaryPoint> {
        let ts = linspace(self.t_range.0, self.t_range.1, count);
        let mut out = Vec::new();
        for face in self.faces() {
            for (k, &t) in ts.iter().enumerate() {
                let tang: Vec<f64> = (0..self.dim_space)
                    .filter(|&a| a != face.axis())
                    .enumerate()
                    .map(|(j, a)| {
                        let alpha = (2.0f64 + j as f64).sqrt().fract();
                        self.extent[a] * ((k as f64 + 0.5) * alpha).fract()
                    })
                    .collect();
                out.push(self.boundary_point(t, face, &tang).expect("face belongs to chart"));
            }
        }
        out
    }

    /// Checks `β > 0` and `h` symmetric positive definite at every point.
    pub fn validate(&self, points: &[Point]) -> Result<()> {
        for p in points {
            let b = self.beta(p);
            if b.is_nan() || b <= 0.0 || !b.is_finite() {
                return Err(Error::Domain(format!("lapse {b} is not positive at t={}, x={:?}", p.t, p.x)));
            }
            let h = self.h(p);
            if h.shape() != (self.dim_space, self.dim_space) {
                return Err(Error::Domain(format!("spatial metric has shape {:?}", h.shape())));
            }
            let asym = (&h - h.transpose()).norm();
            if asym > 1e-12 * h.norm().max(1.0) {
                return Err(Error::Domain(format!("spatial metric not symmetric (defect {asym:.2e})")));
            }
            let min = h.clone().symmetric_eigen().eigenvalues.min();
            if min.is_nan() || min <= 0.0 {
                return Err(Error::Domain(format!(
                    "spatial metric not positive definite at t={}, x={:?}",
                    p.t, p.x
                )));
            }
        }
        Ok(())
    }
}

/// Largest generalized eigenvalue magnitude of `σ(dx^j)` relative to `σ(dt)`
/// over the sample points and all spatial axes.
pub fn max_characteristic_speed(sys: &FriedrichsSystem, points: &[Point]) -> Result<f64> {
    let n = sys.chart().dim_space();
    let mut speed: f64 = 0.0;
    for p in points {
        let co = sys.coefficients(p);
        let g = sys.metric(p);
        let h0 = linalg::herm_part(&(&g * &co.a[0]));
        for j in 1..=n {
            let k = linalg::herm_part(&(&g * &co.a[j]));
            let e = linalg::gen_herm_eigen(&k, &h0).map_err(|_| {
                Error::NotHyperbolic(format!(
                    "σ(dt) form not positive definite at t={}, x={:?}",
                    p.t, p.x
                ))
            })?;
            speed = speed.max(e.min().abs()).max(e.max().abs());
        }
    }
    Ok(speed)
}
