//! TOML run configuration and its translation into library objects.

use std::f64::consts::PI;
use std::sync::Arc;

use friedrichs::boundary::{self, BoundaryCondition, FaceConditions};
use friedrichs::clifford::{dirac_system, CliffordRep};
use friedrichs::geometry::{Point, Profile, Sampling, SpacetimeChart};
use friedrichs::linalg::{self, Mat, Vect, C64};
use friedrichs::reduction::{self, BlockLayout, FieldFn, SecondOrderProblem};
use friedrichs::solver::{Scheme, SolveOptions};
use friedrichs::system::FriedrichsSystem;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chart: ChartSpec,
    pub system: SystemSpec,
    #[serde(default)]
    pub bc: BcSpec,
    #[serde(default)]
    pub grid: GridSpec,
    pub initial: Option<DataSpec>,
    pub forcing: Option<ForcingSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub converge: ConvergeSpec,
    #[serde(default)]
    pub compat: CompatSpec,
    #[serde(default)]
    pub green: GreenSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    MinkowskiStrip {
        t_range: [f64; 2],
        extent: Vec<f64>,
    },
    Ultrastatic {
        t_range: [f64; 2],
        extent: Vec<f64>,
        scale: Vec<ProfileSpec>,
    },
    Custom {
        t_range: [f64; 2],
        extent: Vec<f64>,
        beta: ProfileSpec,
        scale: Vec<ProfileSpec>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    Linear {
        value: f64,
        gradient: Vec<f64>,
        #[serde(default)]
        rate: f64,
    },
    Sine {
        value: f64,
        amplitude: f64,
        #[serde(default)]
        axis: usize,
        wavenumber: f64,
        #[serde(default)]
        rate: f64,
    },
}

impl ProfileSpec {
    fn profile(&self) -> Profile {
        match self.clone() {
            ProfileSpec::Constant { value } => Profile::Constant(value),
            ProfileSpec::Linear { value, gradient, rate } => Profile::Linear { value, gradient, rate },
            ProfileSpec::Sine {
                value,
                amplitude,
                axis,
                wavenumber,
                rate,
            } => Profile::Sine {
                value,
                amplitude,
                axis,
                wavenumber,
                rate,
            },
        }
    }
}

/// Real part and optional imaginary part, both as row lists.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    fn matrix(&self, field: &str, n: usize) -> Result<Mat, CliError> {
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !shape_ok(&self.re) || !self.im.as_ref().is_none_or(shape_ok) {
            return Err(CliError::Usage(format!("{field}: expected a {n}×{n} matrix")));
        }
        Ok(Mat::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |m| m[i][j]))
        }))
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Advection {
        speed: f64,
    },
    Dirac {},
    WaveReduction {
        #[serde(default = "one")]
        k: usize,
        #[serde(default)]
        potential: f64,
    },
    KgReduction {
        #[serde(default = "one")]
        k: usize,
        mass: f64,
    },
    ReactionDiffusion {
        #[serde(default = "one")]
        k: usize,
        reaction: f64,
        #[serde(default)]
        lambda: f64,
    },
    /// Constant coefficient tables `A⁰ … Aⁿ`, `C` and fiber metric `G`.
    Custom {
        a: Vec<MatrixSpec>,
        c: MatrixSpec,
        g: Option<MatrixSpec>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BcKind {
    MitBag { sign: f64 },
    Chirality { sign: f64 },
    RiemannianMit { sign: f64 },
    RiemannianChirality { sign: f64 },
    Robin { a: f64, b: f64 },
    NeumannLike,
    Transparent { b: f64 },
    /// `B = {0}`.
    Dirichlet,
    /// `B` is the whole fiber.
    Free,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSpec {
    pub both: Option<BcKind>,
    pub lower: Option<BcKind>,
    pub upper: Option<BcKind>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    Auto,
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_nx")]
    pub nx: usize,
    #[serde(default = "GridSpec::default_cfl")]
    pub cfl: f64,
    pub t_end: Option<f64>,
    #[serde(default = "GridSpec::default_scheme")]
    pub scheme: SchemeSpec,
}

impl GridSpec {
    fn default_nx() -> usize {
        256
    }
    fn default_cfl() -> f64 {
        0.5
    }
    fn default_scheme() -> SchemeSpec {
        SchemeSpec::Auto
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: Self::default_nx(),
            cfl: Self::default_cfl(),
            t_end: None,
            scheme: Self::default_scheme(),
        }
    }
}

/// Complex amplitude as `[re, im]`.
pub type Amplitude = [f64; 2];

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    /// `exp(−1/(1−s²))` with `s = (x₁ − center)/width`.
    Bump {
        center: f64,
        width: f64,
        amplitude: Vec<Amplitude>,
    },
    /// `sin(mode·π·x₁/L₁ + phase)`.
    Sine {
        mode: f64,
        #[serde(default)]
        phase: f64,
        amplitude: Vec<Amplitude>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    /// Product bump in `t` and `x₁`.
    Bump2 {
        t_center: f64,
        t_width: f64,
        center: f64,
        width: f64,
        amplitude: Vec<Amplitude>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "SamplingSpec::default_per_axis")]
    pub per_axis: usize,
    #[serde(default = "SamplingSpec::default_time_levels")]
    pub time_levels: usize,
    #[serde(default = "SamplingSpec::default_boundary")]
    pub boundary: usize,
    #[serde(default = "SamplingSpec::default_cone")]
    pub cone: usize,
    #[serde(default = "SamplingSpec::default_max_lambda")]
    pub max_lambda: u32,
}

impl SamplingSpec {
    fn default_per_axis() -> usize {
        64
    }
    fn default_time_levels() -> usize {
        16
    }
    fn default_boundary() -> usize {
        8
    }
    fn default_cone() -> usize {
        16
    }
    fn default_max_lambda() -> u32 {
        10
    }

    pub fn sampling(&self) -> Sampling {
        Sampling {
            per_axis: self.per_axis,
            time_levels: self.time_levels,
        }
    }
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            per_axis: Self::default_per_axis(),
            time_levels: Self::default_time_levels(),
            boundary: Self::default_boundary(),
            cone: Self::default_cone(),
            max_lambda: Self::default_max_lambda(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    #[serde(default = "ConvergeSpec::default_grids")]
    pub grids: Vec<usize>,
    #[serde(default = "ConvergeSpec::default_min")]
    pub min_order: f64,
    #[serde(default = "ConvergeSpec::default_max")]
    pub max_order: f64,
}

impl ConvergeSpec {
    fn default_grids() -> Vec<usize> {
        vec![64, 128, 256, 512]
    }
    fn default_min() -> f64 {
        0.8
    }
    fn default_max() -> f64 {
        1.2
    }
}

impl Default for ConvergeSpec {
    fn default() -> Self {
        ConvergeSpec {
            grids: Self::default_grids(),
            min_order: Self::default_min(),
            max_order: Self::default_max(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatSpec {
    #[serde(default = "CompatSpec::default_order")]
    pub order: usize,
    #[serde(default = "CompatSpec::default_nodes")]
    pub nodes: usize,
    #[serde(default = "CompatSpec::default_width")]
    pub stencil_width: usize,
    #[serde(default = "CompatSpec::default_step")]
    pub time_step: f64,
    #[serde(default = "CompatSpec::default_tolerance")]
    pub tolerance: f64,
}

impl CompatSpec {
    fn default_order() -> usize {
        2
    }
    fn default_nodes() -> usize {
        64
    }
    fn default_width() -> usize {
        7
    }
    fn default_step() -> f64 {
        1e-2
    }
    fn default_tolerance() -> f64 {
        1e-8
    }
}

impl Default for CompatSpec {
    fn default() -> Self {
        CompatSpec {
            order: Self::default_order(),
            nodes: Self::default_nodes(),
            stencil_width: Self::default_width(),
            time_step: Self::default_step(),
            tolerance: Self::default_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSpec {
    #[serde(default)]
    pub direction: Direction,
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))
}

/// Library objects assembled from a config.
pub struct Model {
    pub sys: FriedrichsSystem,
    pub rep: Option<CliffordRep>,
}

impl RunConfig {
    pub fn chart(&self) -> Result<Arc<SpacetimeChart>, CliError> {
        let chart = match &self.chart {
            ChartSpec::MinkowskiStrip { t_range, extent } => SpacetimeChart::minkowski_strip((t_range[0], t_range[1]), extent.clone()),
            ChartSpec::Ultrastatic { t_range, extent, scale } => {
                SpacetimeChart::ultrastatic((t_range[0], t_range[1]), extent.clone(), scale.iter().map(ProfileSpec::profile).collect())
            }
            ChartSpec::Custom {
                t_range,
                extent,
                beta,
                scale,
            } => SpacetimeChart::custom(
                "custom",
                (t_range[0], t_range[1]),
                extent.clone(),
                beta.profile(),
                scale.iter().map(ProfileSpec::profile).collect(),
            ),
        };
        chart.map(Arc::new).map_err(|e| CliError::Usage(format!("chart: {e}")))
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let chart = self.chart()?;
        let n = chart.dim_space();
        let usage = |field: &str, e: friedrichs::Error| CliError::Usage(format!("system.{field}: {e}"));
        let mut rep = None;
        let sys = match &self.system {
            SystemSpec::Advection { speed } => FriedrichsSystem::advection(chart, *speed).map_err(|e| usage("speed", e))?,
            SystemSpec::Dirac {} => {
                let r = CliffordRep::build(n + 1).map_err(|e| usage("builder", e))?;
                let sys = dirac_system(&r, chart, None).map_err(|e| usage("builder", e))?;
                rep = Some(r);
                sys
            }
            SystemSpec::WaveReduction { k, potential } => {
                let v = *potential;
                let kk = *k;
                let prob = SecondOrderProblem::wave(chart, kk).with_potential(Arc::new(move |_| linalg::identity(kk) * C64::new(v, 0.0)));
                reduction::wave_to_first_order(&prob).map_err(|e| usage("k", e))?
            }
            SystemSpec::KgReduction { k, mass } => {
                reduction::kg_to_first_order(&SecondOrderProblem::klein_gordon(chart, *k, *mass)).map_err(|e| usage("k", e))?
            }
            SystemSpec::ReactionDiffusion { k, reaction, lambda } => reduction::reaction_diffusion_to_first_order(
                &SecondOrderProblem::reaction_diffusion(chart, *k, *reaction),
                *lambda,
            )
            .map_err(|e| usage("k", e))?,
            SystemSpec::Custom { a, c, g } => {
                let rank = c.re.len();
                if a.len() != n + 1 {
                    return Err(CliError::Usage(format!("system.a: expected {} matrices, got {}", n + 1, a.len())));
                }
                let a = a
                    .iter()
                    .enumerate()
                    .map(|(mu, m)| m.matrix(&format!("system.a[{mu}]"), rank))
                    .collect::<Result<Vec<_>, _>>()?;
                let cm = c.matrix("system.c", rank)?;
                let g = match g {
                    Some(g) => g.matrix("system.g", rank)?,
                    None => linalg::identity(rank),
                };
                FriedrichsSystem::constant("custom", chart, a, cm, g).map_err(|e| usage("a", e))?
            }
        };
        Ok(Model { sys, rep })
    }

    pub fn face_kinds(&self) -> Result<(BcKind, BcKind), CliError> {
        let lower = self.bc.lower.clone().or_else(|| self.bc.both.clone());
        let upper = self.bc.upper.clone().or_else(|| self.bc.both.clone());
        match (lower, upper) {
            (Some(l), Some(u)) => Ok((l, u)),
            _ => Err(CliError::Usage("bc: give `both` or both of `lower` and `upper`".into())),
        }
    }

    pub fn boundary(&self, model: &Model) -> Result<FaceConditions, CliError> {
        let (l, u) = self.face_kinds()?;
        Ok(FaceConditions {
            lower: build_bc(model, &l).map_err(|e| CliError::Usage(format!("bc.lower: {e}")))?,
            upper: build_bc(model, &u).map_err(|e| CliError::Usage(format!("bc.upper: {e}")))?,
        })
    }

    pub fn solve_options(&self, force: bool) -> SolveOptions {
        let mut o = SolveOptions::new(self.grid.nx).cfl(self.grid.cfl).forced(force).scheme(match self.grid.scheme {
            SchemeSpec::Auto => Scheme::Auto,
            SchemeSpec::Explicit => Scheme::Explicit,
            SchemeSpec::Implicit => Scheme::Implicit,
        });
        if let Some(t) = self.grid.t_end {
            o = o.until(t);
        }
        o
    }

    pub fn initial(&self, sys: &FriedrichsSystem) -> Result<Data, CliError> {
        let spec = self.initial.clone().ok_or_else(|| CliError::Usage("initial: missing table".into()))?;
        Data::new(&spec, sys, "initial")
    }

    pub fn forcing(&self, sys: &FriedrichsSystem) -> Result<Option<FieldFn>, CliError> {
        match &self.forcing {
            None | Some(ForcingSpec::Zero) => Ok(None),
            Some(ForcingSpec::Bump2 {
                t_center,
                t_width,
                center,
                width,
                amplitude,
            }) => {
                let amp = amplitudes(amplitude, sys.rank(), "forcing.amplitude")?;
                let (tc, tw, xc, xw) = (*t_center, *t_width, *center, *width);
                if tw.is_nan() || xw.is_nan() || tw <= 0.0 || xw <= 0.0 {
                    return Err(CliError::Usage("forcing: widths must be positive".into()));
                }
                Ok(Some(Arc::new(move |p: &Point| {
                    &amp * C64::new(bump((p.t - tc) / tw) * bump((p.x[0] - xc) / xw), 0.0)
                })))
            }
        }
    }
}

fn build_bc(model: &Model, kind: &BcKind) -> friedrichs::Result<BoundaryCondition> {
    let sys = &model.sys;
    let rank = sys.rank();
    let need_rep = || {
        model
            .rep
            .as_ref()
            .ok_or_else(|| friedrichs::Error::Contract("chirality needs the dirac builder".into()))
    };
    match kind {
        BcKind::MitBag { sign } => boundary::mit_bag(sys, *sign),
        BcKind::Chirality { sign } => boundary::chirality(sys, need_rep()?, *sign),
        BcKind::RiemannianMit { sign } => boundary::riemannian_mit(sys, *sign),
        BcKind::RiemannianChirality { sign } => {
            let chi = need_rep()?.chirality_operator()?;
            boundary::riemannian_chirality(sys, Some(chi), *sign)
        }
        BcKind::Robin { a, b } => boundary::robin(sys, *a, *b),
        BcKind::NeumannLike => boundary::neumann_like(sys),
        BcKind::Transparent { b } => boundary::transparent(sys, *b),
        BcKind::Dirichlet => Ok(BoundaryCondition::new("dirichlet", vec![], Arc::new(move |_| linalg::identity(rank)))),
        BcKind::Free => Ok(BoundaryCondition::new("free", vec![], Arc::new(move |_| linalg::zeros(rank, rank)))),
    }
}

pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn bump_slope(s: f64) -> f64 {
    if s.abs() < 1.0 {
        -2.0 * s / (1.0 - s * s).powi(2) * bump(s)
    } else {
        0.0
    }
}

fn amplitudes(a: &[Amplitude], len: usize, field: &str) -> Result<Vect, CliError> {
    if a.len() != len {
        return Err(CliError::Usage(format!("{field}: expected {len} entries, got {}", a.len())));
    }
    Ok(Vect::from_iterator(len, a.iter().map(|z| C64::new(z[0], z[1]))))
}

/// Scalar profile in `x₁` with its slope.
#[derive(Debug, Clone, Copy)]
pub enum Shape {
    Zero,
    Bump { center: f64, width: f64 },
    Sine { k: f64, phase: f64 },
}

impl Shape {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Shape::Zero => 0.0,
            Shape::Bump { center, width } => bump((x - center) / width),
            Shape::Sine { k, phase } => (k * x + phase).sin(),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            Shape::Zero => 0.0,
            Shape::Bump { center, width } => bump_slope((x - center) / width) / width,
            Shape::Sine { k, phase } => k * (k * x + phase).cos(),
        }
    }
}

/// Initial data: a shape times an amplitude, lifted through the block layout
/// when the system comes from a second-order problem.
#[derive(Clone)]
pub struct Data {
    pub shape: Shape,
    pub amplitude: Vect,
    pub layout: Option<BlockLayout>,
    pub rank: usize,
}

impl Data {
    fn new(spec: &DataSpec, sys: &FriedrichsSystem, field: &str) -> Result<Self, CliError> {
        let layout = sys.layout().cloned();
        let len = layout.as_ref().map_or(sys.rank(), |l| l.k);
        let extent = sys.chart().extent()[0];
        let (shape, amplitude) = match spec {
            DataSpec::Zero => (Shape::Zero, Vect::zeros(len)),
            DataSpec::Bump { center, width, amplitude } => {
                if width.is_nan() || *width <= 0.0 {
                    return Err(CliError::Usage(format!("{field}.width must be positive")));
                }
                (
                    Shape::Bump {
                        center: *center,
                        width: *width,
                    },
                    amplitudes(amplitude, len, &format!("{field}.amplitude"))?,
                )
            }
            DataSpec::Sine { mode, phase, amplitude } => (
                Shape::Sine {
                    k: mode * PI / extent,
                    phase: *phase,
                },
                amplitudes(amplitude, len, &format!("{field}.amplitude"))?,
            ),
        };
        Ok(Data {
            shape,
            amplitude,
            layout,
            rank: sys.rank(),
        })
    }

    /// State with `u = a·value`, spatial gradient `a·slope` and `∂_t u = a·rate`.
    pub fn lift(&self, value: f64, slope: f64, rate: f64) -> Vect {
        let a = &self.amplitude;
        match &self.layout {
            None => a * C64::new(value, 0.0),
            Some(l) => {
                let mut v = Vect::zeros(self.rank);
                for i in 0..l.k {
                    v[l.u_index(i)] = a[i] * value;
                    v[l.spatial_grad_index(0, i)] = a[i] * slope;
                    if let Some(ti) = l.time_derivative_index(i) {
                        v[ti] = a[i] * rate;
                    }
                }
                v
            }
        }
    }

    pub fn field(&self) -> FieldFn {
        let d = self.clone();
        Arc::new(move |p: &Point| d.lift(d.shape.value(p.x[0]), d.shape.slope(p.x[0]), 0.0))
    }
}
