//! Boundary maps `G_B`, their kernels `B`, and the admissibility verifier.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::clifford::CliffordRep;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Face};
use crate::linalg::{self, c, Mat, Subspace, Vect, C64, RANK_TOL};
use crate::system::FriedrichsSystem;

pub type BoundaryMap = Arc<dyn Fn(&BoundaryPoint) -> Mat + Send + Sync>;

#[derive(Clone)]
pub struct BoundaryCondition {
    name: String,
    params: Vec<(String, f64)>,
    map: BoundaryMap,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCondition")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", ps.join(", "))?;
        }
        Ok(())
    }
}

impl BoundaryCondition {
    pub fn new(name: impl Into<String>, params: Vec<(String, f64)>, map: BoundaryMap) -> Self {
        BoundaryCondition {
            name: name.into(),
            params,
            map,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn matrix(&self, q: &BoundaryPoint) -> Mat {
        (self.map)(q)
    }

    /// `B = ker G_B` at `q`.
    pub fn space(&self, q: &BoundaryPoint) -> Subspace {
        linalg::kernel(&self.matrix(q), RANK_TOL)
    }

    /// `G_B = Id − P_W`, so that `B = W`.
    pub fn from_subspace(name: &str, w: Subspace) -> Self {
        let g = linalg::identity(w.ambient()) - w.projector();
        Self::new(name, vec![], Arc::new(move |_| g.clone()))
    }
}

fn sign_param(sign: f64) -> Result<Vec<(String, f64)>> {
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::Contract(format!("projector sign must be ±1, got {sign}")));
    }
    Ok(vec![("sign".into(), sign)])
}

fn require_spinor(sys: &FriedrichsSystem) -> Result<()> {
    if !sys.name().starts_with("dirac") {
        return Err(Error::Contract(format!(
            "spinor boundary condition on non-Dirac system {}",
            sys.name()
        )));
    }
    Ok(())
}

/// Range of `½(Id − s·iγ(n))`; `G_B` is the complementary projector.
pub fn mit_bag(sys: &FriedrichsSystem, sign: f64) -> Result<BoundaryCondition> {
    let params = sign_param(sign)?;
    require_spinor(sys)?;
    let s = sys.clone();
    let i = C64::new(0.0, 1.0);
    Ok(BoundaryCondition::new(
        "mit_bag",
        params,
        Arc::new(move |q| {
            let gn = s.boundary_symbol(q).expect("boundary sample on chart");
            (linalg::identity(gn.nrows()) + gn * (i * sign)) * c(0.5)
        }),
    ))
}

/// Range of `½(Id − s·γ(n)𝒢)` with the chirality operator of `rep`.
pub fn chirality(sys: &FriedrichsSystem, rep: &CliffordRep, sign: f64) -> Result<BoundaryCondition> {
    let params = sign_param(sign)?;
    require_spinor(sys)?;
    let chi = rep.chirality.clone().ok_or_else(|| {
        Error::Unsupported(format!(
            "chirality boundary condition needs odd spatial dimension, got n={}",
            rep.dim - 1
        ))
    })?;
    let s = sys.clone();
    Ok(BoundaryCondition::new(
        "chirality",
        params,
        Arc::new(move |q| {
            let gn = s.boundary_symbol(q).expect("boundary sample on chart");
            (linalg::identity(gn.nrows()) + gn * &chi * c(sign)) * c(0.5)
        }),
    ))
}

/// `Γ_T = β σ(dt)` at a boundary point.
fn timelike_generator_at(sys: &FriedrichsSystem, q: &BoundaryPoint) -> Mat {
    let p = q.point();
    &sys.coefficients(&p).a[0] * c(sys.chart().beta(&p))
}

/// Range of `½(Id + s·γ(n)Γ_T)` with `Γ_T` the spin-positive unit timelike generator.
pub fn riemannian_mit(sys: &FriedrichsSystem, sign: f64) -> Result<BoundaryCondition> {
    let params = sign_param(sign)?;
    require_spinor(sys)?;
    let s = sys.clone();
    Ok(BoundaryCondition::new(
        "riemannian_mit",
        params,
        Arc::new(move |q| {
            let gn = s.boundary_symbol(q).expect("boundary sample on chart");
            let gt = timelike_generator_at(&s, q);
            (linalg::identity(gn.nrows()) - gn * gt * c(sign)) * c(0.5)
        }),
    ))
}

/// Invariant defects of a candidate Riemannian chirality operator at `q`:
/// involution, commutation with `Γ_T`, anticommutation with the boundary
/// Clifford action, unitarity for the spin product.
pub fn riemannian_chirality_defect(sys: &FriedrichsSystem, chi: &Mat, q: &BoundaryPoint) -> f64 {
    let gt = timelike_generator_at(sys, q);
    let gn = sys.boundary_symbol(q).expect("boundary sample on chart");
    let g = sys.metric(&q.point());
    let id = linalg::identity(chi.nrows());
    [
        (chi * chi - &id).norm(),
        (chi * &gt - &gt * chi).norm(),
        (chi * &gn + &gn * chi).norm(),
        (chi.adjoint() * &g * chi - &g).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Range of `½(Id − s·iγ(n)Γ_T𝒢_R)`; `𝒢_R` defaults to `Γ_T`.
pub fn riemannian_chirality(sys: &FriedrichsSystem, chi: Option<Mat>, sign: f64) -> Result<BoundaryCondition> {
    let params = sign_param(sign)?;
    require_spinor(sys)?;
    if let Some(m) = &chi {
        for q in sys.chart().boundary_samples(4) {
            let d = riemannian_chirality_defect(sys, m, &q);
            if d > 1e-10 {
                return Err(Error::Contract(format!(
                    "supplied chirality operator violates its invariants (defect {d:.3e})"
                )));
            }
        }
    }
    let s = sys.clone();
    let i = C64::new(0.0, 1.0);
    Ok(BoundaryCondition::new(
        "riemannian_chirality",
        params,
        Arc::new(move |q| {
            let gn = s.boundary_symbol(q).expect("boundary sample on chart");
            let gt = timelike_generator_at(&s, q);
            let op = chi.clone().unwrap_or_else(|| gt.clone());
            (linalg::identity(gn.nrows()) + gn * gt * op * (i * sign)) * c(0.5)
        }),
    ))
}

fn layout_of(sys: &FriedrichsSystem) -> Result<crate::reduction::BlockLayout> {
    sys.layout()
        .cloned()
        .ok_or_else(|| Error::Contract(format!("system {} has no block layout", sys.name())))
}

/// `n^j = h^{jl} n♭_l`.
fn normal_vector(sys: &FriedrichsSystem, q: &BoundaryPoint) -> Vec<f64> {
    let nb = sys.chart().outward_normal(q).expect("boundary sample on chart");
    let hi = sys.chart().h_inv(&q.point());
    let n = sys.chart().dim_space();
    (0..n).map(|j| (0..n).map(|l| hi[(j, l)] * nb[l + 1]).sum()).collect()
}

/// `a ∇_n u − b u = 0`: `G_B = [[−b, a n⌟], 0]`.
pub fn robin(sys: &FriedrichsSystem, a: f64, b: f64) -> Result<BoundaryCondition> {
    let lay = layout_of(sys)?;
    let s = sys.clone();
    Ok(BoundaryCondition::new(
        "robin",
        vec![("a".into(), a), ("b".into(), b)],
        Arc::new(move |q| {
            let nv = normal_vector(&s, q);
            let mut g = linalg::zeros(lay.rank, lay.rank);
            for i in 0..lay.k {
                g[(i, lay.u_index(i))] += c(-b);
                for (j, nj) in nv.iter().enumerate() {
                    g[(i, lay.spatial_grad_index(j, i))] += c(a * nj);
                }
            }
            g
        }),
    ))
}

/// `∇_n u = 0`: `G_B = [[0, n⌟, 0], 0, 0]`.
pub fn neumann_like(sys: &FriedrichsSystem) -> Result<BoundaryCondition> {
    let mut bc = transparent_inner(sys, 0.0)?;
    bc.name = "neumann_like".into();
    bc.params.clear();
    Ok(bc)
}

/// `∇_n u = −b ∂_t u`: `G_B = [[b, n⌟, 0], 0, 0]`.
pub fn transparent(sys: &FriedrichsSystem, b: f64) -> Result<BoundaryCondition> {
    transparent_inner(sys, b)
}

fn transparent_inner(sys: &FriedrichsSystem, b: f64) -> Result<BoundaryCondition> {
    let lay = layout_of(sys)?;
    if b != 0.0 && lay.time_derivative.is_none() {
        return Err(Error::Contract("transparent condition needs a time-derivative slot".into()));
    }
    let s = sys.clone();
    Ok(BoundaryCondition::new(
        "transparent",
        vec![("b".into(), b)],
        Arc::new(move |q| {
            let nv = normal_vector(&s, q);
            let mut g = linalg::zeros(lay.rank, lay.rank);
            for i in 0..lay.k {
                if let Some(ti) = lay.time_derivative_index(i) {
                    g[(i, ti)] += c(b);
                }
                for (j, nj) in nv.iter().enumerate() {
                    g[(i, lay.spatial_grad_index(j, i))] += c(*nj);
                }
            }
            g
        }),
    ))
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub point: BoundaryPoint,
    pub vector: Vect,
    /// `⟨σ(n♭)v, v⟩` for the unit vector `v`.
    pub form_value: f64,
}

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub samples: usize,
    /// Condition (i): rank of `B` and `dim ker σ(n♭)` constant on every face.
    pub rank_constant: bool,
    pub ranks: BTreeMap<String, Vec<usize>>,
    pub characteristic_dims: BTreeMap<String, Vec<usize>>,
    /// Smallest ratio of the smallest kept singular value of `G_B` to its largest.
    pub rank_separation: f64,
    /// Condition (ii).
    pub semidefinite: bool,
    pub min_restricted_eigenvalue: f64,
    /// Condition (iii): `(rank B, #nonnegative eigenvalues)` at the first mismatch, or at the first sample.
    pub rank_matches_nonneg_count: bool,
    pub counts: (usize, usize),
    pub admissible: bool,
    pub witness: Option<Witness>,
    pub cause: Option<String>,
}

/// Number of eigenvalues of the boundary form that are `≥ −tol·‖F‖`.
pub fn nonnegative_count(form: &Mat) -> Result<usize> {
    let e = linalg::herm_eigen(form)?;
    let tol = 1e-9 * linalg::spectral_norm(form);
    Ok(e.count(|v| v >= -tol))
}

pub fn nonpositive_count(form: &Mat) -> Result<usize> {
    let e = linalg::herm_eigen(form)?;
    let tol = 1e-9 * linalg::spectral_norm(form);
    Ok(e.count(|v| v <= tol))
}

fn semidef_tol(form: &Mat) -> f64 {
    1e-9 * linalg::spectral_norm(form).max(1.0)
}

/// Most negative direction of the boundary form on `B`, if below tolerance.
pub fn violation_witness(sys: &FriedrichsSystem, bc: &BoundaryCondition, q: &BoundaryPoint) -> Result<Option<Witness>> {
    let f = sys.boundary_form(q)?;
    let b = bc.space(q);
    if b.rank() == 0 {
        return Ok(None);
    }
    let e = linalg::herm_eigen(&linalg::herm_part(&linalg::restrict_form(&f, &b)))?;
    if e.min() >= -semidef_tol(&f) {
        return Ok(None);
    }
    let v = b.basis() * e.vectors.column(0);
    Ok(Some(Witness {
        point: q.clone(),
        form_value: linalg::form(&f, &v),
        vector: v,
    }))
}

pub fn admissibility(sys: &FriedrichsSystem, bc: &BoundaryCondition, samples: &[BoundaryPoint]) -> Result<AdmissibilityReport> {
    let mut ranks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut chars: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut separation = f64::INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut semidefinite = true;
    let mut counts_ok = true;
    let mut counts = None;
    let mut witness: Option<Witness> = None;
    for q in samples {
        let face = q.face.to_string();
        let f = sys.boundary_form(q)?;
        let gb = bc.matrix(q);
        let sv = linalg::singular_values(&gb);
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax > 0.0 {
            if let Some(smallest) = sv.iter().rfind(|&&s| s > RANK_TOL * smax) {
                separation = separation.min(smallest / smax);
            }
        }
        let b = bc.space(q);
        ranks.entry(face.clone()).or_default().push(b.rank());
        chars
            .entry(face)
            .or_default()
            .push(linalg::kernel(&sys.boundary_symbol(q)?, RANK_TOL).rank());
        if b.rank() > 0 {
            let e = linalg::herm_eigen(&linalg::herm_part(&linalg::restrict_form(&f, &b)))?;
            if e.min() < min_eig {
                min_eig = e.min();
            }
            if e.min() < -semidef_tol(&f) {
                semidefinite = false;
                let better = witness.as_ref().is_none_or(|w| e.min() < w.form_value);
                if better {
                    witness = violation_witness(sys, bc, q)?;
                }
            }
        }
        let nn = nonnegative_count(&f)?;
        if b.rank() != nn && counts_ok {
            counts_ok = false;
            counts = Some((b.rank(), nn));
        }
        counts.get_or_insert((b.rank(), nn));
    }
    let constant = |m: &BTreeMap<String, Vec<usize>>| m.values().all(|v| v.windows(2).all(|w| w[0] == w[1]));
    let rank_constant = constant(&ranks) && constant(&chars);
    let admissible = rank_constant && semidefinite && counts_ok;
    let cause = if admissible {
        None
    } else if !rank_constant {
        Some("rank of B or of ker σ(n♭) varies along the boundary (constant characteristic violated)".into())
    } else if !semidefinite {
        Some(format!("boundary form has negative eigenvalue {min_eig:.6e} on B"))
    } else {
        let (r, n) = counts.unwrap_or((0, 0));
        Some(format!("rank B = {r} but σ(n♭) has {n} nonnegative eigenvalues"))
    };
    Ok(AdmissibilityReport {
        samples: samples.len(),
        rank_constant,
        ranks,
        characteristic_dims: chars,
        rank_separation: separation,
        semidefinite,
        min_restricted_eigenvalue: if min_eig.is_finite() { min_eig } else { 0.0 },
        rank_matches_nonneg_count: counts_ok,
        counts: counts.unwrap_or((0, 0)),
        admissible,
        witness,
        cause,
    })
}

/// `B† = (σ(n♭) B)^⊥` with respect to the fiber metric.
pub fn adjoint_boundary_space(sys: &FriedrichsSystem, bc: &BoundaryCondition, q: &BoundaryPoint) -> Result<Subspace> {
    let f = sys.boundary_form(q)?;
    Ok(linalg::orthogonal_complement_of_image(&f, &bc.space(q)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointCheck {
    pub dim: usize,
    pub nonnegative_count: usize,
    pub nonpositive_count: usize,
    /// `max |⟨σ(n♭)b, b†⟩|` over orthonormal basis pairs.
    pub annihilation: f64,
    /// Largest eigenvalue of the form restricted to `B†`.
    pub max_form_on_dagger: f64,
}

pub fn check_adjoint_space(sys: &FriedrichsSystem, bc: &BoundaryCondition, q: &BoundaryPoint) -> Result<AdjointCheck> {
    let f = sys.boundary_form(q)?;
    let b = bc.space(q);
    let bd = linalg::orthogonal_complement_of_image(&f, &b);
    let cross = bd.basis().adjoint() * &f * b.basis();
    let annihilation = cross.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_form = if bd.rank() > 0 {
        linalg::herm_eigen(&linalg::herm_part(&linalg::restrict_form(&f, &bd)))?.max()
    } else {
        0.0
    };
    Ok(AdjointCheck {
        dim: bd.rank(),
        nonnegative_count: nonnegative_count(&f)?,
        nonpositive_count: nonpositive_count(&f)?,
        annihilation,
        max_form_on_dagger: max_form,
    })
}

/// Per-face boundary conditions for a one-dimensional solve.
#[derive(Debug, Clone)]
pub struct FaceConditions {
    pub lower: BoundaryCondition,
    pub upper: BoundaryCondition,
}

impl FaceConditions {
    pub fn both(bc: BoundaryCondition) -> Self {
        FaceConditions {
            lower: bc.clone(),
            upper: bc,
        }
    }

    pub fn get(&self, face: Face) -> &BoundaryCondition {
        match face {
            Face::Lower(_) => &self.lower,
            Face::Upper(_) => &self.upper,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::dirac_system;
    use crate::geometry::SpacetimeChart;

    fn dirac2() -> FriedrichsSystem {
        let rep = CliffordRep::build(2).unwrap();
        let chart = Arc::new(SpacetimeChart::minkowski_strip((0.0, 1.0), vec![1.0]).unwrap());
        dirac_system(&rep, chart, None).unwrap()
    }

    #[test]
    fn mit_is_admissible_with_vanishing_form() {
        let sys = dirac2();
        let bc = mit_bag(&sys, 1.0).unwrap();
        let r = admissibility(&sys, &bc, &sys.chart().boundary_samples(4)).unwrap();
        assert!(r.admissible, "{r:?}");
        assert!(r.min_restricted_eigenvalue.abs() < 1e-12);
        assert!(r.witness.is_none());
        let q = &sys.chart().boundary_samples(1)[0];
        assert!(violation_witness(&sys, &bc, q).unwrap().is_none());
    }

    #[test]
    fn riemannian_mit_plus_has_witness() {
        let sys = dirac2();
        let bc = riemannian_mit(&sys, 1.0).unwrap();
        let r = admissibility(&sys, &bc, &sys.chart().boundary_samples(4)).unwrap();
        assert!(!r.admissible);
        let w = r.witness.unwrap();
        assert!(w.form_value < -1e-6);
    }

    #[test]
    fn negative_eigenspace_has_witness() {
        let sys = dirac2();
        let q = sys.chart().boundary_samples(1)[0].clone();
        let f = sys.boundary_form(&q).unwrap();
        let e = linalg::herm_eigen(&f).unwrap();
        let neg = Mat::from_fn(2, 1, |r, _| e.vectors[(r, 0)]);
        let bc = BoundaryCondition::from_subspace("custom", Subspace::span(&neg));
        let w = violation_witness(&sys, &bc, &q).unwrap().unwrap();
        assert!(w.form_value < 0.0);
    }

    #[test]
    fn chirality_needs_even_spacetime() {
        let rep = CliffordRep::build(3).unwrap();
        let chart = Arc::new(SpacetimeChart::minkowski_strip((0.0, 1.0), vec![1.0, 1.0]).unwrap());
        let sys = dirac_system(&rep, chart, None).unwrap();
        assert!(matches!(chirality(&sys, &rep, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bad_sign_is_rejected() {
        assert!(mit_bag(&dirac2(), 0.5).is_err());
    }

    #[test]
    fn layout_conditions_need_layout() {
        assert!(robin(&dirac2(), 1.0, 1.0).is_err());
    }

    #[test]
    fn user_chirality_checked() {
        let sys = dirac2();
        assert!(riemannian_chirality(&sys, Some(linalg::identity(2)), 1.0).is_err());
        let gt = {
            let q = sys.chart().boundary_samples(1)[0].clone();
            timelike_generator_at(&sys, &q)
        };
        assert!(riemannian_chirality(&sys, Some(gt), 1.0).is_ok());
    }
}
