//! Gamma matrices for signature `(−,+,…,+)` and the Dirac operator.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Point, SpacetimeChart};
use crate::linalg::{self, c, Mat, C64};
use crate::system::{CoeffFn, Coefficients, FriedrichsSystem};

/// `γ(u)γ(v) + γ(v)γ(u) = −2 g(u,v)` in an orthonormal frame `e_0, …, e_n`.
#[derive(Debug, Clone)]
pub struct CliffordRep {
    pub dim: usize,
    pub rank: usize,
    /// `γ_0` Hermitian with square `+1`, `γ_j` anti-Hermitian with square `−1`.
    pub gammas: Vec<Mat>,
    /// Spin product Gram matrix `−γ_0`.
    pub g_spin: Mat,
    pub chirality: Option<Mat>,
}

fn pauli() -> [Mat; 3] {
    let z = c(0.0);
    let o = c(1.0);
    let i = C64::new(0.0, 1.0);
    [
        Mat::from_row_slice(2, 2, &[z, o, o, z]),
        Mat::from_row_slice(2, 2, &[z, -i, i, z]),
        Mat::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Hermitian generators `e_1, …, e_d` with `e_a e_b + e_b e_a = 2δ_ab`,
/// size `2^⌊d/2⌋`, built from the two-dimensional base by tensoring.
fn euclidean_generators(d: usize) -> Vec<Mat> {
    let [sx, sy, sz] = pauli();
    let mut gens: Vec<Mat> = match d {
        0 => vec![],
        1 => vec![linalg::identity(1)],
        _ => vec![sx.clone(), sy.clone()],
    };
    let mut size_d = d.min(2);
    while size_d + 2 <= d {
        let mut next: Vec<Mat> = gens.iter().map(|g| g.kronecker(&sz)).collect();
        let id = linalg::identity(gens[0].nrows());
        next.push(id.kronecker(&sx));
        next.push(id.kronecker(&sy));
        gens = next;
        size_d += 2;
    }
    if size_d < d {
        // odd d: the product of an even set is Hermitian up to a phase
        let mut prod = linalg::identity(gens[0].nrows());
        for g in &gens {
            prod *= g;
        }
        let k = size_d / 2;
        let phase = C64::new(0.0, 1.0).powu(k as u32);
        gens.push(prod * phase);
    }
    gens
}

impl CliffordRep {
    pub fn build(d: usize) -> Result<Self> {
        if !(2..=6).contains(&d) {
            return Err(Error::Unsupported(format!("spacetime dimension {d} outside 2..=6")));
        }
        let e = euclidean_generators(d);
        let i = C64::new(0.0, 1.0);
        let gammas: Vec<Mat> = e
            .iter()
            .enumerate()
            .map(|(k, m)| if k == 0 { m.clone() } else { m * i })
            .collect();
        let g_spin = -&gammas[0];
        let mut rep = CliffordRep {
            dim: d,
            rank: gammas[0].nrows(),
            gammas,
            g_spin,
            chirality: None,
        };
        if d.is_multiple_of(2) {
            rep.chirality = Some(rep.chirality_operator()?);
        }
        Ok(rep)
    }

    /// `𝒢 = i^⌊n/2⌋ γ_0 γ_1 ⋯ γ_n`, even `d` only.
    pub fn chirality_operator(&self) -> Result<Mat> {
        if !self.dim.is_multiple_of(2) {
            return Err(Error::Unsupported(format!(
                "chirality operator needs even spacetime dimension, got {}",
                self.dim
            )));
        }
        let n = self.dim - 1;
        let mut g = linalg::identity(self.rank) * C64::new(0.0, 1.0).powu((n / 2) as u32);
        for gm in &self.gammas {
            g *= gm;
        }
        Ok(g)
    }

    /// `η_{μν}` with `η_00 = −1`.
    pub fn eta(mu: usize, nu: usize) -> f64 {
        match (mu, nu) {
            (0, 0) => -1.0,
            (a, b) if a == b => 1.0,
            _ => 0.0,
        }
    }

    /// Largest deviation from `γ_μγ_ν + γ_νγ_μ = −2η_{μν}`.
    pub fn anticommutator_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (mu, a) in self.gammas.iter().enumerate() {
            for (nu, b) in self.gammas.iter().enumerate() {
                let want = linalg::identity(self.rank) * c(-2.0 * Self::eta(mu, nu));
                worst = worst.max((a * b + b * a - want).norm());
            }
        }
        worst
    }

    /// Largest deviation of `G_spin γ_μ` from Hermitian.
    pub fn symmetry_defect(&self) -> f64 {
        self.gammas
            .iter()
            .map(|g| linalg::hermitian_defect(&(&self.g_spin * g)))
            .fold(0.0, f64::max)
    }

    /// Clifford multiplication by the vector with frame components `v`.
    pub fn gamma(&self, v: &[f64]) -> Mat {
        let mut out = linalg::zeros(self.rank, self.rank);
        for (x, g) in v.iter().zip(&self.gammas) {
            out += g * c(*x);
        }
        out
    }
}

/// Orthonormal spatial frame `E` with `h = E⁻ᵀ E⁻¹`, i.e. columns `e_a = E_{ja} ∂_j`.
fn spatial_frame(h: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let eig = h.clone().symmetric_eigen();
    let inv_sqrt = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose()
}

/// Coefficient `σ_D(dx^μ) = γ((dx^μ)♯)` in the chart at `p`.
pub fn dirac_symbols(rep: &CliffordRep, chart: &SpacetimeChart, p: &Point) -> Vec<Mat> {
    let n = chart.dim_space();
    let beta = chart.beta(p);
    let e = spatial_frame(&chart.h(p));
    let mut a = Vec::with_capacity(n + 1);
    // (dt)♯ = −e_0/β
    a.push(&rep.gammas[0] * c(-1.0 / beta));
    for j in 0..n {
        let mut m = linalg::zeros(rep.rank, rep.rank);
        for k in 0..n {
            m += &rep.gammas[k + 1] * c(e[(j, k)]);
        }
        a.push(m);
    }
    a
}

pub type ConnectionFn = Arc<dyn Fn(&Point) -> Mat + Send + Sync>;

/// Dirac operator as a first-order system with the spin product `G_spin`.
/// The zero-order term vanishes on charts where the spin connection does;
/// otherwise it must be supplied.
pub fn dirac_system(rep: &CliffordRep, chart: Arc<SpacetimeChart>, connection: Option<ConnectionFn>) -> Result<FriedrichsSystem> {
    if rep.dim != chart.dim_space() + 1 {
        return Err(Error::Unsupported(format!(
            "representation for d={} on a {}+1 chart",
            rep.dim,
            chart.dim_space()
        )));
    }
    if connection.is_none() && !chart.is_flat_compatible() {
        return Err(Error::Unsupported(
            "chart has nonvanishing spin connection; supply connection matrices".into(),
        ));
    }
    let rank = rep.rank;
    let r = rep.clone();
    let ch = chart.clone();
    let coeffs: CoeffFn = Arc::new(move |p| Coefficients {
        a: dirac_symbols(&r, &ch, p),
        c: connection.as_ref().map(|f| f(p)).unwrap_or_else(|| linalg::zeros(rank, rank)),
    });
    let g = rep.g_spin.clone();
    let time_independent = chart.is_static();
    FriedrichsSystem::new("dirac", rank, chart, coeffs, Arc::new(move |_| g.clone()), false, time_independent)
}

/// `Γ_T = β σ_D(dt)`: the Clifford action of the future unit timelike normal
/// that is positive for the spin product.
pub fn timelike_generator(rep: &CliffordRep) -> Mat {
    -&rep.gammas[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_for_all_dimensions() {
        for d in 2..=6 {
            let rep = CliffordRep::build(d).unwrap();
            assert_eq!(rep.rank, 1 << (d / 2));
            assert!(rep.anticommutator_defect() < 1e-12, "d={d}");
            assert!(rep.symmetry_defect() < 1e-12, "d={d}");
            let spin = linalg::herm_eigen(&rep.g_spin).unwrap();
            assert_eq!(spin.count(|v| v > 0.0), rep.rank / 2);
            assert_eq!(spin.count(|v| v < 0.0), rep.rank / 2);
        }
    }

    #[test]
    fn chirality_identities() {
        for d in [2, 4, 6] {
            let rep = CliffordRep::build(d).unwrap();
            let g = rep.chirality.clone().unwrap();
            let id = linalg::identity(rep.rank);
            assert!((&g * &g - &id).norm() < 1e-12);
            for gm in &rep.gammas {
                assert!((&g * gm + gm * &g).norm() < 1e-12);
            }
            let sg = &rep.g_spin * &g;
            assert!((&sg + sg.adjoint()).norm() < 1e-12, "d={d}: not skew");
        }
        assert!(CliffordRep::build(3).unwrap().chirality_operator().is_err());
    }

    #[test]
    fn unsupported_dimensions() {
        assert!(CliffordRep::build(1).is_err());
        assert!(CliffordRep::build(7).is_err());
    }

    #[test]
    fn dirac_needs_connection_on_curved_chart() {
        use crate::geometry::Profile;
        let rep = CliffordRep::build(2).unwrap();
        let chart = Arc::new(
            SpacetimeChart::custom(
                "c",
                (0.0, 1.0),
                vec![1.0],
                Profile::Linear {
                    value: 1.0,
                    gradient: vec![0.5],
                    rate: 0.0,
                },
                vec![Profile::Constant(1.0)],
            )
            .unwrap(),
        );
        assert!(matches!(dirac_system(&rep, chart.clone(), None), Err(Error::Unsupported(_))));
        let zero: ConnectionFn = Arc::new(|_| linalg::zeros(2, 2));
        assert!(dirac_system(&rep, chart, Some(zero)).is_ok());
    }
}
