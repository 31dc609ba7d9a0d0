//! Dense complex linear algebra on fiber-sized matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vect = DVector<C64>;

/// Default relative rank tolerance.
pub const RANK_TOL: f64 = 1e-9;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn from_real(m: &DMatrix<f64>) -> Mat {
    m.map(c)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(r: usize, cols: usize) -> Mat {
    Mat::zeros(r, cols)
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &Mat) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn herm_part(m: &Mat) -> Mat {
    (m + m.adjoint()) * c(0.5)
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are eigenvectors, in the order of `values`.
    pub vectors: Mat,
}

impl Eigen {
    pub fn count(&self, pred: impl Fn(f64) -> bool) -> usize {
        self.values.iter().filter(|&&v| pred(v)).count()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

fn sorted(values: Vec<f64>, vectors: Mat) -> Eigen {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = idx.iter().map(|&i| values[i]).collect();
    let vecs = Mat::from_fn(vectors.nrows(), idx.len(), |r, k| vectors[(r, idx[k])]);
    Eigen {
        values: vals,
        vectors: vecs,
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eigen(m: &Mat) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::Contract(format!(
            "herm_eigen needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.norm();
    let defect = hermitian_defect(m);
    if defect > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {defect:.3e}, norm {scale:.3e})"
        )));
    }
    if m.nrows() == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    let eig = herm_part(m).symmetric_eigen();
    Ok(sorted(eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors))
}

/// Hermitian and positive definite, by eigenvalues (complex Cholesky in
/// nalgebra accepts indefinite input).
pub fn is_positive_definite(m: &Mat) -> bool {
    herm_eigen(m).is_ok_and(|e| e.min() > 1e-14 * e.max().abs())
}

/// Solves `A v = λ B v` for Hermitian `A` and positive-definite `B`.
/// Eigenvectors are `B`-orthonormal: `V* B V = I`.
pub fn gen_herm_eigen(a: &Mat, b: &Mat) -> Result<Eigen> {
    if !is_positive_definite(b) {
        return Err(Error::Linalg("generalized eigenproblem: metric not positive definite".into()));
    }
    let chol = herm_part(b)
        .cholesky()
        .ok_or_else(|| Error::Linalg("generalized eigenproblem: metric not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
    let reduced = &linv * herm_part(a) * linv.adjoint();
    let eig = herm_eigen(&herm_part(&reduced))?;
    let vectors = linv.adjoint() * eig.vectors;
    Ok(Eigen {
        values: eig.values,
        vectors,
    })
}

pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Full SVD with a square right factor, padding short-wide inputs with zero rows.
fn full_svd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, cols) = m.shape();
    let padded = if r < cols {
        let mut p = Mat::zeros(cols, cols);
        p.view_mut((0, 0), (r, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V").adjoint();
    (u, svd.singular_values.iter().cloned().collect(), v)
}

/// An orthonormal frame spanning a subspace of `C^N`.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    /// Orthonormalizes the given columns; numerically dependent columns are dropped.
    pub fn span(columns: &Mat) -> Self {
        let thr = RANK_TOL * spectral_norm(columns).max(f64::MIN_POSITIVE);
        image_above(columns, thr)
    }

    pub fn full(n: usize) -> Self {
        Subspace { basis: identity(n) }
    }

    pub fn zero(n: usize) -> Self {
        Subspace {
            basis: Mat::zeros(n, 0),
        }
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn vector(&self, i: usize) -> Vect {
        self.basis.column(i).into_owned()
    }

    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.adjoint()
    }

    /// `‖v − Pv‖ / ‖v‖`.
    pub fn residual(&self, v: &Vect) -> f64 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        (v - self.projector() * v).norm() / nv
    }

    /// Largest residual over the columns of `other`.
    pub fn contains(&self, other: &Subspace) -> f64 {
        (0..other.rank())
            .map(|i| self.residual(&other.vector(i)))
            .fold(0.0, f64::max)
    }

    pub fn gram_defect(&self) -> f64 {
        (self.basis.adjoint() * &self.basis - identity(self.rank())).norm()
    }
}

fn image_above(m: &Mat, thr: f64) -> Subspace {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Subspace::zero(n);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > thr)
        .collect();
    Subspace {
        basis: Mat::from_fn(n, keep.len(), |r, k| u[(r, keep[k])]),
    }
}

/// Column space of `m`, singular values above `tol·‖m‖`.
pub fn image(m: &Mat, tol: f64) -> Subspace {
    image_above(m, tol * spectral_norm(m))
}

/// `{v : ‖Mv‖ ≤ tol·‖M‖}` as the span of the small right singular vectors.
pub fn kernel(m: &Mat, tol: f64) -> Subspace {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return Subspace::full(n);
    }
    let (_, s, v) = full_svd(m);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Subspace::full(n);
    }
    let thr = tol * smax;
    let keep: Vec<usize> = (0..n).filter(|&i| s.get(i).is_none_or(|&x| x <= thr)).collect();
    Subspace {
        basis: Mat::from_fn(n, keep.len(), |r, k| v[(r, keep[k])]),
    }
}

/// Euclidean orthogonal complement.
pub fn complement(w: &Subspace) -> Subspace {
    if w.rank() == 0 {
        return Subspace::full(w.ambient());
    }
    kernel(&w.basis.adjoint(), RANK_TOL)
}

/// `W* M W` in the orthonormal basis of `W`.
pub fn restrict_form(m: &Mat, w: &Subspace) -> Mat {
    w.basis.adjoint() * m * &w.basis
}

/// `(M·W)^⊥`; image directions below `tol·‖M‖` are treated as zero.
pub fn orthogonal_complement_of_image(m: &Mat, w: &Subspace) -> Subspace {
    let img = image_above(&(m * &w.basis), RANK_TOL * spectral_norm(m));
    complement(&img)
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pinv(m: &Mat, tol: f64) -> Mat {
    if m.is_empty() {
        return Mat::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.pseudo_inverse(tol * smax.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| Mat::zeros(m.ncols(), m.nrows()))
}

pub fn inverse(m: &Mat) -> Result<Mat> {
    let lu = m.clone().lu();
    lu.try_inverse()
        .ok_or_else(|| Error::Linalg(format!("singular {}x{} matrix", m.nrows(), m.ncols())))
}

/// `v* M v`, real part.
pub fn form(m: &Mat, v: &Vect) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[Mat]) -> Mat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

/// Kronecker product.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}
