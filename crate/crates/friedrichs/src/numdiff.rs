//! Finite-difference weights and derivative helpers.

use crate::linalg::{c, Mat, Vect, C64};

/// Values that can be combined linearly with real weights.
pub trait Scale: Clone + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {
    fn scale(self, w: f64) -> Self;
}

impl Scale for f64 {
    fn scale(self, w: f64) -> Self {
        self * w
    }
}

impl Scale for C64 {
    fn scale(self, w: f64) -> Self {
        self * w
    }
}

impl Scale for Mat {
    fn scale(self, w: f64) -> Self {
        self * c(w)
    }
}

impl Scale for Vect {
    fn scale(self, w: f64) -> Self {
        self * c(w)
    }
}

/// Fornberg's algorithm: `w[m][j]` is the weight of `nodes[j]` in the
/// `m`-th derivative at `x0`, for `m = 0..=order`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![vec![0.0; n]; order + 1];
    if n == 0 {
        return w;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    w[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Step used for centered first differences of coefficient functions.
pub fn centered_step(scale: f64) -> f64 {
    f64::EPSILON.cbrt() * scale.abs().max(1.0)
}

/// Centered first derivative with the cbrt(eps) step.
pub fn centered<T, F>(f: F, x: f64) -> T
where
    F: Fn(f64) -> T,
    T: Scale,
{
    let h = centered_step(x);
    (f(x + h) - f(x - h)).scale(0.5 / h)
}

/// Derivatives `0..=order` at `x0` from a symmetric stencil of `points`
/// nodes spaced by `h`.
pub fn stencil_derivatives<T, F>(f: F, x0: f64, h: f64, points: usize, order: usize) -> Vec<T>
where
    F: Fn(f64) -> T,
    T: Scale,
{
    assert!(points > order, "stencil too small for derivative order");
    let half = (points as f64 - 1.0) / 2.0;
    let nodes: Vec<f64> = (0..points).map(|j| x0 + (j as f64 - half) * h).collect();
    let w = fornberg_weights(x0, &nodes, order);
    let vals: Vec<T> = nodes.iter().map(|&x| f(x)).collect();
    (0..=order)
        .map(|m| {
            let mut acc = vals[0].clone().scale(w[m][0]);
            for j in 1..points {
                acc = acc + vals[j].clone().scale(w[m][j]);
            }
            acc
        })
        .collect()
}

/// First derivative by the 9-point centered stencil.
pub fn derivative9<T, F>(f: F, x0: f64, h: f64) -> T
where
    F: Fn(f64) -> T,
    T: Scale,
{
    stencil_derivatives(f, x0, h, 9, 1).pop().expect("order 1 present")
}

/// Dense first-derivative matrix on arbitrary sorted nodes, using the
/// `width` nearest nodes (shifted inward at the ends).
pub fn derivative_matrix(nodes: &[f64], width: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let width = width.min(n);
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        let start = i.saturating_sub(width / 2).min(n - width);
        let w = fornberg_weights(nodes[i], &nodes[start..start + width], 1);
        row[start..start + width].copy_from_slice(&w[1]);
    }
    d
}
