use super::{Grid, GridField};

/// Maximal runs of cells with `|Ψ| > threshold·max|Ψ|` at level `n`, as
/// closed intervals of cell extents. The maximum is taken over all levels.
pub fn support_intervals(field: &GridField, grid: &Grid, n: usize, threshold: f64) -> Vec<(f64, f64)> {
    let peak = field.max_norm();
    if peak == 0.0 {
        return Vec::new();
    }
    let cut = threshold * peak;
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=grid.nx {
        let on = i < grid.nx && field.cell_norm(n, i) > cut;
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s as f64 * grid.dx, i as f64 * grid.dx));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Smallest interval containing the support at level `n`.
pub fn support_hull(field: &GridField, grid: &Grid, n: usize, threshold: f64) -> Option<(f64, f64)> {
    let iv = support_intervals(field, grid, n, threshold);
    Some((iv.first()?.0, iv.last()?.1))
}
