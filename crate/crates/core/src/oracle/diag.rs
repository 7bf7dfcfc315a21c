//! Geometric diagnostics of a phase field: component count, extent,
//! isoperimetric deficit and mass concentration of the superlevel set
//! {u > threshold}.
//!
//! Components use 8-neighbor adjacency so a region staying connected
//! through a diagonal pinch still counts as one piece. The perimeter
//! estimate is the total variation ∫|∇u|, which for a unit-height
//! transition layer approximates the interface length regardless of the
//! threshold; the deficit compares it against the perimeter of the disk
//! of equal superlevel area and vanishes in the sharp radial limit.

use crate::energy::grad_sq_cellwise;
use crate::grid::ScalarField;

/// Summary measurements of one field at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub threshold: f64,
    /// Number of 8-connected components of {u > threshold}.
    pub components: usize,
    /// Cells strictly above the threshold.
    pub cell_count: usize,
    /// Superlevel area: cell count times cell area.
    pub area: f64,
    /// Largest distance between superlevel cell centers; `None` when the
    /// superlevel set is empty.
    pub diameter: Option<f64>,
    /// Total variation ∫|∇u| over the whole domain.
    pub perimeter_estimate: f64,
    /// Isoperimetric deficit P/√(4πA) − 1; `None` when the superlevel
    /// set is empty.
    pub deficit: Option<f64>,
}

/// Number of 8-connected components of {u > threshold}.
pub fn connected_components(u: &ScalarField, threshold: f64) -> usize {
    let (nx, ny) = (u.grid.nx, u.grid.ny);
    let above: Vec<bool> = u.values.iter().map(|&s| s > threshold).collect();
    let mut seen = vec![false; above.len()];
    let mut stack: Vec<usize> = Vec::new();
    let mut components = 0;
    for start in 0..above.len() {
        if !above[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx % nx, idx / nx);
            let i_lo = i.saturating_sub(1);
            let i_hi = (i + 1).min(nx - 1);
            let j_lo = j.saturating_sub(1);
            let j_hi = (j + 1).min(ny - 1);
            for jj in j_lo..=j_hi {
                for ii in i_lo..=i_hi {
                    let nb = jj * nx + ii;
                    if above[nb] && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
    }
    components
}

/// Convex hull by Andrew's monotone chain; collinear points are dropped.
/// Returns the input when it has at most two distinct points.
fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

impl Diagnostics {
    pub fn measure(u: &ScalarField, threshold: f64) -> Diagnostics {
        let g = &u.grid;
        let cell = g.cell_area();
        let components = connected_components(u, threshold);
        let mut centers: Vec<(f64, f64)> = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if u.values[j * g.nx + i] > threshold {
                    centers.push(g.node(i, j));
                }
            }
        }
        let cell_count = centers.len();
        let area = cell_count as f64 * cell;

        let diameter = if centers.is_empty() {
            None
        } else {
            let hull = convex_hull(centers);
            let mut best = 0.0f64;
            for a in 0..hull.len() {
                for b in (a + 1)..hull.len() {
                    let d = (hull[a].0 - hull[b].0).hypot(hull[a].1 - hull[b].1);
                    best = best.max(d);
                }
            }
            Some(best)
        };

        let perimeter_estimate: f64 = grad_sq_cellwise(u)
            .iter()
            .map(|&gsq| gsq.sqrt())
            .sum::<f64>()
            * cell;

        let deficit = if cell_count == 0 {
            None
        } else {
            Some(perimeter_estimate / (4.0 * std::f64::consts::PI * area).sqrt() - 1.0)
        };

        Diagnostics {
            threshold,
            components,
            cell_count,
            area,
            diameter,
            perimeter_estimate,
            deficit,
        }
    }
}

/// Largest superlevel mass captured by any grid-centered ball of the
/// given radius: max over cell centers x of |{u > threshold} ∩ B_r(x)|.
/// Returns 0 when the superlevel set is empty.
pub fn concentration(u: &ScalarField, threshold: f64, radius: f64) -> f64 {
    let g = &u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let cell = g.cell_area();
    // Per-row prefix counts of superlevel cells: prefix[j][i] = number of
    // superlevel cells in row j strictly left of column i.
    let mut prefix = vec![0u32; (nx + 1) * ny];
    let mut any = false;
    for j in 0..ny {
        let row = j * nx;
        let p = j * (nx + 1);
        for i in 0..nx {
            let above = u.values[row + i] > threshold;
            any |= above;
            prefix[p + i + 1] = prefix[p + i] + u32::from(above);
        }
    }
    if !any {
        return 0.0;
    }
    let mut best: u32 = 0;
    for jc in 0..ny {
        for ic in 0..nx {
            let (xc, yc) = g.node(ic, jc);
            let mut count: u32 = 0;
            // Rows within vertical reach of the ball.
            let j_lo = ((yc - radius - g.y_min) / g.hy - 0.5).ceil().max(0.0) as usize;
            for j in j_lo..ny {
                let y = g.y_min + (j as f64 + 0.5) * g.hy;
                let dy = y - yc;
                if dy > radius {
                    break;
                }
                let half = radius * radius - dy * dy;
                if half < 0.0 {
                    continue;
                }
                let half = half.sqrt();
                // Columns with |x - xc| <= half.
                let i_lo = ((xc - half - g.x_min) / g.hx - 0.5).ceil().max(0.0) as usize;
                let i_hi = ((xc + half - g.x_min) / g.hx - 0.5)
                    .floor()
                    .min(nx as f64 - 1.0);
                if i_hi < 0.0 || i_lo >= nx {
                    continue;
                }
                let i_hi = i_hi as usize;
                if i_lo > i_hi {
                    continue;
                }
                let p = j * (nx + 1);
                count += prefix[p + i_hi + 1] - prefix[p + i_lo];
            }
            best = best.max(count);
        }
    }
    best as f64 * cell
}
