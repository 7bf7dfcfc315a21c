//! Parametric sharp-interface shapes and their exact energies.
//!
//! The connected sharp energy of a shape E at repulsion strength λ is
//!
//!   perimeter(E) + 2·(shortest connecting network) + λ·I(E),
//!
//! where I is the logarithmic self-interaction. Only unions of disks can
//! be disconnected here, and their connector is the Steiner tree of the
//! centers clipped back to the boundaries (each spoke loses the radius of
//! the disk it starts in).

use crate::error::{Error, Result};
use crate::oracle::interaction::log_interaction;
use crate::oracle::steiner::steiner_tree;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Disk {
        center: (f64, f64),
        radius: f64,
    },
    Rectangle {
        corner: (f64, f64),
        width: f64,
        height: f64,
    },
    /// Pairwise disjoint closed disks, each as (center, radius).
    UnionOfDisks {
        disks: Vec<((f64, f64), f64)>,
    },
    /// Simple (non-self-intersecting) polygon with at least 3 vertices.
    Polygon {
        vertices: Vec<(f64, f64)>,
    },
}

fn invalid(message: String) -> Error {
    Error::InvalidShape(message)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection test (shared endpoints count as hits).
fn segments_intersect(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), p4: (f64, f64)) -> bool {
    let d1 = cross(p3, p4, p1);
    let d2 = cross(p3, p4, p2);
    let d3 = cross(p1, p2, p3);
    let d4 = cross(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match self {
            ShapeSpec::Disk { center, radius } => {
                if !finite(center.0) || !finite(center.1) || !finite(*radius) || *radius <= 0.0 {
                    return Err(invalid(format!("disk needs a positive radius, got {radius}")));
                }
            }
            ShapeSpec::Rectangle {
                corner,
                width,
                height,
            } => {
                if !finite(corner.0)
                    || !finite(corner.1)
                    || !finite(*width)
                    || !finite(*height)
                    || *width <= 0.0
                    || *height <= 0.0
                {
                    return Err(invalid(format!(
                        "rectangle needs positive width and height, got {width} x {height}"
                    )));
                }
            }
            ShapeSpec::UnionOfDisks { disks } => {
                if disks.is_empty() {
                    return Err(invalid("union of disks needs at least one disk".into()));
                }
                for (c, r) in disks {
                    if !finite(c.0) || !finite(c.1) || !finite(*r) || *r <= 0.0 {
                        return Err(invalid(format!(
                            "union member needs a positive radius, got {r}"
                        )));
                    }
                }
                for i in 0..disks.len() {
                    for j in (i + 1)..disks.len() {
                        let (ci, ri) = disks[i];
                        let (cj, rj) = disks[j];
                        let d = (ci.0 - cj.0).hypot(ci.1 - cj.1);
                        if d < ri + rj {
                            return Err(invalid(format!(
                                "disks {i} and {j} overlap: centers {d} apart, radii sum {}",
                                ri + rj
                            )));
                        }
                    }
                }
            }
            ShapeSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(invalid(format!(
                        "polygon needs at least 3 vertices, got {}",
                        vertices.len()
                    )));
                }
                for v in vertices {
                    if !finite(v.0) || !finite(v.1) {
                        return Err(invalid("polygon vertex is not finite".into()));
                    }
                }
                let n = vertices.len();
                // Simplicity: no two non-adjacent edges may meet.
                for i in 0..n {
                    let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
                    for j in (i + 1)..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if adjacent {
                            continue;
                        }
                        let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
                        if segments_intersect(a1, a2, b1, b2) {
                            return Err(invalid(format!(
                                "polygon edges {i} and {j} intersect: not simple"
                            )));
                        }
                    }
                }
                if self.area() <= 0.0 {
                    return Err(invalid("polygon is degenerate (zero area)".into()));
                }
            }
        }
        Ok(())
    }

    /// Membership of a point (boundary behavior is irrelevant for the
    /// quadrature, which only probes cell centers).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            ShapeSpec::Disk { center, radius } => {
                let (dx, dy) = (x - center.0, y - center.1);
                dx * dx + dy * dy <= radius * radius
            }
            ShapeSpec::Rectangle {
                corner,
                width,
                height,
            } => x >= corner.0 && x <= corner.0 + width && y >= corner.1 && y <= corner.1 + height,
            ShapeSpec::UnionOfDisks { disks } => disks.iter().any(|(c, r)| {
                let (dx, dy) = (x - c.0, y - c.1);
                dx * dx + dy * dy <= r * r
            }),
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if (a.1 > y) != (b.1 > y) {
                        let t = (y - a.1) / (b.1 - a.1);
                        if x < a.0 + t * (b.0 - a.0) {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Tight axis-aligned bounding box [x_min, x_max, y_min, y_max].
    pub fn bbox(&self) -> [f64; 4] {
        match self {
            ShapeSpec::Disk { center, radius } => [
                center.0 - radius,
                center.0 + radius,
                center.1 - radius,
                center.1 + radius,
            ],
            ShapeSpec::Rectangle {
                corner,
                width,
                height,
            } => [corner.0, corner.0 + width, corner.1, corner.1 + height],
            ShapeSpec::UnionOfDisks { disks } => {
                let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
                for (c, r) in disks {
                    b[0] = b[0].min(c.0 - r);
                    b[1] = b[1].max(c.0 + r);
                    b[2] = b[2].min(c.1 - r);
                    b[3] = b[3].max(c.1 + r);
                }
                b
            }
            ShapeSpec::Polygon { vertices } => {
                let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
                for v in vertices {
                    b[0] = b[0].min(v.0);
                    b[1] = b[1].max(v.0);
                    b[2] = b[2].min(v.1);
                    b[3] = b[3].max(v.1);
                }
                b
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            ShapeSpec::Disk { radius, .. } => PI * radius * radius,
            ShapeSpec::Rectangle { width, height, .. } => width * height,
            ShapeSpec::UnionOfDisks { disks } => disks.iter().map(|(_, r)| PI * r * r).sum(),
            ShapeSpec::Polygon { vertices } => {
                let n = vertices.len();
                let mut twice = 0.0;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    twice += a.0 * b.1 - b.0 * a.1;
                }
                0.5 * twice.abs()
            }
        }
    }
}

/// Exact perimeter of a valid shape.
pub fn perimeter(shape: &ShapeSpec) -> Result<f64> {
    shape.validate()?;
    Ok(match shape {
        ShapeSpec::Disk { radius, .. } => 2.0 * PI * radius,
        ShapeSpec::Rectangle { width, height, .. } => 2.0 * (width + height),
        ShapeSpec::UnionOfDisks { disks } => disks.iter().map(|(_, r)| 2.0 * PI * r).sum(),
        ShapeSpec::Polygon { vertices } => {
            let n = vertices.len();
            (0..n)
                .map(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    (a.0 - b.0).hypot(a.1 - b.1)
                })
                .sum()
        }
    })
}

/// Perimeter plus twice the shortest network that makes the shape
/// connected. Single shapes need no connector; for a union of disks the
/// connector is the Steiner tree of the centers with each spoke clipped
/// by the radius of the disk it meets (boundary-to-boundary length).
pub fn connected_perimeter(shape: &ShapeSpec) -> Result<f64> {
    let base = perimeter(shape)?;
    let connector = match shape {
        ShapeSpec::UnionOfDisks { disks } if disks.len() > 1 => {
            let centers: Vec<(f64, f64)> = disks.iter().map(|(c, _)| *c).collect();
            let tree = steiner_tree(&centers);
            let mut total = 0.0;
            for &(u, v) in &tree.edges {
                let (pu, pv) = (tree.points[u], tree.points[v]);
                let mut len = (pu.0 - pv.0).hypot(pu.1 - pv.1);
                if u < tree.n_terminals {
                    len -= disks[u].1;
                }
                if v < tree.n_terminals {
                    len -= disks[v].1;
                }
                total += len.max(0.0);
            }
            total
        }
        _ => 0.0,
    };
    Ok(base + 2.0 * connector)
}

/// Connected sharp-interface energy at repulsion strength `lambda`.
pub fn sharp_energy(shape: &ShapeSpec, lambda: f64, n_quad: usize) -> Result<f64> {
    let p = connected_perimeter(shape)?;
    if lambda == 0.0 {
        return Ok(p);
    }
    Ok(p + lambda * log_interaction(shape, n_quad)?)
}

/// Closed-form scaling bounds for the minimal connected energy at mass π.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    /// Leading-order term −π²λ·log(π²λ/2).
    pub leading: f64,
}

pub fn scaling_bounds(lambda: f64) -> Result<BoundReport> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            message: format!("scaling bounds need lambda > 0, got {lambda}"),
        });
    }
    let pi2l = PI * PI * lambda;
    let log_half = (0.5 * pi2l).ln();
    let lower = pi2l * (1.0 - log_half);
    let upper = lower + 2.0 * pi2l + 2.0 * PI / lambda;
    Ok(BoundReport {
        lambda,
        lower,
        upper,
        leading: -pi2l * log_half,
    })
}

/// The thin-rectangle competitor [0, r] × [0, π/r] with r = π²λ, whose
/// energy realizes the upper scaling bound up to its stated slack.
pub fn rect_competitor(lambda: f64) -> ShapeSpec {
    let r = PI * PI * lambda;
    ShapeSpec::Rectangle {
        corner: (0.0, 0.0),
        width: r,
        height: PI / r,
    }
}
