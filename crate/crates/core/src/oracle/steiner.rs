//! Minimal Steiner trees for small planar terminal sets.
//!
//! Full topologies (every terminal a leaf, every branch point of degree
//! three) are enumerated by recursive edge splitting: a set of m
//! terminals has (2m-5)!! of them, which stays tractable for the ten or
//! fewer terminals the rest of the crate asks about. Branch points are
//! optimized by repeated exact Fermat-point updates; each update can only
//! shorten the tree, so the iteration converges to the convex optimum of
//! its topology. Degenerate optima (branch points collapsing onto
//! terminals) represent the non-full trees, so taking the minimum over
//! full topologies and the minimum spanning tree covers every candidate.

use crate::error::{Error, Result};

type Point = (f64, f64);

#[derive(Debug, Clone)]
pub struct SteinerTree {
    /// Terminals first, then branch points.
    pub points: Vec<Point>,
    pub n_terminals: usize,
    pub edges: Vec<(usize, usize)>,
    pub length: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Minimum spanning tree of the complete Euclidean graph (Prim).
fn mst(points: &[Point]) -> (Vec<(usize, usize)>, f64) {
    let n = points.len();
    if n <= 1 {
        return (Vec::new(), 0.0);
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    in_tree[0] = true;
    for k in 0..n {
        best[k] = dist(points[0], points[k]);
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut total = 0.0;
    for _ in 1..n {
        let mut pick = usize::MAX;
        let mut pick_d = f64::INFINITY;
        for k in 0..n {
            if !in_tree[k] && best[k] < pick_d {
                pick = k;
                pick_d = best[k];
            }
        }
        in_tree[pick] = true;
        edges.push((link[pick], pick));
        total += pick_d;
        for k in 0..n {
            if !in_tree[k] {
                let d = dist(points[pick], points[k]);
                if d < best[k] {
                    best[k] = d;
                    link[k] = pick;
                }
            }
        }
    }
    (edges, total)
}

pub fn mst_length(points: &[Point]) -> f64 {
    mst(points).1
}

/// Equilateral apex erected over segment (p, q) on the side away from r.
fn apex_opposite(p: Point, q: Point, r: Point) -> Point {
    let mx = 0.5 * (p.0 + q.0);
    let my = 0.5 * (p.1 + q.1);
    let h = 0.5 * 3f64.sqrt();
    let (px, py) = (-(q.1 - p.1) * h, (q.0 - p.0) * h);
    if px * (r.0 - mx) + py * (r.1 - my) > 0.0 {
        (mx - px, my - py)
    } else {
        (mx + px, my + py)
    }
}

/// Point minimizing the summed distance to three anchors: the anchor
/// itself when its angle reaches 120 degrees, otherwise the interior
/// point constructed from two Simpson lines.
fn fermat_point(a: Point, b: Point, c: Point) -> Point {
    let corners = [(a, b, c), (b, a, c), (c, a, b)];
    for (v, p, q) in corners {
        let d1 = (p.0 - v.0, p.1 - v.1);
        let d2 = (q.0 - v.0, q.1 - v.1);
        let n1 = d1.0.hypot(d1.1);
        let n2 = d2.0.hypot(d2.1);
        if n1 == 0.0 || n2 == 0.0 {
            return v;
        }
        if d1.0 * d2.0 + d1.1 * d2.1 <= -0.5 * n1 * n2 {
            return v;
        }
    }
    let e1 = apex_opposite(b, c, a);
    let e2 = apex_opposite(a, c, b);
    let d1 = (e1.0 - a.0, e1.1 - a.1);
    let d2 = (e2.0 - b.0, e2.1 - b.1);
    let den = d1.0 * d2.1 - d1.1 * d2.0;
    if den == 0.0 {
        // Numerically flat triangle; any interior point is near-optimal.
        return ((a.0 + b.0 + c.0) / 3.0, (a.1 + b.1 + c.1) / 3.0);
    }
    let t = ((b.0 - a.0) * d2.1 - (b.1 - a.1) * d2.0) / den;
    (a.0 + t * d1.0, a.1 + t * d1.1)
}

/// All full topologies on n >= 3 terminals via edge splitting.
fn enumerate_topologies<F: FnMut(&[(usize, usize)])>(n: usize, visit: &mut F) {
    fn rec<F: FnMut(&[(usize, usize)])>(
        n: usize,
        next_t: usize,
        edges: &mut Vec<(usize, usize)>,
        visit: &mut F,
    ) {
        if next_t == n {
            visit(edges);
            return;
        }
        let s = n + (next_t - 2);
        for e in 0..edges.len() {
            let (u, v) = edges[e];
            edges[e] = (u, s);
            edges.push((v, s));
            edges.push((next_t, s));
            rec(n, next_t + 1, edges, visit);
            edges.pop();
            edges.pop();
            edges[e] = (u, v);
        }
    }
    let mut edges = vec![(0usize, 1usize)];
    rec(n, 2, &mut edges, visit);
}

struct Topology {
    edges: Vec<(usize, usize)>,
    /// neighbors[k] lists the three neighbors of branch point n + k.
    neighbors: Vec<[usize; 3]>,
}

impl Topology {
    fn new(n: usize, edges: &[(usize, usize)]) -> Topology {
        let mut neighbors = vec![[usize::MAX; 3]; n.saturating_sub(2)];
        let mut fill = vec![0usize; n.saturating_sub(2)];
        for &(u, v) in edges {
            for (x, y) in [(u, v), (v, u)] {
                if x >= n {
                    let k = x - n;
                    neighbors[k][fill[k]] = y;
                    fill[k] += 1;
                }
            }
        }
        Topology {
            edges: edges.to_vec(),
            neighbors,
        }
    }

    fn length(&self, pos: &[Point]) -> f64 {
        self.edges
            .iter()
            .map(|&(u, v)| dist(pos[u], pos[v]))
            .sum()
    }

    /// Monotone Fermat sweeps from a spread-out start; returns the final
    /// length. `pos` must hold the terminals in its first n slots.
    fn optimize(&self, pos: &mut Vec<Point>, n: usize, max_sweeps: usize, tol: f64) -> f64 {
        let k = self.neighbors.len();
        let cx = pos[..n].iter().map(|p| p.0).sum::<f64>() / n as f64;
        let cy = pos[..n].iter().map(|p| p.1).sum::<f64>() / n as f64;
        pos.truncate(n);
        pos.extend(std::iter::repeat((cx, cy)).take(k));
        // Laplacian smoothing spreads the branch points over the hull.
        for _ in 0..8 {
            for s in 0..k {
                let nb = self.neighbors[s];
                let x = (pos[nb[0]].0 + pos[nb[1]].0 + pos[nb[2]].0) / 3.0;
                let y = (pos[nb[0]].1 + pos[nb[1]].1 + pos[nb[2]].1) / 3.0;
                pos[n + s] = (x, y);
            }
        }
        for _ in 0..max_sweeps {
            let mut moved = 0.0f64;
            for s in 0..k {
                let nb = self.neighbors[s];
                let next = fermat_point(pos[nb[0]], pos[nb[1]], pos[nb[2]]);
                moved = moved.max(dist(pos[n + s], next));
                pos[n + s] = next;
            }
            if moved <= tol {
                break;
            }
        }
        self.length(pos)
    }
}

/// Shortest network connecting the given points, allowing extra branch
/// points. Exact for up to three points; for more, the best full
/// topology is refined to convergence and compared against the spanning
/// tree, so the result never exceeds the spanning tree length.
pub fn steiner_tree(points: &[Point]) -> SteinerTree {
    let n = points.len();
    let (mst_edges, mst_len) = mst(points);
    if n <= 2 {
        return SteinerTree {
            points: points.to_vec(),
            n_terminals: n,
            edges: mst_edges,
            length: mst_len,
        };
    }

    let scale = {
        let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo_x = lo_x.min(p.0);
            hi_x = hi_x.max(p.0);
            lo_y = lo_y.min(p.1);
            hi_y = hi_y.max(p.1);
        }
        ((hi_x - lo_x).hypot(hi_y - lo_y)).max(f64::MIN_POSITIVE)
    };

    // Screening pass: a few sweeps per topology to rank them.
    let mut ranked: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    let mut pos = points.to_vec();
    enumerate_topologies(n, &mut |edges| {
        let topo = Topology::new(n, edges);
        let len = topo.optimize(&mut pos, n, 8, 1e-10 * scale);
        ranked.push((len, edges.to_vec()));
    });
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cutoff = ranked[0].0 * 1.02;
    let keep = ranked
        .iter()
        .take_while(|r| r.0 <= cutoff)
        .count()
        .max(12.min(ranked.len()));

    let mut best_len = f64::INFINITY;
    let mut best: Option<(Topology, Vec<Point>)> = None;
    for (_, edges) in ranked.into_iter().take(keep) {
        let topo = Topology::new(n, &edges);
        let len = topo.optimize(&mut pos, n, 2000, 1e-14 * scale);
        if len < best_len {
            best_len = len;
            best = Some((topo, pos.clone()));
        }
    }

    let (topo, tree_pos) = best.expect("at least one topology");
    if mst_len <= best_len {
        return SteinerTree {
            points: points.to_vec(),
            n_terminals: n,
            edges: mst_edges,
            length: mst_len,
        };
    }
    SteinerTree {
        points: tree_pos,
        n_terminals: n,
        edges: topo.edges,
        length: best_len,
    }
}

/// Length of the shortest connecting network for 1 to 8 terminals.
pub fn steiner_length(points: &[Point]) -> Result<f64> {
    if points.is_empty() || points.len() > 8 {
        return Err(Error::InvalidParameter {
            name: "terminals",
            message: format!(
                "steiner_length accepts 1 to 8 terminals, got {}",
                points.len()
            ),
        });
    }
    Ok(steiner_tree(points).length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn spanning_tree_of_square_corners() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert!((mst_length(&pts) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn equilateral_triangle_costs_sqrt_three() {
        let h = 0.5 * 3f64.sqrt();
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.5, h)];
        let tree = steiner_tree(&pts);
        assert!((tree.length - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(tree.points.len(), 4);
        // Branch point at the centroid.
        let c = tree.points[3];
        assert!((c.0 - 0.5).abs() < 1e-9 && (c.1 - h / 3.0).abs() < 1e-9);
    }

    #[test]
    fn wide_angle_vertex_absorbs_the_branch_point() {
        // Angle at the origin is ~127 degrees, so the shortest network is
        // the two incident sides.
        let pts = [(0.0, 0.0), (1.0, 0.0), (-0.6, 0.8)];
        let tree = steiner_tree(&pts);
        assert!((tree.length - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_square_costs_one_plus_sqrt_three() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let tree = steiner_tree(&pts);
        assert!(
            (tree.length - (1.0 + 3f64.sqrt())).abs() < 1e-9,
            "got {}",
            tree.length
        );
        assert_eq!(tree.edges.len(), 5);
    }

    #[test]
    fn collinear_points_cost_their_span() {
        let pts = [(0.0, 0.0), (3.0, 0.0), (1.0, 0.0), (2.2, 0.0)];
        let tree = steiner_tree(&pts);
        assert!((tree.length - 3.0).abs() < 1e-9, "got {}", tree.length);
    }

    #[test]
    fn coincident_terminals_cost_nothing_extra() {
        let pts = [(0.5, 0.5), (0.5, 0.5), (2.5, 0.5)];
        let tree = steiner_tree(&pts);
        assert!((tree.length - 2.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_sets_and_arity_limits() {
        assert_eq!(steiner_tree(&[]).length, 0.0);
        assert_eq!(steiner_length(&[(1.0, 2.0)]).unwrap(), 0.0);
        let two = steiner_tree(&[(0.0, 0.0), (0.0, 2.5)]);
        assert!((two.length - 2.5).abs() < 1e-12);
        assert_eq!(two.edges.len(), 1);
        assert!(steiner_length(&[]).is_err());
        assert!(steiner_length(&vec![(0.0, 0.0); 9]).is_err());
    }

    #[test]
    fn random_sets_sit_between_the_classic_bounds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for trial in 0..25 {
            let n = rng.gen_range(2..=7);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let m = mst_length(&pts);
            let s = steiner_length(&pts).unwrap();
            assert!(
                s <= m + 1e-12,
                "trial {trial}: steiner {s} exceeds spanning {m}"
            );
            assert!(
                s >= 0.5 * 3f64.sqrt() * m - 1e-9,
                "trial {trial}: steiner {s} below ratio bound of {m}"
            );
        }
    }

    #[test]
    fn branch_points_have_degree_three_and_terminals_stay_leaves() {
        let pts = [(0.0, 0.0), (2.0, 0.1), (1.9, 1.8), (-0.2, 2.1), (1.0, 1.0)];
        let tree = steiner_tree(&pts);
        let n_nodes = tree.points.len();
        let mut deg = vec![0usize; n_nodes];
        for &(u, v) in &tree.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        // A tree over all nodes: edges = nodes - 1, connected by degrees.
        assert_eq!(tree.edges.len(), n_nodes - 1);
        for d in &deg {
            assert!(*d >= 1);
        }
    }
}
