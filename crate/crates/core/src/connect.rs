//! Geodesic connectedness penalties.
//!
//! The penalty for a phase measures, for every pair of points carrying
//! that phase, the geodesic distance between them in a degenerate metric
//! that is free inside the phase and expensive outside:
//!
//! ```text
//! C(u) = int int beta(u(x)) beta(u(y)) d_{psi(u)}(x, y) dx dy
//! ```
//!
//! `beta` concentrates on values close to 1 (the phase indicator),
//! `psi` vanishes there and grows quadratically below the threshold
//! `1 - alpha`, and `d_w` is the shortest-path distance with respect to
//! the conformal edge weight `w`. The phase-zero penalty is the same
//! functional evaluated at `1 - u`.
//!
//! Distances are computed on the grid graph with 8-neighbor stencil and
//! edge cost `|x_a - x_b| * (w(a) + w(b)) / 2`. Ties are broken towards
//! the lower node index, deterministically.

use crate::error::Result;
use crate::grid::{Grid2D, ScalarField};
use crate::params::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Indicator profile: zero up to `1 - alpha`, quadratic ramp above.
/// `c1 = 6/alpha^3` normalizes the ramp to unit integral over
/// `[1-alpha, 1]`.
#[inline]
pub fn beta_eps(s: f64, alpha: f64, c1: f64) -> f64 {
    let t = s - 1.0 + alpha;
    if t <= 0.0 {
        0.0
    } else {
        0.5 * c1 * t * t
    }
}

#[inline]
pub fn beta_eps_prime(s: f64, alpha: f64, c1: f64) -> f64 {
    let t = s - 1.0 + alpha;
    if t <= 0.0 {
        0.0
    } else {
        c1 * t
    }
}

/// Metric profile: vanishes on the phase (`s >= 1 - alpha`), grows
/// quadratically below. Continuously differentiable at the knee.
#[inline]
pub fn psi_eps(s: f64, alpha: f64) -> f64 {
    let t = s - 1.0 + alpha;
    if t < 0.0 {
        0.5 * t * t
    } else {
        0.0
    }
}

#[inline]
pub fn psi_eps_prime(s: f64, alpha: f64) -> f64 {
    let t = s - 1.0 + alpha;
    if t < 0.0 {
        t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Penalize disconnection of the `u ~ 1` phase.
    One,
    /// Penalize disconnection of the `u ~ 0` phase (evaluated at `1-u`).
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Every node with `beta > 0` acts as a source: exact double sum.
    All,
    /// At most `max_sources` sources, one drawn per contiguous stratum of
    /// the `beta > 0` index list; each carries its stratum size as weight,
    /// which makes the estimate unbiased.
    Stratified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSampling {
    pub mode: SamplingMode,
    pub max_sources: usize,
    pub rng_seed: u64,
}

impl PairSampling {
    pub fn all() -> PairSampling {
        PairSampling {
            mode: SamplingMode::All,
            max_sources: usize::MAX,
            rng_seed: 0,
        }
    }

    pub fn stratified(max_sources: usize, rng_seed: u64) -> PairSampling {
        PairSampling {
            mode: SamplingMode::Stratified,
            max_sources,
            rng_seed,
        }
    }
}

pub const NO_PRED: usize = usize::MAX;

/// Shortest-path tree from one source.
#[derive(Debug, Clone)]
pub struct GeodesicResult {
    pub source: usize,
    pub dist: Vec<f64>,
    /// Predecessor towards the source; `NO_PRED` at the source itself.
    pub pred: Vec<usize>,
    /// Settle order: position k holds the k-th finalized node. Children
    /// always settle after their predecessor, so walking this order in
    /// reverse visits every subtree before its root.
    pub order: Vec<u32>,
    /// True when two distinct shortest paths of positive cost agreed to
    /// within round-off somewhere; gradients are ambiguous there.
    ///
    /// Routes arriving over zero-weight terrain are exempt: a free
    /// plateau always offers many equal-cost detours, and because the
    /// weight profile is flat at zero there, the choice between them can
    /// move neither the distance nor its derivative.
    pub tie_detected: bool,
}

/// Relative slack under which two competing positive path costs count as
/// a tie. Zero-cost coincidences are not flagged: along a free path the
/// metric profile vanishes identically and so does its derivative.
const TIE_REL_TOL: f64 = 1e-9;

#[derive(Copy, Clone)]
struct Entry {
    dist: f64,
    node: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap, we want the smallest
    // (dist, node) first. Lower node index wins among equal distances.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra on the 8-neighbor grid graph with conformal edge weights.
/// `weight` must be nonnegative and finite everywhere.
pub fn geodesic_from(grid: &Grid2D, weight: &[f64], source: usize) -> GeodesicResult {
    let n = grid.n_nodes();
    assert_eq!(weight.len(), n, "weight field does not match grid");
    assert!(source < n, "source out of range");
    debug_assert!(weight.iter().all(|w| w.is_finite() && *w >= 0.0));

    let nx = grid.nx as isize;
    let ny = grid.ny as isize;
    let diag = (grid.hx * grid.hx + grid.hy * grid.hy).sqrt();
    // (di, dj, euclidean step)
    let steps: [(isize, isize, f64); 8] = [
        (-1, 0, grid.hx),
        (1, 0, grid.hx),
        (0, -1, grid.hy),
        (0, 1, grid.hy),
        (-1, -1, diag),
        (1, -1, diag),
        (-1, 1, diag),
        (1, 1, diag),
    ];

    let mut best = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    // Predecessor of the best known route, maintained at relaxation time
    // so tie checks can inspect the incumbent before `u` settles.
    let mut pred = vec![NO_PRED; n];
    let mut order = Vec::with_capacity(n);
    let mut tie = false;
    let mut heap = BinaryHeap::with_capacity(n);
    best[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source as u32,
    });

    while let Some(Entry { dist, node }) = heap.pop() {
        let v = node as usize;
        if settled[v] {
            continue;
        }
        settled[v] = true;
        order.push(node);

        let i = (v % grid.nx) as isize;
        let j = (v / grid.nx) as isize;
        let wv = weight[v];
        for (di, dj, len) in steps {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || ni >= nx || nj < 0 || nj >= ny {
                continue;
            }
            let u = (nj * nx + ni) as usize;
            let cand = dist + len * 0.5 * (wv + weight[u]);
            if cand < best[u] {
                best[u] = cand;
                pred[u] = v;
                heap.push(Entry {
                    dist: cand,
                    node: u as u32,
                });
            } else if cand > 0.0
                && wv > 0.0
                && (cand - best[u]).abs() <= TIE_REL_TOL * cand
            {
                // A second positive-cost route over positive terrain
                // matched the incumbent. Routes arriving over zero-weight
                // terrain are exempt: a free plateau always offers many
                // equal-cost detours (its internal edges cost nothing, and
                // equal-length entry/exit hops split their endpoint costs
                // identically), and since the weight profile is flat at
                // zero there, the choice between them moves neither the
                // distance nor its derivative.
                tie = true;
            }
        }
    }

    GeodesicResult {
        source,
        dist: best,
        pred,
        order,
        tie_detected: tie,
    }
}

/// Euclidean length of the grid edge between two adjacent nodes.
fn edge_len(grid: &Grid2D, a: usize, b: usize) -> f64 {
    let (ia, ja) = ((a % grid.nx) as isize, (a / grid.nx) as isize);
    let (ib, jb) = ((b % grid.nx) as isize, (b / grid.nx) as isize);
    match ((ia - ib).abs(), (ja - jb).abs()) {
        (1, 0) => grid.hx,
        (0, 1) => grid.hy,
        (1, 1) => (grid.hx * grid.hx + grid.hy * grid.hy).sqrt(),
        _ => panic!("nodes are not adjacent"),
    }
}

/// Phase-transformed node values: `u` itself for phase one, `1-u` for
/// phase zero.
fn phase_values(u: &ScalarField, phase: Phase) -> Vec<f64> {
    match phase {
        Phase::One => u.values.clone(),
        Phase::Zero => u.values.iter().map(|v| 1.0 - v).collect(),
    }
}

/// True when every `beta > 0` node sits in one component of the
/// zero-weight subgraph. All pairwise geodesic distances then vanish and
/// both the penalty and its gradient are exactly zero, because the metric
/// profile and its derivative vanish identically along free paths.
fn all_sources_freely_connected(grid: &Grid2D, psi: &[f64], beta_nodes: &[usize]) -> bool {
    if beta_nodes.len() <= 1 {
        return true;
    }
    let n = grid.n_nodes();
    let mut reach = vec![false; n];
    let mut stack = vec![beta_nodes[0]];
    reach[beta_nodes[0]] = true;
    let nx = grid.nx as isize;
    let ny = grid.ny as isize;
    while let Some(v) = stack.pop() {
        let i = (v % grid.nx) as isize;
        let j = (v / grid.nx) as isize;
        for dj in -1..=1isize {
            for di in -1..=1isize {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || ni >= nx || nj < 0 || nj >= ny {
                    continue;
                }
                let u = (nj * nx + ni) as usize;
                if !reach[u] && psi[u] == 0.0 {
                    reach[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    beta_nodes.iter().all(|v| reach[*v])
}

/// Source list with inverse-inclusion-probability weights.
fn select_sources(beta_nodes: &[usize], sampling: &PairSampling) -> Vec<(usize, f64)> {
    let count = beta_nodes.len();
    if sampling.mode == SamplingMode::All || count <= sampling.max_sources {
        return beta_nodes.iter().map(|v| (*v, 1.0)).collect();
    }
    let s = sampling.max_sources.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.rng_seed);
    let mut out = Vec::with_capacity(s);
    for k in 0..s {
        let lo = k * count / s;
        let hi = (k + 1) * count / s;
        let pick = rng.gen_range(lo..hi);
        out.push((beta_nodes[pick], (hi - lo) as f64));
    }
    out
}

struct PenaltySetup {
    vals: Vec<f64>,
    beta: Vec<f64>,
    psi: Vec<f64>,
    beta_nodes: Vec<usize>,
    /// Exactly-zero shortcut: phase already connected (or empty).
    trivially_zero: bool,
}

fn setup(u: &ScalarField, phase: Phase, p: &ModelParams) -> PenaltySetup {
    let vals = phase_values(u, phase);
    let beta: Vec<f64> = vals
        .iter()
        .map(|s| beta_eps(*s, p.alpha, p.c1))
        .collect();
    let psi: Vec<f64> = vals.iter().map(|s| psi_eps(*s, p.alpha)).collect();
    let beta_nodes: Vec<usize> = (0..vals.len()).filter(|k| beta[*k] > 0.0).collect();
    let trivially_zero =
        beta_nodes.is_empty() || all_sources_freely_connected(&u.grid, &psi, &beta_nodes);
    PenaltySetup {
        vals,
        beta,
        psi,
        beta_nodes,
        trivially_zero,
    }
}

/// Value of the connectedness penalty for one phase.
///
/// With [`SamplingMode::All`] this is the exact double sum over all node
/// pairs weighted by `(hx hy)^2`; stratified sampling gives an unbiased
/// estimate of the same quantity.
pub fn connectedness_value(
    u: &ScalarField,
    phase: Phase,
    p: &ModelParams,
    sampling: &PairSampling,
) -> Result<f64> {
    let st = setup(u, phase, p);
    if st.trivially_zero {
        return Ok(0.0);
    }
    let cell = u.grid.cell_area();
    let sources = select_sources(&st.beta_nodes, sampling);
    let mut total = 0.0;
    for (src, w_src) in sources {
        let geo = geodesic_from(&u.grid, &st.psi, src);
        let mut s1 = 0.0;
        for y in &st.beta_nodes {
            s1 += st.beta[*y] * geo.dist[*y];
        }
        total += w_src * st.beta[src] * s1;
    }
    Ok(total * cell * cell)
}

/// Gradient of the connectedness penalty as a function of the nodal
/// values: component `v` is the exact partial derivative of
/// [`connectedness_value`] with respect to `u[v]`, so for any direction
/// `b`, `d/dt value(u + t b)` at `t = 0` equals the plain dot product
/// `sum_v gradient[v] * b[v]` (exact under [`SamplingMode::All`] wherever
/// shortest paths are unique). The h^4 factor of the double integral is
/// baked in, matching the value.
pub fn connectedness_gradient(
    u: &ScalarField,
    phase: Phase,
    p: &ModelParams,
    sampling: &PairSampling,
) -> Result<ScalarField> {
    connectedness_gradient_detailed(u, phase, p, sampling).map(|d| d.gradient)
}

pub struct GradientResult {
    pub gradient: ScalarField,
    /// Any source tree reported a positive-cost path tie; the gradient is
    /// a valid subgradient but finite differences may disagree.
    pub tie_detected: bool,
}

pub fn connectedness_gradient_detailed(
    u: &ScalarField,
    phase: Phase,
    p: &ModelParams,
    sampling: &PairSampling,
) -> Result<GradientResult> {
    let grid = &u.grid;
    let st = setup(u, phase, p);
    let mut grad = vec![0.0; grid.n_nodes()];
    let mut tie = false;
    if !st.trivially_zero {
        let sources = select_sources(&st.beta_nodes, sampling);
        let bprime: Vec<f64> = st
            .vals
            .iter()
            .map(|s| beta_eps_prime(*s, p.alpha, p.c1))
            .collect();
        let pprime: Vec<f64> = st.vals.iter().map(|s| psi_eps_prime(*s, p.alpha)).collect();
        let mut subtree = vec![0.0; grid.n_nodes()];
        for (src, w_src) in sources {
            let geo = geodesic_from(grid, &st.psi, src);
            tie |= geo.tie_detected;
            let b_src = st.beta[src];
            let scale = w_src * b_src;

            // Chain terms through the profile at both endpoints.
            let mut s1 = 0.0;
            for y in &st.beta_nodes {
                let d = geo.dist[*y];
                s1 += st.beta[*y] * d;
                grad[*y] += scale * bprime[*y] * d;
            }
            grad[src] += w_src * bprime[src] * s1;

            // Path terms: every tree edge (pred[v], v) is shared by all
            // targets in the subtree below v. The half-length of the edge
            // deposits at both endpoints through the metric derivative.
            for x in subtree.iter_mut() {
                *x = 0.0;
            }
            for y in &st.beta_nodes {
                subtree[*y] = st.beta[*y];
            }
            for v in geo.order.iter().rev() {
                let v = *v as usize;
                let pr = geo.pred[v];
                if pr == NO_PRED {
                    continue;
                }
                let t = subtree[v];
                if t != 0.0 {
                    let half = 0.5 * edge_len(grid, pr, v);
                    grad[v] += scale * t * half * pprime[v];
                    grad[pr] += scale * t * half * pprime[pr];
                    subtree[pr] += t;
                }
            }
        }
        let cell = grid.cell_area();
        let factor = match phase {
            Phase::One => cell * cell,
            Phase::Zero => -(cell * cell),
        };
        for x in grad.iter_mut() {
            *x *= factor;
        }
    }
    Ok(GradientResult {
        gradient: ScalarField {
            grid: grid.clone(),
            values: grad,
        },
        tie_detected: tie,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{create_grid, ScalarField};

    fn test_params(alpha: f64) -> ModelParams {
        ModelParams::new(0.01, 0.0, 1e-6, 2.0, 1.0, 0.0, Some(alpha), 0.25, 0.3).unwrap()
    }

    #[test]
    fn profile_values_at_alpha_035() {
        let alpha: f64 = 0.35;
        let c1 = 6.0 / (alpha * alpha * alpha);
        assert!((c1 - 139.9416909620991).abs() < 1e-10);
        assert_eq!(beta_eps(1.0 - alpha, alpha, c1), 0.0);
        assert_eq!(beta_eps(0.2, alpha, c1), 0.0);
        // beta(1) = c1 alpha^2 / 2 = 3/alpha
        assert!((beta_eps(1.0, alpha, c1) - 3.0 / alpha).abs() < 1e-12);
        assert!((beta_eps(1.0, alpha, c1) - 8.571428571428571).abs() < 1e-12);
        assert!((psi_eps(0.0, alpha) - 0.21125).abs() < 1e-16);
        assert_eq!(psi_eps(1.0 - alpha, alpha), 0.0);
        assert_eq!(psi_eps(1.0, alpha), 0.0);
    }

    #[test]
    fn beta_ramp_integrates_to_one() {
        // Simpson over [1-alpha, 1]
        for alpha in [0.35, 0.068, 0.2] {
            let c1 = 6.0 / (alpha * alpha * alpha);
            let m = 2000;
            let h = alpha / m as f64;
            let mut s = 0.0;
            for k in 0..m {
                let a = 1.0 - alpha + k as f64 * h;
                s += h / 6.0
                    * (beta_eps(a, alpha, c1)
                        + 4.0 * beta_eps(a + 0.5 * h, alpha, c1)
                        + beta_eps(a + h, alpha, c1));
            }
            assert!((s - 1.0).abs() < 1e-9, "alpha {alpha}: integral {s}");
        }
    }

    #[test]
    fn profiles_are_c1_at_the_knee() {
        let alpha: f64 = 0.35;
        let c1 = 6.0 / (alpha * alpha * alpha);
        let h = 1e-7;
        for s in [0.3, 0.64, 0.65, 0.66, 0.9] {
            let fd = (beta_eps(s + h, alpha, c1) - beta_eps(s - h, alpha, c1)) / (2.0 * h);
            assert!((fd - beta_eps_prime(s, alpha, c1)).abs() < 1e-5);
            let fd = (psi_eps(s + h, alpha) - psi_eps(s - h, alpha)) / (2.0 * h);
            assert!((fd - psi_eps_prime(s, alpha)).abs() < 1e-5);
        }
    }

    #[test]
    fn geodesic_steps_on_uniform_weight() {
        let g = create_grid(4, 4, 0.0, 1.0, 0.0, 1.0).unwrap();
        let w = vec![1.0; 16];
        let geo = geodesic_from(&g, &w, 0);
        let h = 0.25;
        assert_eq!(geo.dist[0], 0.0);
        assert!((geo.dist[1] - h).abs() < 1e-15); // axis neighbor
        assert!((geo.dist[4] - h).abs() < 1e-15);
        assert!((geo.dist[5] - 2.0f64.sqrt() * h).abs() < 1e-15); // diagonal
        assert_eq!(geo.pred[0], NO_PRED);
    }

    #[test]
    fn geodesic_zero_weight_is_free() {
        let g = create_grid(6, 6, 0.0, 1.0, 0.0, 1.0).unwrap();
        let w = vec![0.0; 36];
        let geo = geodesic_from(&g, &w, 7);
        assert!(geo.dist.iter().all(|d| *d == 0.0));
        assert!(!geo.tie_detected); // zero-cost coincidences are benign
    }

    #[test]
    fn pred_walk_reaches_source_with_matching_cost() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let g = create_grid(8, 7, 0.0, 1.0, 0.0, 1.0).unwrap();
        for _ in 0..10 {
            let w: Vec<f64> = (0..56)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect();
            let src = rng.gen_range(0..56);
            let geo = geodesic_from(&g, &w, src);
            for start in 0..56usize {
                let mut v = start;
                let mut cost = 0.0;
                let mut hops = 0;
                while v != src {
                    let pr = geo.pred[v];
                    assert_ne!(pr, NO_PRED, "pred chain broke at {v}");
                    cost += edge_len(&g, pr, v) * 0.5 * (w[pr] + w[v]);
                    v = pr;
                    hops += 1;
                    assert!(hops <= 56, "pred chain cycled");
                }
                assert!(
                    (cost - geo.dist[start]).abs() <= 1e-12 * (1.0 + geo.dist[start]),
                    "path cost {cost} vs dist {}",
                    geo.dist[start]
                );
            }
        }
    }

    /// Reference shortest paths: edge relaxation sweeps to a fixed point.
    fn bellman_ford(g: &Grid2D, w: &[f64], src: usize) -> Vec<f64> {
        let n = g.n_nodes();
        let nx = g.nx as isize;
        let ny = g.ny as isize;
        let diag = (g.hx * g.hx + g.hy * g.hy).sqrt();
        let mut dist = vec![f64::INFINITY; n];
        dist[src] = 0.0;
        loop {
            let mut changed = false;
            for v in 0..n {
                if dist[v].is_infinite() {
                    continue;
                }
                let i = (v % g.nx) as isize;
                let j = (v / g.nx) as isize;
                for dj in -1..=1isize {
                    for di in -1..=1isize {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i + di, j + dj);
                        if ni < 0 || ni >= nx || nj < 0 || nj >= ny {
                            continue;
                        }
                        let u = (nj * nx + ni) as usize;
                        let len = if di != 0 && dj != 0 {
                            diag
                        } else if di != 0 {
                            g.hx
                        } else {
                            g.hy
                        };
                        let cand = dist[v] + len * 0.5 * (w[v] + w[u]);
                        if cand < dist[u] {
                            dist[u] = cand;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return dist;
            }
        }
    }

    #[test]
    fn dijkstra_matches_relaxation_fixed_point() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for trial in 0..20 {
            let nx = rng.gen_range(2..=6);
            let ny = rng.gen_range(2..=6);
            let g = create_grid(nx, ny, 0.0, 1.0, 0.0, 1.0).unwrap();
            let w: Vec<f64> = (0..nx * ny)
                .map(|_| {
                    // duplicate weight levels on purpose: exercises ties
                    let levels = [0.0, 0.0, 0.5, 1.0, 2.0];
                    levels[rng.gen_range(0..levels.len())]
                })
                .collect();
            let src = rng.gen_range(0..nx * ny);
            let geo = geodesic_from(&g, &w, src);
            let bf = bellman_ford(&g, &w, src);
            for k in 0..nx * ny {
                assert_eq!(
                    geo.dist[k], bf[k],
                    "trial {trial}: node {k} dist mismatch"
                );
            }
        }
    }

    #[test]
    fn geodesic_symmetry_and_triangle_sampled() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        let g = create_grid(9, 9, 0.0, 1.0, 0.0, 1.0).unwrap();
        let w: Vec<f64> = (0..81).map(|_| rng.gen_range(0.0..1.5)).collect();
        let a = rng.gen_range(0..81);
        let b = rng.gen_range(0..81);
        let c = rng.gen_range(0..81);
        let from_a = geodesic_from(&g, &w, a);
        let from_b = geodesic_from(&g, &w, b);
        let rel = 1e-12 * (1.0 + from_a.dist[b]);
        assert!((from_a.dist[b] - from_b.dist[a]).abs() <= rel);
        assert!(from_a.dist[c] <= from_a.dist[b] + from_b.dist[c] + rel);
    }

    /// Two 1-valued squares separated by a vertical 0-valued channel of
    /// `gap` columns, on an n x n grid.
    fn two_bumps(n: usize, gap: usize) -> ScalarField {
        let g = create_grid(n, n, 0.0, 1.0, 0.0, 1.0).unwrap();
        let lobe = (n - gap) / 2;
        ScalarField::from_fn(&g, |x, y| {
            let i = (x * n as f64) as usize;
            let j = (y * n as f64) as usize;
            let in_y = j >= n / 4 && j < 3 * n / 4;
            if in_y && (i < lobe || i >= n - lobe) {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn value_zero_for_connected_phase() {
        let g = create_grid(12, 12, 0.0, 1.0, 0.0, 1.0).unwrap();
        let u = ScalarField::constant(&g, 1.0);
        let p = test_params(0.35);
        let v = connectedness_value(&u, Phase::One, &p, &PairSampling::all()).unwrap();
        assert_eq!(v, 0.0);
        // phase zero of the same field is empty -> also zero
        let v = connectedness_value(&u, Phase::Zero, &p, &PairSampling::all()).unwrap();
        assert_eq!(v, 0.0);
    }

    /// Like [`two_bumps`] but with lobes of fixed width `w` flanking the
    /// channel, so varying the gap leaves the lobe mass unchanged.
    fn two_bumps_fixed_mass(n: usize, gap: usize, w: usize) -> ScalarField {
        let g = create_grid(n, n, 0.0, 1.0, 0.0, 1.0).unwrap();
        let left_hi = (n - gap) / 2;
        let right_lo = (n + gap) / 2;
        ScalarField::from_fn(&g, |x, y| {
            let i = (x * n as f64) as usize;
            let j = (y * n as f64) as usize;
            let in_y = j >= n / 4 && j < 3 * n / 4;
            let in_left = i + w >= left_hi && i < left_hi;
            let in_right = i >= right_lo && i < right_lo + w;
            if in_y && (in_left || in_right) {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn value_positive_and_monotone_in_gap() {
        // Same lobe mass on both sides; only the channel width changes.
        let p = test_params(0.35);
        let v4 = connectedness_value(
            &two_bumps_fixed_mass(20, 4, 4),
            Phase::One,
            &p,
            &PairSampling::all(),
        )
        .unwrap();
        let v8 = connectedness_value(
            &two_bumps_fixed_mass(20, 8, 4),
            Phase::One,
            &p,
            &PairSampling::all(),
        )
        .unwrap();
        assert!(v4 > 0.0);
        assert!(v8 > v4, "wider channel must cost more: {v8} vs {v4}");
    }

    #[test]
    fn phase_zero_mirrors_phase_one() {
        let p = test_params(0.35);
        let u = two_bumps(16, 4);
        let mut flipped = u.clone();
        for x in flipped.values.iter_mut() {
            *x = 1.0 - *x;
        }
        let v1 = connectedness_value(&u, Phase::One, &p, &PairSampling::all()).unwrap();
        let v0 = connectedness_value(&flipped, Phase::Zero, &p, &PairSampling::all()).unwrap();
        assert!((v1 - v0).abs() <= 1e-12 * v1.abs());
    }

    #[test]
    fn gradient_zero_on_connected_phase() {
        let g = create_grid(10, 10, 0.0, 1.0, 0.0, 1.0).unwrap();
        let u = ScalarField::constant(&g, 1.0);
        let p = test_params(0.35);
        let gr = connectedness_gradient(&u, Phase::One, &p, &PairSampling::all()).unwrap();
        assert!(gr.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_nonpositive_on_channel() {
        // The penalty wants the channel filled: pushing u up there lowers
        // the cost, so the gradient is <= 0 on channel nodes.
        let p = test_params(0.35);
        let u = two_bumps(16, 4);
        let gr = connectedness_gradient(&u, Phase::One, &p, &PairSampling::all()).unwrap();
        let n = 16;
        for j in n / 4..3 * n / 4 {
            for i in 6..10 {
                let v = gr.values[j * n + i];
                assert!(v <= 1e-14, "channel node ({i},{j}) has gradient {v}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Smooth two-lobe field, smooth bump direction, central FD. The
        // lobes are deliberately asymmetric: a mirror-symmetric field has
        // exactly tied shortest paths, where the value is not differentiable.
        let n = 12;
        let g = create_grid(n, n, 0.0, 1.0, 0.0, 1.0).unwrap();
        let u = ScalarField::from_fn(&g, |x, y| {
            let l1 = (-((x - 0.24) * (x - 0.24) + (y - 0.47) * (y - 0.47)) / 0.02).exp();
            let l2 = (-((x - 0.76) * (x - 0.76) + (y - 0.55) * (y - 0.55)) / 0.023).exp();
            (0.92 * l1 + 0.87 * l2).min(1.0) + 0.05 + 0.008 * x + 0.005 * y
        });
        let p = test_params(0.35);
        let all = PairSampling::all();
        let det = connectedness_gradient_detailed(&u, Phase::One, &p, &all).unwrap();
        assert!(!det.tie_detected, "test field hit a path tie; adjust it");
        let bump = ScalarField::from_fn(&g, |x, y| {
            (2.0 * std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).cos()
        });
        let t = 1e-6;
        let mut up = u.clone();
        let mut dn = u.clone();
        for k in 0..up.values.len() {
            up.values[k] += t * bump.values[k];
            dn.values[k] -= t * bump.values[k];
        }
        let vp = connectedness_value(&up, Phase::One, &p, &all).unwrap();
        let vm = connectedness_value(&dn, Phase::One, &p, &all).unwrap();
        let fd = (vp - vm) / (2.0 * t);
        let lin: f64 = det
            .gradient
            .values
            .iter()
            .zip(&bump.values)
            .map(|(gv, bv)| gv * bv)
            .sum();
        assert!(
            (fd - lin).abs() <= 1e-3 * fd.abs().max(lin.abs()),
            "fd {fd} vs linearized {lin}"
        );
    }

    #[test]
    fn stratified_equals_all_when_sources_fit() {
        let p = test_params(0.35);
        let u = two_bumps(16, 4);
        let all = connectedness_value(&u, Phase::One, &p, &PairSampling::all()).unwrap();
        let strat =
            connectedness_value(&u, Phase::One, &p, &PairSampling::stratified(10_000, 7))
                .unwrap();
        assert_eq!(all, strat);
    }

    #[test]
    fn stratified_estimator_tracks_exact_value() {
        let p = test_params(0.35);
        let u = two_bumps(16, 6);
        let exact = connectedness_value(&u, Phase::One, &p, &PairSampling::all()).unwrap();
        let mut acc = 0.0;
        let reps = 200;
        for seed in 0..reps {
            acc += connectedness_value(&u, Phase::One, &p, &PairSampling::stratified(8, seed))
                .unwrap();
        }
        let mean = acc / reps as f64;
        assert!(
            (mean - exact).abs() < 0.1 * exact,
            "mean {mean} vs exact {exact}"
        );
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = test_params(0.35);
        let u = two_bumps(16, 6);
        let s1 = connectedness_value(&u, Phase::One, &p, &PairSampling::stratified(8, 42))
            .unwrap();
        let s2 = connectedness_value(&u, Phase::One, &p, &PairSampling::stratified(8, 42))
            .unwrap();
        assert_eq!(s1, s2);
    }
}
