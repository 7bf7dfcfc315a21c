//! The nonlocal interface energy and its ingredients.
//!
//! The functional splits as
//!
//! ```text
//! F(u) = (1/c0) int [ eps/2 |grad u|^2 + W(u)/eps ]  +  (lambda/2) |u - m|^2_{H^-1}
//! ```
//!
//! with the quartic well `W(s) = s^2 (s-1)^2 / 4` and the `H^-1` norm taken
//! with respect to the Neumann Laplacian on the domain rectangle. The
//! connectedness penalties live in [`crate::connect`]; their slots in the
//! breakdown are filled by callers that evaluate them.

use crate::error::{Error, Result};
use crate::grid::{integrate_product, laplacian_neumann, ScalarField};
use crate::params::ModelParams;

/// Quartic double well `W(s) = s^2 (s-1)^2 / 4`.
#[inline]
pub fn double_well(s: f64) -> f64 {
    let t = s * (s - 1.0);
    0.25 * t * t
}

/// Derivative `W'(s) = s (s-1) (2s-1) / 2`.
#[inline]
pub fn double_well_prime(s: f64) -> f64 {
    0.5 * s * (s - 1.0) * (2.0 * s - 1.0)
}

/// Default relative tolerance for the Poisson solves backing the
/// `H^-1` norm.
pub const POISSON_TOL: f64 = 1e-10;

/// Outcome of a Neumann Poisson solve.
pub struct PoissonSolve {
    pub phi: ScalarField,
    /// Mean of the right-hand side that had to be projected away for
    /// compatibility; nonzero input mass is silently removed.
    pub projected_mean: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `-lap phi = rhs` with reflecting (Neumann) boundaries by
/// conjugate gradients on the semidefinite five-point operator.
///
/// The right-hand side is projected to zero mean first (the compatible
/// part), the iterates are re-projected every iteration so round-off
/// cannot drift along the constant null space, and the returned potential
/// has zero mean. Convergence: `||r||_2 <= tol * ||rhs||_2`.
pub fn solve_neumann_poisson(rhs: &ScalarField, tol: f64) -> Result<ScalarField> {
    poisson_solve_detailed(rhs, tol).map(|s| s.phi)
}

pub fn poisson_solve_detailed(rhs: &ScalarField, tol: f64) -> Result<PoissonSolve> {
    let n = rhs.values.len();
    let nf = n as f64;
    let subtract_mean = |v: &mut [f64]| {
        let m: f64 = v.iter().sum::<f64>() / nf;
        for x in v.iter_mut() {
            *x -= m;
        }
        m
    };

    let mut b = rhs.values.clone();
    let projected_mean = subtract_mean(&mut b);
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut phi = ScalarField {
        grid: rhs.grid.clone(),
        values: vec![0.0; n],
    };
    if norm_b == 0.0 {
        return Ok(PoissonSolve {
            phi,
            projected_mean,
            iterations: 0,
            residual: 0.0,
        });
    }

    // CG on A = -laplacian_neumann. The operator is applied through the
    // shared stencil so the solve and the energy see the same matrix.
    let apply = |v: &ScalarField| -> Vec<f64> {
        let mut av = laplacian_neumann(v).values;
        for x in av.iter_mut() {
            *x = -*x;
        }
        av
    };

    let mut r = b;
    let mut p = ScalarField {
        grid: rhs.grid.clone(),
        values: r.clone(),
    };
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let max_iter = 60 * (rhs.grid.nx + rhs.grid.ny) + 200;
    for it in 0..max_iter {
        let ap = apply(&p);
        let pap: f64 = p.values.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            // Can only happen through round-off on the projected subspace.
            return Err(Error::SolverStalled {
                context: "neumann poisson",
                residual: rr.sqrt() / norm_b,
                iterations: it,
            });
        }
        let alpha = rr / pap;
        for k in 0..n {
            phi.values[k] += alpha * p.values[k];
            r[k] -= alpha * ap[k];
        }
        // Keep both iterate and residual orthogonal to constants.
        subtract_mean(&mut phi.values);
        subtract_mean(&mut r);
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if rr_new.sqrt() <= tol * norm_b {
            return Ok(PoissonSolve {
                phi,
                projected_mean,
                iterations: it + 1,
                residual: rr_new.sqrt() / norm_b,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p.values[k] = r[k] + beta * p.values[k];
        }
    }
    Err(Error::SolverStalled {
        context: "neumann poisson",
        residual: rr.sqrt() / norm_b,
        iterations: max_iter,
    })
}

/// Squared `H^-1` norm: `<v, (-lap)^-1 v>` under midpoint quadrature.
/// The input is projected to zero mean, matching the norm's domain.
pub fn hminus1_norm_sq(v: &ScalarField) -> Result<f64> {
    let sol = poisson_solve_detailed(v, POISSON_TOL)?;
    let mut v0 = v.clone();
    let mean = sol.projected_mean;
    for x in v0.values.iter_mut() {
        *x -= mean;
    }
    Ok(integrate_product(&sol.phi, &v0))
}

/// Squared gradient magnitude per cell from face-centered differences:
/// the squared difference across each interior face, divided evenly onto
/// the two adjacent cells. Reflecting boundaries contribute nothing.
/// Summed against the cell area this equals the discrete Dirichlet form
/// `-<u, lap u>` exactly.
pub(crate) fn grad_sq_cellwise(u: &ScalarField) -> Vec<f64> {
    let g = &u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    let ihx2 = 1.0 / (g.hx * g.hx);
    let ihy2 = 1.0 / (g.hy * g.hy);
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx.saturating_sub(1) {
            let d = v[row + i + 1] - v[row + i];
            let contrib = 0.5 * d * d * ihx2;
            out[row + i] += contrib;
            out[row + i + 1] += contrib;
        }
    }
    for j in 0..ny.saturating_sub(1) {
        let row = j * nx;
        for i in 0..nx {
            let d = v[row + i + nx] - v[row + i];
            let contrib = 0.5 * d * d * ihy2;
            out[row + i] += contrib;
            out[row + i + nx] += contrib;
        }
    }
    out
}

/// Itemized energy. The connectedness slots stay zero unless a caller
/// evaluates them (see [`crate::flow::run`]).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub interface: f64,
    pub well: f64,
    pub nonlocal: f64,
    pub c1_term: f64,
    pub c2_term: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.interface + self.well + self.nonlocal + self.c1_term + self.c2_term
    }
}

/// Evaluates the interface, well and nonlocal parts of the energy.
pub fn ok_energy(u: &ScalarField, p: &ModelParams) -> Result<EnergyBreakdown> {
    let cell = u.grid.cell_area();
    let gsq = grad_sq_cellwise(u);
    let interface: f64 =
        gsq.iter().sum::<f64>() * cell * (p.eps / 2.0) / p.c0;
    let well: f64 =
        u.values.iter().map(|s| double_well(*s)).sum::<f64>() * cell / (p.eps * p.c0);
    let nonlocal = if p.lambda == 0.0 {
        0.0
    } else {
        let mut dev = u.clone();
        for x in dev.values.iter_mut() {
            *x -= p.m_bar;
        }
        0.5 * p.lambda * hminus1_norm_sq(&dev)?
    };
    Ok(EnergyBreakdown {
        interface,
        well,
        nonlocal,
        c1_term: 0.0,
        c2_term: 0.0,
    })
}
