//! Semi-implicit time stepping for the penalized gradient flow
//!
//!   (u^n - u^{n-1}) / tau = L w^n - lambda (u^n - m),
//!   w^n = -(eps/c0) L u^n + a(u^{n-1}) u^n / (c0 eps) + f^{n-1},
//!
//! where `L` is the reflecting five-point Laplacian, `a` is the linearized
//! well coefficient and `f` collects the connectedness forcing terms
//! `zeta eps^{-kappa} grad C` evaluated at the previous iterate. The well
//! linearization satisfies `a(s) s = W'(s)`, so a stationary point of the
//! scheme is a stationary point of the energy.
//!
//! Both implicit operators are reduced to one symmetric system for the
//! zero-mean part of `u^n` by applying the pseudo-inverse of `-L` to the
//! first equation, so that each step costs one Krylov solve. The
//! pseudo-inverse and the preconditioner act in the cosine eigenbasis of
//! the stencil; the Krylov iteration is MINRES because the reduced
//! operator, while symmetric, need not be definite when `a` dips negative.
//! Means are handled exactly: the mean of `u^n` equals `m` by
//! construction, which is what makes long runs conserve mass to round-off.

use crate::connect::{connectedness_gradient, connectedness_value, PairSampling, Phase};
use crate::energy::{ok_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{integrate, laplacian_neumann, Grid2D, ScalarField};
use crate::params::ModelParams;
use crate::spectral::CosineBasis;
use std::io::Write;

/// Coefficient of the semi-implicit well split:
/// `a(s) = ((s-1)^2 + s(s-1)) / 2`, chosen so that `a(s) s = W'(s)`.
pub fn linearized_well_coefficient(s: f64) -> f64 {
    0.5 * ((s - 1.0) * (s - 1.0) + s * (s - 1.0))
}

/// Relative residual every implicit solve must reach.
pub const STEP_SOLVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: ScalarField,
    /// Chemical potential of the last completed step; zero before any step.
    pub w: ScalarField,
    pub step: usize,
    pub time: f64,
    pub params: ModelParams,
}

impl FlowState {
    pub fn new(u: ScalarField, params: ModelParams) -> FlowState {
        let w = ScalarField::constant(&u.grid, 0.0);
        FlowState {
            u,
            w,
            step: 0,
            time: 0.0,
            params,
        }
    }
}

/// Advance one step using the parameters carried by the state. Builds the
/// spectral context on every call; hot loops should hold a [`Stepper`].
pub fn step(state: &FlowState, sampling: &PairSampling) -> Result<FlowState> {
    Stepper::new(&state.u.grid, &state.params)?.step(state, sampling)
}

/// Termination policy for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_steps: usize,
    /// Stop early once `max |u^n - u^{n-1}| / tau` falls below this.
    pub du_tol: f64,
}

impl Default for StopRule {
    fn default() -> StopRule {
        StopRule {
            max_steps: 200_000,
            du_tol: 1e-6,
        }
    }
}

/// Diagnostics of one implicit solve.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub iterations: usize,
    /// True relative residual of the reduced system after the solve.
    pub residual: f64,
}

/// Reusable stepping context: eigenbasis and the spectral part of the
/// reduced operator, which depend only on grid and parameters.
pub struct Stepper {
    grid: Grid2D,
    params: ModelParams,
    basis: CosineBasis,
    /// `(1/tau + lambda) / mu_k + (eps/c0) mu_k` per mode, zero at mode 0.
    diag: Vec<f64>,
    diag_min: f64,
}

impl Stepper {
    pub fn new(grid: &Grid2D, params: &ModelParams) -> Result<Stepper> {
        params.validate()?;
        let basis = CosineBasis::new(grid);
        let implicit = 1.0 / params.tau + params.lambda;
        let mobility = params.eps / params.c0;
        let mut diag = vec![0.0; grid.n_nodes()];
        let mut diag_min = f64::INFINITY;
        for (d, mu) in diag.iter_mut().zip(basis.mu.iter()).skip(1) {
            *d = implicit / mu + mobility * mu;
            diag_min = diag_min.min(*d);
        }
        Ok(Stepper {
            grid: grid.clone(),
            params: params.clone(),
            basis,
            diag,
            diag_min,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Connectedness forcing `zeta1 eps^-kappa grad C1 + zeta2 eps^-kappa
    /// grad C2` at the given iterate; `None` when both weights vanish.
    fn forcing(&self, u: &ScalarField, sampling: &PairSampling) -> Result<Option<Vec<f64>>> {
        let p = &self.params;
        if p.zeta1 == 0.0 && p.zeta2 == 0.0 {
            return Ok(None);
        }
        let scale = p.eps.powf(-p.kappa);
        let mut f = vec![0.0; self.grid.n_nodes()];
        if p.zeta1 != 0.0 {
            let g = connectedness_gradient(u, Phase::One, p, sampling)?;
            for (fi, gi) in f.iter_mut().zip(g.values.iter()) {
                *fi += p.zeta1 * scale * gi;
            }
        }
        if p.zeta2 != 0.0 {
            let g = connectedness_gradient(u, Phase::Zero, p, sampling)?;
            for (fi, gi) in f.iter_mut().zip(g.values.iter()) {
                *fi += p.zeta2 * scale * gi;
            }
        }
        Ok(Some(f))
    }

    pub fn step(&self, state: &FlowState, sampling: &PairSampling) -> Result<FlowState> {
        self.step_detailed(state, sampling).map(|(s, _)| s)
    }

    pub fn step_detailed(
        &self,
        state: &FlowState,
        sampling: &PairSampling,
    ) -> Result<(FlowState, StepInfo)> {
        let p = &self.params;
        let grid = &self.grid;
        let n = grid.n_nodes();
        if state.u.values.len() != n {
            return Err(Error::InvalidShape(format!(
                "state holds {} values but the stepper grid has {}",
                state.u.values.len(),
                n
            )));
        }
        if !state.u.is_finite() {
            return Err(Error::NanDetected { step: state.step });
        }

        let inv_c0eps = 1.0 / (p.c0 * p.eps);
        let a: Vec<f64> = state
            .u
            .values
            .iter()
            .map(|s| linearized_well_coefficient(*s))
            .collect();
        let forcing = self.forcing(&state.u, sampling)?;

        // Right-hand side in the eigenbasis: the transported previous
        // iterate plus the explicit pieces `-P[a m / (c0 eps) + f]`.
        let mut scratch = Vec::new();
        let mut uhat = Vec::new();
        self.basis.forward(&state.u.values, &mut scratch, &mut uhat);
        let explicit: Vec<f64> = match &forcing {
            Some(f) => a
                .iter()
                .zip(f.iter())
                .map(|(ai, fi)| ai * p.m_bar * inv_c0eps + fi)
                .collect(),
            None => a.iter().map(|ai| ai * p.m_bar * inv_c0eps).collect(),
        };
        let mut rhs = Vec::new();
        self.basis.forward(&explicit, &mut scratch, &mut rhs);
        for k in 1..n {
            rhs[k] = uhat[k] / (p.tau * self.basis.mu[k]) - rhs[k];
        }
        rhs[0] = 0.0;

        // Preconditioner: the spectral diagonal shifted by the mean well
        // coefficient, floored away from zero so it stays positive even if
        // the well linearization is negative on average.
        let a_mean = a.iter().sum::<f64>() / n as f64;
        let shift = (a_mean * inv_c0eps).max(-0.9 * self.diag_min);
        let mut precond_max: f64 = 0.0;
        for d in self.diag.iter().skip(1) {
            precond_max = precond_max.max(d + shift);
        }

        let mut phys = Vec::new();
        let mut work = Vec::new();
        let mut apply = |x: &[f64], out: &mut Vec<f64>| {
            self.basis.inverse(x, &mut scratch, &mut phys);
            for (v, ai) in phys.iter_mut().zip(a.iter()) {
                *v *= ai * inv_c0eps;
            }
            self.basis.forward(&phys, &mut scratch, &mut work);
            out.clear();
            out.extend_from_slice(&work);
            out[0] = 0.0;
            for k in 1..n {
                out[k] += self.diag[k] * x[k];
            }
        };
        let msolve = |r: &[f64], out: &mut Vec<f64>| {
            out.clear();
            out.resize(r.len(), 0.0);
            for k in 1..r.len() {
                out[k] = r[k] / (self.diag[k] + shift);
            }
        };

        let norm_b = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        // `|r|_2 <= sqrt(max M) |r|_{M^-1}`, so this threshold on the MINRES
        // residual estimate guarantees the true relative tolerance.
        let thresh = STEP_SOLVE_TOL * norm_b / precond_max.sqrt().max(1.0e-300);
        let max_iter = 600;
        let (x, iterations) = pminres(&mut apply, msolve, &rhs, thresh, max_iter);

        // True residual of the reduced system.
        let mut bx = Vec::new();
        apply(&x, &mut bx);
        let rnorm = rhs
            .iter()
            .zip(bx.iter())
            .map(|(b, ax)| (b - ax) * (b - ax))
            .sum::<f64>()
            .sqrt();
        let residual = if norm_b > 0.0 { rnorm / norm_b } else { 0.0 };
        if !residual.is_finite() || residual > 10.0 * STEP_SOLVE_TOL {
            return Err(Error::SolverStalled {
                context: "implicit flow step",
                residual,
                iterations,
            });
        }

        // Assemble u^n = m + zero-mean part; re-center to keep the mass
        // identity exact against transform round-off.
        let mut u_new = Vec::new();
        self.basis.inverse(&x, &mut scratch, &mut u_new);
        let drift = u_new.iter().sum::<f64>() / n as f64;
        for v in u_new.iter_mut() {
            *v += p.m_bar - drift;
        }
        let u_new = ScalarField {
            grid: grid.clone(),
            values: u_new,
        };
        if !u_new.is_finite() {
            return Err(Error::NanDetected {
                step: state.step + 1,
            });
        }

        // Recover the potential pointwise from its defining equation.
        let lap_u = laplacian_neumann(&u_new);
        let mobility = p.eps / p.c0;
        let mut w = vec![0.0; n];
        for k in 0..n {
            let base = -mobility * lap_u.values[k] + a[k] * u_new.values[k] * inv_c0eps;
            w[k] = match &forcing {
                Some(f) => base + f[k],
                None => base,
            };
        }
        let w = ScalarField {
            grid: grid.clone(),
            values: w,
        };

        Ok((
            FlowState {
                u: u_new,
                w,
                step: state.step + 1,
                time: state.time + p.tau,
                params: p.clone(),
            },
            StepInfo {
                iterations,
                residual,
            },
        ))
    }
}

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator
/// with a symmetric positive definite preconditioner, after Paige and
/// Saunders. Returns once the preconditioned residual estimate drops to
/// `thresh` or the iteration cap is hit.
fn pminres(
    apply: &mut dyn FnMut(&[f64], &mut Vec<f64>),
    msolve: impl Fn(&[f64], &mut Vec<f64>),
    b: &[f64],
    thresh: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q.iter()).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = Vec::new();
    msolve(&r1, &mut y);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq <= 0.0 {
        return (x, 0); // b = 0 in exact arithmetic
    }
    let beta1 = beta1_sq.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = Vec::new();
    let mut iterations = 0;
    for itn in 1..=max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(y.iter()) {
            *vi = yi * s;
        }
        apply(&v, &mut av);
        if itn >= 2 {
            let c = beta / oldb;
            for (ai, ri) in av.iter_mut().zip(r1.iter()) {
                *ai -= c * ri;
            }
        }
        let alfa = dot(&v, &av);
        let c = alfa / beta;
        for (ai, ri) in av.iter_mut().zip(r2.iter()) {
            *ai -= c * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        std::mem::swap(&mut r2, &mut av);
        msolve(&r2, &mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        beta = if beta_sq > 0.0 { beta_sq.sqrt() } else { 0.0 };

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        let denom = 1.0 / gamma;
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= thresh || beta == 0.0 {
            break;
        }
    }
    (x, iterations)
}

/// One energy log entry; `c1`/`c2` are the weighted connectedness terms
/// that enter the total alongside the local and nonlocal parts.
#[derive(Debug, Clone)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    pub energy: EnergyBreakdown,
    pub mass: f64,
}

/// Full trajectory summary returned by [`run`].
#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: FlowState,
    pub rows: Vec<EnergyRow>,
    /// True when the `du_tol` criterion fired before `max_steps`.
    pub stopped_by_tolerance: bool,
}

/// Per-step sampling seed: decorrelates stratified draws between steps
/// while keeping the whole trajectory a pure function of the base seed.
pub fn sampling_for_step(base: &PairSampling, step: usize) -> PairSampling {
    let mut s = base.clone();
    s.rng_seed = base
        .rng_seed
        .wrapping_add((step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    s
}

fn energy_row(
    u: &ScalarField,
    p: &ModelParams,
    sampling: &PairSampling,
    step: usize,
    time: f64,
) -> Result<EnergyRow> {
    let mut energy = ok_energy(u, p)?;
    let scale = p.eps.powf(-p.kappa);
    if p.zeta1 != 0.0 {
        energy.c1_term = p.zeta1 * scale * connectedness_value(u, Phase::One, p, sampling)?;
    }
    if p.zeta2 != 0.0 {
        energy.c2_term = p.zeta2 * scale * connectedness_value(u, Phase::Zero, p, sampling)?;
    }
    Ok(EnergyRow {
        step,
        time,
        energy,
        mass: integrate(u),
    })
}

/// Evolve `initial` under the scheme until the stop rule fires.
///
/// The conserved mean is read off the initial data, overriding whatever
/// `params.m_bar` holds. Energies are logged at step 0, every `log_every`
/// steps (0 means only first and last) and at the final step; `on_state`
/// is invoked for the initial state and after every completed step, so
/// callers can dump snapshots at any cadence they like.
pub fn run(
    initial: &ScalarField,
    params: &ModelParams,
    stop: &StopRule,
    sampling: &PairSampling,
    log_every: usize,
    mut on_state: impl FnMut(&FlowState),
) -> Result<RunResult> {
    if !initial.is_finite() {
        return Err(Error::NanDetected { step: 0 });
    }
    let mut p = params.clone();
    p.m_bar = integrate(initial) / initial.grid.area();
    let stepper = Stepper::new(&initial.grid, &p)?;

    let mut state = FlowState::new(initial.clone(), p.clone());
    on_state(&state);
    let mut rows = Vec::new();
    rows.push(energy_row(
        &state.u,
        &p,
        &sampling_for_step(sampling, 0),
        0,
        0.0,
    )?);
    let mut stopped_by_tolerance = false;
    while state.step < stop.max_steps {
        let step_sampling = sampling_for_step(sampling, state.step);
        let (next, _info) = stepper.step_detailed(&state, &step_sampling)?;
        let mut du_max = 0.0f64;
        for (a, b) in next.u.values.iter().zip(state.u.values.iter()) {
            du_max = du_max.max((a - b).abs());
        }
        state = next;
        on_state(&state);
        let converged = du_max / p.tau < stop.du_tol;
        let last = converged || state.step == stop.max_steps;
        if last || (log_every > 0 && state.step % log_every == 0) {
            rows.push(energy_row(
                &state.u,
                &p,
                &sampling_for_step(sampling, state.step),
                state.step,
                state.time,
            )?);
        }
        if converged {
            stopped_by_tolerance = true;
            break;
        }
    }
    Ok(RunResult {
        state,
        rows,
        stopped_by_tolerance,
    })
}

/// Write energy rows as CSV with a fixed header; values print in shortest
/// round-trip form.
pub fn write_energy_csv<W: Write>(w: &mut W, rows: &[EnergyRow]) -> Result<()> {
    writeln!(w, "step,time,interface,well,nonlocal,c1,c2,total,mass")?;
    for r in rows {
        let e = &r.energy;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            r.time,
            e.interface,
            e.well,
            e.nonlocal,
            e.c1_term,
            e.c2_term,
            e.total(),
            r.mass
        )?;
    }
    Ok(())
}

pub fn write_energy_csv_to_path(path: &std::path::Path, rows: &[EnergyRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_energy_csv(&mut f, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::double_well_prime;
    use crate::grid::create_grid;

    fn smooth_params(eps: f64, lambda: f64, tau: f64) -> ModelParams {
        ModelParams::new(eps, lambda, tau, 2.0, 0.0, 0.0, Some(0.35), 0.25, 0.3).unwrap()
    }

    #[test]
    fn well_linearization_reproduces_the_well_derivative() {
        assert_eq!(linearized_well_coefficient(1.0), 0.0);
        assert_eq!(linearized_well_coefficient(0.0), 0.5);
        assert_eq!(linearized_well_coefficient(0.5), 0.0);
        // a(s) s = W'(s) identically, and the minimum sits at s = 3/4.
        for k in 0..40 {
            let s = -0.5 + 0.05 * k as f64;
            let lhs = linearized_well_coefficient(s) * s;
            assert!((lhs - double_well_prime(s)).abs() < 1e-15);
        }
        assert!((linearized_well_coefficient(0.75) + 1.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let g = create_grid(20, 20, 0.0, 1.0, 0.0, 1.0).unwrap();
        let mut p = smooth_params(0.05, 50.0, 1e-5);
        p.m_bar = 0.3;
        let stepper = Stepper::new(&g, &p).unwrap();
        let state = FlowState::new(ScalarField::constant(&g, 0.3), p.clone());
        let (next, info) = stepper.step_detailed(&state, &PairSampling::all()).unwrap();
        for v in next.u.values.iter() {
            assert!((v - 0.3).abs() < 1e-12);
        }
        // The recovered potential is the constant a(m) m / (c0 eps).
        let expect = linearized_well_coefficient(0.3) * 0.3 / (p.c0 * p.eps);
        for v in next.w.values.iter() {
            assert!((v - expect).abs() < 1e-9 * expect.abs());
        }
        assert!(info.residual <= STEP_SOLVE_TOL * 10.0);
        // The standalone entry point reproduces the cached stepper.
        let via_free = step(&state, &PairSampling::all()).unwrap();
        assert_eq!(via_free.u.values, next.u.values);
    }

    #[test]
    fn step_satisfies_both_equations() {
        let g = create_grid(24, 16, 0.0, 1.0, 0.0, 1.5).unwrap();
        let p = smooth_params(0.06, 120.0, 2e-5);
        let u0 = ScalarField::from_fn(&g, |x, y| {
            0.35 + 0.25 * (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y / 1.5).cos()
        });
        let mut p = p;
        p.m_bar = u0.mean();
        let stepper = Stepper::new(&g, &p).unwrap();
        let state = FlowState::new(u0.clone(), p.clone());
        let (next, info) = stepper.step_detailed(&state, &PairSampling::all()).unwrap();
        assert!(info.residual <= STEP_SOLVE_TOL);

        // Potential equation holds pointwise by construction.
        let lap_u = laplacian_neumann(&next.u);
        let inv = 1.0 / (p.c0 * p.eps);
        for k in 0..g.n_nodes() {
            let a = linearized_well_coefficient(u0.values[k]);
            let rhs = -(p.eps / p.c0) * lap_u.values[k] + a * next.u.values[k] * inv;
            assert!((next.w.values[k] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        // Evolution equation: residual small against the size of its terms.
        let lap_w = laplacian_neumann(&next.w);
        let mut resid = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..g.n_nodes() {
            let dudt = (next.u.values[k] - u0.values[k]) / p.tau;
            let reaction = p.lambda * (next.u.values[k] - p.m_bar);
            resid += (dudt - lap_w.values[k] + reaction).powi(2);
            scale += dudt * dudt + lap_w.values[k].powi(2) + reaction * reaction;
        }
        assert!(
            resid.sqrt() <= 1e-5 * scale.sqrt(),
            "evolution residual {} vs scale {}",
            resid.sqrt(),
            scale.sqrt()
        );
    }

    #[test]
    fn mass_is_conserved_to_round_off() {
        let g = create_grid(24, 24, 0.0, 1.0, 0.0, 1.0).unwrap();
        let p = smooth_params(0.05, 200.0, 1e-5);
        let u0 = ScalarField::from_fn(&g, |x, y| {
            0.4 + 0.3 * (2.0 * std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos()
        });
        let m0 = integrate(&u0);
        let result = run(
            &u0,
            &p,
            &StopRule {
                max_steps: 50,
                du_tol: 0.0,
            },
            &PairSampling::all(),
            10,
            |_| {},
        )
        .unwrap();
        assert_eq!(result.state.step, 50);
        let m = integrate(&result.state.u);
        assert!((m - m0).abs() <= 1e-12 * g.area());
        for row in &result.rows {
            assert!((row.mass - m0).abs() <= 1e-12 * g.area());
        }
    }

    #[test]
    fn energy_decreases_without_forcing() {
        let g = create_grid(32, 32, 0.0, 1.0, 0.0, 1.0).unwrap();
        let p = smooth_params(0.04, 0.0, 5e-6);
        let u0 = ScalarField::from_fn(&g, |x, y| {
            0.5 + 0.2 * (2.0 * std::f64::consts::PI * x).cos()
                + 0.1 * (std::f64::consts::PI * y).cos()
        });
        let result = run(
            &u0,
            &p,
            &StopRule {
                max_steps: 40,
                du_tol: 0.0,
            },
            &PairSampling::all(),
            1,
            |_| {},
        )
        .unwrap();
        let totals: Vec<f64> = result.rows.iter().map(|r| r.energy.total()).collect();
        for pair in totals.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-8 * pair[0].abs(),
                "energy rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
        assert!(*totals.last().unwrap() < totals[0]);
    }

    #[test]
    fn trajectories_are_deterministic() {
        let g = create_grid(20, 20, 0.0, 1.0, 0.0, 1.0).unwrap();
        let mut p = smooth_params(0.06, 30.0, 1e-5);
        p.zeta1 = 0.4;
        let u0 = ScalarField::from_fn(&g, |x, y| {
            let b1 = f64::exp(-((x - 0.3).powi(2) + (y - 0.5).powi(2)) / 0.01);
            let b2 = f64::exp(-((x - 0.7).powi(2) + (y - 0.5).powi(2)) / 0.01);
            0.95 * (b1 + b2).min(1.0)
        });
        let sampling = PairSampling::stratified(12, 99);
        let go = || {
            run(
                &u0,
                &p,
                &StopRule {
                    max_steps: 5,
                    du_tol: 0.0,
                },
                &sampling,
                1,
                |_| {},
            )
            .unwrap()
        };
        let a = go();
        let b = go();
        assert_eq!(a.state.u.values, b.state.u.values);
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.energy.total(), rb.energy.total());
        }
    }

    #[test]
    fn forcing_shrinks_the_connectedness_penalty() {
        // Two separated blobs; the phase-one penalty must decrease under
        // an evolution driven by its own gradient.
        let g = create_grid(28, 28, 0.0, 1.0, 0.0, 1.0).unwrap();
        let mut p = smooth_params(0.05, 0.0, 2e-6);
        p.zeta1 = 0.05;
        let u0 = ScalarField::from_fn(&g, |x, y| {
            let d1 = ((x - 0.32).powi(2) + (y - 0.5).powi(2)).sqrt();
            let d2 = ((x - 0.68).powi(2) + (y - 0.5).powi(2)).sqrt();
            let t1 = 0.5 * (1.0 + ((0.13 - d1) / (2.0 * p.eps)).tanh());
            let t2 = 0.5 * (1.0 + ((0.13 - d2) / (2.0 * p.eps)).tanh());
            t1.max(t2)
        });
        let before = connectedness_value(&u0, Phase::One, &p, &PairSampling::all()).unwrap();
        assert!(before > 0.0, "setup must start disconnected");
        let result = run(
            &u0,
            &p,
            &StopRule {
                max_steps: 25,
                du_tol: 0.0,
            },
            &PairSampling::all(),
            0,
            |_| {},
        )
        .unwrap();
        let after =
            connectedness_value(&result.state.u, Phase::One, &p, &PairSampling::all()).unwrap();
        assert!(
            after < before,
            "penalty should drop: before {before}, after {after}"
        );
    }

    #[test]
    fn zero_steps_logs_only_the_initial_row() {
        let g = create_grid(10, 10, 0.0, 1.0, 0.0, 1.0).unwrap();
        let p = smooth_params(0.05, 10.0, 1e-5);
        let u0 = ScalarField::constant(&g, 0.25);
        let mut seen = 0;
        let result = run(
            &u0,
            &p,
            &StopRule {
                max_steps: 0,
                du_tol: 0.0,
            },
            &PairSampling::all(),
            1,
            |_| seen += 1,
        )
        .unwrap();
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.state.step, 0);
        assert_eq!(seen, 1);
        assert!(!result.stopped_by_tolerance);
    }

    #[test]
    fn tolerance_stop_fires_on_stationary_data() {
        let g = create_grid(12, 12, 0.0, 1.0, 0.0, 1.0).unwrap();
        let p = smooth_params(0.05, 25.0, 1e-5);
        let u0 = ScalarField::constant(&g, 0.4);
        let result = run(
            &u0,
            &p,
            &StopRule {
                max_steps: 100,
                du_tol: 1e-3,
            },
            &PairSampling::all(),
            1,
            |_| {},
        )
        .unwrap();
        assert!(result.stopped_by_tolerance);
        assert!(result.state.step < 100);
    }

    #[test]
    fn non_finite_initial_data_is_rejected() {
        let g = create_grid(8, 8, 0.0, 1.0, 0.0, 1.0).unwrap();
        let p = smooth_params(0.05, 10.0, 1e-5);
        let mut u0 = ScalarField::constant(&g, 0.3);
        u0.values[11] = f64::NAN;
        match run(
            &u0,
            &p,
            &StopRule::default(),
            &PairSampling::all(),
            1,
            |_| {},
        ) {
            Err(Error::NanDetected { step: 0 }) => {}
            other => panic!("expected NaN rejection, got {other:?}"),
        }
    }

    #[test]
    fn csv_has_fixed_header_and_one_line_per_row() {
        let rows = vec![EnergyRow {
            step: 3,
            time: 1.5e-5,
            energy: EnergyBreakdown {
                interface: 1.25,
                well: 0.5,
                nonlocal: 0.125,
                c1_term: 0.0,
                c2_term: 0.0,
            },
            mass: 0.3,
        }];
        let mut buf = Vec::new();
        write_energy_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,time,interface,well,nonlocal,c1,c2,total,mass"
        );
        assert_eq!(lines.next().unwrap(), "3,0.000015,1.25,0.5,0.125,0,0,1.875,0.3");
        assert!(lines.next().is_none());
    }
}
