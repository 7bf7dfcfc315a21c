//! Run configuration: INI-style parsing and rendering, experiment presets,
//! and realization of initial conditions on the grid.
//!
//! A config file has four sections, with keys named after the fields they
//! populate:
//!
//! ```text
//! [grid]     nx, ny, x_min, x_max, y_min, y_max
//! [params]   eps, lambda, tau, kappa, zeta1, zeta2, alpha, s_exponent
//! [initial]  kind (+ kind-specific keys)
//! [run]      output_dir, log_every, snapshot_every, max_steps, du_tol,
//!            mode, max_sources, rng_seed
//! ```
//!
//! `m_bar` is never read from a file: it is always the mean of the realized
//! initial field, so the conserved flow starts exactly on its constraint.
//! Unknown keys are rejected, and every diagnostic carries the line number
//! (for malformed text) or the field name (for value constraints).

use std::path::PathBuf;

use oksim_core::connect::{PairSampling, SamplingMode};
use oksim_core::flow::StopRule;
use oksim_core::grid::{create_grid, read_field_from_path, Grid2D, ScalarField};
use oksim_core::params::ModelParams;

use crate::error::{CliError, Result};

/// How the initial field is produced. All analytic kinds are smoothed with
/// the equilibrium interface profile `u = (1 + tanh(d / (2√2 ε))) / 2`,
/// where `d` is the signed distance-like offset from the phase boundary, so
/// the produced values always lie in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Phase-one region `{ r < r0 + a cos(kθ) }` in polar coordinates about
    /// the domain center. Negative rim radii simply leave that sector empty,
    /// so `r0 = 0.02, a = 0.45, k = 2` gives two lobes pinched at the center.
    PolarCosine { r0: f64, a: f64, k: u32 },
    /// A disk of the given center and radius.
    Disk { center: (f64, f64), radius: f64 },
    /// A previously written field dump; its grid must match `[grid]` exactly
    /// and its values must already lie in `[0, 1]`.
    FieldFile { path: PathBuf },
}

/// Everything a simulation run needs, in validated form.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid2D,
    pub params: ModelParams,
    pub initial: InitialCondition,
    pub stop: StopRule,
    pub sampling: PairSampling,
    pub output_dir: PathBuf,
    pub log_every: usize,
    pub snapshot_every: usize,
}

fn field_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: message.into(),
    }
}

/// Builds the initial field on `grid`. `eps` sets the interface width of the
/// tanh smoothing; it must be positive. For [`InitialCondition::FieldFile`]
/// this reads the dump eagerly and checks its grid and value range.
pub fn realize_initial(
    grid: &Grid2D,
    initial: &InitialCondition,
    eps: f64,
) -> Result<ScalarField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(field_err(
            "params.eps",
            format!("must be positive and finite to smooth the initial condition, got {eps}"),
        ));
    }
    let width = 2.0 * std::f64::consts::SQRT_2 * eps;
    match initial {
        InitialCondition::PolarCosine { r0, a, k } => {
            if !r0.is_finite() || !a.is_finite() {
                return Err(field_err("initial.r0", "r0 and a must be finite"));
            }
            let cx = 0.5 * (grid.x_min + grid.x_max);
            let cy = 0.5 * (grid.y_min + grid.y_max);
            let rim = PolarRim::new(*r0, *a, *k);
            Ok(ScalarField::from_fn(grid, |x, y| {
                let signed = rim.signed_distance(x - cx, y - cy);
                0.5 * (1.0 + (signed / width).tanh())
            }))
        }
        InitialCondition::Disk { center, radius } => {
            if !(*radius > 0.0) || !radius.is_finite() {
                return Err(field_err(
                    "initial.radius",
                    format!("must be positive and finite, got {radius}"),
                ));
            }
            if !center.0.is_finite() || !center.1.is_finite() {
                return Err(field_err("initial.center_x", "center must be finite"));
            }
            let (cx, cy) = *center;
            Ok(ScalarField::from_fn(grid, |x, y| {
                let d = radius - (x - cx).hypot(y - cy);
                0.5 * (1.0 + (d / width).tanh())
            }))
        }
        InitialCondition::FieldFile { path } => {
            let u = read_field_from_path(path)?;
            if u.grid != *grid {
                return Err(field_err(
                    "initial.path",
                    format!(
                        "field file grid {}x{} on [{}, {}]x[{}, {}] does not match \
                         the [grid] section ({}x{} on [{}, {}]x[{}, {}])",
                        u.grid.nx,
                        u.grid.ny,
                        u.grid.x_min,
                        u.grid.x_max,
                        u.grid.y_min,
                        u.grid.y_max,
                        grid.nx,
                        grid.ny,
                        grid.x_min,
                        grid.x_max,
                        grid.y_min,
                        grid.y_max
                    ),
                ));
            }
            if let Some(bad) = u.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(field_err(
                    "initial.path",
                    format!("field file values must lie in [0, 1], found {bad}"),
                ));
            }
            Ok(u)
        }
    }
}

/// Signed distance to the boundary of `{ r < r0 + a cos(k theta) }`,
/// positive inside the set.
///
/// The rim is sampled as a dense closed polyline with the radius clamped at
/// zero, so petals that pinch off close through the center and the distance
/// stays honest across the pinch (a plain radial offset `rim - r` would
/// wildly overestimate how far interior points near the pinch axis are from
/// the boundary). Nearest-segment queries do a strided sweep over the
/// polyline vertices first and then refine every window that could still
/// hold the true minimum, which keeps field realization cheap on large
/// grids without giving up exactness.
struct PolarRim {
    pts: Vec<(f64, f64)>,
    r0: f64,
    a: f64,
    freq: f64,
    /// How far the true nearest point can sit from the best strided vertex.
    margin: f64,
}

const RIM_SEGMENTS: usize = 4096;
const RIM_STRIDE: usize = 8;

impl PolarRim {
    fn new(r0: f64, a: f64, k: u32) -> PolarRim {
        let freq = f64::from(k);
        let mut pts = Vec::with_capacity(RIM_SEGMENTS + 1);
        let mut seg_max: f64 = 0.0;
        for i in 0..=RIM_SEGMENTS {
            let th = std::f64::consts::TAU * i as f64 / RIM_SEGMENTS as f64;
            let rim = (r0 + a * (freq * th).cos()).max(0.0);
            let p = (rim * th.cos(), rim * th.sin());
            if let Some(&q) = pts.last() {
                seg_max = seg_max.max(dist2(p, q).sqrt());
            }
            pts.push(p);
        }
        let margin = (RIM_STRIDE as f64 + 1.0) * seg_max;
        PolarRim { pts, r0, a, freq, margin }
    }

    /// Distance from `(dx, dy)` (offsets from the figure center) to the rim,
    /// negated outside `{ r < rim(theta) }`.
    fn signed_distance(&self, dx: f64, dy: f64) -> f64 {
        let n = self.pts.len() - 1;
        let mut coarse2 = f64::MAX;
        let mut i = 0;
        while i <= n {
            coarse2 = coarse2.min(dist2(self.pts[i], (dx, dy)));
            i += RIM_STRIDE;
        }
        // Any strided vertex this close could be adjacent to the true
        // nearest segment; refine a full stride-wide window around each.
        let lim = coarse2.sqrt() + self.margin;
        let lim2 = lim * lim;
        let mut best2 = f64::MAX;
        let mut i = 0;
        while i <= n {
            if dist2(self.pts[i], (dx, dy)) <= lim2 {
                let lo = i as isize - RIM_STRIDE as isize;
                let hi = i as isize + RIM_STRIDE as isize;
                for j in lo..hi {
                    let jj = j.rem_euclid(n as isize) as usize;
                    best2 = best2.min(segment_dist2(
                        self.pts[jj],
                        self.pts[jj + 1],
                        (dx, dy),
                    ));
                }
            }
            i += RIM_STRIDE;
        }
        let inside = dx.hypot(dy) < self.r0 + self.a * (self.freq * dy.atan2(dx)).cos();
        if inside {
            best2.sqrt()
        } else {
            -best2.sqrt()
        }
    }
}

fn dist2(p: (f64, f64), q: (f64, f64)) -> f64 {
    let (ex, ey) = (p.0 - q.0, p.1 - q.1);
    ex * ex + ey * ey
}

fn segment_dist2(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let (fx, fy) = (p.0 - a.0, p.1 - a.1);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        ((fx * ex + fy * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (gx, gy) = (fx - t * ex, fy - t * ey);
    gx * gx + gy * gy
}

#[derive(Default)]
struct Builder {
    nx: Option<usize>,
    ny: Option<usize>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    y_min: Option<f64>,
    y_max: Option<f64>,

    eps: Option<f64>,
    lambda: Option<f64>,
    tau: Option<f64>,
    kappa: Option<f64>,
    zeta1: Option<f64>,
    zeta2: Option<f64>,
    alpha: Option<f64>,
    s_exponent: Option<f64>,

    kind: Option<String>,
    r0: Option<(f64, usize)>,
    a: Option<(f64, usize)>,
    k: Option<(u32, usize)>,
    center_x: Option<(f64, usize)>,
    center_y: Option<(f64, usize)>,
    radius: Option<(f64, usize)>,
    path: Option<(String, usize)>,

    output_dir: Option<String>,
    log_every: Option<usize>,
    snapshot_every: Option<usize>,
    max_steps: Option<usize>,
    du_tol: Option<f64>,
    mode: Option<SamplingMode>,
    max_sources: Option<usize>,
    rng_seed: Option<u64>,
}

fn num<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("key `{key}` has unparseable value `{value}`")))
}

/// Stores `value` into `slot`, rejecting duplicates of the same key.
fn put<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(parse_err(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Grid,
    Params,
    Initial,
    Run,
}

/// Parses config text into a fully validated [`RunConfig`]. Missing keys
/// fall back to defaults (unit-square domain centered at the origin, a mild
/// interface width, exhaustive pair sampling, the standard stop rule);
/// `nx`, `ny`, and the `[initial]` section are required. The initial field
/// is realized here so `params.m_bar` reflects it exactly.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut b = Builder::default();
    let mut section: Option<Section> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "unterminated section header"))?
                .trim();
            section = Some(match name {
                "grid" => Section::Grid,
                "params" => Section::Params,
                "initial" => Section::Initial,
                "run" => Section::Run,
                other => {
                    return Err(parse_err(
                        line,
                        format!("unknown section `[{other}]` (expected grid, params, initial, or run)"),
                    ))
                }
            });
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(parse_err(line, format!("key `{key}` has an empty value")));
        }
        let section =
            section.ok_or_else(|| parse_err(line, "key appears before any [section] header"))?;

        match (section, key) {
            (Section::Grid, "nx") => put(&mut b.nx, num(value, key, line)?, key, line)?,
            (Section::Grid, "ny") => put(&mut b.ny, num(value, key, line)?, key, line)?,
            (Section::Grid, "x_min") => put(&mut b.x_min, num(value, key, line)?, key, line)?,
            (Section::Grid, "x_max") => put(&mut b.x_max, num(value, key, line)?, key, line)?,
            (Section::Grid, "y_min") => put(&mut b.y_min, num(value, key, line)?, key, line)?,
            (Section::Grid, "y_max") => put(&mut b.y_max, num(value, key, line)?, key, line)?,

            (Section::Params, "eps") => put(&mut b.eps, num(value, key, line)?, key, line)?,
            (Section::Params, "lambda") => put(&mut b.lambda, num(value, key, line)?, key, line)?,
            (Section::Params, "tau") => put(&mut b.tau, num(value, key, line)?, key, line)?,
            (Section::Params, "kappa") => put(&mut b.kappa, num(value, key, line)?, key, line)?,
            (Section::Params, "zeta1") => put(&mut b.zeta1, num(value, key, line)?, key, line)?,
            (Section::Params, "zeta2") => put(&mut b.zeta2, num(value, key, line)?, key, line)?,
            (Section::Params, "alpha") => put(&mut b.alpha, num(value, key, line)?, key, line)?,
            (Section::Params, "s_exponent") => {
                put(&mut b.s_exponent, num(value, key, line)?, key, line)?
            }
            (Section::Params, "m_bar" | "c0" | "c1") => {
                return Err(parse_err(
                    line,
                    format!("key `{key}` is derived, not configurable: m_bar comes from the \
                             realized initial field and c0, c1 from the model constants"),
                ))
            }

            (Section::Initial, "kind") => {
                if !matches!(value, "polar_cosine" | "disk" | "field_file") {
                    return Err(parse_err(
                        line,
                        format!("unknown initial kind `{value}` (expected polar_cosine, disk, or field_file)"),
                    ));
                }
                put(&mut b.kind, value.to_string(), key, line)?
            }
            (Section::Initial, "r0") => {
                put(&mut b.r0, (num(value, key, line)?, line), key, line)?
            }
            (Section::Initial, "a") => put(&mut b.a, (num(value, key, line)?, line), key, line)?,
            (Section::Initial, "k") => put(&mut b.k, (num(value, key, line)?, line), key, line)?,
            (Section::Initial, "center_x") => {
                put(&mut b.center_x, (num(value, key, line)?, line), key, line)?
            }
            (Section::Initial, "center_y") => {
                put(&mut b.center_y, (num(value, key, line)?, line), key, line)?
            }
            (Section::Initial, "radius") => {
                put(&mut b.radius, (num(value, key, line)?, line), key, line)?
            }
            (Section::Initial, "path") => {
                put(&mut b.path, (value.to_string(), line), key, line)?
            }

            (Section::Run, "output_dir") => {
                put(&mut b.output_dir, value.to_string(), key, line)?
            }
            (Section::Run, "log_every") => {
                put(&mut b.log_every, num(value, key, line)?, key, line)?
            }
            (Section::Run, "snapshot_every") => {
                put(&mut b.snapshot_every, num(value, key, line)?, key, line)?
            }
            (Section::Run, "max_steps") => {
                put(&mut b.max_steps, num(value, key, line)?, key, line)?
            }
            (Section::Run, "du_tol") => put(&mut b.du_tol, num(value, key, line)?, key, line)?,
            (Section::Run, "mode") => {
                let mode = match value {
                    "all" => SamplingMode::All,
                    "stratified" => SamplingMode::Stratified,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("unknown sampling mode `{other}` (expected all or stratified)"),
                        ))
                    }
                };
                put(&mut b.mode, mode, key, line)?
            }
            (Section::Run, "max_sources") => {
                put(&mut b.max_sources, num(value, key, line)?, key, line)?
            }
            (Section::Run, "rng_seed") => {
                put(&mut b.rng_seed, num(value, key, line)?, key, line)?
            }

            (_, other) => {
                return Err(parse_err(line, format!("unknown key `{other}` in this section")))
            }
        }
    }

    finish(b)
}

fn finish(b: Builder) -> Result<RunConfig> {
    let nx = b.nx.ok_or_else(|| field_err("grid.nx", "missing"))?;
    let ny = b.ny.ok_or_else(|| field_err("grid.ny", "missing"))?;
    let grid = create_grid(
        nx,
        ny,
        b.x_min.unwrap_or(-0.5),
        b.x_max.unwrap_or(0.5),
        b.y_min.unwrap_or(-0.5),
        b.y_max.unwrap_or(0.5),
    )?;

    let kind = b.kind.ok_or_else(|| field_err("initial.kind", "missing"))?;
    // Keys from a different kind are hard errors, pointing at their line.
    let forbid = |name: &str, line: Option<usize>| -> Result<()> {
        match line {
            Some(l) => Err(parse_err(
                l,
                format!("key `{name}` is not valid for initial kind `{kind}`"),
            )),
            None => Ok(()),
        }
    };
    let initial = match kind.as_str() {
        "polar_cosine" => {
            forbid("center_x", b.center_x.map(|v| v.1))?;
            forbid("center_y", b.center_y.map(|v| v.1))?;
            forbid("radius", b.radius.map(|v| v.1))?;
            forbid("path", b.path.map(|v| v.1))?;
            InitialCondition::PolarCosine {
                r0: b.r0.ok_or_else(|| field_err("initial.r0", "missing"))?.0,
                a: b.a.ok_or_else(|| field_err("initial.a", "missing"))?.0,
                k: b.k.ok_or_else(|| field_err("initial.k", "missing"))?.0,
            }
        }
        "disk" => {
            forbid("r0", b.r0.map(|v| v.1))?;
            forbid("a", b.a.map(|v| v.1))?;
            forbid("k", b.k.map(|v| v.1))?;
            forbid("path", b.path.map(|v| v.1))?;
            let cx = 0.5 * (grid.x_min + grid.x_max);
            let cy = 0.5 * (grid.y_min + grid.y_max);
            InitialCondition::Disk {
                center: (
                    b.center_x.map(|v| v.0).unwrap_or(cx),
                    b.center_y.map(|v| v.0).unwrap_or(cy),
                ),
                radius: b.radius.ok_or_else(|| field_err("initial.radius", "missing"))?.0,
            }
        }
        "field_file" => {
            forbid("r0", b.r0.map(|v| v.1))?;
            forbid("a", b.a.map(|v| v.1))?;
            forbid("k", b.k.map(|v| v.1))?;
            forbid("center_x", b.center_x.map(|v| v.1))?;
            forbid("center_y", b.center_y.map(|v| v.1))?;
            forbid("radius", b.radius.map(|v| v.1))?;
            InitialCondition::FieldFile {
                path: PathBuf::from(b.path.ok_or_else(|| field_err("initial.path", "missing"))?.0),
            }
        }
        _ => unreachable!("kind validated at parse time"),
    };

    let eps = b.eps.unwrap_or(0.02);
    let u0 = realize_initial(&grid, &initial, eps)?;
    let params = ModelParams::new(
        eps,
        b.lambda.unwrap_or(0.0),
        b.tau.unwrap_or(1e-6),
        b.kappa.unwrap_or(2.0),
        b.zeta1.unwrap_or(0.0),
        b.zeta2.unwrap_or(0.0),
        b.alpha,
        b.s_exponent.unwrap_or(0.25),
        u0.mean(),
    )?;

    let defaults = StopRule::default();
    let stop = StopRule {
        max_steps: b.max_steps.unwrap_or(defaults.max_steps),
        du_tol: b.du_tol.unwrap_or(defaults.du_tol),
    };

    let mode = b.mode.unwrap_or(SamplingMode::All);
    let sampling = match mode {
        SamplingMode::All => PairSampling {
            mode,
            max_sources: b.max_sources.unwrap_or(usize::MAX),
            rng_seed: b.rng_seed.unwrap_or(0),
        },
        SamplingMode::Stratified => {
            let max_sources = b.max_sources.unwrap_or(64);
            if max_sources == 0 {
                return Err(field_err(
                    "run.max_sources",
                    "stratified sampling needs at least one source",
                ));
            }
            PairSampling {
                mode,
                max_sources,
                rng_seed: b.rng_seed.unwrap_or(0),
            }
        }
    };

    Ok(RunConfig {
        grid,
        params,
        initial,
        stop,
        sampling,
        output_dir: PathBuf::from(b.output_dir.unwrap_or_else(|| "out".to_string())),
        log_every: b.log_every.unwrap_or(50),
        snapshot_every: b.snapshot_every.unwrap_or(0),
    })
}

/// Renders a config back to text such that
/// `parse_config(&render(&config))` reproduces `config` exactly (floats are
/// written in shortest round-trip form). Derived quantities (`m_bar`, `c0`,
/// `c1`) are deliberately not written.
pub fn render(config: &RunConfig) -> String {
    use std::fmt::Write;

    let g = &config.grid;
    let p = &config.params;
    let mut s = String::new();
    let _ = writeln!(s, "[grid]");
    let _ = writeln!(s, "nx = {}", g.nx);
    let _ = writeln!(s, "ny = {}", g.ny);
    let _ = writeln!(s, "x_min = {}", g.x_min);
    let _ = writeln!(s, "x_max = {}", g.x_max);
    let _ = writeln!(s, "y_min = {}", g.y_min);
    let _ = writeln!(s, "y_max = {}", g.y_max);
    let _ = writeln!(s);
    let _ = writeln!(s, "[params]");
    let _ = writeln!(s, "eps = {}", p.eps);
    let _ = writeln!(s, "lambda = {}", p.lambda);
    let _ = writeln!(s, "tau = {}", p.tau);
    let _ = writeln!(s, "kappa = {}", p.kappa);
    let _ = writeln!(s, "zeta1 = {}", p.zeta1);
    let _ = writeln!(s, "zeta2 = {}", p.zeta2);
    let _ = writeln!(s, "alpha = {}", p.alpha);
    let _ = writeln!(s, "s_exponent = {}", p.s_exponent);
    let _ = writeln!(s);
    let _ = writeln!(s, "[initial]");
    match &config.initial {
        InitialCondition::PolarCosine { r0, a, k } => {
            let _ = writeln!(s, "kind = polar_cosine");
            let _ = writeln!(s, "r0 = {r0}");
            let _ = writeln!(s, "a = {a}");
            let _ = writeln!(s, "k = {k}");
        }
        InitialCondition::Disk { center, radius } => {
            let _ = writeln!(s, "kind = disk");
            let _ = writeln!(s, "center_x = {}", center.0);
            let _ = writeln!(s, "center_y = {}", center.1);
            let _ = writeln!(s, "radius = {radius}");
        }
        InitialCondition::FieldFile { path } => {
            let _ = writeln!(s, "kind = field_file");
            let _ = writeln!(s, "path = {}", path.display());
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "output_dir = {}", config.output_dir.display());
    let _ = writeln!(s, "log_every = {}", config.log_every);
    let _ = writeln!(s, "snapshot_every = {}", config.snapshot_every);
    let _ = writeln!(s, "max_steps = {}", config.stop.max_steps);
    let _ = writeln!(s, "du_tol = {}", config.stop.du_tol);
    let mode = match config.sampling.mode {
        SamplingMode::All => "all",
        SamplingMode::Stratified => "stratified",
    };
    let _ = writeln!(s, "mode = {mode}");
    let _ = writeln!(s, "max_sources = {}", config.sampling.max_sources);
    let _ = writeln!(s, "rng_seed = {}", config.sampling.rng_seed);
    s
}

/// Canned experiment setups. `exp1` and `exp2` relax a pinched two-lobe
/// figure on the unit square; `exp3` runs a larger domain at weak
/// connectedness forcing on both phases. Resolutions follow the reference
/// computations (214² and 374²); `m_bar` is realized from the initial field.
pub fn preset(name: &str) -> Result<RunConfig> {
    // (n, half-extent, eps, tau, lambda, zeta1, zeta2, alpha, r0, a, dir)
    let (n, half, eps, tau, lambda, zeta1, zeta2, alpha, r0, a, dir) = match name {
        "exp1" => (214, 0.5, 8e-3, 9.5e-9, 10606.0, 3.0, 0.0, 0.35, 0.02, 0.45, "out_exp1"),
        "exp2" => (214, 0.5, 4e-3, 4.7e-9, 14849.0, 1.0, 0.0, 0.35, 0.01, 0.35, "out_exp2"),
        "exp3" => (374, 1.0, 3e-3, 3e-9, 20000.0, 0.01, 0.01, 0.068, 0.4, 0.2, "out_exp3"),
        other => {
            return Err(field_err(
                "preset",
                format!("unknown preset `{other}` (expected exp1, exp2, or exp3)"),
            ))
        }
    };
    let grid = create_grid(n, n, -half, half, -half, half)?;
    let initial = InitialCondition::PolarCosine { r0, a, k: 2 };
    let u0 = realize_initial(&grid, &initial, eps)?;
    let params = ModelParams::new(
        eps,
        lambda,
        tau,
        2.0,
        zeta1,
        zeta2,
        Some(alpha),
        0.25,
        u0.mean(),
    )?;
    Ok(RunConfig {
        grid,
        params,
        initial,
        stop: StopRule::default(),
        sampling: PairSampling::stratified(64, 1),
        output_dir: PathBuf::from(dir),
        log_every: 50,
        snapshot_every: 500,
    })
}

/// Coarsens a config in place: grid resolution is divided by `k` (extents
/// unchanged) and the time step multiplied by `k²`, so coarse runs cover the
/// same physical time span in `k²` fewer steps. `m_bar` is re-realized on
/// the new grid.
pub fn apply_scale(config: &mut RunConfig, k: usize) -> Result<()> {
    if k == 0 {
        return Err(field_err("scale", "must be a positive integer"));
    }
    let g = &config.grid;
    let grid = create_grid(g.nx / k, g.ny / k, g.x_min, g.x_max, g.y_min, g.y_max)?;
    let p = &config.params;
    let tau = p.tau * (k * k) as f64;
    let u0 = realize_initial(&grid, &config.initial, p.eps)?;
    config.params = ModelParams::new(
        p.eps,
        p.lambda,
        tau,
        p.kappa,
        p.zeta1,
        p.zeta2,
        Some(p.alpha),
        p.s_exponent,
        u0.mean(),
    )?;
    config.grid = grid;
    Ok(())
}

/// Replaces the connectedness weights, leaving everything else (including
/// `m_bar`) untouched.
pub fn set_zetas(config: &mut RunConfig, zeta1: Option<f64>, zeta2: Option<f64>) -> Result<()> {
    let p = &config.params;
    config.params = ModelParams::new(
        p.eps,
        p.lambda,
        p.tau,
        p.kappa,
        zeta1.unwrap_or(p.zeta1),
        zeta2.unwrap_or(p.zeta2),
        Some(p.alpha),
        p.s_exponent,
        p.m_bar,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use oksim_core::grid::write_field_to_path;
    use oksim_core::oracle::connected_components;

    #[test]
    fn minimal_config_fills_defaults() {
        let text = "[grid]\nnx = 64\nny = 64\n\n[initial]\nkind = disk\nradius = 0.25\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid.nx, 64);
        assert_eq!((c.grid.x_min, c.grid.x_max), (-0.5, 0.5));
        assert_eq!(c.params.eps, 0.02);
        assert_eq!(c.params.lambda, 0.0);
        assert_eq!(c.sampling.mode, SamplingMode::All);
        assert_eq!(c.stop.max_steps, StopRule::default().max_steps);
        assert_eq!(c.log_every, 50);
        assert_eq!(c.snapshot_every, 0);
        // disk defaults to the domain center, and m_bar to the disk area
        assert_eq!(
            c.initial,
            InitialCondition::Disk {
                center: (0.0, 0.0),
                radius: 0.25
            }
        );
        // Radial smoothing inflates the mean above the disk area: with
        // profile width w, the polar area weight contributes pi^3 w^2 / 12.
        let w = 2.0 * std::f64::consts::SQRT_2 * c.params.eps;
        let pi = std::f64::consts::PI;
        let exact = pi * 0.25 * 0.25 + pi.powi(3) * w * w / 12.0;
        assert!((c.params.m_bar - exact).abs() < 5e-4, "m_bar {}", c.params.m_bar);
    }

    #[test]
    fn presets_round_trip_through_text() {
        for name in ["exp1", "exp2", "exp3"] {
            let c = preset(name).unwrap();
            let back = parse_config(&render(&c)).unwrap();
            assert_eq!(back, c, "round trip changed preset {name}");
        }
    }

    #[test]
    fn preset_values_match_the_experiments() {
        let c1 = preset("exp1").unwrap();
        assert_eq!(c1.params.kappa, 2.0);
        assert_eq!(c1.params.lambda, 10606.0);
        assert_eq!(c1.grid.nx, 214);
        assert!((c1.params.m_bar - 0.178).abs() < 2e-3, "exp1 m_bar {}", c1.params.m_bar);

        let c2 = preset("exp2").unwrap();
        assert_eq!(c2.params.zeta2, 0.0);
        assert_eq!(c2.params.lambda, 14849.0);

        let c3 = preset("exp3").unwrap();
        assert_eq!(c3.grid.nx, 374);
        assert_eq!((c3.grid.x_min, c3.grid.x_max), (-1.0, 1.0));
        assert!((c3.params.m_bar - 0.141).abs() < 2e-3, "exp3 m_bar {}", c3.params.m_bar);

        assert!(preset("exp4").is_err());
    }

    #[test]
    fn exp1_initial_is_a_pinched_figure() {
        let c = preset("exp1").unwrap();
        let u0 = realize_initial(&c.grid, &c.initial, c.params.eps).unwrap();
        // The two lobes meet at the center through cells above one half,
        // so the superlevel set is still a single component.
        assert_eq!(connected_components(&u0, 0.5), 1);
        assert!(u0.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let text = "[grid]\nnx = 64\nny = 64\nfoo = 1\n";
        match parse_config(text) {
            Err(CliError::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("foo"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn derived_keys_cannot_be_set() {
        let text = "[grid]\nnx = 16\nny = 16\n[params]\nm_bar = 0.3\n[initial]\nkind = disk\nradius = 0.2\n";
        match parse_config(text) {
            Err(CliError::Parse { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("derived"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_malformed_lines_are_rejected() {
        let dup = "[grid]\nnx = 64\nnx = 32\n";
        match parse_config(dup) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
        let bare = "[grid]\nnx\n";
        assert!(matches!(parse_config(bare), Err(CliError::Parse { line: 2, .. })));
        let orphan = "nx = 4\n";
        assert!(matches!(parse_config(orphan), Err(CliError::Parse { line: 1, .. })));
        let section = "[grud]\n";
        assert!(matches!(parse_config(section), Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn out_of_range_alpha_names_the_field() {
        let text = "[grid]\nnx = 16\nny = 16\n[params]\nalpha = 0.6\n[initial]\nkind = disk\nradius = 0.2\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn keys_from_another_kind_are_rejected() {
        let text =
            "[grid]\nnx = 16\nny = 16\n[initial]\nkind = disk\nradius = 0.2\nr0 = 0.1\n";
        match parse_config(text) {
            Err(CliError::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("r0"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn scaling_coarsens_the_grid_and_slows_the_clock() {
        let mut c = preset("exp1").unwrap();
        let tau0 = c.params.tau;
        apply_scale(&mut c, 3).unwrap();
        assert_eq!((c.grid.nx, c.grid.ny), (71, 71));
        assert_eq!((c.grid.x_min, c.grid.x_max), (-0.5, 0.5));
        assert_eq!(c.params.tau, tau0 * 9.0);
        assert!((c.params.m_bar - 0.178).abs() < 5e-3, "m_bar {}", c.params.m_bar);

        assert!(apply_scale(&mut c, 0).is_err());
        // coarsening below the minimum grid size is a grid error
        assert!(apply_scale(&mut c, 64).is_err());
    }

    #[test]
    fn zeta_overrides_touch_only_the_weights() {
        let mut c = preset("exp1").unwrap();
        let before = c.clone();
        set_zetas(&mut c, Some(0.0), None).unwrap();
        assert_eq!(c.params.zeta1, 0.0);
        assert_eq!(c.params.zeta2, before.params.zeta2);
        assert_eq!(c.params.m_bar, before.params.m_bar);
        assert_eq!(c.grid, before.grid);
    }

    #[test]
    fn field_file_initial_round_trips_a_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.dat");
        let grid = create_grid(24, 24, -0.5, 0.5, -0.5, 0.5).unwrap();
        let u = ScalarField::from_fn(&grid, |x, y| {
            0.5 * (1.0 + ((0.2 - x.hypot(y)) / 0.05).tanh())
        });
        write_field_to_path(&path, &u).unwrap();

        let text = format!(
            "[grid]\nnx = 24\nny = 24\n[initial]\nkind = field_file\npath = {}\n",
            path.display()
        );
        let c = parse_config(&text).unwrap();
        assert!((c.params.m_bar - u.mean()).abs() < 1e-15);

        // a mismatched grid section is rejected and names the field
        let bad = format!(
            "[grid]\nnx = 16\nny = 24\n[initial]\nkind = field_file\npath = {}\n",
            path.display()
        );
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("initial.path"), "{err}");
    }
}
