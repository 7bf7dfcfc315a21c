//! `oksim`: simulate a two-phase mixture with connectedness penalties,
//! sweep the closed-form energy bounds, evaluate sharp-interface energies
//! of explicit shapes, and measure superlevel-set geometry of stored
//! fields.
//!
//! Exit codes: 0 on success; 2 for usage problems (bad flags, malformed
//! configs, missing input files); 1 for runtime failures.

use std::fs;
use std::io::ErrorKind;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oksim_cli::config::{apply_scale, parse_config, preset, set_zetas};
use oksim_cli::error::{CliError, Result};
use oksim_cli::runner::{bounds_csv, bounds_rows, execute_run};
use oksim_core::grid::read_field_from_path;
use oksim_core::oracle::{
    concentration, connected_perimeter, log_interaction, perimeter, Diagnostics, ShapeSpec,
};

#[derive(Parser)]
#[command(name = "oksim", version, about = "Phase-field simulation with connectedness penalties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a config file or a named preset
    Run {
        /// Path to an INI config file (exactly one of --config/--preset)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Preset name: exp1, exp2, or exp3
        #[arg(long)]
        preset: Option<String>,
        /// Coarsen: divide grid resolution by K, multiply the step by K²
        #[arg(long, value_name = "K")]
        scale: Option<usize>,
        /// Override the phase-one connectedness weight
        #[arg(long)]
        zeta1: Option<f64>,
        /// Override the phase-zero connectedness weight
        #[arg(long)]
        zeta2: Option<f64>,
        /// Override the output directory
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the step budget
        #[arg(long)]
        max_steps: Option<usize>,
        /// Override the snapshot cadence (0 disables numbered snapshots)
        #[arg(long)]
        snapshot_every: Option<usize>,
        /// Override the energy-log cadence
        #[arg(long)]
        log_every: Option<usize>,
    },
    /// Tabulate the closed-form energy sandwich over a lambda range
    Bounds {
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        /// Number of log-spaced lambda values
        #[arg(long)]
        points: usize,
        /// Directory that receives bounds.csv
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Evaluate the sharp-interface energy of an explicit shape
    Oracle {
        /// disk:CX,CY,R | rect:X,Y,W,H | disks:CX,CY,R;... | poly:X,Y;X,Y;...
        #[arg(long)]
        shape: String,
        /// Weight of the logarithmic interaction term
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Quadrature resolution per axis for the interaction integral
        #[arg(long, default_value_t = 256)]
        n_quad: usize,
    },
    /// Measure the superlevel-set geometry of a stored field
    Diag {
        /// Path to a field dump
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also report the most superlevel mass captured by a disk of this radius
        #[arg(long)]
        radius: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            if code == 2 {
                eprintln!("run `oksim help` for usage");
            }
            ExitCode::from(code)
        }
    }
}

/// Usage-level mistakes (bad flags, malformed configs, missing files)
/// exit 2; runtime failures exit 1.
fn exit_code_for(e: &CliError) -> u8 {
    match e {
        CliError::Parse { .. } | CliError::Field { .. } => 2,
        CliError::Io(io) if io.kind() == ErrorKind::NotFound => 2,
        CliError::Core(oksim_core::Error::Io(io)) if io.kind() == ErrorKind::NotFound => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            preset,
            scale,
            zeta1,
            zeta2,
            output_dir,
            max_steps,
            snapshot_every,
            log_every,
        } => cmd_run(
            config,
            preset,
            scale,
            zeta1,
            zeta2,
            output_dir,
            max_steps,
            snapshot_every,
            log_every,
        ),
        Command::Bounds {
            lambda_min,
            lambda_max,
            points,
            output_dir,
        } => cmd_bounds(lambda_min, lambda_max, points, &output_dir),
        Command::Oracle {
            shape,
            lambda,
            n_quad,
        } => cmd_oracle(&shape, lambda, n_quad),
        Command::Diag {
            field,
            threshold,
            radius,
        } => cmd_diag(&field, threshold, radius),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config_path: Option<PathBuf>,
    preset_name: Option<String>,
    scale: Option<usize>,
    zeta1: Option<f64>,
    zeta2: Option<f64>,
    output_dir: Option<PathBuf>,
    max_steps: Option<usize>,
    snapshot_every: Option<usize>,
    log_every: Option<usize>,
) -> Result<()> {
    let mut config = match (config_path, preset_name) {
        (Some(path), None) => parse_config(&fs::read_to_string(&path)?)?,
        (None, Some(name)) => preset(&name)?,
        _ => {
            return Err(CliError::Field {
                field: "--config/--preset".to_string(),
                message: "exactly one of --config or --preset is required".to_string(),
            })
        }
    };
    if let Some(k) = scale {
        apply_scale(&mut config, k)?;
    }
    if zeta1.is_some() || zeta2.is_some() {
        set_zetas(&mut config, zeta1, zeta2)?;
    }
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    if let Some(n) = max_steps {
        config.stop.max_steps = n;
    }
    if let Some(n) = snapshot_every {
        config.snapshot_every = n;
    }
    if let Some(n) = log_every {
        config.log_every = n;
    }

    let summary = execute_run(&config)?;
    let r = &summary.result;
    let first = r.rows.first().expect("runs always log the initial state");
    let last = r.rows.last().expect("runs always log the final state");
    println!("output_dir = {}", config.output_dir.display());
    println!("m_bar = {}", config.params.m_bar);
    println!("steps = {}", r.state.step);
    println!("time = {}", r.state.time);
    println!("stopped_by_tolerance = {}", r.stopped_by_tolerance);
    println!("energy = {}", last.energy.total());
    println!("mass = {}", last.mass);
    println!("c1_first = {}", first.energy.c1_term);
    println!("c1_last = {}", last.energy.c1_term);
    let d = &summary.diagnostics;
    println!("components = {}", d.components);
    println!("area = {}", d.area);
    match d.deficit {
        Some(v) => println!("deficit = {v}"),
        None => println!("deficit = none"),
    }
    Ok(())
}

fn cmd_bounds(lambda_min: f64, lambda_max: f64, points: usize, output_dir: &PathBuf) -> Result<()> {
    let rows = bounds_rows(lambda_min, lambda_max, points)?;
    let csv = bounds_csv(&rows);
    fs::create_dir_all(output_dir)?;
    fs::write(output_dir.join("bounds.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_oracle(shape: &str, lambda: f64, n_quad: usize) -> Result<()> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(CliError::Field {
            field: "lambda".to_string(),
            message: format!("must be nonnegative and finite, got {lambda}"),
        });
    }
    let shape = parse_shape(shape)?;
    println!("perimeter = {}", perimeter(&shape)?);
    let cper = connected_perimeter(&shape)?;
    println!("connected_perimeter = {cper}");
    if lambda > 0.0 {
        let interaction = log_interaction(&shape, n_quad)?;
        println!("interaction = {interaction}");
        println!("sharp_energy = {}", cper + lambda * interaction);
    } else {
        println!("sharp_energy = {cper}");
    }
    Ok(())
}

fn cmd_diag(field: &PathBuf, threshold: f64, radius: Option<f64>) -> Result<()> {
    let u = read_field_from_path(field)?;
    let d = Diagnostics::measure(&u, threshold);
    println!("threshold = {}", d.threshold);
    println!("components = {}", d.components);
    println!("cell_count = {}", d.cell_count);
    println!("area = {}", d.area);
    match d.diameter {
        Some(v) => println!("diameter = {v}"),
        None => println!("diameter = none"),
    }
    println!("perimeter_estimate = {}", d.perimeter_estimate);
    match d.deficit {
        Some(v) => println!("deficit = {v}"),
        None => println!("deficit = none"),
    }
    if let Some(r) = radius {
        println!("concentration = {}", concentration(&u, threshold, r));
    }
    Ok(())
}

fn shape_err(message: impl Into<String>) -> CliError {
    CliError::Field {
        field: "shape".to_string(),
        message: message.into(),
    }
}

/// Parses the `--shape` mini-language. Numbers are comma-separated within a
/// group; groups (disks of a union, vertices of a polygon) are separated
/// by semicolons.
fn parse_shape(s: &str) -> Result<ShapeSpec> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| shape_err("expected `kind:numbers`, e.g. disk:0,0,1"))?;
    let numbers = |part: &str| -> Result<Vec<f64>> {
        part.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| shape_err(format!("unparseable number `{}`", t.trim())))
            })
            .collect()
    };
    let shape = match kind {
        "disk" => {
            let v = numbers(rest)?;
            if v.len() != 3 {
                return Err(shape_err("disk needs CX,CY,R"));
            }
            ShapeSpec::Disk {
                center: (v[0], v[1]),
                radius: v[2],
            }
        }
        "rect" => {
            let v = numbers(rest)?;
            if v.len() != 4 {
                return Err(shape_err("rect needs X,Y,W,H"));
            }
            ShapeSpec::Rectangle {
                corner: (v[0], v[1]),
                width: v[2],
                height: v[3],
            }
        }
        "disks" => {
            let mut disks = Vec::new();
            for group in rest.split(';') {
                let v = numbers(group)?;
                if v.len() != 3 {
                    return Err(shape_err("each disk needs CX,CY,R"));
                }
                disks.push(((v[0], v[1]), v[2]));
            }
            ShapeSpec::UnionOfDisks { disks }
        }
        "poly" => {
            let mut vertices = Vec::new();
            for group in rest.split(';') {
                let v = numbers(group)?;
                if v.len() != 2 {
                    return Err(shape_err("each vertex needs X,Y"));
                }
                vertices.push((v[0], v[1]));
            }
            ShapeSpec::Polygon { vertices }
        }
        other => {
            return Err(shape_err(format!(
                "unknown shape kind `{other}` (expected disk, rect, disks, or poly)"
            )))
        }
    };
    shape.validate().map_err(|e| shape_err(e.to_string()))?;
    Ok(shape)
}
