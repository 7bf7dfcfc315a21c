//! Uniform cell-centered grids and scalar fields on a rectangle.
//!
//! The domain `[x_min, x_max] x [y_min, y_max]` is split into `nx * ny`
//! equal cells; all field values live at cell centers
//! `x_i = x_min + (i + 1/2) h_x`, `y_j = y_min + (j + 1/2) h_y`.
//! Storage is row-major: index `j * nx + i` for column `i`, row `j`.
//!
//! Boundary conditions throughout the crate are reflecting (homogeneous
//! Neumann): ghost cells mirror the first interior cell, which makes the
//! discrete Laplacian symmetric with exact zero column sums.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid2D {
    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Cell-center coordinates of node `(i, j)`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_min + (i as f64 + 0.5) * self.hx,
            self.y_min + (j as f64 + 0.5) * self.hy,
        )
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }
}

/// Builds a uniform cell-centered grid. Requires at least two cells per
/// axis (centered differences need a neighbor on some side) and strictly
/// increasing extents.
pub fn create_grid(
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
) -> Result<Grid2D> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter {
            name: "nx/ny",
            message: format!("need at least 2 cells per axis, got {nx} x {ny}"),
        });
    }
    if !(x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "extents",
            message: "extents must be finite".into(),
        });
    }
    if x_max <= x_min || y_max <= y_min {
        return Err(Error::InvalidParameter {
            name: "extents",
            message: format!("inverted or empty extents [{x_min}, {x_max}] x [{y_min}, {y_max}]"),
        });
    }
    Ok(Grid2D {
        nx,
        ny,
        x_min,
        x_max,
        y_min,
        y_max,
        hx: (x_max - x_min) / nx as f64,
        hy: (y_max - y_min) / ny as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    /// Constant field.
    pub fn constant(grid: &Grid2D, value: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.n_nodes()],
        }
    }

    /// Fills a field by evaluating `f` at every cell center.
    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> ScalarField {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.node(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Mean value over the domain.
    pub fn mean(&self) -> f64 {
        integrate(self) / self.grid.area()
    }
}

/// Midpoint quadrature: exact for fields affine in x and y.
pub fn integrate(f: &ScalarField) -> f64 {
    let sum: f64 = f.values.iter().sum();
    sum * f.grid.cell_area()
}

/// Midpoint quadrature of a pointwise product `f * g`.
pub fn integrate_product(f: &ScalarField, g: &ScalarField) -> f64 {
    assert_eq!(f.grid, g.grid, "fields live on different grids");
    let sum: f64 = f
        .values
        .iter()
        .zip(g.values.iter())
        .map(|(a, b)| a * b)
        .sum();
    sum * f.grid.cell_area()
}

/// Five-point Laplacian with reflecting ghost cells.
///
/// The resulting matrix is symmetric with zero row and column sums, so
/// `integrate(laplacian_neumann(f)) == 0` up to round-off for any `f`.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    let g = &f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let ihx2 = 1.0 / (g.hx * g.hx);
    let ihy2 = 1.0 / (g.hy * g.hy);
    let v = &f.values;
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let c = v[row + i];
            let l = if i > 0 { v[row + i - 1] } else { c };
            let r = if i + 1 < nx { v[row + i + 1] } else { c };
            let d = if j > 0 { v[row + i - nx] } else { c };
            let u = if j + 1 < ny { v[row + i + nx] } else { c };
            out[row + i] = (l + r - 2.0 * c) * ihx2 + (d + u - 2.0 * c) * ihy2;
        }
    }
    ScalarField {
        grid: g.clone(),
        values: out,
    }
}

/// Writes a field dump:
/// a header line `FIELD nx ny x_min x_max y_min y_max`, then the values
/// row by row. Values are printed in shortest round-trip form, so reading
/// the dump back reproduces every bit.
pub fn write_field<W: Write>(w: &mut W, f: &ScalarField) -> Result<()> {
    let g = &f.grid;
    writeln!(
        w,
        "FIELD {} {} {} {} {} {}",
        g.nx, g.ny, g.x_min, g.x_max, g.y_min, g.y_max
    )?;
    for j in 0..g.ny {
        let row = &f.values[j * g.nx..(j + 1) * g.nx];
        let mut line = String::with_capacity(row.len() * 24);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_field_to_path(path: &std::path::Path, f: &ScalarField) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut out, f)
}

/// Reads a field dump produced by [`write_field`]. Value layout is
/// whitespace-separated; line breaks are not significant beyond the header.
pub fn read_field<R: BufRead>(r: &mut R) -> Result<ScalarField> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 7 || toks[0] != "FIELD" {
        return Err(Error::ParseField {
            line: 1,
            message: "expected header `FIELD nx ny x_min x_max y_min y_max`".into(),
        });
    }
    let nx: usize = toks[1].parse().map_err(|_| Error::ParseField {
        line: 1,
        message: format!("bad nx `{}`", toks[1]),
    })?;
    let ny: usize = toks[2].parse().map_err(|_| Error::ParseField {
        line: 1,
        message: format!("bad ny `{}`", toks[2]),
    })?;
    let mut ext = [0.0f64; 4];
    for (k, t) in toks[3..7].iter().enumerate() {
        ext[k] = t.parse().map_err(|_| Error::ParseField {
            line: 1,
            message: format!("bad extent `{t}`"),
        })?;
    }
    let grid = create_grid(nx, ny, ext[0], ext[1], ext[2], ext[3])?;
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut line_no = 1usize;
    let mut buf = String::new();
    while values.len() < grid.n_nodes() {
        buf.clear();
        line_no += 1;
        if r.read_line(&mut buf)? == 0 {
            return Err(Error::ParseField {
                line: line_no,
                message: format!(
                    "dump ended after {} of {} values",
                    values.len(),
                    grid.n_nodes()
                ),
            });
        }
        for tok in buf.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::ParseField {
                line: line_no,
                message: format!("bad value `{tok}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseField {
                    line: line_no,
                    message: format!("non-finite value `{tok}`"),
                });
            }
            values.push(v);
            if values.len() > grid.n_nodes() {
                return Err(Error::ParseField {
                    line: line_no,
                    message: "more values than nx * ny".into(),
                });
            }
        }
    }
    Ok(ScalarField { grid, values })
}

pub fn read_field_from_path(path: &std::path::Path) -> Result<ScalarField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_field(&mut r)
}
