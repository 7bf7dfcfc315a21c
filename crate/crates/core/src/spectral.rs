//! Orthonormal cosine basis for the reflecting five-point Laplacian.
//!
//! The stencil in [`crate::grid::laplacian_neumann`] reflects ghost cells,
//! and the vectors `cos(pi k (i + 1/2) / n)` satisfy that reflection
//! identically. They are therefore exact eigenvectors, with eigenvalue
//! `-4 sin^2(pi k / 2n) / h^2` per axis. The flow solver uses this basis
//! to apply the inverse Laplacian and to precondition its coupled system;
//! it is a factorization of the very same matrix the stencil applies, not
//! a different discretization.

use crate::grid::Grid2D;

pub(crate) struct CosineBasis {
    nx: usize,
    ny: usize,
    /// Orthonormal 1-D transform matrices, row k = mode k.
    cx: Vec<f64>,
    cy: Vec<f64>,
    /// Eigenvalues of `-laplacian_neumann` per mode, row-major like fields.
    pub mu: Vec<f64>,
}

fn axis_matrix(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    for k in 0..n {
        for i in 0..n {
            let angle = std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64;
            c[k * n + i] = if k == 0 { norm0 } else { norm * angle.cos() };
        }
    }
    c
}

impl CosineBasis {
    pub fn new(grid: &Grid2D) -> CosineBasis {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut mu = vec![0.0; nx * ny];
        let ax = |k: usize, n: usize, h: f64| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
            4.0 * s * s / (h * h)
        };
        for l in 0..ny {
            let my = ax(l, ny, grid.hy);
            for k in 0..nx {
                mu[l * nx + k] = ax(k, nx, grid.hx) + my;
            }
        }
        CosineBasis {
            nx,
            ny,
            cx: axis_matrix(nx),
            cy: axis_matrix(ny),
            mu,
        }
    }

    /// `out[l,k] = sum_{j,i} cy[l,j] cx[k,i] v[j,i]` (forward transform).
    pub fn forward(&self, v: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        self.apply(v, &self.cx, &self.cy, scratch, out);
    }

    /// Inverse of [`forward`]; the basis is orthonormal so the inverse is
    /// the transpose.
    pub fn inverse(&self, v: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        self.apply_t(v, &self.cx, &self.cy, scratch, out);
    }

    fn apply(&self, v: &[f64], cx: &[f64], cy: &[f64], tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
        let (nx, ny) = (self.nx, self.ny);
        tmp.clear();
        tmp.resize(nx * ny, 0.0);
        // along x: tmp[j,k] = sum_i cx[k,i] v[j,i]
        for j in 0..ny {
            let row = &v[j * nx..(j + 1) * nx];
            let trow = &mut tmp[j * nx..(j + 1) * nx];
            for k in 0..nx {
                let ck = &cx[k * nx..(k + 1) * nx];
                let mut s = 0.0;
                for i in 0..nx {
                    s += ck[i] * row[i];
                }
                trow[k] = s;
            }
        }
        // along y: out[l,k] = sum_j cy[l,j] tmp[j,k]
        out.clear();
        out.resize(nx * ny, 0.0);
        for l in 0..ny {
            let orow = &mut out[l * nx..(l + 1) * nx];
            let cl = &cy[l * ny..(l + 1) * ny];
            for j in 0..ny {
                let c = cl[j];
                if c == 0.0 {
                    continue;
                }
                let trow = &tmp[j * nx..(j + 1) * nx];
                for k in 0..nx {
                    orow[k] += c * trow[k];
                }
            }
        }
    }

    fn apply_t(&self, v: &[f64], cx: &[f64], cy: &[f64], tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
        let (nx, ny) = (self.nx, self.ny);
        // along y transpose: tmp[j,k] = sum_l cy[l,j] v[l,k]
        tmp.clear();
        tmp.resize(nx * ny, 0.0);
        for l in 0..ny {
            let vrow = &v[l * nx..(l + 1) * nx];
            let cl = &cy[l * ny..(l + 1) * ny];
            for j in 0..ny {
                let c = cl[j];
                if c == 0.0 {
                    continue;
                }
                let trow = &mut tmp[j * nx..(j + 1) * nx];
                for k in 0..nx {
                    trow[k] += c * vrow[k];
                }
            }
        }
        // along x transpose: out[j,i] = sum_k cx[k,i] tmp[j,k]
        out.clear();
        out.resize(nx * ny, 0.0);
        for j in 0..ny {
            let trow = &tmp[j * nx..(j + 1) * nx];
            let orow = &mut out[j * nx..(j + 1) * nx];
            for k in 0..nx {
                let t = trow[k];
                if t == 0.0 {
                    continue;
                }
                let ck = &cx[k * nx..(k + 1) * nx];
                for i in 0..nx {
                    orow[i] += t * ck[i];
                }
            }
        }
    }
}
