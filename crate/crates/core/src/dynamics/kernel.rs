//! Integrator hot path: sparse operators applied to a density matrix held in
//! planar (split real/imaginary) row-major storage.
//!
//! The Lindblad right-hand side is evaluated as
//!   G rho + rho G^dag + sum_k L_k rho L_k^dag,   G = -iH - 1/2 sum_k L_k^dag L_k,
//! one output row at a time, so every row of drho/dt is computed independently
//! and the row loop parallelizes with deterministic per-element results for
//! any thread count.

use crate::C64;
use ndarray::Array2;
use rayon::prelude::*;

/// Compressed sparse rows with split real/imaginary values.
pub(crate) struct CsrMat {
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    vre: Vec<f64>,
    vim: Vec<f64>,
}

impl CsrMat {
    pub(crate) fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vre = Vec::new();
        let mut vim = Vec::new();
        row_ptr.push(0u32);
        for i in 0..dim {
            for j in 0..dim {
                let z = m[[i, j]];
                if z.re != 0.0 || z.im != 0.0 {
                    cols.push(j as u32);
                    vre.push(z.re);
                    vim.push(z.im);
                }
            }
            row_ptr.push(cols.len() as u32);
        }
        Self {
            dim,
            row_ptr,
            cols,
            vre,
            vim,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let lo = self.row_ptr[i] as usize;
        let hi = self.row_ptr[i + 1] as usize;
        (lo..hi).map(move |k| (self.cols[k] as usize, self.vre[k], self.vim[k]))
    }
}

/// Density matrix in planar storage: row i occupies
/// `data[i*2*dim .. (i+1)*2*dim]`, real parts first, then imaginary parts.
pub(crate) struct Planar {
    pub(crate) dim: usize,
    pub(crate) data: Vec<f64>,
}

impl Planar {
    pub(crate) fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * 2 * dim],
        }
    }

    pub(crate) fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let mut p = Self::zeros(dim);
        for i in 0..dim {
            let base = i * 2 * dim;
            for j in 0..dim {
                p.data[base + j] = m[[i, j]].re;
                p.data[base + dim + j] = m[[i, j]].im;
            }
        }
        p
    }

    pub(crate) fn to_dense(&self) -> Array2<C64> {
        let d = self.dim;
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            let base = i * 2 * d;
            for j in 0..d {
                m[[i, j]] = C64::new(self.data[base + j], self.data[base + d + j]);
            }
        }
        m
    }

    #[inline]
    fn row(&self, i: usize) -> (&[f64], &[f64]) {
        let d = self.dim;
        self.data[i * 2 * d..(i + 1) * 2 * d].split_at(d)
    }

    pub(crate) fn trace_re(&self) -> f64 {
        let d = self.dim;
        (0..d).map(|i| self.data[i * 2 * d + i]).sum()
    }
}

/// out += (gr + i gi) * x, on planar row slices.
#[inline]
fn axpy_cplx(gr: f64, gi: f64, xr: &[f64], xi: &[f64], or_: &mut [f64], oi: &mut [f64]) {
    let n = or_.len();
    let xr = &xr[..n];
    let xi = &xi[..n];
    let oi = &mut oi[..n];
    for c in 0..n {
        or_[c] += gr * xr[c] - gi * xi[c];
        oi[c] += gr * xi[c] + gi * xr[c];
    }
}

/// drho/dt = G rho + rho G^dag + sum_k L_k rho L_k^dag, written into `out`.
pub(crate) fn rhs(g: &CsrMat, ls: &[CsrMat], rho: &Planar, out: &mut Planar) {
    let d = rho.dim;
    out.data
        .par_chunks_mut(2 * d)
        .enumerate()
        .for_each_init(
            || vec![0.0f64; 2 * d],
            |scratch, (i, orow)| {
                let (ore, oim) = orow.split_at_mut(d);
                ore.fill(0.0);
                oim.fill(0.0);

                // (G rho)[i, :]
                for (j, gr, gi) in g.row(i) {
                    let (xr, xi) = rho.row(j);
                    axpy_cplx(gr, gi, xr, xi, ore, oim);
                }

                // (rho G^dag)[i, l] = sum_j rho[i, j] conj(G[l, j])
                let (rr, ri) = rho.row(i);
                for l in 0..d {
                    let mut ar = 0.0;
                    let mut ai = 0.0;
                    for (j, gr, gi) in g.row(l) {
                        let xr = rr[j];
                        let xi = ri[j];
                        ar += xr * gr + xi * gi;
                        ai += xi * gr - xr * gi;
                    }
                    ore[l] += ar;
                    oim[l] += ai;
                }

                // sum_k (L rho L^dag)[i, :] via t = (L rho)[i, :]
                for lmat in ls {
                    let (tre, tim) = scratch.split_at_mut(d);
                    tre.fill(0.0);
                    tim.fill(0.0);
                    for (j, vr, vi) in lmat.row(i) {
                        let (xr, xi) = rho.row(j);
                        axpy_cplx(vr, vi, xr, xi, tre, tim);
                    }
                    for l in 0..d {
                        let mut ar = 0.0;
                        let mut ai = 0.0;
                        for (j, vr, vi) in lmat.row(l) {
                            let xr = tre[j];
                            let xi = tim[j];
                            ar += xr * vr + xi * vi;
                            ai += xi * vr - xr * vi;
                        }
                        ore[l] += ar;
                        oim[l] += ai;
                    }
                }
            },
        );
}

pub(crate) struct Rk4Workspace {
    k1: Planar,
    k2: Planar,
    k3: Planar,
    k4: Planar,
    tmp: Planar,
}

impl Rk4Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k1: Planar::zeros(dim),
            k2: Planar::zeros(dim),
            k3: Planar::zeros(dim),
            k4: Planar::zeros(dim),
            tmp: Planar::zeros(dim),
        }
    }
}

/// tmp = base + c * k
fn lincomb(tmp: &mut Planar, base: &Planar, c: f64, k: &Planar) {
    for ((t, b), kv) in tmp.data.iter_mut().zip(&base.data).zip(&k.data) {
        *t = b + c * kv;
    }
}

/// One classical RK4 step followed by Hermitize-and-renormalize.
/// Returns the pre-renormalization trace drift |tr rho - 1|.
pub(crate) fn rk4_step(
    g: &CsrMat,
    ls: &[CsrMat],
    rho: &mut Planar,
    dt: f64,
    ws: &mut Rk4Workspace,
) -> f64 {
    rhs(g, ls, rho, &mut ws.k1);
    lincomb(&mut ws.tmp, rho, dt / 2.0, &ws.k1);
    rhs(g, ls, &ws.tmp, &mut ws.k2);
    lincomb(&mut ws.tmp, rho, dt / 2.0, &ws.k2);
    rhs(g, ls, &ws.tmp, &mut ws.k3);
    lincomb(&mut ws.tmp, rho, dt, &ws.k3);
    rhs(g, ls, &ws.tmp, &mut ws.k4);

    let w = dt / 6.0;
    for i in 0..rho.data.len() {
        rho.data[i] += w * (ws.k1.data[i] + 2.0 * ws.k2.data[i] + 2.0 * ws.k3.data[i] + ws.k4.data[i]);
    }

    let tr = rho.trace_re();
    let drift = (tr - 1.0).abs();
    hermitize_renorm(rho, tr);
    drift
}

/// rho <- (rho + rho^dag) / (2 tr), in place.
fn hermitize_renorm(rho: &mut Planar, tr: f64) {
    let d = rho.dim;
    let inv = 1.0 / tr;
    for i in 0..d {
        let bi = i * 2 * d;
        // diagonal: real part scaled, imaginary part dropped
        rho.data[bi + i] *= inv;
        rho.data[bi + d + i] = 0.0;
        for j in (i + 1)..d {
            let bj = j * 2 * d;
            let re = 0.5 * (rho.data[bi + j] + rho.data[bj + i]) * inv;
            let im = 0.5 * (rho.data[bi + d + j] - rho.data[bj + d + i]) * inv;
            rho.data[bi + j] = re;
            rho.data[bi + d + j] = im;
            rho.data[bj + i] = re;
            rho.data[bj + d + i] = -im;
        }
    }
}
