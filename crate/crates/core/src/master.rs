//! Discretized master equation on the Grand Circle.
//!
//! Entry `(i, k)` of the transition matrix is the probability of moving from
//! cell `k` to cell `i`:
//!
//! ```text
//! M[i][k] = (1/Δθ) Σ_μ P_μ(θ_k) |F_μ(c_i) ∩ c_k|
//! ```
//!
//! where `F_μ` is the retrospective map and `P_μ` is evaluated at the cell
//! center. Because each `F_μ` is a circle homeomorphism away from the
//! projective lines, `F_μ(c_i)` is a single arc and the nonzeros of each row
//! form two short runs of columns.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::DiscretizedDistribution;
use crate::error::{Error, Result};
use crate::maps::{gc_det, gc_probability, theta_inverse, Outcome, SetupParams, PROJECTIVE_TOL};

pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_GAP_ITERS: usize = 200;

/// Overlaps shorter than this fraction of a cell are dropped.
const OVERLAP_FLOOR: f64 = 1e-15;

const ROW_CHUNK: usize = 4096;

/// Column-stochastic transition matrix in compressed-row layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMarkov {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl SparseMarkov {
    /// Builds a matrix from per-row `(column, value)` lists.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (k, v) in merge_sorted(row) {
                col.push(k as u32);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().map(|&c| c as usize).zip(self.val[r].iter().copied())
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (&c, &v) in self.col.iter().zip(&self.val) {
            sums[c as usize] += v;
        }
        sums
    }

    /// `y = M x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, out)| {
            let base = chunk * ROW_CHUNK;
            for (r, yi) in out.iter_mut().enumerate() {
                let i = base + r;
                let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
                let mut acc = 0.0;
                for e in lo..hi {
                    acc += self.val[e] * x[self.col[e] as usize];
                }
                *yi = acc;
            }
        });
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Debug dump: magic `MQME`, version u32, N u64, nnz u64, then row pointers
    /// (u64), columns (u32) and values (f64), all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(b"MQME")?;
        out.write_all(&1u32.to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&(self.nnz() as u64).to_le_bytes())?;
        for &r in &self.row_ptr {
            out.write_all(&(r as u64).to_le_bytes())?;
        }
        for &c in &self.col {
            out.write_all(&c.to_le_bytes())?;
        }
        for &v in &self.val {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != b"MQME" {
            return Err(Error::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut read_u64 = |input: &mut R| -> Result<u64> {
            input.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let n = read_u64(&mut input)? as usize;
        let nnz = read_u64(&mut input)? as usize;
        let row_ptr = (0..=n).map(|_| read_u64(&mut input).map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let mut col = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            input.read_exact(&mut b4)?;
            col.push(u32::from_le_bytes(b4));
        }
        let mut val = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            input.read_exact(&mut b8)?;
            val.push(f64::from_le_bytes(b8));
        }
        if row_ptr.last() != Some(&nnz) {
            return Err(Error::Format("row pointers inconsistent with nnz".into()));
        }
        Ok(Self { n, row_ptr, col, val })
    }
}

fn merge_sorted(row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (k, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    out
}

/// Per-outcome data shared by all rows.
struct Band {
    /// `F_μ` at the cell boundaries `−π + iΔθ`, `i = 0..N`.
    boundary: Vec<f64>,
    /// `P_μ` at the cell centers.
    prob: Vec<f64>,
    increasing: bool,
}

/// Adds the overlaps of the arc `[start, start + len)` with the cells.
fn push_arc(start: f64, len: f64, n: usize, band: &Band, row: &mut Vec<(usize, f64)>) {
    let dtheta = TAU / n as f64;
    let x = start + PI;
    let end = x + len;
    let mut j = (x / dtheta).floor() as usize;
    loop {
        let lo = j as f64 * dtheta;
        if lo >= end {
            break;
        }
        let hi = lo + dtheta;
        let ov = end.min(hi) - x.max(lo);
        if ov > OVERLAP_FLOOR * dtheta {
            let k = j % n;
            row.push((k, band.prob[k] * ov / dtheta));
        }
        j += 1;
    }
}

fn arc_of_cell(i: usize, band: &Band) -> (f64, f64) {
    let n = band.prob.len();
    let (a, b) = (band.boundary[i], band.boundary[(i + 1) % n]);
    let (start, stop) = if band.increasing { (a, b) } else { (b, a) };
    let len = (stop - start).rem_euclid(TAU);
    // A near-full turn can only be a tiny arc whose endpoints swapped by rounding.
    let len = if len > TAU - 1e-9 { 0.0 } else { len };
    (start, len)
}

/// Transition matrix of the discretized master equation on `n` cells.
pub fn build_markov(p: &SetupParams, n: usize) -> Result<SparseMarkov> {
    if !(2..=100_000_000).contains(&n) {
        return Err(Error::InvalidParams(format!("cell count {n} outside [2, 1e8]")));
    }
    let det_minus = gc_det(p, Outcome::Minus);
    let det_plus = gc_det(p, Outcome::Plus);
    if det_minus.abs() < PROJECTIVE_TOL || det_plus.abs() < PROJECTIVE_TOL {
        return Err(Error::ProjectiveParameters { det_minus: det_minus.abs(), det_plus: det_plus.abs() });
    }
    let dtheta = TAU / n as f64;
    let bands: Vec<Band> = [(Outcome::Minus, det_minus), (Outcome::Plus, det_plus)]
        .into_iter()
        .map(|(mu, det)| {
            let boundary = (0..n)
                .into_par_iter()
                .map(|i| theta_inverse(-PI + i as f64 * dtheta, mu, p).expect("invertible"))
                .collect();
            let prob = (0..n)
                .into_par_iter()
                .map(|k| gc_probability(DiscretizedDistribution::center(k, n), mu, p))
                .collect();
            Band { boundary, prob, increasing: det > 0.0 }
        })
        .collect();

    let chunks: Vec<(Vec<usize>, Vec<u32>, Vec<f64>)> = (0..n.div_ceil(ROW_CHUNK))
        .into_par_iter()
        .map(|c| {
            let rows = c * ROW_CHUNK..((c + 1) * ROW_CHUNK).min(n);
            let mut lens = Vec::with_capacity(rows.len());
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            let mut row = Vec::with_capacity(16);
            for i in rows {
                row.clear();
                for band in &bands {
                    let (start, len) = arc_of_cell(i, band);
                    push_arc(start, len, n, band, &mut row);
                }
                row.sort_by_key(|e| e.0);
                let merged = merge_sorted(std::mem::take(&mut row));
                lens.push(merged.len());
                for (k, v) in merged {
                    cols.push(k as u32);
                    vals.push(v);
                }
            }
            (lens, cols, vals)
        })
        .collect();

    let nnz: usize = chunks.iter().map(|c| c.1.len()).sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col = Vec::with_capacity(nnz);
    let mut val = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for (lens, cols, vals) in chunks {
        for l in lens {
            row_ptr.push(row_ptr.last().unwrap() + l);
        }
        col.extend(cols);
        val.extend(vals);
    }
    Ok(SparseMarkov { n, row_ptr, col, val })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// L1 norm of the last update.
    pub residual: f64,
    pub converged: bool,
    /// The iterates settled into a two-cycle (an eigenvalue at −1).
    pub period2_cycling: bool,
    pub eigen_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NotConverged {
    pub dist: DiscretizedDistribution,
    pub report: SolveReport,
}

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "power iteration not converged after {} iterations (residual {:e})",
            self.report.iterations, self.report.residual
        )
    }
}

impl std::error::Error for NotConverged {}

pub fn default_tol(n: usize) -> f64 {
    1e-12 * n as f64
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Repeated application of `m` to `init` until the L1 change drops below `tol`.
pub fn power_iterate(
    m: &SparseMarkov,
    init: &DiscretizedDistribution,
    max_iters: usize,
    tol: f64,
) -> std::result::Result<(DiscretizedDistribution, SolveReport), NotConverged> {
    let mut prev = init.pr.clone();
    let mut x = init.pr.clone();
    let mut y = vec![0.0; m.n()];
    let mut residual = f64::INFINITY;
    let mut two_step = f64::INFINITY;
    for it in 1..=max_iters {
        m.matvec_into(&x, &mut y);
        let total: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= total);
        residual = l1_diff(&y, &x);
        two_step = l1_diff(&y, &prev);
        std::mem::swap(&mut prev, &mut x);
        std::mem::swap(&mut x, &mut y);
        if residual < tol {
            let report = SolveReport {
                iterations: it,
                residual,
                converged: true,
                period2_cycling: false,
                eigen_gap: None,
            };
            return Ok((DiscretizedDistribution::from_weights(x), report));
        }
    }
    let report = SolveReport {
        iterations: max_iters,
        residual,
        converged: false,
        period2_cycling: max_iters >= 2 && two_step < tol && residual > 100.0 * tol,
        eigen_gap: None,
    };
    Err(NotConverged { dist: DiscretizedDistribution::from_weights(x), report })
}

/// `steps` applications of `m` without renormalization.
pub fn propagate(m: &SparseMarkov, w0: &DiscretizedDistribution, steps: usize) -> DiscretizedDistribution {
    let mut x = w0.pr.clone();
    let mut y = vec![0.0; m.n()];
    for _ in 0..steps {
        m.matvec_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
    }
    DiscretizedDistribution::from_weights(x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapEstimate {
    /// `1 − |λ2|`.
    pub gap: f64,
    pub lambda2: f64,
    pub iterations: usize,
}

/// Estimates the spectral gap by power iteration of `B = M − π 1ᵀ` on a smooth
/// zero-sum start vector. The geometric mean growth over the second half of the
/// iterations stands in for `|λ2|`, which averages out the rotation of a
/// complex pair.
pub fn eigen_gap(m: &SparseMarkov, stationary: &DiscretizedDistribution, iters: usize) -> GapEstimate {
    let n = m.n();
    let pi = &stationary.pr;
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let th = DiscretizedDistribution::center(i, n);
            // Low harmonics plus a little hash noise so no mode is missed.
            let h = ((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64;
            th.cos() + 0.7 * th.sin() + 0.5 * (2.0 * th).cos() + 0.3 * (3.0 * th).sin() + 1e-3 * (h - 0.5)
        })
        .collect();
    let deflate = |v: &mut [f64]| {
        let s: f64 = v.iter().sum();
        v.iter_mut().zip(pi).for_each(|(x, p)| *x -= s * p);
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    deflate(&mut v);
    let mut nv = norm(&v);
    if nv == 0.0 {
        return GapEstimate { gap: 1.0, lambda2: 0.0, iterations: 0 };
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut log_growth = Vec::with_capacity(iters);
    for it in 0..iters {
        m.matvec_into(&v, &mut w);
        deflate(&mut w);
        nv = norm(&w);
        if nv <= 1e-300 {
            return GapEstimate { gap: 1.0, lambda2: 0.0, iterations: it + 1 };
        }
        log_growth.push(nv.ln());
        w.iter_mut().for_each(|x| *x /= nv);
        std::mem::swap(&mut v, &mut w);
    }
    let tail = &log_growth[iters / 2..];
    let lambda2 = (tail.iter().sum::<f64>() / tail.len().max(1) as f64).exp().min(1.0);
    GapEstimate { gap: 1.0 - lambda2, lambda2, iterations: iters }
}
