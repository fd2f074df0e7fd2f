//! Scalar and categorical indicators of a discretized distribution.

use serde::{Deserialize, Serialize};

use crate::distribution::DiscretizedDistribution;
use crate::error::{Error, Result};

pub const DEFAULT_HEIGHT_BINS: usize = 100;
pub const DEFAULT_SUPPORT_LEVEL: f64 = 0.99;

/// Least-squares line through `(x, y)` with the RMS residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    LineFit { slope, intercept, residual: (ss / n).sqrt() }
}

/// `R = 1 / Σ Pr²`.
pub fn participation_ratio(w: &DiscretizedDistribution) -> f64 {
    1.0 / w.pr.iter().map(|p| p * p).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope clamped into `[0, 1]`.
    pub zeta: f64,
    pub raw_slope: f64,
    /// The raw slope left `[−0.05, 1.05]`.
    pub out_of_range: bool,
    pub grids: Vec<usize>,
    pub residual: f64,
}

/// Coarse grids `N/2^k` for `k = 1..6` that divide `N`, topped up with `N`
/// itself when fewer than four levels remain.
pub fn default_grids(n: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (1..=6).filter(|k| n.is_multiple_of(1 << k)).map(|k| n >> k).collect();
    if g.len() < 4 {
        g.insert(0, n);
    }
    g
}

/// Slope of `log R` against `log N_g` over the coarse-grained sequence.
pub fn pr_scaling_exponent(w: &DiscretizedDistribution, grids: &[usize]) -> Result<ScalingFit> {
    if grids.len() < 4 {
        return Err(Error::TooFewLevels(grids.len()));
    }
    let mut x = Vec::with_capacity(grids.len());
    let mut y = Vec::with_capacity(grids.len());
    for &g in grids {
        x.push((g as f64).ln());
        y.push(participation_ratio(&w.coarse_grain(g)?).ln());
    }
    let fit = fit_line(&x, &y);
    Ok(ScalingFit {
        zeta: fit.slope.clamp(0.0, 1.0),
        raw_slope: fit.slope,
        out_of_range: !(-0.05..=1.05).contains(&fit.slope),
        grids: grids.to_vec(),
        residual: fit.residual,
    })
}

/// Fraction of cells, taken in descending weight, needed to hold mass `c`.
pub fn support_fraction(w: &DiscretizedDistribution, c: f64) -> f64 {
    let mut sorted = w.pr.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let target = c * (1.0 - 1e-12);
    // Neumaier summation keeps the running total exact enough for the threshold.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (i, &p) in sorted.iter().enumerate() {
        let t = sum + p;
        comp += if sum.abs() >= p.abs() { (sum - t) + p } else { (p - t) + sum };
        sum = t;
        if sum + comp >= target {
            return (i + 1) as f64 / w.n() as f64;
        }
    }
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightHistogram {
    pub category: u8,
    pub h_max: f64,
    pub h_0: f64,
    pub delta_h: f64,
    /// `max W = min W`; reported as category 3.
    pub degenerate: bool,
    pub counts: Vec<u64>,
}

/// Histogram of the density values `W_i = Pr_i/Δθ` over `n_h` heights and the
/// resulting localization category:
/// 1 when the most common height is the lowest bin and `min W` is numerically zero,
/// 2 when the most common height is the lowest bin but `min W` is finite,
/// 3 otherwise.
pub fn height_category(w: &DiscretizedDistribution, n_h: usize) -> HeightHistogram {
    let inv = 1.0 / w.delta_theta();
    let (lo, hi) = w
        .pr
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p * inv), b.max(p * inv)));
    if hi - lo <= 1e-12 * hi.abs() {
        return HeightHistogram {
            category: 3,
            h_max: lo,
            h_0: lo,
            delta_h: 0.0,
            degenerate: true,
            counts: vec![w.n() as u64],
        };
    }
    let delta_h = (hi - lo) / (2.0 * n_h as f64);
    let mut counts = vec![0u64; n_h];
    for &p in &w.pr {
        let b = (((p * inv - lo) / (2.0 * delta_h)).floor() as usize).min(n_h - 1);
        counts[b] += 1;
    }
    let i_max = counts
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
    let i_0 = counts.iter().position(|&c| c > 0).unwrap_or(0);
    let height = |i: usize| lo + (2 * i + 1) as f64 * delta_h;
    let category = if i_max == i_0 {
        if lo < delta_h {
            1
        } else {
            2
        }
    } else {
        3
    };
    HeightHistogram {
        category,
        h_max: height(i_max),
        h_0: height(i_0),
        delta_h,
        degenerate: false,
        counts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxFit {
    pub d: f64,
    pub residual: f64,
    pub m_values: Vec<usize>,
    pub counts: Vec<u64>,
}

/// Default box sizes: octaves `m = 16, 32, …` up to `N/16`.
pub fn default_box_range(n: usize) -> Vec<usize> {
    std::iter::successors(Some(16usize), |m| Some(m * 2)).take_while(|&m| m <= n / 16).collect()
}

/// Number of `1/m`-boxes in the unit square touched by the polyline through
/// `(x_i, y_i)`, counted column by column.
fn box_count(y: &[f64], m: usize) -> u64 {
    let n = y.len();
    let mut col_lo = vec![f64::INFINITY; m];
    let mut col_hi = vec![f64::NEG_INFINITY; m];
    let xs = |i: usize| (i as f64 + 0.5) / n as f64;
    let column = |x: f64| ((x * m as f64).floor() as usize).min(m - 1);
    let mut touch = |c: usize, v: f64| {
        col_lo[c] = col_lo[c].min(v);
        col_hi[c] = col_hi[c].max(v);
    };
    touch(column(xs(0)), y[0]);
    for i in 0..n - 1 {
        let (x0, x1) = (xs(i), xs(i + 1));
        let (c0, c1) = (column(x0), column(x1));
        touch(c1, y[i + 1]);
        for c in c0..c1 {
            // Crossing into column c + 1: the curve value on the boundary belongs to both.
            let xb = (c + 1) as f64 / m as f64;
            let yb = y[i] + (y[i + 1] - y[i]) * (xb - x0) / (x1 - x0);
            touch(c, yb);
            touch(c + 1, yb);
        }
    }
    let level = |v: f64| ((v * m as f64).floor() as i64).clamp(0, m as i64 - 1);
    (0..m)
        .filter(|&c| col_lo[c].is_finite())
        .map(|c| (level(col_hi[c]) - level(col_lo[c]) + 1) as u64)
        .sum()
}

/// Box-counting dimension of the graph of `W` rescaled to the unit square.
pub fn box_counting_dimension(w: &DiscretizedDistribution, m_range: &[usize]) -> BoxFit {
    let max = w.pr.iter().cloned().fold(0.0, f64::max);
    let y: Vec<f64> = if max > 0.0 { w.pr.iter().map(|p| p / max).collect() } else { w.pr.clone() };
    let counts: Vec<u64> = m_range.iter().map(|&m| box_count(&y, m)).collect();
    let lx: Vec<f64> = m_range.iter().map(|&m| (m as f64).ln()).collect();
    let ly: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = fit_line(&lx, &ly);
    BoxFit { d: fit.slope, residual: fit.residual, m_values: m_range.to_vec(), counts }
}

/// `½ Σ (p − q)² / (p + q)`.
pub fn chi2_distance(p: &DiscretizedDistribution, q: &DiscretizedDistribution) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::GridMismatch(p.n(), q.n()));
    }
    Ok(0.5
        * p.pr
            .iter()
            .zip(&q.pr)
            .map(|(a, b)| if a + b > 0.0 { (a - b) * (a - b) / (a + b) } else { 0.0 })
            .sum::<f64>())
}

/// The indicator set of one distribution. Serializes to the flat record
/// `{pr, zeta, support, category, h_max, h_0, fractal_dim, chi2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRecord {
    pub pr: f64,
    pub zeta: Option<f64>,
    pub support: f64,
    pub category: u8,
    pub h_max: f64,
    pub h_0: f64,
    pub fractal_dim: Option<f64>,
    pub chi2: Option<f64>,
    #[serde(skip)]
    pub zeta_fit: Option<ScalingFit>,
    #[serde(skip)]
    pub box_fit: Option<BoxFit>,
}

pub fn compute_indicators(
    w: &DiscretizedDistribution,
    reference: Option<&DiscretizedDistribution>,
) -> IndicatorRecord {
    let zeta_fit = pr_scaling_exponent(w, &default_grids(w.n())).ok();
    let m_range = default_box_range(w.n());
    let box_fit = (m_range.len() >= 2).then(|| box_counting_dimension(w, &m_range));
    let heights = height_category(w, DEFAULT_HEIGHT_BINS);
    IndicatorRecord {
        pr: participation_ratio(w),
        zeta: zeta_fit.as_ref().map(|f| f.zeta),
        support: support_fraction(w, DEFAULT_SUPPORT_LEVEL),
        category: heights.category,
        h_max: heights.h_max,
        h_0: heights.h_0,
        fractal_dim: box_fit.as_ref().map(|f| f.d),
        chi2: reference.and_then(|r| chi2_distance(w, r).ok()),
        zeta_fit,
        box_fit,
    }
}
