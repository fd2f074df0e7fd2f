//! Closed-form stationary distributions and classification of the solvable
//! regimes: no hopping, frozen, shift, period-2, projective and
//! double-projective parameters.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::distribution::DiscretizedDistribution;
use crate::error::{Error, Result};
use crate::maps::{
    eigenangles, gc_det, gc_probability, theta_map, wrap_angle, Outcome, SetupParams, PROJECTIVE_TOL,
};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SERIES_TERMS: usize = 20;
const MAX_DENOMINATOR: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpecialKind {
    GammaZero,
    Frozen { q: u64 },
    Shift { q: u64 },
    Period2 { l: u64 },
    ProjectiveMinus,
    ProjectivePlus,
    DoubleProjective,
    Generic,
}

/// Residuals of each special condition. `*_plane` entries are Euclidean
/// distances in the `(M, T)` plane to the nearest curve of that family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub frozen: f64,
    pub shift: f64,
    pub period2: f64,
    pub det_minus: f64,
    pub det_plus: f64,
    pub frozen_plane: f64,
    pub shift_plane: f64,
    pub period2_plane: f64,
}

impl Distances {
    /// Distance to the nearest frozen or shift line.
    pub fn degenerate_plane(&self) -> f64 {
        self.frozen_plane.min(self.shift_plane)
    }

    pub fn nearest_plane(&self) -> f64 {
        self.degenerate_plane().min(self.period2_plane)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialCaseTag {
    #[serde(flatten)]
    pub kind: SpecialKind,
    pub distances: Distances,
}

fn nearest_multiple(x: f64, step: f64, offset: f64, min_k: i64) -> (u64, f64) {
    let k = (((x - offset) / step).round() as i64).max(min_k);
    (k as u64, (x - offset - k as f64 * step).abs())
}

pub fn distances(p: &SetupParams) -> Distances {
    let (m, t, y) = (p.m(), p.t(), p.y());
    let (_, frozen) = nearest_multiple(y * t, TAU, 0.0, 0);
    let (_, shift) = nearest_multiple(m * t, PI, 0.0, 1);
    let (_, period2) = nearest_multiple(y * t, TAU, PI, 0);
    // Gradients of YT and MT with respect to (M, T).
    let grad_y = ((m * t / y).powi(2) + y * y).sqrt();
    let grad_m = (t * t + m * m).sqrt();
    Distances {
        frozen,
        shift,
        period2,
        det_minus: gc_det(p, Outcome::Minus).abs(),
        det_plus: gc_det(p, Outcome::Plus).abs(),
        frozen_plane: frozen / grad_y,
        shift_plane: shift / grad_m,
        period2_plane: period2 / grad_y,
    }
}

/// Exact-case detection: angle conditions within `tol`, determinants within
/// the projective threshold. Earlier entries win when several hold:
/// no hopping, frozen, double-projective, shift, period-2, projective.
pub fn classify(p: &SetupParams, tol: f64) -> SpecialCaseTag {
    let d = distances(p);
    let (m, t, y) = (p.m(), p.t(), p.y());
    let kind = if p.gamma() == 0.0 {
        SpecialKind::GammaZero
    } else if d.frozen < tol {
        SpecialKind::Frozen { q: nearest_multiple(y * t, TAU, 0.0, 0).0 }
    } else if d.det_minus < PROJECTIVE_TOL && d.det_plus < PROJECTIVE_TOL {
        SpecialKind::DoubleProjective
    } else if d.shift < tol {
        SpecialKind::Shift { q: nearest_multiple(m * t, PI, 0.0, 1).0 }
    } else if d.period2 < tol {
        SpecialKind::Period2 { l: nearest_multiple(y * t, TAU, PI, 0).0 }
    } else if d.det_minus < PROJECTIVE_TOL {
        SpecialKind::ProjectiveMinus
    } else if d.det_plus < PROJECTIVE_TOL {
        SpecialKind::ProjectivePlus
    } else {
        SpecialKind::Generic
    };
    SpecialCaseTag { kind, distances: d }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub theta: f64,
    pub weight: f64,
}

/// Stationary distribution made of delta peaks. Serializes as the peak list.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticADF {
    pub peaks: Vec<Peak>,
    /// Every trajectory keeps its initial angle; `peaks` holds that angle.
    pub initial_condition_preserving: bool,
}

impl Serialize for AnalyticADF {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.peaks.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnalyticADF {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Self { peaks: Vec::deserialize(d)?, initial_condition_preserving: false })
    }
}

impl AnalyticADF {
    fn from_peaks(peaks: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            peaks: peaks
                .into_iter()
                .filter(|&(_, w)| w > 0.0)
                .map(|(theta, weight)| Peak { theta: wrap_angle(theta), weight })
                .collect(),
            initial_condition_preserving: false,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.peaks.iter().map(|p| p.weight).sum()
    }

    pub fn discretize(&self, n: usize) -> DiscretizedDistribution {
        let peaks: Vec<(f64, f64)> = self.peaks.iter().map(|p| (p.theta, p.weight)).collect();
        DiscretizedDistribution::from_peaks(&peaks, n)
    }
}

/// No hopping: a click projects on `θ = 0`, a long no-click run drives the
/// state to `θ = π` (reported as `−π`). For `MT = lπ` nothing ever clicks or
/// moves, so the initial angle is kept.
pub fn gamma_zero_adf(theta0: f64, mt: f64) -> AnalyticADF {
    if mt.sin().abs() < DEFAULT_TOL {
        return AnalyticADF {
            peaks: vec![Peak { theta: wrap_angle(theta0), weight: 1.0 }],
            initial_condition_preserving: true,
        };
    }
    let c2 = (0.5 * theta0).cos().powi(2);
    AnalyticADF::from_peaks([(0.0, c2), (-PI, 1.0 - c2)])
}

/// Probability of `L` consecutive no-clicks without hopping.
pub fn null_probability(theta0: f64, mt: f64, l: u32) -> f64 {
    let c2 = (0.5 * theta0).cos().powi(2);
    c2 * mt.cos().powi(2 * l as i32) + (1.0 - c2)
}

/// Equal peaks at `±π/2`.
pub fn period2_adf() -> AnalyticADF {
    AnalyticADF::from_peaks([(FRAC_PI_2, 0.5), (-FRAC_PI_2, 0.5)])
}

/// Binomial row `B(n, k)/2^n` for `k = 0..=n`, via logarithms.
fn binomial_row(n: u32) -> Vec<f64> {
    let mut ln = vec![0.0f64; n as usize + 1];
    for k in 1..=n as usize {
        ln[k] = ln[k - 1] + ((n as usize - k + 1) as f64).ln() - (k as f64).ln();
    }
    let shift = n as f64 * 2f64.ln();
    ln.iter().map(|l| (l - shift).exp()).collect()
}

/// Distribution after `n_t` (even) steps of the period-2 random walk with
/// equal outcome probabilities: binomial weights on the orbits of
/// `(m_plus m_minus)^n ψ0` and `(m_minus m_plus)^n ψ0`.
pub fn period2_binomial_distribution(
    n_t: u32,
    theta0: f64,
    p: &SetupParams,
    bins: usize,
) -> Result<DiscretizedDistribution> {
    if !n_t.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("step count {n_t} must be even")));
    }
    let row = binomial_row(n_t);
    let half = (n_t / 2) as usize;
    let mut peaks = vec![(theta0, row[half])];
    let (mut fwd, mut bwd) = (theta0, theta0);
    for n in 1..=half {
        fwd = theta_map(theta_map(fwd, Outcome::Minus, p), Outcome::Plus, p);
        bwd = theta_map(theta_map(bwd, Outcome::Plus, p), Outcome::Minus, p);
        peaks.push((fwd, row[half + n]));
        peaks.push((bwd, row[half + n]));
    }
    Ok(DiscretizedDistribution::from_peaks(&peaks, bins))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveSeries {
    /// Main peak first, then the satellites in orbit order.
    pub peaks: Vec<Peak>,
    pub projector: Outcome,
    /// `(max P)^{n_terms}` over the orbit, a bound on the dropped mass.
    pub tail_bound: f64,
}

impl ProjectiveSeries {
    pub fn discretize(&self, n: usize) -> DiscretizedDistribution {
        let peaks: Vec<(f64, f64)> = self.peaks.iter().map(|p| (p.theta, p.weight)).collect();
        DiscretizedDistribution::from_peaks(&peaks, n)
    }
}

/// Stationary distribution when exactly one matrix is a projector: every
/// application of the projector resets the state to its range, and the other
/// matrix walks it along a geometric-weighted orbit.
pub fn projective_series(p: &SetupParams, n_terms: usize) -> Result<ProjectiveSeries> {
    let dm = gc_det(p, Outcome::Minus).abs() < PROJECTIVE_TOL;
    let dp = gc_det(p, Outcome::Plus).abs() < PROJECTIVE_TOL;
    let projector = match (dm, dp) {
        (true, false) => Outcome::Minus,
        (false, true) => Outcome::Plus,
        _ => return Err(Error::NotProjective),
    };
    if n_terms == 0 {
        return Err(Error::InvalidParams("need at least one term".into()));
    }
    let other = projector.other();
    let main = eigenangles(p, projector).ok_or(Error::NotProjective)?.dominant_angle();
    let mut raw = Vec::with_capacity(n_terms);
    let (mut theta, mut weight, mut max_p) = (main, 1.0, 0.0f64);
    for _ in 0..n_terms {
        raw.push((theta, weight));
        let pn = gc_probability(theta, other, p);
        max_p = max_p.max(pn);
        weight *= pn;
        theta = theta_map(theta, other, p);
    }
    let norm: f64 = raw.iter().map(|r| r.1).sum();
    Ok(ProjectiveSeries {
        peaks: raw.into_iter().map(|(theta, w)| Peak { theta, weight: w / norm }).collect(),
        projector,
        tail_bound: max_p.powi(n_terms as i32),
    })
}

pub fn projective_series_adf(p: &SetupParams, n_terms: usize, bins: usize) -> Result<DiscretizedDistribution> {
    Ok(projective_series(p, n_terms)?.discretize(bins))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleProjective {
    pub adf: AnalyticADF,
    /// Probability of switching between the two peaks, `1 − 2 cos²(YT/2)`.
    pub cross_probability: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

pub fn double_projective_adf(p: &SetupParams) -> Result<DoubleProjective> {
    if gc_det(p, Outcome::Minus).abs() >= PROJECTIVE_TOL || gc_det(p, Outcome::Plus).abs() >= PROJECTIVE_TOL {
        return Err(Error::NotDoubleProjective);
    }
    let theta_plus = eigenangles(p, Outcome::Plus).ok_or(Error::NotDoubleProjective)?.dominant_angle();
    let theta_minus = eigenangles(p, Outcome::Minus).ok_or(Error::NotDoubleProjective)?.dominant_angle();
    Ok(DoubleProjective {
        adf: AnalyticADF::from_peaks([(theta_plus, 0.5), (theta_minus, 0.5)]),
        cross_probability: 1.0 - 2.0 * p.cy() * p.cy(),
        theta_plus,
        theta_minus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftProperties {
    /// Half-angle rotation per application of the rotating matrix; the Bloch
    /// angle moves by `2φ`.
    pub phi: f64,
    pub commensurate: bool,
    /// `φ/π = num/den` when commensurate.
    pub ratio: Option<(i64, u64)>,
}

/// Best rational approximation `p/q` with `q ≤ max_den` from the continued fraction.
pub fn rational_approximation(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as u64 * k1 + k0);
        if k2 > max_den {
            break;
        }
        if (x - h2 as f64 / k2 as f64).abs() < tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// On a shift line (`MT = qπ`) one matrix reflects `θ → −θ` and the other
/// rotates the GC. Returns the rotation phase, the phase of `cY − i(2γ/Y) sY`.
pub fn shift_properties(p: &SetupParams) -> Result<ShiftProperties> {
    if !matches!(classify(p, DEFAULT_TOL).kind, SpecialKind::Shift { .. }) {
        return Err(Error::NotShiftCase);
    }
    let phi = (2.0 * p.gamma() / p.y() * p.sy()).atan2(p.cy());
    let ratio = rational_approximation(phi / PI, MAX_DENOMINATOR, DEFAULT_TOL);
    Ok(ShiftProperties { phi, commensurate: ratio.is_some(), ratio })
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::NoRoot(lo, hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Period `T` in `[t_lo, t_hi]` at which `det m_mu` vanishes.
pub fn find_projective_t(m: f64, gamma: f64, mu: Outcome, t_lo: f64, t_hi: f64) -> Result<f64> {
    bisect(|t| SetupParams::new(m, t, gamma).map(|p| gc_det(&p, mu)).unwrap_or(f64::NAN), t_lo, t_hi)
}

/// All projective periods of `m_mu` in `[t_lo, t_hi]`, found by scanning
/// `samples` subintervals for sign changes.
pub fn projective_periods(m: f64, gamma: f64, mu: Outcome, t_lo: f64, t_hi: f64, samples: usize) -> Vec<f64> {
    let f = |t: f64| gc_det(&SetupParams::new(m, t, gamma).expect("valid"), mu);
    let mut roots = Vec::new();
    let step = (t_hi - t_lo) / samples as f64;
    for s in 0..samples {
        let (a, b) = (t_lo + s as f64 * step, t_lo + (s + 1) as f64 * step);
        if f(a) * f(b) < 0.0 {
            if let Ok(r) = bisect(f, a, b) {
                roots.push(r);
            }
        }
    }
    roots
}

/// Intersection of both projective curves on `MT = π/2 + lπ`, searched for
/// `M` in `[m_lo, m_hi]`. Returns `(M, T)`.
pub fn find_double_projective(l: u32, gamma: f64, m_lo: f64, m_hi: f64) -> Result<(f64, f64)> {
    let a = FRAC_PI_2 + PI * l as f64;
    // (M/Y)² sY² = ½ on the line MT = a.
    let g = |m: f64| {
        let p = SetupParams::new(m, a / m, gamma).expect("valid");
        (p.m() / p.y() * p.sy()).powi(2) - 0.5
    };
    let samples = 400;
    let step = (m_hi - m_lo) / samples as f64;
    for s in 0..samples {
        let (lo, hi) = (m_lo + s as f64 * step, m_lo + (s + 1) as f64 * step);
        if g(lo) * g(hi) < 0.0 {
            let m = bisect(g, lo, hi)?;
            return Ok((m, a / m));
        }
    }
    Err(Error::NoRoot(m_lo, m_hi))
}
