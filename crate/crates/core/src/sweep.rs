//! Parameter-plane driver: per-point pipeline, cross-sections and resumable
//! grids written as JSON lines.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::{PI, TAU};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::DiscretizedDistribution;
use crate::ergodicity::{analyze_ergodicity, ErgodicityReport};
use crate::error::{Error, Result};
use crate::indicators::{chi2_distance, compute_indicators, IndicatorRecord};
use crate::maps::{gc_det, Outcome, SetupParams, PROJECTIVE_TOL};
use crate::master::{build_markov, default_tol, eigen_gap, power_iterate, SolveReport, DEFAULT_GAP_ITERS};
use crate::special::{
    classify, double_projective_adf, find_double_projective, gamma_zero_adf, projective_periods,
    projective_series, SpecialCaseTag, SpecialKind, DEFAULT_SERIES_TERMS, DEFAULT_TOL,
};
use crate::trajectory::{simulate, TrajectoryConfig};

pub const DEFAULT_MARGIN: f64 = 0.02;
pub const THREADS_ENV: &str = "MQ_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Me,
    Mc,
    Both,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "me" => Ok(Self::Me),
            "mc" => Ok(Self::Mc),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidParams(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub gamma: f64,
    pub m_range: [f64; 2],
    pub m_count: usize,
    pub t_range: [f64; 2],
    pub t_count: usize,
    pub cells: usize,
    pub mc_steps: u64,
    pub me_max_iters: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub mode: Mode,
    pub margin: f64,
    /// GC starting angle of Monte-Carlo runs.
    pub theta0: f64,
    /// Directory for per-point distribution CSVs.
    pub distribution_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            m_range: [0.125, 5.0],
            m_count: 40,
            t_range: [0.125, 5.0],
            t_count: 40,
            cells: 10_000,
            mc_steps: 1_000_000,
            me_max_iters: 10_000,
            seed: 0,
            output: None,
            mode: Mode::Me,
            margin: DEFAULT_MARGIN,
            theta0: 0.3,
            distribution_dir: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.m_count == 0 || self.t_count == 0 {
            return bad("grid counts must be at least 1".into());
        }
        for (name, r) in [("M", self.m_range), ("T", self.t_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] > 0.0 && r[0] <= r[1]) {
                return bad(format!("{name} range {r:?} must satisfy 0 < lo <= hi"));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma {} must be finite and non-negative", self.gamma));
        }
        if self.cells < 16 {
            return bad(format!("cells {} must be at least 16", self.cells));
        }
        if self.mode != Mode::Me && self.mc_steps < 2 {
            return bad("mc_steps must be at least 2".into());
        }
        if self.me_max_iters == 0 {
            return bad("me_max_iters must be positive".into());
        }
        if self.margin.is_nan() || self.margin < 0.0 {
            return bad(format!("margin {} must be non-negative", self.margin));
        }
        Ok(())
    }

    pub fn m_values(&self) -> Vec<f64> {
        linspace(self.m_range, self.m_count)
    }

    pub fn t_values(&self) -> Vec<f64> {
        linspace(self.t_range, self.t_count)
    }

    /// Grid points in index order, `index = i_M · t_count + i_T`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ts = self.t_values();
        self.m_values().into_iter().flat_map(|m| ts.iter().map(move |&t| (m, t))).collect()
    }
}

pub fn linspace(r: [f64; 2], count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![r[0]];
    }
    let step = (r[1] - r[0]) / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { r[1] } else { r[0] + i as f64 * step }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub index: u64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub special: Option<SpecialCaseTag>,
    /// Closer than the margin to a frozen, shift or period-2 line.
    pub near_special: bool,
    pub warnings: Vec<String>,
    pub indicators: Option<IndicatorRecord>,
    pub ergodicity: Option<ErgodicityReport>,
    pub solve: Option<SolveReport>,
    pub distribution_file: Option<String>,
    /// Reason codes for every null field.
    pub nulls: BTreeMap<String, String>,
    pub error: Option<String>,
}

impl GridPointResult {
    fn empty(index: u64, m: f64, t: f64) -> Self {
        Self {
            index,
            m,
            t,
            special: None,
            near_special: false,
            warnings: Vec::new(),
            indicators: None,
            ergodicity: None,
            solve: None,
            distribution_file: None,
            nulls: BTreeMap::new(),
            error: None,
        }
    }

    fn null(&mut self, field: &str, reason: &str) {
        self.nulls.insert(field.into(), reason.into());
    }
}

/// Result of a single point together with the distribution it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct PointOutput {
    pub result: GridPointResult,
    pub distribution: Option<DiscretizedDistribution>,
    pub mc_distribution: Option<DiscretizedDistribution>,
}

enum Analytic {
    Dist(DiscretizedDistribution),
    None,
}

fn analytic_distribution(p: &SetupParams, tag: &SpecialCaseTag, n: usize) -> Result<Analytic> {
    let dm = gc_det(p, Outcome::Minus).abs() < PROJECTIVE_TOL;
    let dp = gc_det(p, Outcome::Plus).abs() < PROJECTIVE_TOL;
    Ok(match tag.kind {
        SpecialKind::GammaZero => {
            let mt = p.m() * p.t();
            // Averaging the peak weights over a uniform initial angle gives ½ each.
            let adf = gamma_zero_adf(PI / 2.0, mt);
            if adf.initial_condition_preserving {
                Analytic::Dist(DiscretizedDistribution::uniform(n))
            } else {
                Analytic::Dist(adf.discretize(n))
            }
        }
        _ if dm && dp => Analytic::Dist(double_projective_adf(p)?.adf.discretize(n)),
        _ if dm || dp => Analytic::Dist(projective_series(p, DEFAULT_SERIES_TERMS)?.discretize(n)),
        _ => Analytic::None,
    })
}

/// Classify, solve and analyse one `(M, T)` point. Failures are recorded in
/// the result rather than returned.
pub fn run_point(m: f64, t: f64, index: u64, cfg: &SweepConfig) -> PointOutput {
    let mut out = PointOutput {
        result: GridPointResult::empty(index, m, t),
        distribution: None,
        mc_distribution: None,
    };
    if let Err(e) = evaluate(m, t, index, cfg, &mut out) {
        out.result.error = Some(e.to_string());
    }
    let r = &mut out.result;
    if r.indicators.is_none() {
        r.null("indicators", if r.error.is_some() { "failed" } else { "skipped" });
    }
    if let Some(ind) = &r.indicators {
        let (zeta_missing, dim_missing, chi2_missing) =
            (ind.zeta.is_none(), ind.fractal_dim.is_none(), ind.chi2.is_none());
        if zeta_missing {
            r.null("indicators.zeta", "too-few-grid-levels");
        }
        if dim_missing {
            r.null("indicators.fractal_dim", "too-few-cells");
        }
        if chi2_missing {
            r.null("indicators.chi2", "no-reference");
        }
    }
    if r.ergodicity.is_none() && !r.nulls.contains_key("ergodicity") {
        r.null("ergodicity", if r.error.is_some() { "failed" } else { "skipped" });
    }
    if r.solve.is_none() && !r.nulls.contains_key("solve") {
        r.null("solve", if r.error.is_some() { "failed" } else { "skipped" });
    }
    if let Some(s) = &r.solve {
        if s.eigen_gap.is_none() {
            r.nulls.insert("solve.eigen_gap".into(), "not-estimated".into());
        }
    }
    if r.distribution_file.is_none() {
        r.nulls.insert("distribution_file".into(), "not-requested".into());
    }
    out
}

fn evaluate(m: f64, t: f64, index: u64, cfg: &SweepConfig, out: &mut PointOutput) -> Result<()> {
    let p = SetupParams::new(m, t, cfg.gamma)?;
    let n = cfg.cells;
    let tag = classify(&p, DEFAULT_TOL);
    let r = &mut out.result;
    r.special = Some(tag);
    r.near_special = tag.distances.nearest_plane() < cfg.margin;
    if tag.distances.degenerate_plane() < cfg.margin || matches!(tag.kind, SpecialKind::Frozen { .. } | SpecialKind::Shift { .. }) {
        r.warnings.push("degenerate-stationary".into());
    }

    let me_dist = if cfg.mode == Mode::Mc {
        r.null("solve", "mode-mc");
        r.null("ergodicity", "mode-mc");
        None
    } else {
        match analytic_distribution(&p, &tag, n)? {
            Analytic::Dist(d) => {
                r.null("solve", "analytic");
                r.null("ergodicity", "analytic");
                r.warnings.push("analytic-solution".into());
                Some(d)
            }
            Analytic::None => {
                let markov = build_markov(&p, n)?;
                let tol = default_tol(n);
                let (dist, mut report) = match power_iterate(&markov, &DiscretizedDistribution::uniform(n), cfg.me_max_iters, tol) {
                    Ok(ok) => ok,
                    Err(nc) => {
                        r.warnings.push(if nc.report.period2_cycling { "period2-cycling" } else { "not-converged" }.into());
                        (nc.dist, nc.report)
                    }
                };
                let gap = eigen_gap(&markov, &dist, DEFAULT_GAP_ITERS);
                report.eigen_gap = gap.gap.is_finite().then_some(gap.gap);
                r.solve = Some(report);
                r.ergodicity = Some(analyze_ergodicity(&p, &markov));
                Some(dist)
            }
        }
    };

    let mc_dist = if cfg.mode == Mode::Me {
        None
    } else {
        let tc = TrajectoryConfig::on_gc(cfg.theta0, cfg.mc_steps, n, cfg.seed ^ index);
        Some(simulate(&tc, &p)?.histogram)
    };

    let (primary, reference) = match (&me_dist, &mc_dist) {
        (Some(me), mc) => (me, mc.as_ref()),
        (None, Some(mc)) => (mc, None),
        (None, None) => unreachable!("at least one solver runs"),
    };
    let mut ind = compute_indicators(primary, reference);
    if let (Some(me), Some(mc)) = (&me_dist, &mc_dist) {
        ind.chi2 = Some(chi2_distance(me, mc)?);
    }
    r.indicators = Some(ind);

    if let Some(dir) = &cfg.distribution_dir {
        fs::create_dir_all(dir)?;
        let name = format!("point_{index:06}.csv");
        primary.write_csv(BufWriter::new(File::create(dir.join(&name))?))?;
        r.distribution_file = Some(name);
    }
    out.distribution = me_dist;
    out.mc_distribution = mc_dist;
    Ok(())
}

/// Thread pool honouring `MQ_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| Error::InvalidParams(e.to_string()))
}

/// Points along `T` at fixed `M`, in `T` order.
pub fn run_cross_section(m: f64, ts: &[f64], cfg: &SweepConfig) -> Vec<GridPointResult> {
    ts.par_iter()
        .enumerate()
        .map(|(i, &t)| run_point(m, t, i as u64, cfg).result)
        .collect()
}

/// JSON formatter printing every float with 17 significant digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct SigFormatter;

impl serde_json::ser::Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter);
    value.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayCurve {
    /// `frozen`, `shift`, `period2`, `projective_minus`, `projective_plus` or `double_projective`.
    pub kind: String,
    /// Integer label of the family member, if any.
    pub order: Option<u64>,
    /// `(M, T)` points on the curve.
    pub points: Vec<[f64; 2]>,
}

/// Special-case curves inside the configured window, sampled on `samples`
/// values of `M`.
pub fn overlay_curves(cfg: &SweepConfig, samples: usize) -> Vec<OverlayCurve> {
    let [m_lo, m_hi] = cfg.m_range;
    let [t_lo, t_hi] = cfg.t_range;
    let ms = linspace(cfg.m_range, samples.max(2));
    let y = |m: f64| (m * m + 4.0 * cfg.gamma * cfg.gamma).sqrt();
    let inside = |t: f64| t >= t_lo && t <= t_hi;
    let mut curves = Vec::new();
    let mut family = |kind: &str, t_of: &dyn Fn(f64, u64) -> f64, start: u64| {
        for k in start.. {
            let pts: Vec<[f64; 2]> = ms.iter().map(|&m| [m, t_of(m, k)]).filter(|q| inside(q[1])).collect();
            // T decreases in M for every family, so once the smallest M leaves
            // the window from below no larger order can enter.
            let min_t = ms.iter().map(|&m| t_of(m, k)).fold(f64::INFINITY, f64::min);
            if pts.is_empty() && min_t > t_hi {
                break;
            }
            if !pts.is_empty() {
                curves.push(OverlayCurve { kind: kind.into(), order: Some(k), points: pts });
            }
            if k > 10_000 {
                break;
            }
        }
    };
    family("frozen", &|m, q| TAU * q as f64 / y(m), 1);
    family("shift", &|m, q| PI * q as f64 / m, 1);
    family("period2", &|m, l| PI * (2 * l + 1) as f64 / y(m), 0);
    if cfg.gamma > 0.0 {
        for (kind, mu) in [("projective_minus", Outcome::Minus), ("projective_plus", Outcome::Plus)] {
            let pts: Vec<[f64; 2]> = ms
                .iter()
                .flat_map(|&m| projective_periods(m, cfg.gamma, mu, t_lo, t_hi, 2000).into_iter().map(move |t| [m, t]))
                .collect();
            curves.push(OverlayCurve { kind: kind.into(), order: None, points: pts });
        }
        let mut dp = Vec::new();
        for l in 0..64u32 {
            let a = PI / 2.0 + PI * l as f64;
            if a / m_hi > t_hi {
                continue;
            }
            if a / m_lo < t_lo {
                break;
            }
            if let Ok((m, t)) = find_double_projective(l, cfg.gamma, m_lo, m_hi) {
                if inside(t) {
                    dp.push([m, t]);
                }
            }
        }
        curves.push(OverlayCurve { kind: "double_projective".into(), order: None, points: dp });
    }
    curves
}

pub fn overlay_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".overlay.json");
    PathBuf::from(s)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSummary {
    pub total: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub failures: usize,
}

#[derive(Deserialize)]
struct Key {
    #[serde(rename = "M")]
    m: f64,
    #[serde(rename = "T")]
    t: f64,
    error: Option<String>,
}

/// Reads the `(M, T)` keys already present and truncates a partial last line.
fn existing_keys(path: &Path) -> Result<(HashSet<(u64, u64)>, usize)> {
    let mut keys = HashSet::new();
    let mut failures = 0;
    let Ok(file) = File::open(path) else {
        return Ok((keys, 0));
    };
    let mut reader = BufReader::new(file);
    let mut good_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let read = reader.read_line(&mut line)?;
        if read == 0 || !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<Key>(line.trim_end()) {
            Ok(k) => {
                keys.insert((k.m.to_bits(), k.t.to_bits()));
                failures += k.error.is_some() as usize;
                good_len += read as u64;
            }
            Err(_) => break,
        }
    }
    let len = fs::metadata(path)?.len();
    if len != good_len {
        OpenOptions::new().write(true).open(path)?.set_len(good_len)?;
    }
    Ok((keys, failures))
}

/// Evaluates every missing grid point and appends it to `cfg.output` in index
/// order. A rerun of a complete grid leaves the file untouched.
pub fn run_grid(cfg: &SweepConfig) -> Result<GridSummary> {
    cfg.validate()?;
    let path = cfg.output.clone().ok_or_else(|| Error::InvalidParams("grid needs an output path".into()))?;
    let pool = thread_pool()?;
    let (present, old_failures) = existing_keys(&path)?;
    let todo: Vec<(u64, f64, f64)> = cfg
        .points()
        .into_iter()
        .enumerate()
        .filter(|(_, (m, t))| !present.contains(&(m.to_bits(), t.to_bits())))
        .map(|(i, (m, t))| (i as u64, m, t))
        .collect();
    let total = cfg.m_count * cfg.t_count;
    let mut summary = GridSummary { total, evaluated: todo.len(), skipped: total - todo.len(), failures: old_failures };

    let overlay = to_json_line(&overlay_curves(cfg, 200))? + "\n";
    let opath = overlay_path(&path);
    if fs::read_to_string(&opath).ok().as_deref() != Some(overlay.as_str()) {
        fs::write(&opath, overlay)?;
    }
    if todo.is_empty() {
        return Ok(summary);
    }

    let mut file = BufWriter::new(OpenOptions::new().create(true).append(true).open(&path)?);
    let (tx, rx) = mpsc::channel::<(usize, GridPointResult)>();
    let write_result: Result<usize> = std::thread::scope(|s| {
        let todo = &todo;
        s.spawn(move || {
            pool.install(|| {
                todo.par_iter().enumerate().for_each_with(tx, |tx, (slot, &(i, m, t))| {
                    let _ = tx.send((slot, run_point(m, t, i, cfg).result));
                });
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0usize;
        let mut failures = 0usize;
        for (slot, res) in rx {
            pending.insert(slot, res);
            while let Some(res) = pending.remove(&next) {
                failures += res.error.is_some() as usize;
                writeln!(file, "{}", to_json_line(&res)?)?;
                next += 1;
            }
            file.flush()?;
        }
        Ok(failures)
    });
    summary.failures += write_result?;
    file.flush()?;
    Ok(summary)
}

/// Reads a JSON-lines result file.
pub fn read_results(path: &Path) -> Result<Vec<GridPointResult>> {
    let reader = BufReader::new(File::open(path)?);
    reader
        .lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(&line?).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(out: Option<PathBuf>) -> SweepConfig {
        SweepConfig {
            m_range: [1.0, 3.0],
            m_count: 3,
            t_range: [1.0, 3.0],
            t_count: 3,
            cells: 200,
            me_max_iters: 2000,
            output: out,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace([1.0, 2.0], 1), vec![1.0]);
        assert_eq!(linspace([1.0, 2.0], 3), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn formatter_has_17_digits() {
        let s = to_json_line(&serde_json::json!({"a": 0.1, "b": null, "c": f64::NAN})).unwrap();
        assert_eq!(s, r#"{"a":1.0000000000000001e-1,"b":null,"c":null}"#);
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        assert!(SweepConfig { m_count: 0, ..SweepConfig::default() }.validate().is_err());
        let c = SweepConfig { t_range: [0.0, 1.0], ..SweepConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn frozen_point_is_flagged() {
        let cfg = small(None);
        let r = run_point(2.0, TAU / 8f64.sqrt(), 0, &cfg).result;
        assert!(r.near_special);
        assert!(r.warnings.iter().any(|w| w == "degenerate-stationary"));
        assert!(r.error.is_none());
    }

    #[test]
    fn projective_point_uses_series() {
        let t = crate::special::find_projective_t(2.92, 1.0, Outcome::Minus, 0.5, 1.2).unwrap();
        let r = run_point(2.92, t, 0, &small(None)).result;
        assert!(r.error.is_none(), "{:?}", r.error);
        assert!(r.warnings.iter().any(|w| w == "analytic-solution"));
        assert_eq!(r.nulls.get("solve").map(String::as_str), Some("analytic"));
    }

    #[test]
    fn invalid_point_is_recorded() {
        let r = run_point(-1.0, 1.0, 0, &small(None)).result;
        assert!(r.error.is_some());
        assert_eq!(r.nulls.get("indicators").map(String::as_str), Some("failed"));
    }

    #[test]
    fn overlay_points_satisfy_equations() {
        let cfg = SweepConfig { m_range: [0.1, 5.0], t_range: [0.1, 5.0], ..SweepConfig::default() };
        let curves = overlay_curves(&cfg, 50);
        for c in &curves {
            for &[m, t] in &c.points {
                let p = SetupParams::new(m, t, 1.0).unwrap();
                let resid = match c.kind.as_str() {
                    "frozen" => p.y() * t - TAU * c.order.unwrap() as f64,
                    "shift" => m * t - PI * c.order.unwrap() as f64,
                    "period2" => p.y() * t - PI * (2 * c.order.unwrap() + 1) as f64,
                    "projective_minus" => p.det_minus(),
                    "projective_plus" => p.det_plus(),
                    _ => p.det_minus().abs().max(p.det_plus().abs()),
                };
                assert!(resid.abs() < 1e-12, "{} {m} {t} {resid}", c.kind);
            }
        }
        assert!(curves.iter().any(|c| c.kind == "double_projective" && !c.points.is_empty()));
    }

    #[test]
    fn grid_is_resumable_and_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let full = dir.path().join("full.jsonl");
        let s = run_grid(&small(Some(full.clone()))).unwrap();
        assert_eq!((s.total, s.evaluated, s.failures), (9, 9, 0));
        let bytes = fs::read(&full).unwrap();
        let again = run_grid(&small(Some(full.clone()))).unwrap();
        assert_eq!(again.evaluated, 0);
        assert_eq!(fs::read(&full).unwrap(), bytes);

        // Interrupt after four lines plus half a line, then resume.
        let part = dir.path().join("part.jsonl");
        let text = String::from_utf8(bytes.clone()).unwrap();
        let cut: usize = text.split_inclusive('\n').take(4).map(str::len).sum();
        fs::write(&part, &bytes[..cut + 10]).unwrap();
        let resumed = run_grid(&small(Some(part.clone()))).unwrap();
        assert_eq!(resumed.evaluated, 5);
        assert_eq!(fs::read(&part).unwrap(), bytes);

        let rows = read_results(&full).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.windows(2).all(|w| w[0].index < w[1].index));
    }
}
