//! Monte-Carlo quantum trajectories with Born-rule sampling.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::distribution::DiscretizedDistribution;
use crate::error::{Error, Result};
use crate::maps::{gc_matrix, kraus_matrices, BlochState, Outcome, RealMat2, SetupParams};

/// Burn-in used when a trajectory starts away from the GC.
pub const BURN_IN_OFF_GC: u64 = 100_000;
/// Burn-in used when a trajectory starts on the GC.
pub const BURN_IN_ON_GC: u64 = 1_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub n_steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub initial_state: BlochState,
    pub bins: usize,
    /// Record `|Δφ|` every this many steps.
    pub gc_sample_every: Option<u64>,
}

impl TrajectoryConfig {
    /// Starts on the GC at `theta0` with the matching default burn-in.
    pub fn on_gc(theta0: f64, n_steps: u64, bins: usize, seed: u64) -> Self {
        Self {
            n_steps,
            burn_in: BURN_IN_ON_GC.min(n_steps.saturating_sub(1)),
            seed,
            initial_state: BlochState::on_gc(theta0),
            bins,
            gc_sample_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_steps {
            return Err(Error::InvalidParams(format!(
                "burn_in {} must be below n_steps {}",
                self.burn_in, self.n_steps
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParams("need at least 2 bins".into()));
        }
        let norm = self.initial_state.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("initial state norm² {norm}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub histogram: DiscretizedDistribution,
    pub counts: Vec<u64>,
    pub final_state: BlochState,
    pub gc_deviation_series: Option<Vec<f64>>,
    pub clicks: u64,
    pub no_clicks: u64,
}

pub fn rng_for(seed: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ stream)
}

/// One Born-rule step. Returns the outcome; the state is renormalized but its
/// global phase is left alone.
#[inline]
fn step(k: &crate::maps::KrausPair, state: &mut BlochState, q: f64) -> Outcome {
    let (a, b) = k.act(state, Outcome::Plus);
    let p_plus = a.norm_sqr() + b.norm_sqr();
    if q <= p_plus && p_plus > 0.0 {
        let inv = p_plus.sqrt().recip();
        *state = BlochState { alpha: a * inv, beta: b * inv };
        Outcome::Plus
    } else {
        let (a, b) = k.act(state, Outcome::Minus);
        let inv = (a.norm_sqr() + b.norm_sqr()).sqrt().recip();
        *state = BlochState { alpha: a * inv, beta: b * inv };
        Outcome::Minus
    }
}

pub fn simulate(cfg: &TrajectoryConfig, p: &SetupParams) -> Result<TrajectoryResult> {
    cfg.validate()?;
    let k = kraus_matrices(p);
    let mut rng = rng_for(cfg.seed, 0);
    let mut state = cfg.initial_state;
    let mut counts = vec![0u64; cfg.bins];
    let mut series = cfg.gc_sample_every.map(|_| Vec::new());
    let (mut clicks, mut no_clicks) = (0u64, 0u64);
    for j in 1..=cfg.n_steps {
        let q: f64 = rng.random();
        match step(&k, &mut state, q) {
            Outcome::Plus => clicks += 1,
            Outcome::Minus => no_clicks += 1,
        }
        if j > cfg.burn_in {
            counts[DiscretizedDistribution::bin_index(state.gc_theta(), cfg.bins)] += 1;
        }
        if let (Some(every), Some(s)) = (cfg.gc_sample_every, series.as_mut()) {
            if j % every == 0 {
                s.push(gc_deviation(&state.phase_fixed()));
            }
        }
    }
    let total = cfg.n_steps - cfg.burn_in;
    Ok(TrajectoryResult {
        histogram: DiscretizedDistribution::from_counts(&counts, total),
        counts,
        final_state: state.phase_fixed(),
        gc_deviation_series: series,
        clicks,
        no_clicks,
    })
}

/// Final states of `n_traj` independent trajectories of `n_steps` each;
/// trajectory `i` uses the stream `seed ⊕ i`.
pub fn simulate_ensemble(
    initial: &BlochState,
    n_steps: u64,
    n_traj: u64,
    seed: u64,
    p: &SetupParams,
) -> Vec<BlochState> {
    let k = kraus_matrices(p);
    (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let mut state = *initial;
            for _ in 0..n_steps {
                step(&k, &mut state, rng.random());
            }
            state.phase_fixed()
        })
        .collect()
}

/// Distance of the azimuth from the GC, `min(|φ − π/2|, |φ + π/2|)`.
pub fn gc_deviation(state: &BlochState) -> f64 {
    let phi = state.phi();
    (phi - FRAC_PI_2).abs().min((phi + FRAC_PI_2).abs())
}

const GC_EIGEN_TOL: f64 = 1e-10;

fn matmul_real(a: &RealMat2, b: &RealMat2) -> RealMat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn scaled(r: RealMat2) -> RealMat2 {
    let s = r.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if s == 0.0 {
        r
    } else {
        r.map(|row| row.map(|x| x / s))
    }
}

/// Whether both eigenvectors of the complex matrix with GC representation `r`
/// lie on the GC: the real representation must have a real spectrum.
fn gc_eigenvectors(r: &RealMat2) -> bool {
    let [[a, b], [c, d]] = scaled(*r);
    0.25 * (a - d) * (a - d) + b * c >= -GC_EIGEN_TOL
}

/// Smallest `k ≤ k_max` for which both eigenvectors of `m_plus^k m_minus` lie on
/// the GC. `None` on frozen lines, where both matrices are multiples of the
/// identity, or when no such `k` exists.
pub fn gc_attraction_scan(p: &SetupParams, k_max: u32) -> Option<u32> {
    if p.sy().abs() < 1e-12 {
        return None;
    }
    let rp = gc_matrix(p, Outcome::Plus);
    let mut prod = scaled(gc_matrix(p, Outcome::Minus));
    for k in 0..=k_max {
        if gc_eigenvectors(&prod) {
            return Some(k);
        }
        prod = scaled(matmul_real(&rp, &prod));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn deviation_values() {
        assert!(gc_deviation(&BlochState::on_gc(0.4)) < 1e-12);
        assert!(gc_deviation(&BlochState::on_gc(-1.4)) < 1e-12);
        assert!((gc_deviation(&BlochState::from_angles(0.9, 0.0)) - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = SetupParams::new(2.92, 3.0, 1.0).unwrap();
        let cfg = TrajectoryConfig::on_gc(0.3, 20_000, 100, 7);
        assert_eq!(simulate(&cfg, &p).unwrap(), simulate(&cfg, &p).unwrap());
    }

    #[test]
    fn histogram_recount() {
        let p = SetupParams::new(1.3, 2.1, 1.0).unwrap();
        let cfg = TrajectoryConfig::on_gc(0.3, 5_000, 50, 1);
        let r = simulate(&cfg, &p).unwrap();
        assert_eq!(r.counts.iter().sum::<u64>(), 5_000 - cfg.burn_in);
        assert!((r.histogram.total() - 1.0).abs() < 1e-12);
        assert_eq!(r.clicks + r.no_clicks, 5_000);
    }

    #[test]
    fn rejects_bad_config() {
        let p = SetupParams::new(1.0, 1.0, 1.0).unwrap();
        let mut cfg = TrajectoryConfig::on_gc(0.0, 10, 10, 0);
        cfg.burn_in = 10;
        assert!(simulate(&cfg, &p).is_err());
    }

    #[test]
    fn converges_to_gc() {
        let p = SetupParams::new(2.92, 1.0, 1.0).unwrap();
        let cfg = TrajectoryConfig {
            n_steps: 100_000,
            burn_in: 0,
            seed: 3,
            initial_state: BlochState::from_angles(1.3, 2.5),
            bins: 100,
            gc_sample_every: Some(1000),
        };
        let r = simulate(&cfg, &p).unwrap();
        assert!(*r.gc_deviation_series.unwrap().last().unwrap() < 1e-6);
    }

    #[test]
    fn shift_case_stays_off_gc() {
        let p = SetupParams::new(1.0, PI, 1.0).unwrap();
        let cfg = TrajectoryConfig {
            n_steps: 20_000,
            burn_in: 0,
            seed: 5,
            initial_state: BlochState::from_angles(1.0, 0.3),
            bins: 100,
            gc_sample_every: Some(1000),
        };
        let r = simulate(&cfg, &p).unwrap();
        assert!(r.gc_deviation_series.unwrap().iter().all(|&d| d > 1e-3));
    }

    #[test]
    fn attraction_scan() {
        let frozen = SetupParams::new(2.0, 2.0 * PI / 8f64.sqrt(), 1.0).unwrap();
        assert_eq!(gc_attraction_scan(&frozen, 100), None);
        let mut zero = 0;
        for i in 1..=20 {
            for j in 1..=20 {
                let p = SetupParams::new(0.25 * i as f64, 0.25 * j as f64, 1.0).unwrap();
                if crate::maps::eigen_configuration(&p) == 3 {
                    assert_eq!(gc_attraction_scan(&p, 10), Some(0));
                    zero += 1;
                }
            }
        }
        assert!(zero > 0);
    }
}
