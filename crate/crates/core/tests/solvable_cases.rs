use std::f64::consts::{FRAC_PI_3, PI};

use mqubit::distribution::DiscretizedDistribution;
use mqubit::indicators::chi2_distance;
use mqubit::maps::{gc_probability, theta_map, wrap_angle, Outcome, SetupParams};
use mqubit::master::{build_markov, default_tol, power_iterate};
use mqubit::special::{bisect, period2_binomial_distribution, shift_properties};
use mqubit::trajectory::{simulate, TrajectoryConfig};

/// Applies every outcome sequence of length `depth` with weight `2^-depth`.
fn equal_weight_walk(theta0: f64, depth: u32, p: &SetupParams, bins: usize) -> DiscretizedDistribution {
    let w = 0.5f64.powi(depth as i32);
    let angles = (0..1u32 << depth).map(|seq| {
        (0..depth).fold(theta0, |th, d| {
            let mu = if seq >> d & 1 == 1 { Outcome::Plus } else { Outcome::Minus };
            theta_map(th, mu, p)
        })
    });
    let mut pr = vec![0.0; bins];
    for th in angles {
        pr[DiscretizedDistribution::bin_index(th, bins)] += w;
    }
    DiscretizedDistribution::from_weights(pr)
}

#[test]
fn period2_binomial_matches_equal_weight_walk() {
    let p = SetupParams::new(1.0, PI / 5f64.sqrt(), 1.0).unwrap();
    for mu in Outcome::BOTH {
        let th = 0.3;
        assert!(wrap_angle(theta_map(theta_map(th, mu, &p), mu, &p) - th).abs() < 1e-12);
    }
    for depth in [2u32, 6, 12] {
        let walk = equal_weight_walk(0.3, depth, &p, 1000);
        let formula = period2_binomial_distribution(depth, 0.3, &p, 1000).unwrap();
        assert!(chi2_distance(&walk, &formula).unwrap() < 1e-12, "depth {depth}");
    }
}

fn shift_point(omega: f64) -> SetupParams {
    // On MT = π the rotation phase grows from π/2 to π as M drops to 2/√3.
    let phase = |m: f64| {
        let p = SetupParams::new(m, PI / m, 1.0).unwrap();
        (2.0 / p.y() * p.sy()).atan2(p.cy()) - omega
    };
    let m = bisect(phase, 2.0 / 3f64.sqrt() + 1e-9, 100.0).unwrap();
    SetupParams::new(m, PI / m, 1.0).unwrap()
}

#[test]
fn commensurate_shift_has_finite_support() {
    let p = shift_point(2.0 * FRAC_PI_3);
    let s = shift_properties(&p).unwrap();
    assert!(s.commensurate);
    assert_eq!(s.ratio, Some((2, 3)));
    let r = simulate(&TrajectoryConfig::on_gc(0.3, 200_000, 1000, 2), &p).unwrap();
    let occupied = r.counts.iter().filter(|&&c| c > 0).count();
    assert!(occupied <= 6, "{occupied} occupied bins");

    let q = SetupParams::new(1.0, PI, 1.0).unwrap();
    assert!(!shift_properties(&q).unwrap().commensurate);
    let r = simulate(&TrajectoryConfig::on_gc(0.3, 200_000, 1000, 2), &q).unwrap();
    assert!(r.counts.iter().filter(|&&c| c > 0).count() > 100);
}

#[test]
fn click_frequency_matches_stationary_expectation() {
    let p = SetupParams::new(2.92, 3.1, 1.0).unwrap();
    let n = 20_000;
    let m = build_markov(&p, n).unwrap();
    let (w, _) = power_iterate(&m, &DiscretizedDistribution::uniform(n), 10_000, default_tol(n)).unwrap();
    let expected: f64 =
        (0..n).map(|i| w.pr[i] * gc_probability(DiscretizedDistribution::center(i, n), Outcome::Plus, &p)).sum();

    // Batch means absorb the correlation between successive outcomes.
    let batches = 40;
    let freqs: Vec<f64> = (0..batches)
        .map(|b| {
            let r = simulate(&TrajectoryConfig::on_gc(0.3, 50_000, 100, 100 + b), &p).unwrap();
            r.clicks as f64 / 50_000.0
        })
        .collect();
    let mean = freqs.iter().sum::<f64>() / batches as f64;
    let var = freqs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let se = (var / batches as f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * se + 1e-4, "{mean} vs {expected} (se {se})");
}
