//! Cell probabilities over the Grand Circle.
//!
//! Cell `i` covers `[−π + iΔθ, −π + (i+1)Δθ)` with `Δθ = 2π/N`.

use std::f64::consts::{PI, TAU};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedDistribution {
    pub pr: Vec<f64>,
}

impl DiscretizedDistribution {
    /// Wraps raw weights without renormalizing.
    pub fn from_weights(pr: Vec<f64>) -> Self {
        Self { pr }
    }

    pub fn normalized(mut pr: Vec<f64>) -> Self {
        let total: f64 = pr.iter().sum();
        if total > 0.0 {
            pr.iter_mut().for_each(|x| *x /= total);
        }
        Self { pr }
    }

    pub fn uniform(n: usize) -> Self {
        Self { pr: vec![1.0 / n as f64; n] }
    }

    /// All mass in the cell containing `theta`.
    pub fn delta(theta: f64, n: usize) -> Self {
        let mut pr = vec![0.0; n];
        pr[Self::bin_index(theta, n)] = 1.0;
        Self { pr }
    }

    /// Normalized histogram of angles.
    pub fn from_angles(angles: impl IntoIterator<Item = f64>, n: usize) -> Self {
        let mut counts = vec![0u64; n];
        let mut total = 0u64;
        for th in angles {
            counts[Self::bin_index(th, n)] += 1;
            total += 1;
        }
        Self::from_counts(&counts, total)
    }

    pub fn from_counts(counts: &[u64], total: u64) -> Self {
        let inv = 1.0 / total.max(1) as f64;
        Self { pr: counts.iter().map(|&c| c as f64 * inv).collect() }
    }

    /// Weighted delta peaks binned onto `n` cells.
    pub fn from_peaks(peaks: &[(f64, f64)], n: usize) -> Self {
        let mut pr = vec![0.0; n];
        for &(th, w) in peaks {
            pr[Self::bin_index(th, n)] += w;
        }
        Self { pr }
    }

    pub fn n(&self) -> usize {
        self.pr.len()
    }

    pub fn delta_theta(&self) -> f64 {
        TAU / self.pr.len() as f64
    }

    pub fn center(i: usize, n: usize) -> f64 {
        -PI + (i as f64 + 0.5) * TAU / n as f64
    }

    /// Index of the cell containing `theta` (wrapped onto the circle).
    pub fn bin_index(theta: f64, n: usize) -> usize {
        let x = (theta + PI).rem_euclid(TAU) / TAU * n as f64;
        (x.floor() as usize).min(n - 1)
    }

    pub fn total(&self) -> f64 {
        self.pr.iter().sum()
    }

    /// Block sums onto `n_coarse` cells.
    pub fn coarse_grain(&self, n_coarse: usize) -> Result<Self> {
        let n = self.n();
        if n_coarse == 0 || !n.is_multiple_of(n_coarse) {
            return Err(Error::IndivisibleGrid { fine: n, coarse: n_coarse });
        }
        let block = n / n_coarse;
        Ok(Self { pr: self.pr.chunks(block).map(|c| c.iter().sum()).collect() })
    }

    /// CSV with header `theta,weight`, cell centers and weights at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,weight")?;
        let n = self.n();
        for (i, w) in self.pr.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", Self::center(i, n), w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "theta,weight" => {}
            _ => return Err(Error::Format("missing `theta,weight` header".into())),
        }
        let mut pr = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let w = line
                .split(',')
                .nth(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("bad row at line {}", no + 2)))?;
            pr.push(w);
        }
        Ok(Self { pr })
    }
}
