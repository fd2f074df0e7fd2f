//! Brute-force references: the full qubit-plus-detector evolution and exact
//! enumeration of the trajectory tree.
//!
//! Setup basis: `b1 = |1,0⟩|+⟩`, `b2 = |1,0⟩|−⟩`, `b3 = |0,1⟩|+⟩`, `b4 = |0,1⟩|−⟩`.
//! The detector starts every period in `|−⟩`.

use num_complex::Complex64 as C64;

use crate::distribution::DiscretizedDistribution;
use crate::error::{Error, Result};
use crate::maps::{BlochState, KrausPair, Outcome, SetupParams};

pub const MAX_TREE_DEPTH: u32 = 16;

/// Four complex amplitudes over `(b1, b2, b3, b4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetupState4(pub [C64; 4]);

impl SetupState4 {
    /// Qubit state `(α, β)` with the detector in `|−⟩`.
    pub fn from_qubit(s: &BlochState) -> Self {
        let z = C64::new(0.0, 0.0);
        SetupState4([z, s.alpha, z, s.beta])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Unnormalized qubit component after the detector reads `mu`.
    pub fn project(&self, mu: Outcome) -> (C64, C64) {
        match mu {
            Outcome::Plus => (self.0[0], self.0[2]),
            Outcome::Minus => (self.0[1], self.0[3]),
        }
    }
}

pub fn hamiltonian(p: &SetupParams) -> [[f64; 4]; 4] {
    let (m, g) = (p.m(), p.gamma());
    [
        [0.0, m, g, 0.0],
        [m, 0.0, 0.0, g],
        [g, 0.0, 0.0, 0.0],
        [0.0, g, 0.0, 0.0],
    ]
}

/// Cyclic Jacobi diagonalization of a real symmetric 4×4 matrix.
/// Returns eigenvalues and the orthogonal matrix whose columns are eigenvectors.
fn jacobi4(mut a: [[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..3 {
            for q in p + 1..4 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}

/// `exp(−iHT)` by eigendecomposition of the setup Hamiltonian.
pub fn evolution_operator(p: &SetupParams) -> [[C64; 4]; 4] {
    let (vals, vecs) = jacobi4(hamiltonian(p));
    let phases = vals.map(|e| C64::from_polar(1.0, -e * p.t()));
    let mut u = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            u[i][j] = (0..4).map(|k| vecs[i][k] * vecs[j][k] * phases[k]).sum();
        }
    }
    u
}

pub fn evolve(state: &SetupState4, u: &[[C64; 4]; 4]) -> SetupState4 {
    let mut out = [C64::new(0.0, 0.0); 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| u[i][k] * state.0[k]).sum();
    }
    SetupState4(out)
}

/// Kraus matrices read off the 4×4 evolution: columns are the images of
/// `|1,0⟩|−⟩` and `|0,1⟩|−⟩`, rows the qubit amplitudes after projecting the
/// detector on `|+⟩` (click) or `|−⟩` (no click).
pub fn kraus_from_hamiltonian(p: &SetupParams) -> KrausPair {
    let u = evolution_operator(p);
    let (a, b) = (1, 3);
    let m_plus = [[u[0][a], u[0][b]], [u[2][a], u[2][b]]];
    let m_minus = [[u[1][a], u[1][b]], [u[3][a], u[3][b]]];
    KrausPair::from_matrices(m_minus, m_plus)
}

/// Leaves of the outcome tree after `depth` steps, in bitstring order
/// (bit `d` of the index is the outcome of step `d`, 1 = click).
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTree {
    pub depth: u32,
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
}

impl TrajectoryTree {
    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }
}

/// Exact enumeration of all `2^depth` trajectories from the GC state at `theta0`,
/// using the oracle matrices. No branch is pruned; a branch of zero probability
/// keeps its parent state.
pub fn trajectory_tree(theta0: f64, depth: u32, p: &SetupParams) -> Result<TrajectoryTree> {
    if depth > MAX_TREE_DEPTH {
        return Err(Error::DepthTooLarge(depth));
    }
    let k = kraus_from_hamiltonian(p);
    let mut states = vec![BlochState::on_gc(theta0)];
    let mut weights = vec![1.0];
    for step in 0..depth {
        let n = states.len();
        let mut next_s = vec![states[0]; 2 * n];
        let mut next_w = vec![0.0; 2 * n];
        for idx in 0..n {
            for (bit, mu) in [(0usize, Outcome::Minus), (1, Outcome::Plus)] {
                let child = idx | (bit << step);
                match k.apply(&states[idx], mu) {
                    Ok((s, prob)) => {
                        next_s[child] = s;
                        next_w[child] = weights[idx] * prob;
                    }
                    Err(_) => {
                        next_s[child] = states[idx];
                        next_w[child] = 0.0;
                    }
                }
            }
        }
        states = next_s;
        weights = next_w;
    }
    Ok(TrajectoryTree {
        depth,
        theta: states.iter().map(|s| s.gc_theta()).collect(),
        weight: weights,
    })
}

/// Exact `W_j(θ | θ0)` binned on `bins` cells.
pub fn enumerate_tree(theta0: f64, j: u32, p: &SetupParams, bins: usize) -> Result<DiscretizedDistribution> {
    let tree = trajectory_tree(theta0, j, p)?;
    let mut pr = vec![0.0; bins];
    for (&th, &w) in tree.theta.iter().zip(&tree.weight) {
        pr[DiscretizedDistribution::bin_index(th, bins)] += w;
    }
    let total: f64 = pr.iter().sum();
    pr.iter_mut().for_each(|x| *x /= total);
    Ok(DiscretizedDistribution::from_weights(pr))
}
