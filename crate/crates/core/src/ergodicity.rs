//! Ergodicity of the discretized process through the strongly connected
//! components of its transition graph.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::distribution::DiscretizedDistribution;
use crate::master::SparseMarkov;
use crate::maps::{eigenangles, theta_map_derivative, Outcome, SetupParams};

pub const LOCALIZATION_BOUND: f64 = 1.0 - 1e-6;
pub const DEFAULT_SAMPLES_PER_INTERVAL: usize = 64;

/// Directed graph with an edge `k → i` wherever entry `(i, k)` exceeds the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionGraph {
    n: usize,
    out_ptr: Vec<usize>,
    out: Vec<u32>,
}

impl TransitionGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(from, _) in edges {
            deg[from + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut out = vec![0u32; edges.len()];
        for &(from, to) in edges {
            out[fill[from]] = to as u32;
            fill[from] += 1;
        }
        Self { n, out_ptr: deg, out }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out.len()
    }

    pub fn successors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[self.out_ptr[k]..self.out_ptr[k + 1]].iter().map(|&i| i as usize)
    }
}

pub fn build_graph(m: &SparseMarkov, threshold: f64) -> TransitionGraph {
    let mut edges = Vec::with_capacity(m.nnz());
    for i in 0..m.n() {
        for (k, v) in m.row(i) {
            if v > threshold {
                edges.push((k, i));
            }
        }
    }
    TransitionGraph::from_edges(m.n(), &edges)
}

/// SCC label of every node; labels are ordered by the smallest member node.
#[derive(Clone, Debug, PartialEq)]
pub struct SccPartition {
    pub component: Vec<u32>,
    pub count: usize,
}

impl SccPartition {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.count];
        for (node, &c) in self.component.iter().enumerate() {
            m[c as usize].push(node);
        }
        m
    }
}

/// Iterative Tarjan.
pub fn strongly_connected_components(g: &TransitionGraph) -> SccPartition {
    const UNSEEN: u32 = u32::MAX;
    let n = g.n;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut raw = vec![UNSEEN; n];
    let mut n_comp = 0u32;
    let mut next_index = 0u32;
    // (node, position in its successor list)
    let mut call: Vec<(u32, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root as u32, g.out_ptr[root]));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root as u32);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let v = v as usize;
            if *pos < g.out_ptr[v + 1] {
                let w = g.out[*pos] as usize;
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    call.push((w as u32, g.out_ptr[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    let parent = parent as usize;
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack") as usize;
                        on_stack[w] = false;
                        raw[w] = n_comp;
                        if w == v {
                            break;
                        }
                    }
                    n_comp += 1;
                }
            }
        }
    }

    // Relabel so that component ids follow the smallest member.
    let mut relabel = vec![UNSEEN; n_comp as usize];
    let mut next = 0u32;
    for &c in &raw {
        if relabel[c as usize] == UNSEEN {
            relabel[c as usize] = next;
            next += 1;
        }
    }
    SccPartition { component: raw.iter().map(|&c| relabel[c as usize]).collect(), count: n_comp as usize }
}

/// A union of cells closed under the dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSubset {
    pub cells: Vec<usize>,
    /// Sorted disjoint `[θ_lo, θ_hi]` intervals covering the cells.
    pub intervals: Vec<[f64; 2]>,
}

impl InvariantSubset {
    pub fn from_cells(mut cells: Vec<usize>, n: usize) -> Self {
        cells.sort_unstable();
        let dtheta = TAU / n as f64;
        let mut intervals: Vec<[f64; 2]> = Vec::new();
        let mut run: Option<(usize, usize)> = None;
        for &c in &cells {
            run = match run {
                Some((a, b)) if c == b + 1 => Some((a, c)),
                Some((a, b)) => {
                    intervals.push([-PI + a as f64 * dtheta, -PI + (b + 1) as f64 * dtheta]);
                    Some((c, c))
                }
                None => Some((c, c)),
            };
        }
        if let Some((a, b)) = run {
            intervals.push([-PI + a as f64 * dtheta, -PI + (b + 1) as f64 * dtheta]);
        }
        Self { cells, intervals }
    }
}

/// Leaves of the condensation DAG: SCCs without edges into other SCCs.
pub fn condensation_leaves(g: &TransitionGraph, sccs: &SccPartition) -> Vec<InvariantSubset> {
    let mut exits = vec![false; sccs.count];
    for k in 0..g.n {
        let ck = sccs.component[k];
        if g.successors(k).any(|i| sccs.component[i] != ck) {
            exits[ck as usize] = true;
        }
    }
    sccs.members()
        .into_iter()
        .enumerate()
        .filter(|(c, _)| !exits[*c])
        .map(|(_, cells)| InvariantSubset::from_cells(cells, g.n))
        .collect()
}

/// Both matrices have GC eigenangles and each map contracts at the dominant
/// eigenangle of the other one.
pub fn phenomenological_nonergodicity(p: &SetupParams) -> bool {
    let (Some(em), Some(ep)) = (eigenangles(p, Outcome::Minus), eigenangles(p, Outcome::Plus)) else {
        return false;
    };
    theta_map_derivative(em.dominant_angle(), Outcome::Plus, p).abs() < 1.0
        && theta_map_derivative(ep.dominant_angle(), Outcome::Minus, p).abs() < 1.0
}

/// Sum of `|Θ'_μ|` stays below one over the sampled subset.
pub fn localization_condition(p: &SetupParams, subset: &[[f64; 2]], samples: usize) -> bool {
    max_slope_sum(p, subset, samples) <= LOCALIZATION_BOUND
}

pub fn max_slope_sum(p: &SetupParams, subset: &[[f64; 2]], samples: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for &[lo, hi] in subset {
        for s in 0..=samples + 1 {
            let th = lo + (hi - lo) * s as f64 / (samples + 1) as f64;
            let sum: f64 = Outcome::BOTH.iter().map(|&mu| theta_map_derivative(th, mu, p).abs()).sum();
            worst = worst.max(sum);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub scc_count: usize,
    pub ergodic: bool,
    /// Intervals of all leaf subsets, empty when ergodic.
    pub leaves: Vec<[f64; 2]>,
    pub localized: bool,
    #[serde(skip)]
    pub leaf_subsets: Vec<InvariantSubset>,
    #[serde(skip)]
    pub n_cells: usize,
}

pub fn analyze_ergodicity(p: &SetupParams, m: &SparseMarkov) -> ErgodicityReport {
    let g = build_graph(m, 0.0);
    let sccs = strongly_connected_components(&g);
    let ergodic = sccs.count == 1;
    let leaf_subsets = if ergodic { Vec::new() } else { condensation_leaves(&g, &sccs) };
    let localized = !leaf_subsets.is_empty()
        && leaf_subsets
            .iter()
            .all(|s| localization_condition(p, &s.intervals, DEFAULT_SAMPLES_PER_INTERVAL));
    ErgodicityReport {
        scc_count: sccs.count,
        ergodic,
        leaves: leaf_subsets.iter().flat_map(|s| s.intervals.iter().copied()).collect(),
        localized,
        leaf_subsets,
        n_cells: m.n(),
    }
}

/// Whether `θ` lies in the subset inflated by `pad` on each side (on the circle).
pub fn subset_contains(subset: &[[f64; 2]], theta: f64, pad: f64) -> bool {
    subset.iter().any(|&[lo, hi]| {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) + pad;
        crate::maps::wrap_angle(theta - mid).abs() <= half
    })
}

/// Cell centers of a subset, handy for closure checks.
pub fn subset_centers(s: &InvariantSubset, n: usize) -> Vec<f64> {
    s.cells.iter().map(|&c| DiscretizedDistribution::center(c, n)).collect()
}
