//! Perron root of 0/1 transfer matrices by power iteration.
//!
//! The iteration runs on `B + I` so that periodic matrices (bipartite
//! structure, permutation blocks) still converge; the shift is subtracted
//! from the final estimate.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct PowerOptions {
    /// Convergence when the estimate varies by less than this over `window`
    /// consecutive steps.
    pub tolerance: f64,
    pub window: usize,
    pub max_iterations: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tolerance: 1e-10,
            window: 5,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub radius: f64,
    pub iterations: usize,
    pub variation: f64,
}

impl SpectralResult {
    /// `log` of the spectral radius, clamped at zero (a radius below one
    /// means finitely many paths, hence zero exponential growth).
    pub fn log_rate(&self) -> f64 {
        if self.radius <= 1.0 {
            0.0
        } else {
            self.radius.ln()
        }
    }
}

/// `succ[i]` lists the `j` with `B[i][j] = 1`.
///
/// The radius is the maximum over strongly connected components, each of
/// which is irreducible; iterating per component avoids the polynomial
/// (Jordan-block) convergence that transient states would otherwise cause.
pub fn spectral_radius(succ: &[Vec<usize>], opts: &PowerOptions) -> Result<SpectralResult> {
    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(succ.len(), 0);
    let nodes: Vec<_> = (0..succ.len()).map(|_| graph.add_node(())).collect();
    for (i, row) in succ.iter().enumerate() {
        for &j in row {
            graph.add_edge(nodes[i], nodes[j], ());
        }
    }
    let mut best = SpectralResult {
        radius: 0.0,
        iterations: 0,
        variation: 0.0,
    };
    for comp in tarjan_scc(&graph) {
        let local: Vec<usize> = comp.iter().map(|n| n.index()).collect();
        let pos = |x: usize| local.iter().position(|&y| y == x);
        let sub: Vec<Vec<usize>> = local
            .iter()
            .map(|&i| succ[i].iter().filter_map(|&j| pos(j)).collect())
            .collect();
        if sub.iter().all(Vec::is_empty) {
            continue;
        }
        let r = irreducible_radius(&sub, opts)?;
        if r.radius > best.radius {
            best = r;
        }
    }
    Ok(best)
}

fn irreducible_radius(succ: &[Vec<usize>], opts: &PowerOptions) -> Result<SpectralResult> {
    let n = succ.len();
    let mut v = vec![1.0 / n as f64; n];
    let mut history: Vec<f64> = Vec::with_capacity(opts.window + 1);
    for it in 1..=opts.max_iterations {
        let mut w = v.clone();
        for (i, row) in succ.iter().enumerate() {
            let vi = v[i];
            for &j in row {
                w[j] += vi;
            }
        }
        let norm: f64 = w.iter().sum();
        for x in &mut w {
            *x /= norm;
        }
        v = w;
        history.push(norm);
        if history.len() > opts.window {
            history.remove(0);
        }
        if history.len() == opts.window {
            let hi = history.iter().cloned().fold(f64::MIN, f64::max);
            let lo = history.iter().cloned().fold(f64::MAX, f64::min);
            if hi - lo < opts.tolerance {
                return Ok(SpectralResult {
                    radius: (norm - 1.0).max(0.0),
                    iterations: it,
                    variation: hi - lo,
                });
            }
        }
    }
    Err(Error::PowerIterationDiverged(opts.max_iterations))
}
