//! Relative growth of `H`, its Poincaré series and the Dalbo witness.

use serde::{Deserialize, Serialize};

use super::CoreGraph;
use crate::error::{Error, Result};
use crate::group::{growth_rate, BallCounts, GrowthEstimate, Method, Word};
use crate::spectral::{spectral_radius, PowerOptions};

/// Directed edges (darts) of a core graph with their non-backtracking
/// successors.
pub(crate) struct DartMatrix {
    /// `(tail, step index, head)` per dart.
    pub darts: Vec<(u32, usize, u32)>,
    pub succ: Vec<Vec<usize>>,
}

impl DartMatrix {
    pub fn new(core: &CoreGraph) -> Self {
        let mut darts = Vec::new();
        let mut id = vec![vec![usize::MAX; 2 * core.group.rank()]; core.vertex_count()];
        for (v, row) in core.edges.iter().enumerate() {
            for (si, &t) in row.iter().enumerate() {
                if t != super::NONE {
                    id[v][si] = darts.len();
                    darts.push((v as u32, si, t));
                }
            }
        }
        let succ = darts
            .iter()
            .map(|&(_, si, head)| {
                let back = si ^ 1;
                (0..id[head as usize].len())
                    .filter(|&s2| s2 != back && id[head as usize][s2] != usize::MAX)
                    .map(|s2| id[head as usize][s2])
                    .collect()
            })
            .collect();
        DartMatrix { darts, succ }
    }

    /// Number of reduced base loops of each length `0..=r_max`.
    pub fn loop_counts(&self, r_max: usize) -> Vec<u64> {
        let mut cur: Vec<u64> = self
            .darts
            .iter()
            .map(|&(tail, _, _)| u64::from(tail == 0))
            .collect();
        let mut out = vec![1u64];
        for r in 1..=r_max {
            if r > 1 {
                let mut next = vec![0u64; cur.len()];
                for (d, &c) in cur.iter().enumerate() {
                    if c > 0 {
                        for &e in &self.succ[d] {
                            next[e] = next[e].saturating_add(c);
                        }
                    }
                }
                cur = next;
            }
            let at_base = self
                .darts
                .iter()
                .zip(&cur)
                .filter(|((_, _, head), _)| *head == 0)
                .fold(0u64, |a, (_, &c)| a.saturating_add(c));
            out.push(at_base);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeGrowth {
    /// `|B_G(o, r) ∩ H|` per radius.
    pub counts: BallCounts,
    /// Log spectral radius of the dart matrix; `None` if power iteration
    /// hit its cap.
    pub spectral: Option<GrowthEstimate>,
    pub bfs_fit: GrowthEstimate,
}

impl RelativeGrowth {
    /// The spectral estimate when available, otherwise the fit.
    pub fn best(&self) -> &GrowthEstimate {
        self.spectral.as_ref().unwrap_or(&self.bfs_fit)
    }

    pub fn fell_back(&self) -> bool {
        self.spectral.is_none()
    }
}

pub fn relative_growth(core: &CoreGraph, r_max: usize) -> Result<RelativeGrowth> {
    let dm = DartMatrix::new(core);
    let counts = BallCounts::from_spheres(dm.loop_counts(r_max));
    let bfs_fit = growth_rate(&counts, Method::BfsFit)?;
    let spectral = match spectral_radius(&dm.succ, &PowerOptions::default()) {
        Ok(sr) => Some(GrowthEstimate::spectral(sr.log_rate(), r_max, sr.variation)),
        Err(Error::PowerIterationDiverged(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(RelativeGrowth {
        counts,
        spectral,
        bfs_fit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareEvaluation {
    pub s: f64,
    /// `partial_sums[r] = Σ_{h ∈ H, |h| ≤ r} e^{-s|h|}`.
    pub partial_sums: Vec<f64>,
    pub radius: usize,
}

impl PoincareEvaluation {
    pub fn from_counts(spheres: &[u64], s: f64) -> Self {
        let mut acc = 0.0;
        let partial_sums = spheres
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                acc += c as f64 * (-s * r as f64).exp();
                acc
            })
            .collect();
        PoincareEvaluation {
            s,
            partial_sums,
            radius: spheres.len().saturating_sub(1),
        }
    }

    pub fn last(&self) -> f64 {
        *self.partial_sums.last().unwrap_or(&0.0)
    }
}

pub fn poincare_partial(core: &CoreGraph, s: f64, r_max: usize) -> Result<PoincareEvaluation> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(s >= 0.0) {
        return Err(Error::PreconditionFailed(format!("exponent {s} must be >= 0")));
    }
    Ok(PoincareEvaluation::from_counts(
        &DartMatrix::new(core).loop_counts(r_max),
        s,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceVerdict {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub verdict: DivergenceVerdict,
    pub evaluation: PoincareEvaluation,
    /// Radii `(lo, hi)` of the tail the verdict was read from.
    pub tail: (usize, usize),
    pub mean_increment: f64,
    /// Geometric mean of consecutive increment ratios over the tail.
    pub increment_ratio: f64,
    pub threshold: f64,
}

pub const DIVERGENCE_THRESHOLD: f64 = 1e-3;
/// Increments shrinking at least this fast per radius count as geometric.
pub const GEOMETRIC_RATIO: f64 = 0.95;

/// Finite-radius verdict on divergence of the Poincaré series at `omega_h`.
///
/// The tail is the last `ceil(r_max / 3)` radii. The series "diverges" when
/// the mean increment there is at least `threshold` and the increments do
/// not shrink geometrically; it "converges" when they do shrink
/// geometrically (or vanish).
pub fn divergence_diagnostic(
    core: &CoreGraph,
    omega_h: f64,
    r_max: usize,
    threshold: f64,
) -> Result<DivergenceReport> {
    let evaluation = poincare_partial(core, omega_h.max(0.0), r_max)?;
    Ok(diagnose(evaluation, threshold))
}

pub fn diagnose(evaluation: PoincareEvaluation, threshold: f64) -> DivergenceReport {
    let r_max = evaluation.radius;
    let len = r_max.div_ceil(3).max(2).min(r_max.max(1));
    let lo = r_max + 1 - len;
    let ps = &evaluation.partial_sums;
    let inc: Vec<f64> = (lo..=r_max)
        .map(|r| if r == 0 { ps[0] } else { ps[r] - ps[r - 1] })
        .collect();
    let mean_increment = inc.iter().sum::<f64>() / inc.len() as f64;
    let all_zero = inc.iter().all(|&x| x <= 0.0);
    let increment_ratio = match (inc.first(), inc.last()) {
        (Some(&a), Some(&b)) if a > 0.0 && b > 0.0 && inc.len() > 1 => {
            (b / a).powf(1.0 / (inc.len() - 1) as f64)
        }
        _ => 0.0,
    };
    let verdict = if all_zero || increment_ratio < GEOMETRIC_RATIO {
        DivergenceVerdict::Converges
    } else if mean_increment >= threshold {
        DivergenceVerdict::Diverges
    } else {
        DivergenceVerdict::Inconclusive
    };
    DivergenceReport {
        verdict,
        evaluation,
        tail: (lo, r_max),
        mean_increment,
        increment_ratio,
        threshold,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DalboOutcome {
    Found {
        /// Smallest grid value above `omega_h` with sum > 1.
        s0: f64,
        sum_at_s0: f64,
        /// Largest grid value with sum > 1.
        s_max: f64,
        omega_h: f64,
    },
    NotFound {
        /// Supremum of the sum over the grid (attained at its first point).
        best_sum: f64,
        omega_h: f64,
    },
}

pub const DALBO_GRID_STEP: f64 = 0.01;
const DALBO_GRID_SPAN: f64 = 5.0;

/// Searches the grid `omega_h + j * 0.01` for `s` with
/// `Σ_{h ∈ H - F, |h| ≤ r_max} e^{-s |hk|} > 1`.
pub fn dalbo_witness(
    core: &CoreGraph,
    finite_f: &[Word],
    k: &Word,
    r_max: u32,
) -> Result<DalboOutcome> {
    let g = core.group();
    g.check(k)?;
    for f in finite_f {
        g.check(f)?;
        if !core.contains(f) {
            return Err(Error::PreconditionFailed(format!(
                "{} is not in H",
                g.format_word(f)
            )));
        }
    }
    if finite_f.contains(k) {
        return Err(Error::PreconditionFailed("k lies in F".into()));
    }
    let omega_h = relative_growth(core, r_max.max(3) as usize)?.best().rate;
    let lengths: Vec<f64> = core
        .elements_in_ball(r_max)
        .into_iter()
        .filter(|h| !finite_f.contains(h))
        .map(|h| g.length(&g.mul_unchecked(&h, k)) as f64)
        .collect();
    let sum = |s: f64| lengths.iter().map(|&l| (-s * l).exp()).sum::<f64>();
    let steps = (DALBO_GRID_SPAN / DALBO_GRID_STEP) as usize;
    let grid = |j: usize| omega_h + j as f64 * DALBO_GRID_STEP;
    let first = sum(grid(1));
    if first <= 1.0 {
        return Ok(DalboOutcome::NotFound {
            best_sum: first,
            omega_h,
        });
    }
    // the sum is decreasing in s
    let last = (1..=steps).take_while(|&j| sum(grid(j)) > 1.0).last().unwrap();
    Ok(DalboOutcome::Found {
        s0: grid(1),
        sum_at_s0: first,
        s_max: grid(last),
        omega_h,
    })
}

/// One line of a growth report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub radius: usize,
    pub count: u64,
    /// `(1/r) log |B(r)|`; zero at radius zero.
    pub rate_estimate: f64,
}

pub fn growth_records(counts: &BallCounts) -> Vec<GrowthRecord> {
    counts
        .cumulative
        .iter()
        .enumerate()
        .map(|(r, &c)| GrowthRecord {
            radius: r,
            count: c,
            rate_estimate: if r == 0 { 0.0 } else { (c.max(1) as f64).ln() / r as f64 },
        })
        .collect()
}

pub fn records_to_csv(records: &[GrowthRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Ball, MarkedGroup};

    fn f2() -> MarkedGroup {
        MarkedGroup::parse("free:2").unwrap()
    }

    fn filtered_counts(core: &CoreGraph, r: u32) -> Vec<u64> {
        let g = core.group();
        let mut out = vec![0u64; r as usize + 1];
        for w in Ball::new(g, r).iter().unwrap() {
            if core.contains(&w) {
                out[g.length(&w) as usize] += 1;
            }
        }
        out
    }

    #[test]
    fn cyclic_counts_and_rate() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a"]).unwrap();
        let rg = relative_growth(&h, 8).unwrap();
        assert_eq!(rg.counts.sphere_sizes, vec![1, 2, 2, 2, 2, 2, 2, 2, 2]);
        assert_eq!(rg.spectral.as_ref().unwrap().rate, 0.0);
    }

    #[test]
    fn whole_group_rate_log3() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "b"]).unwrap();
        let rg = relative_growth(&h, 10).unwrap();
        assert!((rg.spectral.as_ref().unwrap().rate - 3f64.ln()).abs() < 1e-8);
        assert_eq!(rg.counts, Ball::new(&g, 10).counts().unwrap());
    }

    #[test]
    fn transfer_counts_match_membership_filter() {
        let g = f2();
        for gens in [vec!["a", "baB"], vec!["aa", "bb", "ab"], vec!["abAB", "b"]] {
            let h = CoreGraph::from_generators(&g, &gens).unwrap();
            let rg = relative_growth(&h, 8).unwrap();
            assert_eq!(rg.counts.sphere_sizes, filtered_counts(&h, 8), "{gens:?}");
        }
    }

    #[test]
    fn conjugate_pair_rate() {
        // oracle: ratio of consecutive membership-filtered sphere sizes
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "baB"]).unwrap();
        let rg = relative_growth(&h, 10).unwrap();
        let s = filtered_counts(&h, 10);
        let ratio = (s[10] as f64 / s[9] as f64).ln();
        let spectral = rg.spectral.as_ref().unwrap().rate;
        assert!((spectral - ratio).abs() < 0.05, "{spectral} {ratio}");
        assert!((spectral - 2f64.ln()).abs() < 1e-8);
        assert!(spectral < 3f64.ln() - 0.1);
    }

    #[test]
    fn poincare_examples() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a"]).unwrap();
        let p = poincare_partial(&h, 0.0, 4).unwrap();
        assert_eq!(p.partial_sums, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        let p = poincare_partial(&h, 0.5, 60).unwrap();
        let q = (-0.5f64).exp();
        assert!((p.last() - (1.0 + 2.0 * q / (1.0 - q))).abs() < 1e-9);
        assert!(poincare_partial(&h, -1.0, 4).is_err());
    }

    #[test]
    fn divergence_verdicts() {
        let g = f2();
        let cyc = CoreGraph::from_generators(&g, &["a"]).unwrap();
        let d = divergence_diagnostic(&cyc, 0.0, 12, DIVERGENCE_THRESHOLD).unwrap();
        assert_eq!(d.verdict, DivergenceVerdict::Diverges);
        let d = divergence_diagnostic(&cyc, 0.5, 12, DIVERGENCE_THRESHOLD).unwrap();
        assert_eq!(d.verdict, DivergenceVerdict::Converges);

        let h = CoreGraph::from_generators(&g, &["a", "baB"]).unwrap();
        let w = relative_growth(&h, 14).unwrap().best().rate;
        let d = divergence_diagnostic(&h, w, 14, DIVERGENCE_THRESHOLD).unwrap();
        assert_eq!(d.verdict, DivergenceVerdict::Diverges, "{d:?}");
        assert_eq!(d.tail, (10, 14));

        let trivial = CoreGraph::from_generators(&g, &[]).unwrap();
        let d = divergence_diagnostic(&trivial, 0.0, 9, DIVERGENCE_THRESHOLD).unwrap();
        assert_eq!(d.verdict, DivergenceVerdict::Converges);
    }

    #[test]
    fn dalbo_examples() {
        let g = f2();
        let e = g.identity();
        let b = g.reduce("b").unwrap();
        let cyc = CoreGraph::from_generators(&g, &["a"]).unwrap();
        match dalbo_witness(&cyc, std::slice::from_ref(&e), &b, 10).unwrap() {
            DalboOutcome::Found { s0, .. } => assert!((s0 - 0.01).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let h = CoreGraph::from_generators(&g, &["a", "baB"]).unwrap();
        match dalbo_witness(&h, std::slice::from_ref(&e), &b, 10).unwrap() {
            DalboOutcome::Found { s0, omega_h, .. } => {
                assert!(s0 > omega_h && s0 < 3f64.ln())
            }
            other => panic!("{other:?}"),
        }
        let trivial = CoreGraph::from_generators(&g, &[]).unwrap();
        assert!(matches!(
            dalbo_witness(&trivial, std::slice::from_ref(&e), &b, 10).unwrap(),
            DalboOutcome::NotFound { .. }
        ));
        assert!(dalbo_witness(&cyc, std::slice::from_ref(&b), &e, 5).is_err());
        assert!(dalbo_witness(&cyc, std::slice::from_ref(&e), &e, 5).is_err());
    }

    #[test]
    fn records_csv_mirror() {
        let counts = BallCounts::from_spheres(vec![1, 2, 2]);
        let recs = growth_records(&counts);
        assert_eq!(recs[2].count, 5);
        let csv = records_to_csv(&recs).unwrap();
        assert!(csv.starts_with("radius,count,rate_estimate\n0,1,0.0\n1,3,"));
    }
}
