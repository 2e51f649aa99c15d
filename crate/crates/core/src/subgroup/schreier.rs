//! Lazy breadth-first enumeration of the Schreier coset graph `H \ G`.
//!
//! Node `Hg` has an `s`-edge to `Hgs`. Nodes start as the core graph
//! vertices; a generator missing at a core vertex, or any edge out of a node
//! outside the core, opens a fresh coset. The distance label of `Hg` is the
//! length of its shortest representative.

use serde::{Deserialize, Serialize};

use super::{CoreGraph, NONE};
use crate::error::{Error, Result};
use crate::group::ball::DEFAULT_ELEMENT_CAP;
use crate::group::{growth_rate, Ball, BallCounts, GrowthEstimate, Method};

pub struct SchreierFrontier<'c> {
    core: &'c CoreGraph,
    slots: usize,
    edges: Vec<u32>,
    dist: Vec<u32>,
    /// Core vertex of each node, if any.
    core_id: Vec<u32>,
    core_node: Vec<u32>,
    /// Nodes before `head` are expanded; the queue is `head..len`.
    head: usize,
    cap: u64,
}

impl<'c> SchreierFrontier<'c> {
    pub fn new(core: &'c CoreGraph) -> Self {
        let slots = 2 * core.group().rank();
        let mut core_node = vec![NONE; core.vertex_count()];
        core_node[0] = 0;
        SchreierFrontier {
            core,
            slots,
            edges: vec![NONE; slots],
            dist: vec![0],
            core_id: vec![0],
            core_node,
            head: 0,
            cap: DEFAULT_ELEMENT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn node_count(&self) -> usize {
        self.dist.len()
    }

    fn push(&mut self, d: u32, core_id: u32) -> Result<u32> {
        if self.dist.len() as u64 >= self.cap {
            return Err(Error::BudgetExceeded(format!(
                "Schreier graph exceeds {} cosets",
                self.cap
            )));
        }
        let id = self.dist.len() as u32;
        self.dist.push(d);
        self.core_id.push(core_id);
        self.edges.extend(std::iter::repeat_n(NONE, self.slots));
        if core_id != NONE {
            self.core_node[core_id as usize] = id;
        }
        Ok(id)
    }

    fn expand(&mut self, v: u32) -> Result<()> {
        let d = self.dist[v as usize];
        for si in 0..self.slots {
            if self.edges[v as usize * self.slots + si] != NONE {
                continue;
            }
            let c = self.core_id[v as usize];
            let step = crate::group::Step::from_index(si);
            let target = match (c != NONE).then(|| self.core.edge(c, step)).flatten() {
                Some(t) => match self.core_node[t as usize] {
                    NONE => self.push(d + 1, t)?,
                    id => id,
                },
                None => self.push(d + 1, NONE)?,
            };
            self.edges[v as usize * self.slots + si] = target;
            self.edges[target as usize * self.slots + (si ^ 1)] = v;
        }
        Ok(())
    }

    /// Expands every node at distance `< r`, so that all cosets within
    /// distance `r` are discovered.
    pub fn expand_to(&mut self, r: u32) -> Result<()> {
        while self.head < self.dist.len() && self.dist[self.head] < r {
            self.expand(self.head as u32)?;
            self.head += 1;
        }
        Ok(())
    }

    /// Cosets per distance `0..=r` (call after `expand_to(r)`).
    pub fn sphere_sizes(&self, r: u32) -> Vec<u64> {
        let mut s = vec![0u64; r as usize + 1];
        for &d in &self.dist {
            if d <= r {
                s[d as usize] += 1;
            }
        }
        s
    }

    pub fn distance(&self, node: u32) -> u32 {
        self.dist[node as usize]
    }

    /// Follows the steps from the base coset. Every step must leave an
    /// expanded node.
    pub fn walk(&self, steps: impl Iterator<Item = crate::group::Step>) -> u32 {
        let mut v = 0u32;
        for s in steps {
            v = self.edges[v as usize * self.slots + s.index()];
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchreierGrowth {
    /// Cosets `Hg` within distance `r`.
    pub right_counts: BallCounts,
    /// Cosets `gH` with `|g| <= r`, counted through `gH <-> Hg^-1`.
    pub left_counts: BallCounts,
    pub right: GrowthEstimate,
    pub left: GrowthEstimate,
    pub counts_equal: bool,
}

pub fn schreier_growth(core: &CoreGraph, r_max: u32) -> Result<SchreierGrowth> {
    let g = core.group();
    let mut sf = SchreierFrontier::new(core);
    sf.expand_to(r_max)?;
    let right_counts = BallCounts::from_spheres(sf.sphere_sizes(r_max));

    let n = sf.node_count();
    let parts = Ball::new(g, r_max).par_map_by_first_letter(|it| {
        let mut best = vec![u8::MAX; n];
        for w in it {
            let steps = g.steps_of(&w);
            let len = steps.len() as u8;
            let node = sf.walk(steps.iter().rev().map(|s| s.flip()));
            let slot = &mut best[node as usize];
            *slot = (*slot).min(len);
        }
        best
    })?;
    let mut spheres = vec![0u64; r_max as usize + 1];
    for i in 0..n {
        let m = parts.iter().map(|p| p[i]).min().unwrap();
        if m != u8::MAX {
            spheres[m as usize] += 1;
        }
    }
    let left_counts = BallCounts::from_spheres(spheres);
    Ok(SchreierGrowth {
        right: growth_rate(&right_counts, Method::BfsFit)?,
        left: growth_rate(&left_counts, Method::BfsFit)?,
        counts_equal: left_counts == right_counts,
        right_counts,
        left_counts,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::group::{MarkedGroup, Word};
    use crate::subgroup::Reading;

    /// Oracle: canonical representative of `Hw` is the unread suffix
    /// together with the core vertex where reading stopped.
    fn right_coset_key(core: &CoreGraph, w: &Word) -> (u32, String) {
        let g = core.group();
        match core.read(w) {
            Reading::Inside(v) => (v, String::new()),
            Reading::Outside { vertex, consumed } => (vertex, g.label(w)[consumed..].to_string()),
        }
    }

    fn oracle_counts(core: &CoreGraph, r: u32) -> Vec<u64> {
        let g = core.group();
        (0..=r)
            .map(|k| {
                Ball::new(g, k)
                    .elements()
                    .unwrap()
                    .iter()
                    .map(|w| right_coset_key(core, w))
                    .collect::<HashSet<_>>()
                    .len() as u64
            })
            .collect()
    }

    #[test]
    fn cyclic_radius_one_has_three_cosets() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let h = CoreGraph::from_generators(&g, &["a"]).unwrap();
        let mut sf = SchreierFrontier::new(&h);
        sf.expand_to(1).unwrap();
        assert_eq!(sf.sphere_sizes(1), vec![1, 2]);
        let sg = schreier_growth(&h, 5).unwrap();
        assert_eq!(sg.right_counts.cumulative[1], 3);
        assert!(sg.counts_equal);
    }

    #[test]
    fn finite_index_has_constant_counts() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let h = CoreGraph::from_generators(&g, &["a", "b"]).unwrap();
        let sg = schreier_growth(&h, 6).unwrap();
        assert!(sg.right_counts.cumulative.iter().all(|&c| c == 1));
        assert_eq!(sg.right.rate, 0.0);
        let h2 = CoreGraph::from_generators(&g, &["aa", "b", "abA"]).unwrap();
        let sg = schreier_growth(&h2, 6).unwrap();
        assert_eq!(sg.right_counts.total(), 2);
    }

    #[test]
    fn counts_match_coset_key_oracle() {
        let g = MarkedGroup::parse("free:2").unwrap();
        for gens in [vec!["a"], vec!["a", "baB"], vec!["aa", "bb"], vec!["abAB"]] {
            let h = CoreGraph::from_generators(&g, &gens).unwrap();
            let sg = schreier_growth(&h, 6).unwrap();
            assert_eq!(sg.right_counts.cumulative, oracle_counts(&h, 6), "{gens:?}");
            assert!(sg.counts_equal);
        }
    }

    #[test]
    fn budget_enforced() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let h = CoreGraph::from_generators(&g, &["a"]).unwrap();
        let mut sf = SchreierFrontier::new(&h).with_cap(50);
        assert!(matches!(sf.expand_to(8), Err(Error::BudgetExceeded(_))));
    }
}
