//! Finitely generated subgroups of free groups as Stallings core graphs.

pub mod growth;
pub mod schreier;

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{MarkedGroup, Step, Word};

pub use growth::{
    dalbo_witness, divergence_diagnostic, poincare_partial, relative_growth, DalboOutcome,
    DivergenceReport, DivergenceVerdict, PoincareEvaluation, RelativeGrowth,
};
pub use schreier::{schreier_growth, SchreierFrontier, SchreierGrowth};

const NONE: u32 = u32::MAX;

/// Folded core graph of a subgroup `H` of a free group.
///
/// Vertices are numbered in breadth-first order from the base (vertex 0),
/// exploring letters in the order `a, A, b, B, ...`. Folded graphs with a
/// base have a unique such numbering, so structural equality of two
/// `CoreGraph`s is isomorphism of labelled graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreGraph {
    group: MarkedGroup,
    /// `edges[v][s.index()]` is the target of the `s`-edge out of `v`.
    edges: Vec<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Index {
    Finite(usize),
    Infinite,
}

impl Index {
    pub fn is_infinite(self) -> bool {
        self == Index::Infinite
    }
}

/// Where reading a word from the base ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reading {
    /// The whole word was read, ending at this vertex.
    Inside(u32),
    /// The word left the core at `vertex` after `consumed` letters.
    Outside { vertex: u32, consumed: usize },
}

/// Stallings folding of the bouquet of generator loops.
pub fn stallings_fold(group: &MarkedGroup, gens: &[Word]) -> Result<CoreGraph> {
    if !group.is_free() {
        return Err(Error::NotFreeGroup);
    }
    for w in gens {
        group.check(w)?;
    }
    let slots = 2 * group.rank();
    // Petal graph: one loop at vertex 0 per generator.
    let mut n = 1usize;
    let mut raw: Vec<(usize, Step, usize)> = Vec::new();
    for w in gens {
        let steps = group.steps_of(w);
        if steps.is_empty() {
            continue;
        }
        let mut cur = 0usize;
        for (i, &s) in steps.iter().enumerate() {
            let next = if i + 1 == steps.len() {
                0
            } else {
                n += 1;
                n - 1
            };
            raw.push((cur, s, next));
            cur = next;
        }
    }
    let mut uf = UnionFind::new(n);
    loop {
        let mut changed = false;
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(u, s, v) in &raw {
            let (u, v) = (uf.find(u), uf.find(v));
            for (from, step, to) in [(u, s, v), (v, s.flip(), u)] {
                match seen.get(&(from, step.index())) {
                    Some(&t) => {
                        let t = uf.find(t);
                        if t != uf.find(to) {
                            uf.union(t, to);
                            changed = true;
                        }
                    }
                    None => {
                        seen.insert((from, step.index()), to);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Folded table on class representatives.
    let mut table: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    let root = uf.find(0);
    table.entry(root).or_insert_with(|| vec![NONE; slots]);
    for &(u, s, v) in &raw {
        let (u, v) = (uf.find(u), uf.find(v));
        table.entry(u).or_insert_with(|| vec![NONE; slots])[s.index()] = v as u32;
        table.entry(v).or_insert_with(|| vec![NONE; slots])[s.flip().index()] = u as u32;
    }
    // Prune hanging trees (non-base vertices of degree <= 1).
    loop {
        let leaf = table.iter().find_map(|(&v, row)| {
            let deg = row.iter().filter(|&&t| t != NONE).count();
            (v != root && deg <= 1).then_some(v)
        });
        let Some(v) = leaf else { break };
        let row = table.remove(&v).unwrap();
        for (si, &t) in row.iter().enumerate() {
            if t != NONE {
                let back = Step::from_index(si).flip().index();
                if let Some(r) = table.get_mut(&(t as usize)) {
                    r[back] = NONE;
                }
            }
        }
    }
    Ok(CoreGraph::canonical(group.clone(), root, &table))
}

impl CoreGraph {
    fn canonical(group: MarkedGroup, root: usize, table: &BTreeMap<usize, Vec<u32>>) -> Self {
        let slots = 2 * group.rank();
        let mut order: Vec<usize> = vec![root];
        let mut id: BTreeMap<usize, u32> = BTreeMap::from([(root, 0)]);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &t in &table[&v][..slots] {
                if t != NONE && !id.contains_key(&(t as usize)) {
                    id.insert(t as usize, order.len() as u32);
                    order.push(t as usize);
                }
            }
        }
        let edges = order
            .iter()
            .map(|v| {
                table[v]
                    .iter()
                    .map(|&t| if t == NONE { NONE } else { id[&(t as usize)] })
                    .collect()
            })
            .collect();
        CoreGraph { group, edges }
    }

    /// Core graph of the subgroup generated by words given as ASCII strings.
    pub fn from_generators(group: &MarkedGroup, gens: &[&str]) -> Result<Self> {
        let words = gens
            .iter()
            .map(|g| group.reduce(g))
            .collect::<Result<Vec<_>>>()?;
        stallings_fold(group, &words)
    }

    /// Reads a subgroup spec file: one generator word per line; blank lines
    /// and lines starting with `#` are skipped.
    pub fn from_spec_file(group: &MarkedGroup, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_spec_text(group, &text)
    }

    pub fn from_spec_text(group: &MarkedGroup, text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::from_generators(group, &lines)
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn base(&self) -> u32 {
        0
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, v: u32, s: Step) -> Option<u32> {
        let t = self.edges[v as usize][s.index()];
        (t != NONE).then_some(t)
    }

    /// Positive (labelled) edges `(source, generator, target)`.
    pub fn positive_edges(&self) -> Vec<(u32, u16, u32)> {
        let mut out = Vec::new();
        for (v, row) in self.edges.iter().enumerate() {
            for (si, &t) in row.iter().enumerate() {
                let s = Step::from_index(si);
                if t != NONE && !s.inverse {
                    out.push((v as u32, s.gen, t));
                }
            }
        }
        out
    }

    pub fn degree(&self, v: u32) -> usize {
        self.edges[v as usize].iter().filter(|&&t| t != NONE).count()
    }

    pub fn is_folded(&self) -> bool {
        // Deterministic by construction of the table; check the inverse
        // edges agree, which rules out two incoming edges with one label.
        self.edges.iter().enumerate().all(|(v, row)| {
            row.iter().enumerate().all(|(si, &t)| {
                t == NONE || self.edges[t as usize][Step::from_index(si).flip().index()] == v as u32
            })
        })
    }

    pub fn is_core(&self) -> bool {
        (1..self.vertex_count() as u32).all(|v| self.degree(v) >= 2)
    }

    pub fn read(&self, w: &Word) -> Reading {
        let mut v = 0u32;
        for (i, s) in self.group.steps_of(w).into_iter().enumerate() {
            match self.edge(v, s) {
                Some(t) => v = t,
                None => {
                    return Reading::Outside {
                        vertex: v,
                        consumed: i,
                    }
                }
            }
        }
        Reading::Inside(v)
    }

    /// Membership: `w` labels a loop at the base.
    pub fn contains(&self, w: &Word) -> bool {
        self.read(w) == Reading::Inside(0)
    }

    pub fn index(&self) -> Index {
        let complete = self
            .edges
            .iter()
            .all(|row| self.group.generators().iter().all(|s| row[s.index()] != NONE));
        if complete {
            Index::Finite(self.vertex_count())
        } else {
            Index::Infinite
        }
    }

    /// Breadth-first distance of every vertex from the base.
    pub fn base_distances(&self) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        dist[0] = 0;
        let mut q = VecDeque::from([0u32]);
        while let Some(v) = q.pop_front() {
            for &t in &self.edges[v as usize] {
                if t != NONE && dist[t as usize] == u32::MAX {
                    dist[t as usize] = dist[v as usize] + 1;
                    q.push_back(t);
                }
            }
        }
        dist
    }

    /// `d(x, H o)`: length of the shortest element of the coset `H x`.
    pub fn distance_to_orbit(&self, x: &Word, base_dist: &[u32]) -> u32 {
        match self.read(x) {
            Reading::Inside(v) => base_dist[v as usize],
            Reading::Outside { vertex, consumed } => {
                base_dist[vertex as usize] + self.group.length(x) - consumed as u32
            }
        }
    }

    /// Elements of `H` of length at most `r` (reduced base loops), in
    /// depth-first letter order.
    pub fn elements_in_ball(&self, r: u32) -> Vec<Word> {
        let mut out = Vec::new();
        let mut stack: Vec<(u32, Option<Step>, Vec<Step>)> = vec![(0, None, Vec::new())];
        while let Some((v, last, path)) = stack.pop() {
            if v == 0 {
                out.push(self.group.reduce_steps(&path));
            }
            if path.len() as u32 == r {
                continue;
            }
            for &s in self.group.generators().iter().rev() {
                if last == Some(s.flip()) {
                    continue;
                }
                if let Some(t) = self.edge(v, s) {
                    let mut p = path.clone();
                    p.push(s);
                    stack.push((t, Some(s), p));
                }
            }
        }
        out
    }

    /// Free basis read off a breadth-first spanning tree: one generator per
    /// non-tree positive edge. Returns, for each non-tree edge, its word.
    pub fn free_basis(&self) -> Vec<Word> {
        let (tree_word, tree_edges) = self.spanning_tree();
        let mut basis = Vec::new();
        for (u, gen, v) in self.positive_edges() {
            if tree_edges.contains(&(u, gen, v)) {
                continue;
            }
            let s = self.group.step_word(Step::new(gen, false));
            let w = self.group.mul_all(&[
                &tree_word[u as usize],
                &s,
                &self.group.inv_unchecked(&tree_word[v as usize]),
            ]);
            basis.push(w);
        }
        basis
    }

    fn spanning_tree(&self) -> (Vec<Word>, HashSet<(u32, u16, u32)>) {
        let mut word = vec![None; self.vertex_count()];
        word[0] = Some(self.group.identity());
        let mut tree = HashSet::new();
        let mut q = VecDeque::from([0u32]);
        while let Some(v) = q.pop_front() {
            for &s in self.group.generators() {
                if let Some(t) = self.edge(v, s) {
                    if word[t as usize].is_none() {
                        let w = self.group.mul_step(word[v as usize].as_ref().unwrap(), s);
                        word[t as usize] = Some(w);
                        tree.insert(if s.inverse { (t, s.gen, v) } else { (v, s.gen, t) });
                        q.push_back(t);
                    }
                }
            }
        }
        (word.into_iter().map(Option::unwrap).collect(), tree)
    }

    /// Word length of `h` with respect to [`free_basis`](Self::free_basis):
    /// the number of non-tree edges its base loop crosses.
    pub fn basis_length(&self, h: &Word) -> Option<u32> {
        let (_, tree) = self.spanning_tree();
        let mut v = 0u32;
        let mut count = 0;
        for s in self.group.steps_of(h) {
            let t = self.edge(v, s)?;
            let key = if s.inverse { (t, s.gen, v) } else { (v, s.gen, t) };
            if !tree.contains(&key) {
                count += 1;
            }
            v = t;
        }
        (v == 0).then_some(count)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::group::Ball;

    fn f2() -> MarkedGroup {
        MarkedGroup::parse("free:2").unwrap()
    }

    /// Oracle: subgroup generated by `gens`, closed inside a ball of radius
    /// `bound` (products whose partial results stay in the ball).
    fn closure_in_ball(g: &MarkedGroup, gens: &[Word], bound: u32) -> HashSet<Word> {
        let mut all: Vec<Word> = gens.to_vec();
        all.extend(gens.iter().map(|w| g.inv_unchecked(w)));
        let mut seen = HashSet::from([g.identity()]);
        let mut frontier = vec![g.identity()];
        while let Some(x) = frontier.pop() {
            for s in &all {
                let y = g.mul_unchecked(&x, s);
                if g.length(&y) <= bound && seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        seen
    }

    #[test]
    fn cyclic_subgroup_is_single_loop() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a"]).unwrap();
        assert_eq!(h.vertex_count(), 1);
        assert_eq!(h.positive_edges(), vec![(0, 0, 0)]);
        assert!(h.is_folded() && h.is_core());
    }

    #[test]
    fn conjugate_pair_folds_to_two_vertices() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "b a B"]).unwrap();
        assert_eq!(h.vertex_count(), 2);
        let mut e = h.positive_edges();
        e.sort();
        assert_eq!(e, vec![(0, 0, 0), (0, 1, 1), (1, 0, 1)]);
    }

    #[test]
    fn index_two_subgroup() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["aa", "b", "a b A"]).unwrap();
        assert_eq!(h.index(), Index::Finite(2));
        // oracle: index-2 subgroup = words of even a-exponent sum
        for w in Ball::new(&g, 4).elements().unwrap() {
            let a_sum: i32 = w.syllables().iter().filter(|s| s.gen == 0).map(|s| s.exp).sum();
            assert_eq!(h.contains(&w), a_sum % 2 == 0, "{}", g.label(&w));
        }
    }

    #[test]
    fn index_examples() {
        let g = f2();
        assert_eq!(CoreGraph::from_generators(&g, &["a", "b"]).unwrap().index(), Index::Finite(1));
        assert_eq!(CoreGraph::from_generators(&g, &["a"]).unwrap().index(), Index::Infinite);
        let trivial = CoreGraph::from_generators(&g, &[]).unwrap();
        assert_eq!(trivial.vertex_count(), 1);
        assert_eq!(trivial.index(), Index::Infinite);
    }

    #[test]
    fn membership_examples() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "b a B"]).unwrap();
        assert!(h.contains(&g.identity()));
        assert!(!h.contains(&g.reduce("b").unwrap()));
        assert!(h.contains(&g.reduce("b a B a").unwrap()));
    }

    #[test]
    fn membership_matches_closure_oracle() {
        let g = f2();
        for gens in [vec!["a", "bab"], vec!["a", "b a B"], vec!["aa", "bb", "ab"], vec!["abAB"]] {
            let words: Vec<Word> = gens.iter().map(|s| g.reduce(s).unwrap()).collect();
            let h = stallings_fold(&g, &words).unwrap();
            let oracle = closure_in_ball(&g, &words, 11);
            for w in Ball::new(&g, 5).elements().unwrap() {
                assert_eq!(h.contains(&w), oracle.contains(&w), "{gens:?} {}", g.label(&w));
            }
        }
    }

    #[test]
    fn not_free_group() {
        let p = MarkedGroup::parse("product:2,3").unwrap();
        assert_eq!(stallings_fold(&p, &[]), Err(Error::NotFreeGroup));
    }

    #[test]
    fn hair_is_pruned() {
        let g = f2();
        // b a B : base has a single b-edge; the base is kept as a hair
        let h = CoreGraph::from_generators(&g, &["b a B"]).unwrap();
        assert_eq!(h.vertex_count(), 2);
        assert!(h.is_core());
        assert_eq!(h.degree(0), 1);
    }

    #[test]
    fn distance_to_orbit_examples() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "b a B"]).unwrap();
        let d = h.base_distances();
        assert_eq!(h.distance_to_orbit(&g.reduce("b").unwrap(), &d), 1);
        assert_eq!(h.distance_to_orbit(&g.reduce("a b a").unwrap(), &d), 1);
        assert_eq!(h.distance_to_orbit(&g.reduce("b b").unwrap(), &d), 2);
        assert_eq!(h.distance_to_orbit(&g.reduce("B").unwrap(), &d), 1);
    }

    #[test]
    fn elements_in_ball_match_filter() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "b a B"]).unwrap();
        let listed: HashSet<Word> = h.elements_in_ball(6).into_iter().collect();
        let filtered: HashSet<Word> = Ball::new(&g, 6)
            .elements()
            .unwrap()
            .into_iter()
            .filter(|w| h.contains(w))
            .collect();
        assert_eq!(listed, filtered);
    }

    #[test]
    fn free_basis_and_lengths() {
        let g = f2();
        let h = CoreGraph::from_generators(&g, &["a", "b a B"]).unwrap();
        let basis: Vec<String> = h.free_basis().iter().map(|w| g.label(w)).collect();
        assert_eq!(basis.len(), 2);
        assert!(basis.contains(&"a".to_string()) && basis.contains(&"baB".to_string()));
        assert_eq!(h.basis_length(&g.reduce("b a a B a").unwrap()), Some(3));
        assert_eq!(h.basis_length(&g.reduce("b").unwrap()), None);
    }

    #[test]
    fn spec_text_parsing() {
        let g = f2();
        let h = CoreGraph::from_spec_text(&g, "# H\na\n\nb a B\n").unwrap();
        assert_eq!(h, CoreGraph::from_generators(&g, &["a", "baB"]).unwrap());
        assert!(CoreGraph::from_spec_text(&g, "a\nx z\n").is_err());
    }
}
