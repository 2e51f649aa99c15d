//! Balls `B_G(o, r)` in the Cayley graph.
//!
//! Counting runs a dynamic program over the normal-form automaton; the
//! element iterator is a depth-first walk over normal-form extensions, which
//! is prefix-closed, so memory stays `O(r)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MarkedGroup, Step, Word};
use crate::error::{Error, Result};
use crate::spectral::{spectral_radius, PowerOptions, SpectralResult};

pub const DEFAULT_ELEMENT_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallCounts {
    pub radius: usize,
    pub sphere_sizes: Vec<u64>,
    pub cumulative: Vec<u64>,
}

impl BallCounts {
    pub fn from_spheres(sphere_sizes: Vec<u64>) -> Self {
        let mut cumulative = Vec::with_capacity(sphere_sizes.len());
        let mut acc = 0u64;
        for &s in &sphere_sizes {
            acc += s;
            cumulative.push(acc);
        }
        BallCounts {
            radius: sphere_sizes.len().saturating_sub(1),
            sphere_sizes,
            cumulative,
        }
    }

    pub fn total(&self) -> u64 {
        *self.cumulative.last().unwrap_or(&0)
    }
}

/// State of the normal-form automaton: the generator and direction of the
/// last syllable's canonical spelling and how many steps it has used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NfState {
    pub gen: u16,
    pub inverse: bool,
    pub count: u32,
}

/// Finite automaton accepting the canonical geodesic spellings. State 0 is
/// the start state (empty word).
#[derive(Clone, Debug)]
pub struct NormalFormAutomaton {
    pub states: Vec<Option<NfState>>,
    pub succ: Vec<Vec<usize>>,
}

impl NormalFormAutomaton {
    pub fn new(group: &MarkedGroup) -> Self {
        let mut states: Vec<Option<NfState>> = vec![None];
        for &s in group.generators() {
            let max = match group.generator_order(s.gen) {
                // In a free group all counts behave alike.
                None => 1,
                Some(m) if !s.inverse => m / 2,
                Some(m) => (m - 1) / 2,
            };
            for count in 1..=max {
                states.push(Some(NfState {
                    gen: s.gen,
                    inverse: s.inverse,
                    count,
                }));
            }
        }
        let find = |st: NfState| states.iter().position(|x| *x == Some(st)).unwrap();
        let mut succ = vec![Vec::new(); states.len()];
        for (i, st) in states.iter().enumerate() {
            for &s in group.generators() {
                let target = match st {
                    None => Some(NfState {
                        gen: s.gen,
                        inverse: s.inverse,
                        count: 1,
                    }),
                    Some(cur) if cur.gen != s.gen => Some(NfState {
                        gen: s.gen,
                        inverse: s.inverse,
                        count: 1,
                    }),
                    Some(cur) if cur.inverse != s.inverse => None,
                    Some(cur) => match group.generator_order(s.gen) {
                        None => Some(*cur),
                        Some(m) => {
                            let c = cur.count + 1;
                            let ok = if s.inverse { 2 * c < m } else { 2 * c <= m };
                            ok.then_some(NfState { count: c, ..*cur })
                        }
                    },
                };
                if let Some(t) = target {
                    succ[i].push(find(t));
                }
            }
        }
        NormalFormAutomaton { states, succ }
    }

    pub fn sphere_sizes(&self, radius: usize, cap: u64) -> Result<Vec<u64>> {
        let mut cur = vec![0u64; self.states.len()];
        cur[0] = 1;
        let mut spheres = vec![1u64];
        let mut total = 1u64;
        for _ in 0..radius {
            let mut next = vec![0u64; self.states.len()];
            for (i, &c) in cur.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &j in &self.succ[i] {
                    next[j] = next[j].saturating_add(c);
                }
            }
            let s: u64 = next.iter().fold(0u64, |a, &b| a.saturating_add(b));
            total = total.saturating_add(s);
            if total > cap {
                return Err(Error::BudgetExceeded(format!(
                    "ball of radius {radius} exceeds {cap} elements"
                )));
            }
            spheres.push(s);
            cur = next;
        }
        Ok(spheres)
    }

    /// Spectral radius of the transition matrix, i.e. the exponential growth
    /// base of the group's spheres.
    pub fn spectral_radius(&self) -> Result<SpectralResult> {
        spectral_radius(&self.succ, &PowerOptions::default())
    }
}

/// A ball `B_G(o, r)` with an element budget.
#[derive(Clone, Debug)]
pub struct Ball<'g> {
    group: &'g MarkedGroup,
    radius: u32,
    cap: u64,
}

impl<'g> Ball<'g> {
    pub fn new(group: &'g MarkedGroup, radius: u32) -> Self {
        Ball {
            group,
            radius,
            cap: DEFAULT_ELEMENT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn counts(&self) -> Result<BallCounts> {
        let nfa = NormalFormAutomaton::new(self.group);
        Ok(BallCounts::from_spheres(
            nfa.sphere_sizes(self.radius as usize, self.cap)?,
        ))
    }

    /// Streaming iterator over the ball in depth-first order. Fails up front
    /// when the ball is larger than the cap.
    pub fn iter(&self) -> Result<BallIter<'g>> {
        self.counts()?;
        Ok(BallIter::new(self.group, self.radius, None))
    }

    pub fn elements(&self) -> Result<Vec<Word>> {
        Ok(self.iter()?.collect())
    }

    /// Elements sorted shortlex (length, then letter order).
    pub fn elements_shortlex(&self) -> Result<Vec<Word>> {
        let mut v = self.elements()?;
        v.sort_by(|a, b| self.group.shortlex_cmp(a, b));
        Ok(v)
    }

    /// Applies `f` to every element, splitting the work across threads by
    /// first letter. Results are returned in generator order, preceded by
    /// the value for the identity.
    pub fn par_map_by_first_letter<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(BallIter<'g>) -> T + Sync + Send,
    {
        self.counts()?;
        let group = self.group;
        let radius = self.radius;
        let mut parts: Vec<Option<Step>> = vec![None];
        parts.extend(group.generators().iter().copied().map(Some));
        Ok(parts
            .into_par_iter()
            .map(|first| match first {
                None => f(BallIter::identity_only(group)),
                Some(s) => f(BallIter::new(group, radius, Some(s))),
            })
            .collect())
    }
}

/// Depth-first iterator over normal forms of length at most `radius`.
pub struct BallIter<'g> {
    group: &'g MarkedGroup,
    radius: u32,
    first: Option<Step>,
    stack: Vec<(Word, usize, u32)>,
    started: bool,
    identity_only: bool,
}

impl<'g> BallIter<'g> {
    /// With `first = Some(s)`, yields exactly the nontrivial elements whose
    /// normal form starts with `s` (the identity is not yielded).
    pub fn new(group: &'g MarkedGroup, radius: u32, first: Option<Step>) -> Self {
        BallIter {
            group,
            radius,
            first,
            stack: Vec::new(),
            started: false,
            identity_only: false,
        }
    }

    fn identity_only(group: &'g MarkedGroup) -> Self {
        BallIter {
            identity_only: true,
            ..BallIter::new(group, 0, None)
        }
    }
}

impl Iterator for BallIter<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let gens = self.group.generators();
        if !self.started {
            self.started = true;
            let root = self.group.identity();
            if self.identity_only {
                return Some(root);
            }
            match self.first {
                None => {
                    self.stack.push((root.clone(), 0, 0));
                    return Some(root);
                }
                Some(s) => {
                    if self.radius == 0 || !gens.contains(&s) {
                        return None;
                    }
                    let child = self.group.step_word(s);
                    self.stack.push((child.clone(), 0, 1));
                    return Some(child);
                }
            }
        }
        loop {
            let (word, next, len) = self.stack.last_mut()?;
            if *len >= self.radius || *next >= gens.len() {
                self.stack.pop();
                continue;
            }
            let s = gens[*next];
            *next += 1;
            if self.group.extends(word, s) {
                let child = self.group.mul_step(word, s);
                let l = *len + 1;
                self.stack.push((child.clone(), 0, l));
                return Some(child);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    /// Brute force: all products of at most `r` generators, reduced.
    fn brute_ball(g: &MarkedGroup, r: u32) -> HashSet<Word> {
        let mut seen: HashSet<Word> = HashSet::new();
        let mut layer = vec![g.identity()];
        seen.insert(g.identity());
        for _ in 0..r {
            let mut next = Vec::new();
            for w in &layer {
                for &s in g.generators() {
                    let v = g.mul_step(w, s);
                    if seen.insert(v.clone()) {
                        next.push(v);
                    }
                }
            }
            layer = next;
        }
        seen
    }

    #[test]
    fn free_group_counts() {
        let g = MarkedGroup::parse("free:2").unwrap();
        assert_eq!(Ball::new(&g, 0).counts().unwrap().cumulative, vec![1]);
        let c = Ball::new(&g, 2).counts().unwrap();
        assert_eq!(c.sphere_sizes, vec![1, 4, 12]);
        assert_eq!(c.total(), 17);
    }

    #[test]
    fn free_product_counts_match_brute_force() {
        let p = MarkedGroup::parse("product:2,3").unwrap();
        let c = Ball::new(&p, 2).counts().unwrap();
        // spheres: 1; x, y, Y; xy, xY, yx, Yx
        assert_eq!(c.sphere_sizes, vec![1, 3, 4]);
        assert_eq!(c.total() as usize, brute_ball(&p, 2).len());
    }

    #[test]
    fn iterator_equals_brute_force_up_to_six() {
        for desc in ["free:2", "free:3", "product:2,3", "product:4,3", "product:2,2,5"] {
            let g = MarkedGroup::parse(desc).unwrap();
            for r in 0..=6u32 {
                let it: Vec<Word> = Ball::new(&g, r).iter().unwrap().collect();
                let set: HashSet<Word> = it.iter().cloned().collect();
                assert_eq!(set.len(), it.len(), "{desc} r={r}: duplicates");
                assert_eq!(set, brute_ball(&g, r), "{desc} r={r}");
                assert_eq!(Ball::new(&g, r).counts().unwrap().total() as usize, it.len());
            }
        }
    }

    #[test]
    fn first_letter_split_partitions_ball() {
        let g = MarkedGroup::parse("product:2,3").unwrap();
        let parts = Ball::new(&g, 5)
            .par_map_by_first_letter(|it| it.collect::<Vec<_>>())
            .unwrap();
        let total: usize = parts.iter().map(Vec::len).sum();
        assert_eq!(total as u64, Ball::new(&g, 5).counts().unwrap().total());
    }

    #[test]
    fn budget_is_enforced() {
        let g = MarkedGroup::parse("free:2").unwrap();
        assert!(matches!(
            Ball::new(&g, 10).with_cap(1000).counts(),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(Ball::new(&g, 10).with_cap(1000).iter().is_err());
    }

    #[test]
    fn cumulative_strictly_increasing_for_infinite_groups() {
        for desc in ["free:1", "free:2", "product:2,3", "product:2,2"] {
            let g = MarkedGroup::parse(desc).unwrap();
            let c = Ball::new(&g, 10).counts().unwrap();
            assert!(c.cumulative.windows(2).all(|w| w[0] < w[1]), "{desc}");
        }
    }
}
