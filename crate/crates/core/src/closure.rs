//! Elementary closures `E(g)`, the exponent `M`, transversal conjugates and
//! the two geometric separation constructions.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis, set_distance, ProjectionMap};
use crate::group::{Ball, MarkedGroup, Step, Word};
use crate::subgroup::CoreGraph;

/// Largest exponent tried when testing `u g^m u^-1 = g^{±m}`.
pub const DEFAULT_EXPONENT_CAP: u32 = 12;

/// `g = w^n` with `n` maximal.
pub fn primitive_root(group: &MarkedGroup, g: &Word) -> Result<(Word, u32)> {
    group.check(g)?;
    if !group.has_infinite_order(g) {
        return Err(Error::FiniteOrderElement(group.format_word(g)));
    }
    let (u, core) = group.cyclic_reduce(g);
    let steps = group.steps_of(&core);
    let l = steps.len();
    for p in (1..=l).filter(|p| l.is_multiple_of(*p)) {
        let root = group.reduce_steps(&steps[..p]);
        let n = (l / p) as u32;
        if group.pow(&root, n as i64) == core {
            return Ok((group.conjugate(&u, &root), n));
        }
    }
    unreachable!("p = l always works")
}

/// `+1` if `u g^m u^-1 = g^m`, `-1` if it is `g^-m`, else `None`.
pub fn conjugation_sign(group: &MarkedGroup, u: &Word, g: &Word, m: u32) -> Option<i8> {
    let gm = group.pow(g, m as i64);
    let c = group.conjugate(u, &gm);
    if c == gm {
        Some(1)
    } else if c == group.inv_unchecked(&gm) {
        Some(-1)
    } else {
        None
    }
}

/// Least `m <= cap` with `u g^m u^-1 = g^{±m}`.
pub fn membership_exponent(group: &MarkedGroup, u: &Word, g: &Word, cap: u32) -> Option<u32> {
    (1..=cap).find(|&m| conjugation_sign(group, u, g, m).is_some())
}

/// Least `M >= 1` such that every candidate normalizes `<g^M>`.
pub fn find_m(group: &MarkedGroup, g: &Word, candidates: &[Word], cap: u32) -> Result<u32> {
    (1..=cap)
        .find(|&m| candidates.iter().all(|u| conjugation_sign(group, u, g, m).is_some()))
        .ok_or_else(|| Error::NotFoundWithinBound(format!("no M <= {cap}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub u: String,
    /// `u g^M u^-1 = g^{sign M}`.
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureDescriptor {
    pub g: String,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "E_gens")]
    pub e_generators: Vec<String>,
    #[serde(rename = "E_plus_index")]
    pub e_plus_index: u32,
    /// Cosets of `<g>` met by `E ∩ B(o, R)`.
    pub index_over_cyclic: u32,
    pub search_radius: u32,
    /// Products of scanned elements landing in the ball stay in the scan.
    pub closed_in_ball: bool,
    pub certificates: Vec<Certificate>,
    #[serde(skip)]
    pub elements: Vec<Word>,
}

/// Scans `B(o, R)` for `u` with `u g^m u^-1 = g^{±m}`, `m <= exponent_cap`.
pub fn elementary_closure(group: &MarkedGroup, g: &Word, search_radius: u32, exponent_cap: u32) -> Result<ClosureDescriptor> {
    axis(group, g)?;
    let ball = Ball::new(group, search_radius).elements_shortlex()?;
    let elements: Vec<Word> = ball
        .par_iter()
        .filter(|u| membership_exponent(group, u, g, exponent_cap).is_some())
        .cloned()
        .collect();
    let m = find_m(group, g, &elements, exponent_cap)?;
    let certificates: Vec<Certificate> = elements
        .iter()
        .map(|u| Certificate {
            u: group.format_word(u),
            sign: conjugation_sign(group, u, g, m).unwrap(),
        })
        .collect();
    let e_plus_index = if certificates.iter().any(|c| c.sign < 0) { 2 } else { 1 };
    let set: HashSet<&Word> = elements.iter().collect();
    let closed_in_ball = elements.iter().all(|x| {
        elements.iter().all(|y| {
            let p = group.mul_unchecked(x, y);
            group.length(&p) > search_radius || set.contains(&p)
        })
    });
    // coset reps of <g>: shortlex-least u g^j
    let tau = group.length(g).max(1);
    let reach = (2 * search_radius / tau + 2) as i64;
    let reps: BTreeSet<String> = elements
        .iter()
        .map(|u| {
            let best = (-reach..=reach)
                .map(|j| group.mul_unchecked(u, &group.pow(g, j)))
                .min_by(|a, b| group.shortlex_cmp(a, b))
                .unwrap();
            group.label(&best)
        })
        .collect();
    let e_generators = greedy_generators(group, &elements, search_radius)
        .iter()
        .map(|w| group.format_word(w))
        .collect();
    Ok(ClosureDescriptor {
        g: group.format_word(g),
        m,
        e_generators,
        e_plus_index,
        index_over_cyclic: reps.len() as u32,
        search_radius,
        closed_in_ball,
        certificates,
        elements,
    })
}

/// Shortlex-greedy generators: add an element when it is not yet in the
/// subgroup generated so far (closed inside the ball).
fn greedy_generators(group: &MarkedGroup, elements: &[Word], radius: u32) -> Vec<Word> {
    let mut gens: Vec<Word> = Vec::new();
    let mut span: HashSet<Word> = HashSet::from([group.identity()]);
    for u in elements {
        if span.contains(u) {
            continue;
        }
        gens.push(u.clone());
        let mut all: Vec<Word> = gens.clone();
        all.extend(gens.iter().map(|w| group.inv_unchecked(w)));
        span = HashSet::from([group.identity()]);
        let mut stack = vec![group.identity()];
        while let Some(x) = stack.pop() {
            for s in &all {
                let y = group.mul_unchecked(&x, s);
                if group.length(&y) <= 2 * radius && span.insert(y.clone()) {
                    stack.push(y);
                }
            }
        }
    }
    gens
}

/// `H ∩ E(g)` restricted to `B(o, r)`.
pub fn subgroup_closure_part(h: &SubgroupRef, g: &Word, r: u32) -> Vec<Word> {
    let group = h.group();
    h.points(r)
        .into_iter()
        .filter(|u| membership_exponent(group, u, g, DEFAULT_EXPONENT_CAP).is_some())
        .collect()
}

/// `d_A(x, g^m x') - (|m| [g] - d_A(x, x'))` for `A` the axis of `g`.
pub fn separating_projection_check(pm: &ProjectionMap, x: &Word, x2: &Word, m: i64) -> Result<i64> {
    let a = pm
        .axis()
        .ok_or_else(|| Error::PreconditionFailed("projection target is not an axis".into()))?;
    let g = pm.group();
    let moved = g.mul_unchecked(&g.pow(a.element(), m), x2);
    let lhs = pm.projected_distance(x, &moved) as i64;
    let rhs = m.abs() * a.translation_length() as i64 - pm.projected_distance(x, x2) as i64;
    Ok(lhs - rhs)
}

/// A subgroup given by its core graph (free groups) or, for finite
/// subgroups, by the full list of its elements.
#[derive(Clone, Debug)]
pub enum SubgroupRef {
    Core(CoreGraph),
    Elements(MarkedGroup, Vec<Word>),
}

impl SubgroupRef {
    pub fn group(&self) -> &MarkedGroup {
        match self {
            SubgroupRef::Core(c) => c.group(),
            SubgroupRef::Elements(g, _) => g,
        }
    }

    pub fn contains(&self, w: &Word) -> bool {
        match self {
            SubgroupRef::Core(c) => c.contains(w),
            SubgroupRef::Elements(_, es) => es.contains(w),
        }
    }

    /// Orbit points `H o ∩ B(o, r)`.
    pub fn points(&self, r: u32) -> Vec<Word> {
        match self {
            SubgroupRef::Core(c) => c.elements_in_ball(r),
            SubgroupRef::Elements(g, es) => es.iter().filter(|w| g.length(w) <= r).cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransversalConjugate {
    pub k: String,
    pub diameter: u32,
    #[serde(skip)]
    pub element: Word,
}

/// Shortlex-least `k ∈ B(o, R)` with `diam_{k axis(g0)}(H o ∩ B(o, r)) <= theta`.
pub fn find_transversal_conjugate(
    h: &SubgroupRef,
    g0: &Word,
    search_radius: u32,
    theta: u32,
    r: u32,
) -> Result<TransversalConjugate> {
    let group = h.group();
    let base = axis(group, g0)?;
    let ys = h.points(r);
    let mut best = u32::MAX;
    for k in Ball::new(group, search_radius).elements_shortlex()? {
        let pm = ProjectionMap::to_axis(base.translate(&k));
        let d = pm.projected_diameter(&ys);
        if d <= theta {
            return Ok(TransversalConjugate {
                k: group.format_word(&k),
                diameter: d,
                element: k,
            });
        }
        best = best.min(d);
    }
    Err(Error::NotFoundWithinBound(format!(
        "no k within radius {search_radius}; best diameter {best}"
    )))
}

/// `d(π(Y), π(uY))`, distance between projected sets.
fn projected_set_distance(pm: &ProjectionMap, ys: &[Word], u: &Word) -> u32 {
    let g = pm.group();
    let p0: Vec<Word> = ys.iter().map(|y| pm.project(y)).collect();
    ys.iter()
        .map(|y| set_distance(g, &pm.project(&g.mul_unchecked(u, y)), &p0).unwrap())
        .min()
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationPower {
    #[serde(rename = "M")]
    pub m: u32,
    /// Number of sampled `u` certified at `M`.
    pub samples: usize,
    /// Smallest `d_A(Y, uY)` over the sample at `M`.
    pub min_distance: u32,
    /// Elements of `H ∩ E(g)` found in the sample.
    pub h_cap_e: Vec<String>,
    /// Powers tried by the doubling phase.
    pub doubling: Vec<u32>,
}

/// Products `e_0 g^{j_1 M} e_1 ... g^{j_s M} e_s` with `e_i ∈ H ∩ E`,
/// `j_i = ±1`, `1 <= s <= syllables`, minus those in `H ∩ E`.
fn separation_sample(group: &MarkedGroup, g: &Word, he: &[Word], m: u32, syllables: usize) -> Vec<Word> {
    let gm = group.pow(g, m as i64);
    let powers = [gm.clone(), group.inv_unchecked(&gm)];
    let mut layer: Vec<Word> = he.to_vec();
    let mut out: Vec<Word> = Vec::new();
    for _ in 0..syllables {
        let mut next = Vec::new();
        for x in &layer {
            for p in &powers {
                for e in he {
                    next.push(group.mul_all(&[x, p, e]));
                }
            }
        }
        next.sort_by(|a, b| group.shortlex_cmp(a, b));
        next.dedup();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out.retain(|u| !he.contains(u));
    out.sort_by(|a, b| group.shortlex_cmp(a, b));
    out.dedup();
    out
}

/// Least `M` (doubling search, then a scan below the first success) such
/// that `d_A(Y, uY) > theta` for every sampled
/// `u ∈ <g^M, H ∩ E> - H ∩ E`.
pub fn geometric_separation_power(
    h: &SubgroupRef,
    g: &Word,
    epsilon: u32,
    theta: u32,
    r: u32,
    syllables: usize,
    m_cap: u32,
) -> Result<SeparationPower> {
    let group = h.group();
    let pm = ProjectionMap::to_axis(axis(group, g)?);
    let ys = h.points(r);
    let d = pm.projected_diameter(&ys);
    if d > epsilon {
        return Err(Error::PreconditionFailed(format!(
            "diam_A(Y) = {d} exceeds epsilon = {epsilon}"
        )));
    }
    let he = subgroup_closure_part(h, g, r);
    let eval = |m: u32| -> (bool, usize, u32) {
        let sample = separation_sample(group, g, &he, m, syllables);
        let dists: Vec<u32> = sample
            .par_iter()
            .map(|u| projected_set_distance(&pm, &ys, u))
            .collect();
        let min = dists.iter().copied().min().unwrap_or(u32::MAX);
        (min > theta, sample.len(), min)
    };
    let mut doubling = Vec::new();
    let mut m = 1;
    let found = loop {
        if m > m_cap {
            return Err(Error::NotFoundWithinBound(format!("no M <= {m_cap}")));
        }
        doubling.push(m);
        if eval(m).0 {
            break m;
        }
        m *= 2;
    };
    let least = (found / 2 + 1..=found).find(|&k| eval(k).0).unwrap();
    let (_, samples, min_distance) = eval(least);
    Ok(SeparationPower {
        m: least,
        samples,
        min_distance,
        h_cap_e: he.iter().map(|w| group.format_word(w)).collect(),
        doubling,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorRow {
    pub u: String,
    /// `"1"` or `"g^M"`.
    pub choice: String,
    /// `d_A(u^-1 y, f(u, y) y)`.
    pub value: u32,
}

/// `f(u, y) = 1` when `d_A(u^-1 y, y) > threshold`, else `g^M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationSelector {
    #[serde(rename = "M")]
    pub m: u32,
    pub threshold: u32,
    pub y: String,
    pub rows: Vec<SelectorRow>,
    /// The bound also holds at `2M` on the same sample.
    pub stable_at_double: bool,
    #[serde(skip)]
    g_m: Word,
    #[serde(skip)]
    pm: Option<ProjectionMap>,
    #[serde(skip)]
    y_word: Word,
}

impl SeparationSelector {
    /// `f(u, y)` for the stored point `y`.
    pub fn select(&self, group: &MarkedGroup, u: &Word) -> Word {
        let pm = self.pm.as_ref().unwrap();
        let uy = group.mul_unchecked(&group.inv_unchecked(u), &self.y_word);
        if pm.projected_distance(&uy, &self.y_word) > self.threshold {
            group.identity()
        } else {
            self.g_m.clone()
        }
    }

    /// The base point `y`.
    pub fn point(&self) -> &Word {
        &self.y_word
    }

    /// `g^M`.
    pub fn power(&self) -> &Word {
        &self.g_m
    }

    pub fn all_rows_pass(&self) -> bool {
        self.rows.iter().all(|r| r.value > self.threshold)
    }
}

fn selector_rows(pm: &ProjectionMap, g: &Word, m: u32, y: &Word, us: &[Word], threshold: u32) -> Vec<SelectorRow> {
    let group = pm.group();
    let gm = group.pow(g, m as i64);
    let gmy = group.mul_unchecked(&gm, y);
    us.par_iter()
        .map(|u| {
            let x = group.mul_unchecked(&group.inv_unchecked(u), y);
            let (choice, value) = if pm.projected_distance(&x, y) > threshold {
                ("1", pm.projected_distance(&x, y))
            } else {
                ("g^M", pm.projected_distance(&x, &gmy))
            };
            SelectorRow {
                u: group.format_word(u),
                choice: choice.to_string(),
                value,
            }
        })
        .collect()
}

/// Builds `f` with threshold `theta + epsilon + 4 theta0` and the least `M`
/// (doubling, then a scan below) making every row over `u ∈ B(o, r)` exceed
/// the threshold.
#[allow(clippy::too_many_arguments)]
pub fn separation_selector(
    group: &MarkedGroup,
    g: &Word,
    epsilon: u32,
    theta: u32,
    theta0: u32,
    y: &Word,
    r: u32,
    m_cap: u32,
) -> Result<SeparationSelector> {
    let pm = ProjectionMap::to_axis(axis(group, g)?);
    let threshold = theta + epsilon + 4 * theta0;
    let us = Ball::new(group, r).elements_shortlex()?;
    let ok = |m: u32| selector_rows(&pm, g, m, y, &us, threshold).iter().all(|r| r.value > threshold);
    let mut m = 1;
    while !ok(m) {
        m *= 2;
        if m > m_cap {
            return Err(Error::NotFoundWithinBound(format!("no M <= {m_cap}")));
        }
    }
    let m = (m / 2 + 1..=m).find(|&k| ok(k)).unwrap();
    Ok(SeparationSelector {
        m,
        threshold,
        y: group.format_word(y),
        rows: selector_rows(&pm, g, m, y, &us, threshold),
        stable_at_double: ok(2 * m),
        g_m: group.pow(g, m as i64),
        pm: Some(pm),
        y_word: y.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionWitness {
    pub element: String,
    pub length: u32,
    /// Diameter of `H o ∩ K o ∩ B(o, r)`.
    pub overlap_diameter: u32,
    #[serde(skip)]
    pub word: Word,
}

/// Shortest nontrivial element of `H ∩ K` of length at most `r`, read off
/// the product of the two core graphs, provided the orbits overlap in more
/// than one point of `B(o, r)`.
pub fn short_intersection_element(h: &CoreGraph, k: &CoreGraph, r: u32) -> Option<IntersectionWitness> {
    let group = h.group();
    let kset: HashSet<Word> = k.elements_in_ball(r).into_iter().collect();
    let overlap: Vec<Word> = h
        .elements_in_ball(r)
        .into_iter()
        .filter(|w| kset.contains(w))
        .collect();
    let overlap_diameter = crate::geometry::diameter(group, &overlap);
    if overlap_diameter == 0 {
        return None;
    }
    for len in 1..=r as usize {
        if let Some(steps) = product_loop(h, k, len) {
            let word = group.reduce_steps(&steps);
            debug_assert!(h.contains(&word) && k.contains(&word));
            return Some(IntersectionWitness {
                element: group.format_word(&word),
                length: len as u32,
                overlap_diameter,
                word,
            });
        }
    }
    None
}

/// First (in letter order) reduced loop of exactly `len` steps at the base
/// of the product graph.
fn product_loop(h: &CoreGraph, k: &CoreGraph, len: usize) -> Option<Vec<Step>> {
    fn dfs(h: &CoreGraph, k: &CoreGraph, at: (u32, u32), path: &mut Vec<Step>, len: usize) -> bool {
        if path.len() == len {
            return at == (0, 0);
        }
        for &s in h.group().generators() {
            if path.last() == Some(&s.flip()) {
                continue;
            }
            if let (Some(a), Some(b)) = (h.edge(at.0, s), k.edge(at.1, s)) {
                path.push(s);
                if dfs(h, k, (a, b), path, len) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let mut path = Vec::new();
    dfs(h, k, (0, 0), &mut path, len).then_some(path)
}
