//! Refutation searches for the amalgam injectivity statement and for free
//! subgroups generated by powers of two elements.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closure::{find_transversal_conjugate, geometric_separation_power, subgroup_closure_part, SubgroupRef};
use crate::error::{Error, Result};
use crate::geometry::{axis, ProjectionMap};
use crate::group::{MarkedGroup, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamOptions {
    /// Longest alternating word, in syllables.
    pub syllables: usize,
    /// Letters from `H` have length at most this.
    pub letter_len: u32,
    /// Radius of the scan for `H ∩ E(g)`.
    pub closure_radius: u32,
}

impl Default for AmalgamOptions {
    fn default() -> Self {
        AmalgamOptions {
            syllables: 6,
            letter_len: 4,
            closure_radius: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamReport {
    /// Which statement the search attacks.
    pub statement: String,
    pub g: String,
    #[serde(rename = "M")]
    pub m: u32,
    pub h_cap_e: Vec<String>,
    /// Coset representatives of `H ∩ E` in `H`.
    pub h_letters: usize,
    /// Coset representatives of `H ∩ E` in `<g^M, H ∩ E>`.
    pub g_letters: usize,
    /// Letters within each pool lie in distinct cosets, so distinct letter
    /// sequences are distinct normal forms.
    pub letters_distinct: bool,
    pub words_checked: u64,
}

/// Shortlex-least element of `x (H ∩ E)`.
fn coset_rep(group: &MarkedGroup, x: &Word, he: &[Word]) -> Word {
    he.iter()
        .map(|e| group.mul_unchecked(x, e))
        .min_by(|a, b| group.shortlex_cmp(a, b))
        .unwrap()
}

fn distinct_cosets(group: &MarkedGroup, pool: &[Word], he: &HashSet<Word>) -> bool {
    pool.iter().enumerate().all(|(i, x)| {
        let xi = group.inv_unchecked(x);
        pool[i + 1..].iter().all(|y| !he.contains(&group.mul_unchecked(&xi, y)))
    })
}

/// Enumerates alternating products `x_1 x_2 ... x_n`, `n <= syllables`, with
/// letters drawn alternately from the `H` pool and the `<g^M, H ∩ E>` pool,
/// and fails with `CounterexampleFound` if one lands in `H ∩ E` (so that
/// some normal form maps to the identity).
///
/// Since `H ∩ E` normalizes `<g^M>`, every element of `<g^M, H ∩ E>` is
/// `g^{jM} e`; the second pool is `g^{jM}` for `j != 0` with
/// `|g^{jM}| <= letter_len`, and at least `g^{±M}`.
pub fn amalgam_injectivity(h: &SubgroupRef, g: &Word, m: u32, opts: &AmalgamOptions) -> Result<AmalgamReport> {
    let group = h.group();
    axis(group, g)?;
    let mut he = subgroup_closure_part(h, g, opts.closure_radius);
    he.sort_by(|a, b| group.shortlex_cmp(a, b));
    let he_set: HashSet<Word> = he.iter().cloned().collect();

    let mut h_pool: Vec<Word> = h
        .points(opts.letter_len)
        .iter()
        .filter(|x| !he_set.contains(*x))
        .map(|x| coset_rep(group, x, &he))
        .collect();
    h_pool.sort_by(|a, b| group.shortlex_cmp(a, b));
    h_pool.dedup();

    let mut g_pool = Vec::new();
    for j in 1.. {
        let p = group.pow(g, (j * m) as i64);
        if j > 1 && group.length(&p) > opts.letter_len {
            break;
        }
        g_pool.push(coset_rep(group, &p, &he));
        g_pool.push(coset_rep(group, &group.inv_unchecked(&p), &he));
    }
    let letters_distinct = distinct_cosets(group, &h_pool, &he_set) && distinct_cosets(group, &g_pool, &he_set);
    let pools = [&h_pool, &g_pool];

    let starts: Vec<(usize, &Word)> = (0..2).flat_map(|p| pools[p].iter().map(move |x| (p, x))).collect();
    let results: Vec<std::result::Result<u64, String>> = starts
        .par_iter()
        .map(|&(p, x)| {
            let mut count = 0u64;
            let mut stack: Vec<(usize, Word, usize, String)> = vec![(p, x.clone(), 1, group.format_word(x))];
            while let Some((pool, prod, len, text)) = stack.pop() {
                count += 1;
                if he_set.contains(&prod) {
                    return Err(text);
                }
                if len < opts.syllables {
                    let next = 1 - pool;
                    for y in pools[next] {
                        stack.push((
                            next,
                            group.mul_unchecked(&prod, y),
                            len + 1,
                            format!("{text} | {}", group.format_word(y)),
                        ));
                    }
                }
            }
            Ok(count)
        })
        .collect();
    let mut words_checked = 0;
    for r in results {
        match r {
            Ok(c) => words_checked += c,
            Err(w) => return Err(Error::CounterexampleFound(format!("alternating word {w} lies in H ∩ E"))),
        }
    }
    Ok(AmalgamReport {
        statement: "H *_{H∩E} <g^M, H∩E> -> G is injective".into(),
        g: group.format_word(g),
        m,
        h_cap_e: he.iter().map(|w| group.format_word(w)).collect(),
        h_letters: h_pool.len(),
        g_letters: g_pool.len(),
        letters_distinct,
        words_checked,
    })
}

/// Full pipeline: transversal conjugate `g = k g0 k^-1`, separation power
/// `M`, then the injectivity search.
pub fn amalgam_pipeline(
    h: &SubgroupRef,
    g0: &Word,
    transversal_radius: u32,
    transversal_theta: u32,
    separation_theta: u32,
    opts: &AmalgamOptions,
) -> Result<AmalgamReport> {
    let group = h.group();
    let r = opts.letter_len.max(4);
    let t = find_transversal_conjugate(h, g0, transversal_radius, transversal_theta, r)?;
    let g = group.conjugate(&t.element, g0);
    let sp = geometric_separation_power(h, &g, t.diameter, separation_theta, r, 3, 256)?;
    amalgam_injectivity(h, &g, sp.m, opts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeSubgroupReport {
    pub g1: String,
    pub g2: String,
    #[serde(rename = "M")]
    pub m: u32,
    pub max_length: usize,
    pub words_checked: u64,
    /// `diam π_{A_1}(A_2)` and `diam π_{A_2}(A_1)` over the axes in `B(o, 12)`.
    pub mutual_projections: (u32, u32),
}

const AXIS_SAMPLE: [u32; 2] = [8, 12];

fn mutual_projection(a: &ProjectionMap, b: &ProjectionMap, r: u32) -> u32 {
    a.projected_diameter(&b.vertices_in_ball(r))
}

/// No nontrivial reduced word of length `<= n` in `g1^M, g2^M` is the
/// identity. Requires infinite order and axes whose mutual projections
/// stay bounded (checked as equal at two sample radii).
pub fn free_subgroup_witness(group: &MarkedGroup, g1: &Word, g2: &Word, m: u32, n: usize) -> Result<FreeSubgroupReport> {
    let p1 = ProjectionMap::to_axis(axis(group, g1)?);
    let p2 = ProjectionMap::to_axis(axis(group, g2)?);
    let [lo, hi] = AXIS_SAMPLE;
    let d12 = (mutual_projection(&p1, &p2, lo), mutual_projection(&p1, &p2, hi));
    let d21 = (mutual_projection(&p2, &p1, lo), mutual_projection(&p2, &p1, hi));
    if d12.0 != d12.1 || d21.0 != d21.1 {
        return Err(Error::PreconditionFailed(
            "axes have unbounded mutual projections".into(),
        ));
    }
    let x = group.pow(g1, m as i64);
    let y = group.pow(g2, m as i64);
    let letters = [x.clone(), group.inv_unchecked(&x), y.clone(), group.inv_unchecked(&y)];
    let results: Vec<std::result::Result<u64, String>> = (0..4)
        .into_par_iter()
        .map(|first| {
            let mut count = 0;
            let mut stack = vec![(first, letters[first].clone(), 1usize, vec![first])];
            while let Some((last, prod, len, path)) = stack.pop() {
                count += 1;
                if prod.is_identity() {
                    let names = ["X", "x", "Y", "y"];
                    return Err(path.iter().map(|&i| names[i]).collect::<String>());
                }
                if len < n {
                    for l in (0..4).filter(|&l| l != last ^ 1) {
                        let mut p = path.clone();
                        p.push(l);
                        stack.push((l, group.mul_unchecked(&prod, &letters[l]), len + 1, p));
                    }
                }
            }
            Ok(count)
        })
        .collect();
    let mut words_checked = 0;
    for r in results {
        match r {
            Ok(c) => words_checked += c,
            Err(w) => {
                return Err(Error::CounterexampleFound(format!(
                    "{w} is trivial (X = g1^M, Y = g2^M, lower case = inverse)"
                )))
            }
        }
    }
    Ok(FreeSubgroupReport {
        g1: group.format_word(g1),
        g2: group.format_word(g2),
        m,
        max_length: n,
        words_checked,
        mutual_projections: (d12.1, d21.1),
    })
}

/// Least `M <= m_cap` for which [`free_subgroup_witness`] passes.
pub fn free_subgroup_search(group: &MarkedGroup, g1: &Word, g2: &Word, n: usize, m_cap: u32) -> Result<FreeSubgroupReport> {
    for m in 1..=m_cap {
        match free_subgroup_witness(group, g1, g2, m, n) {
            Err(Error::CounterexampleFound(_)) => continue,
            other => return other,
        }
    }
    Err(Error::NotFoundWithinBound(format!("no M <= {m_cap}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subgroup::CoreGraph;

    fn w(g: &MarkedGroup, s: &str) -> Word {
        g.reduce(s).unwrap()
    }

    #[test]
    fn cyclic_amalgam_is_free() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let h = SubgroupRef::Core(CoreGraph::from_generators(&g, &["a"]).unwrap());
        let rep = amalgam_injectivity(&h, &w(&g, "b"), 1, &AmalgamOptions::default()).unwrap();
        assert_eq!((rep.h_letters, rep.g_letters), (8, 8));
        assert!(rep.letters_distinct);
        // 2 * (8 + 8^2 + ... + 8^6)
        assert_eq!(rep.words_checked, 2 * (1..=6).map(|k| 8u64.pow(k)).sum::<u64>());
    }

    #[test]
    fn injectivity_detects_relations() {
        // g is a power of the generator of H, so its letters lie in H ∩ E
        let g = MarkedGroup::parse("free:2").unwrap();
        let h = SubgroupRef::Core(CoreGraph::from_generators(&g, &["ab"]).unwrap());
        let err = amalgam_injectivity(&h, &w(&g, "abab"), 1, &AmalgamOptions { syllables: 2, ..Default::default() });
        assert!(matches!(err, Err(Error::CounterexampleFound(_))));
    }

    #[test]
    fn rank_two_pipeline() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let h = SubgroupRef::Core(CoreGraph::from_generators(&g, &["a", "baB"]).unwrap());
        let opts = AmalgamOptions { syllables: 4, ..Default::default() };
        let rep = amalgam_pipeline(&h, &w(&g, "ab"), 4, 1, 2, &opts).unwrap();
        assert!(rep.words_checked > 0 && rep.letters_distinct);
    }

    #[test]
    fn free_product_pipeline() {
        let p = MarkedGroup::parse("product:2,3").unwrap();
        let h = SubgroupRef::Elements(p.clone(), vec![p.identity(), w(&p, "a")]);
        let opts = AmalgamOptions { syllables: 4, ..Default::default() };
        let rep = amalgam_pipeline(&h, &w(&p, "ab"), 4, 0, 2, &opts).unwrap();
        assert_eq!(rep.h_letters, 1);
        assert!(rep.words_checked > 0);
    }

    #[test]
    fn free_subgroups() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let r = free_subgroup_witness(&g, &w(&g, "a"), &w(&g, "b"), 1, 8).unwrap();
        assert_eq!(r.words_checked, (1..=8).map(|k| 4 * 3u64.pow(k - 1)).sum::<u64>());
        free_subgroup_witness(&g, &w(&g, "ab"), &w(&g, "ba"), 2, 8).unwrap();
        assert!(matches!(
            free_subgroup_witness(&g, &w(&g, "a"), &w(&g, "aa"), 1, 4),
            Err(Error::PreconditionFailed(_))
        ));
        let p = MarkedGroup::parse("product:2,3").unwrap();
        let r = free_subgroup_search(&p, &w(&p, "ab"), &w(&p, "ba"), 8, 4).unwrap();
        assert!(r.m >= 1);
        assert!(free_subgroup_witness(&p, &w(&p, "a"), &w(&p, "b"), 1, 4).is_err());
    }
}
