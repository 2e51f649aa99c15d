//! Translation lengths and quasi-isometric embedding constants.

use serde::{Deserialize, Serialize};

use super::axis;
use crate::error::{Error, Result};
use crate::group::{MarkedGroup, Word};
use crate::subgroup::CoreGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub element: String,
    pub translation_length: u32,
    /// `d(o, g^m o)` for `m = 1..=m_max`.
    pub distances: Vec<u32>,
    /// `d(o, g^m o) >= [g] |m|` for every sampled `m`.
    pub lower_ok: bool,
    /// `d(o, g^m o) <= d(o, g o) |m|` for every sampled `m`.
    pub upper_ok: bool,
    /// `min_m d(o, g^m o) / m`.
    pub min_ratio: f64,
    /// `d(o, g^{m_max} o) - d(o, g^{m_max - 1} o)`, which equals the
    /// translation length once `m_max >= 2`.
    pub last_increment: u32,
}

pub fn translation_length_check(group: &MarkedGroup, g: &Word, m_max: u32) -> Result<TranslationRecord> {
    let ax = axis(group, g)?;
    let tau = ax.translation_length();
    let one = group.length(g);
    let mut distances = Vec::new();
    let (mut lower_ok, mut upper_ok) = (true, true);
    for m in 1..=m_max as i64 {
        for s in [m, -m] {
            let d = group.length(&group.pow(g, s));
            lower_ok &= d >= tau * m as u32;
            upper_ok &= d <= one * m as u32;
        }
        distances.push(group.length(&group.pow(g, m)));
    }
    let min_ratio = distances
        .iter()
        .enumerate()
        .map(|(i, &d)| d as f64 / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let last_increment = match distances.len() {
        0 => 0,
        1 => distances[0],
        n => distances[n - 1] - distances[n - 2],
    };
    Ok(TranslationRecord {
        element: group.format_word(g),
        translation_length: tau,
        distances,
        lower_ok,
        upper_ok,
        min_ratio,
        last_increment,
    })
}

#[derive(Clone, Debug)]
pub enum QiTarget {
    /// `m ↦ g^m o`.
    Element(Word),
    /// `h ↦ h o`, with `H` carrying the word metric of its core-graph basis.
    Subgroup(CoreGraph),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QiReport {
    pub samples: usize,
    /// Least additive constant `lambda` for each multiplicative `kappa`.
    pub table: Vec<(f64, f64)>,
    /// Entries of `table` that strictly improve `lambda` as `kappa` grows.
    pub pareto: Vec<(f64, f64)>,
}

pub fn default_kappas() -> Vec<f64> {
    vec![1.0, 1.5, 2.0, 3.0, 4.0]
}

/// Fits `(1/kappa) d_H - lambda <= d <= kappa d_H + lambda` over orbit points
/// of `B(o, r)`. Both metrics are left-invariant, so pairs `(o, h)` suffice.
pub fn qi_embedding_check(group: &MarkedGroup, target: &QiTarget, r: u32, kappas: &[f64]) -> Result<QiReport> {
    let samples: Vec<(f64, f64)> = match target {
        QiTarget::Element(g) => {
            if !group.has_infinite_order(g) {
                return Err(Error::FiniteOrderElement(group.format_word(g)));
            }
            (-(r as i64)..=r as i64)
                .map(|m| (m.unsigned_abs() as f64, group.length(&group.pow(g, m)) as f64))
                .collect()
        }
        QiTarget::Subgroup(core) => core
            .elements_in_ball(r)
            .iter()
            .map(|h| (core.basis_length(h).unwrap() as f64, group.length(h) as f64))
            .collect(),
    };
    let table: Vec<(f64, f64)> = kappas
        .iter()
        .map(|&k| {
            let lambda = samples
                .iter()
                .map(|&(dh, d)| (d - k * dh).max(dh / k - d).max(0.0))
                .fold(0.0, f64::max);
            (k, lambda)
        })
        .collect();
    let mut pareto: Vec<(f64, f64)> = Vec::new();
    for &(k, l) in &table {
        if pareto.last().is_none_or(|&(_, pl)| l < pl) {
            pareto.push((k, l));
        }
    }
    Ok(QiReport {
        samples: samples.len(),
        table,
        pareto,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_examples() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let ab = translation_length_check(&g, &g.reduce("ab").unwrap(), 10).unwrap();
        assert_eq!(ab.distances, (1..=10).map(|m| 2 * m).collect::<Vec<_>>());
        assert!(ab.lower_ok && ab.upper_ok);
        assert_eq!(ab.min_ratio, 2.0);
        let c = translation_length_check(&g, &g.reduce("baB").unwrap(), 10).unwrap();
        assert_eq!(c.distances, (1..=10).map(|m| m + 2).collect::<Vec<_>>());
        assert_eq!(c.translation_length, 1);
        assert_eq!(c.last_increment, 1);
        assert!(c.lower_ok && c.upper_ok);
        let p = MarkedGroup::parse("product:2,3").unwrap();
        assert!(translation_length_check(&p, &p.reduce("b").unwrap(), 4).is_err());
    }

    #[test]
    fn translation_equals_min_ratio_for_cyclically_reduced() {
        for (desc, words) in [("free:2", vec!["a", "ab", "aab", "abAB"]), ("product:2,3", vec!["ab", "abaB"])] {
            let g = MarkedGroup::parse(desc).unwrap();
            for s in words {
                let rec = translation_length_check(&g, &g.reduce(s).unwrap(), 10).unwrap();
                assert_eq!(rec.min_ratio, rec.translation_length as f64, "{desc} {s}");
            }
        }
    }

    #[test]
    fn qi_examples() {
        let g = MarkedGroup::parse("free:2").unwrap();
        let a = qi_embedding_check(&g, &QiTarget::Element(g.reduce("a").unwrap()), 10, &default_kappas()).unwrap();
        assert_eq!(a.pareto, vec![(1.0, 0.0)]);
        let h = CoreGraph::from_generators(&g, &["a", "baB"]).unwrap();
        let q = qi_embedding_check(&g, &QiTarget::Subgroup(h), 7, &default_kappas()).unwrap();
        // b a B a b a B: basis length 3, word length 7
        assert_eq!(q.pareto.first().unwrap(), &(1.0, 4.0));
        assert_eq!(q.pareto.last().unwrap().1, 0.0);
    }
}
