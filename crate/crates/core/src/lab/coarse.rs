//! The coarse quotient conditions for `phi(u) = u f(u, y)` and the counting
//! inequality they imply.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::closure::SeparationSelector;
use crate::error::{Error, Result};
use crate::group::{Ball, Word};
use crate::subgroup::{CoreGraph, Reading, SchreierFrontier};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingRow {
    pub radius: u32,
    /// `|B(o, r)|`.
    pub ball: u64,
    /// `|{phi(u) H : u ∈ B(o, r)}|`.
    pub image_cosets: u64,
    /// `|L(B(o, r + theta))|`.
    pub cosets: u64,
    /// Largest fiber of `u ↦ phi(u) H` over the ball.
    pub max_fiber: u64,
    pub kappa: u64,
    /// `ball <= kappa * cosets`.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseQuotientReport {
    pub radius: u32,
    #[serde(rename = "M")]
    pub m: u32,
    /// `max d(phi(u) y, phi(v) y)` over `u, v` with `phi(u) H = phi(v) H`.
    pub theta_cq1: u32,
    pub cq1_witness: Option<(String, String)>,
    /// `max d(u y, phi(u) y)`.
    pub theta_cq2: u32,
    pub theta: u32,
    pub bound: u32,
    pub counting: Vec<CountingRow>,
}

/// Canonical key of the left coset `wH`, read off `H w^-1`.
fn left_coset_key(core: &CoreGraph, w: &Word) -> (u32, String) {
    let g = core.group();
    let wi = g.inv_unchecked(w);
    match core.read(&wi) {
        Reading::Inside(v) => (v, String::new()),
        Reading::Outside { vertex, consumed } => (vertex, g.label(&wi)[consumed..].to_string()),
    }
}

/// Exhaustive CQ1/CQ2 over `B(o, r)` with `phi(u) = u f(u, y)`, failing with
/// `CqViolation` when the measured constant exceeds `bound`; then the
/// counting inequality `|B(o, r')| <= kappa |L(B(o, r' + theta))|`,
/// `kappa = |B(o, 3 theta)|`, at each of `count_radii`.
pub fn coarse_quotient_check(
    core: &CoreGraph,
    selector: &SeparationSelector,
    r: u32,
    bound: u32,
    count_radii: &[u32],
) -> Result<CoarseQuotientReport> {
    let g = core.group();
    let y = selector.point();
    let r_all = count_radii.iter().copied().chain([r]).max().unwrap();
    let ball = Ball::new(g, r_all).elements_shortlex()?;
    let phi: Vec<Word> = ball.iter().map(|u| g.mul_unchecked(u, &selector.select(g, u))).collect();
    let moved: Vec<Word> = phi.iter().map(|p| g.mul_unchecked(p, y)).collect();

    let in_r = |i: usize| g.length(&ball[i]) <= r;
    let theta_cq2 = (0..ball.len())
        .filter(|&i| in_r(i))
        .map(|i| g.distance(&g.mul_unchecked(&ball[i], y), &moved[i]))
        .max()
        .unwrap_or(0);

    let keys: Vec<(u32, String)> = phi.iter().map(|p| left_coset_key(core, p)).collect();
    let mut classes: HashMap<&(u32, String), Vec<usize>> = HashMap::new();
    for i in (0..ball.len()).filter(|&i| in_r(i)) {
        classes.entry(&keys[i]).or_default().push(i);
    }
    let mut theta_cq1 = 0;
    let mut cq1_witness = None;
    for members in classes.values() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = g.distance(&moved[i], &moved[j]);
                if d > theta_cq1 {
                    theta_cq1 = d;
                    cq1_witness = Some((g.format_word(&ball[i]), g.format_word(&ball[j])));
                }
            }
        }
    }
    let theta = theta_cq1.max(theta_cq2);
    if theta > bound {
        let pair = cq1_witness
            .clone()
            .map(|(u, v)| format!("u = {u}, v = {v}"))
            .unwrap_or_else(|| "displacement".into());
        return Err(Error::CqViolation(format!("theta = {theta} exceeds {bound} ({pair})")));
    }

    let kappa = Ball::new(g, 3 * theta).counts()?.total();
    let mut frontier = SchreierFrontier::new(core);
    let mut counting = Vec::new();
    for &rr in count_radii {
        frontier.expand_to(rr + theta)?;
        let cosets: u64 = frontier.sphere_sizes(rr + theta).iter().sum();
        let mut fibers: HashMap<&(u32, String), u64> = HashMap::new();
        let mut size = 0u64;
        for (i, u) in ball.iter().enumerate() {
            if g.length(u) <= rr {
                size += 1;
                *fibers.entry(&keys[i]).or_default() += 1;
            }
        }
        counting.push(CountingRow {
            radius: rr,
            ball: size,
            image_cosets: fibers.len() as u64,
            cosets,
            max_fiber: fibers.values().copied().max().unwrap_or(0),
            kappa,
            holds: size <= kappa.saturating_mul(cosets),
        });
    }
    Ok(CoarseQuotientReport {
        radius: r,
        m: selector.m,
        theta_cq1,
        cq1_witness,
        theta_cq2,
        theta,
        bound,
        counting,
    })
}
