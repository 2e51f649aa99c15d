//! Axes of infinite-order elements and nearest-point projections.

pub mod audit;
pub mod lemmas;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{MarkedGroup, Step, Word};

pub use audit::{
    constriction_audit, elementary_properties_audit, intersection_image_audit,
    projection_symmetry_audit, quasiconvexity_audit, AuditOptions, AuditTable,
    ConstrictionReport, IntersectionImageRecord, OrbitSpec, QuasiConvexity, SigmaSample,
    SymmetryRecord, Violation, ZetaSample,
};
pub use lemmas::{qi_embedding_check, translation_length_check, QiReport, QiTarget, TranslationRecord};

/// The geodesic line `A = u <w>` through `u` along the cyclic core `w` of
/// `g = u w u^-1`.
///
/// Vertex `A(t)` is `u w^q p` where `t = qL + i` (`L = |w|`) and `p` is the
/// prefix of length `i` of the canonical spelling of `w`, so `g A(t) =
/// A(t + L)` and `d(A(s), A(t)) = |s - t|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    group: MarkedGroup,
    element: Word,
    conjugator: Word,
    core: Word,
    core_steps: Vec<Step>,
    translation_length: u32,
}

pub fn axis(group: &MarkedGroup, g: &Word) -> Result<Axis> {
    group.check(g)?;
    if !group.has_infinite_order(g) {
        return Err(Error::FiniteOrderElement(group.format_word(g)));
    }
    let (conjugator, core) = group.cyclic_reduce(g);
    let core_steps = group.steps_of(&core);
    Ok(Axis {
        group: group.clone(),
        element: g.clone(),
        translation_length: core_steps.len() as u32,
        conjugator,
        core,
        core_steps,
    })
}

impl Axis {
    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    /// The element `g` whose axis this is (conjugated along by `translate`).
    pub fn element(&self) -> &Word {
        &self.element
    }

    pub fn conjugator(&self) -> &Word {
        &self.conjugator
    }

    pub fn core(&self) -> &Word {
        &self.core
    }

    pub fn translation_length(&self) -> u32 {
        self.translation_length
    }

    pub fn vertex(&self, t: i64) -> Word {
        let l = self.translation_length as i64;
        let (q, i) = (t.div_euclid(l), t.rem_euclid(l) as usize);
        let g = &self.group;
        let mut w = g.mul_unchecked(&self.conjugator, &g.pow(&self.core, q));
        for &s in &self.core_steps[..i] {
            w = g.mul_step(&w, s);
        }
        w
    }

    /// Parameter range guaranteed to contain every nearest vertex to `x`.
    ///
    /// `d(x, A(t)) >= |t| - |u| - |x|` while `d(x, A(0)) <= |x| + |u|`, so a
    /// nearest vertex has `|t| <= 2(|x| + |u|)`.
    pub fn window(&self, x: &Word) -> i64 {
        let g = &self.group;
        2 * (g.length(x) + g.length(&self.conjugator)) as i64 + self.translation_length as i64
    }

    /// Nearest axis vertex, ties broken by smallest `|t|`, then by label.
    pub fn project_param(&self, x: &Word) -> (i64, Word) {
        let g = &self.group;
        let win = self.window(x);
        let mut best: Option<(u32, i64, Word)> = None;
        for t in -win..=win {
            let v = self.vertex(t);
            let d = g.distance(x, &v);
            let better = match &best {
                None => true,
                Some((bd, bt, bv)) => (d, t.abs())
                    .cmp(&(*bd, bt.abs()))
                    .then_with(|| g.label_cmp(&v, bv))
                    .is_lt(),
            };
            if better {
                best = Some((d, t, v));
            }
        }
        let (_, t, v) = best.unwrap();
        (t, v)
    }

    pub fn distance_to(&self, x: &Word) -> u32 {
        let v = self.project_param(x).1;
        self.group.distance(x, &v)
    }

    /// The parameter of `x` if it lies on the axis.
    pub fn param_of(&self, x: &Word) -> Option<i64> {
        let (t, v) = self.project_param(x);
        (v == *x).then_some(t)
    }

    pub fn vertices(&self, lo: i64, hi: i64) -> Vec<Word> {
        (lo..=hi).map(|t| self.vertex(t)).collect()
    }

    /// Axis vertices in `B(o, r)`.
    pub fn vertices_in_ball(&self, r: u32) -> Vec<Word> {
        let reach = r as i64 + self.group.length(&self.conjugator) as i64;
        self.vertices(-reach, reach)
            .into_iter()
            .filter(|v| self.group.length(v) <= r)
            .collect()
    }

    /// The axis `hA` of `h g h^-1`.
    pub fn translate(&self, h: &Word) -> Axis {
        let g = &self.group;
        Axis {
            element: g.conjugate(h, &self.element),
            conjugator: g.mul_unchecked(h, &self.conjugator),
            ..self.clone()
        }
    }
}

/// What a projection map projects to.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Axis(Axis),
    /// A finite vertex set.
    Set(Vec<Word>),
}

/// Tie-break rule of [`ProjectionMap`]: nearest, then closest to the origin
/// of the target (`u` for an axis, the first listed point for a set), then
/// lexicographically least label.
pub const TIE_BREAK: &str = "nearest/origin/lex";

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMap {
    group: MarkedGroup,
    target: Target,
}

impl ProjectionMap {
    pub fn to_axis(axis: Axis) -> Self {
        ProjectionMap {
            group: axis.group.clone(),
            target: Target::Axis(axis),
        }
    }

    pub fn to_set(group: &MarkedGroup, points: Vec<Word>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::PreconditionFailed("empty projection target".into()));
        }
        for p in &points {
            group.check(p)?;
        }
        Ok(ProjectionMap {
            group: group.clone(),
            target: Target::Set(points),
        })
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn axis(&self) -> Option<&Axis> {
        match &self.target {
            Target::Axis(a) => Some(a),
            Target::Set(_) => None,
        }
    }

    pub fn project(&self, x: &Word) -> Word {
        match &self.target {
            Target::Axis(a) => a.project_param(x).1,
            Target::Set(pts) => {
                let g = &self.group;
                let origin = &pts[0];
                pts.iter()
                    .min_by(|p, q| {
                        (g.distance(x, p), g.distance(origin, p))
                            .cmp(&(g.distance(x, q), g.distance(origin, q)))
                            .then_with(|| g.label_cmp(p, q))
                    })
                    .unwrap()
                    .clone()
            }
        }
    }

    /// `d(x, A)`.
    pub fn distance_to(&self, x: &Word) -> u32 {
        self.group.distance(x, &self.project(x))
    }

    pub fn contains(&self, x: &Word) -> bool {
        self.distance_to(x) == 0
    }

    /// `d_A(x, y) = d(π(x), π(y))`.
    pub fn projected_distance(&self, x: &Word, y: &Word) -> u32 {
        self.group.distance(&self.project(x), &self.project(y))
    }

    /// `diam_A(Y)`; zero for an empty set.
    pub fn projected_diameter(&self, ys: &[Word]) -> u32 {
        let ps: Vec<Word> = ys.iter().map(|y| self.project(y)).collect();
        diameter(&self.group, &ps)
    }

    /// Target vertices in `B(o, r)`.
    pub fn vertices_in_ball(&self, r: u32) -> Vec<Word> {
        match &self.target {
            Target::Axis(a) => a.vertices_in_ball(r),
            Target::Set(pts) => pts
                .iter()
                .filter(|p| self.group.length(p) <= r)
                .cloned()
                .collect(),
        }
    }
}

/// Largest pairwise distance; zero for sets with fewer than two points.
pub fn diameter(group: &MarkedGroup, pts: &[Word]) -> u32 {
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(group.distance(p, q));
        }
    }
    best
}

/// `min_{y ∈ ys} d(x, y)`, or `None` for an empty set.
pub fn set_distance(group: &MarkedGroup, x: &Word, ys: &[Word]) -> Option<u32> {
    ys.iter().map(|y| group.distance(x, y)).min()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub element: String,
    pub conjugator: String,
    pub core: String,
    pub translation_length: u32,
}

impl From<&Axis> for AxisSummary {
    fn from(a: &Axis) -> Self {
        let g = &a.group;
        AxisSummary {
            element: g.format_word(&a.element),
            conjugator: g.format_word(&a.conjugator),
            core: g.format_word(&a.core),
            translation_length: a.translation_length,
        }
    }
}
