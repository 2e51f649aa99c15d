//! Buffering sequences `Y_0, A_1, Y_1, ..., A_n, Y_n` of axes and finite
//! vertex sets, the Behrstock-type inequality for buffering triples and the
//! chain-separation conclusion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis, diameter, Axis, ProjectionMap};
use crate::group::{MarkedGroup, Word};
use crate::subgroup::CoreGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferingParams {
    pub delta: u32,
    pub epsilon: u32,
    #[serde(rename = "L")]
    pub l: u32,
}

impl BufferingParams {
    pub fn new(delta: u32, epsilon: u32, l: u32) -> Self {
        BufferingParams { delta, epsilon, l }
    }
}

#[derive(Clone, Debug)]
pub struct BufferingSequence {
    group: MarkedGroup,
    /// `Y_0 .. Y_n`.
    ys: Vec<Vec<Word>>,
    /// `A_1 .. A_n`.
    axes: Vec<Axis>,
}

impl BufferingSequence {
    /// `ys` has one more entry than `axes`; only the end sets may be empty.
    pub fn new(group: &MarkedGroup, ys: Vec<Vec<Word>>, axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || ys.len() != axes.len() + 1 {
            return Err(Error::PreconditionFailed(format!(
                "need n >= 1 axes and n + 1 sets, got {} and {}",
                axes.len(),
                ys.len()
            )));
        }
        for (i, y) in ys.iter().enumerate() {
            if y.is_empty() && i != 0 && i != ys.len() - 1 {
                return Err(Error::EmptyInteriorSet(i));
            }
            for w in y {
                group.check(w)?;
            }
        }
        Ok(BufferingSequence {
            group: group.clone(),
            ys,
            axes,
        })
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn ys(&self) -> &[Vec<Word>] {
        &self.ys
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    /// Half-width of the parameter window used to sample each axis: covers
    /// the sets, every axis origin, and a full period beyond.
    pub fn window(&self) -> i64 {
        let g = &self.group;
        let y = self.ys.iter().flatten().map(|w| g.length(w)).max().unwrap_or(0);
        let u = self
            .axes
            .iter()
            .map(|a| g.length(a.conjugator()) + a.translation_length())
            .max()
            .unwrap_or(0);
        2 * (y + 2 * u) as i64 + 4
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionValues {
    /// 1-based axis index.
    pub index: usize,
    /// `None` when the condition is vacuous (last axis or empty sets).
    pub bs1: Option<u32>,
    pub bs2: Option<u32>,
    pub bs3: Option<u32>,
    pub bs4: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionWitness {
    pub condition: String,
    pub index: usize,
    pub value: u32,
    pub bound: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferingReport {
    pub params: BufferingParams,
    pub pass: bool,
    pub first_violation: Option<ConditionWitness>,
    pub values: Vec<ConditionValues>,
}

fn min_distance(g: &MarkedGroup, xs: &[Word], ys: &[Word]) -> Option<u32> {
    xs.iter()
        .flat_map(|x| ys.iter().map(move |y| g.distance(x, y)))
        .min()
}

/// The raw quantities behind BS1-BS4 for every axis. They do not depend on
/// the parameters, so one evaluation serves any `(epsilon, L)`.
pub fn condition_values(seq: &BufferingSequence) -> Vec<ConditionValues> {
    let g = &seq.group;
    let w = seq.window();
    let samples: Vec<Vec<Word>> = seq.axes.iter().map(|a| a.vertices(-w, w)).collect();
    let pms: Vec<ProjectionMap> = seq.axes.iter().cloned().map(ProjectionMap::to_axis).collect();
    let n = seq.axes.len();
    (0..n)
        .map(|i| {
            let pm = &pms[i];
            let prev = &seq.ys[i];
            let next = &seq.ys[i + 1];
            let bs1 = (i + 1 < n).then(|| {
                pm.projected_diameter(&samples[i + 1])
                    .max(pms[i + 1].projected_diameter(&samples[i]))
            });
            let nonempty: Vec<&Vec<Word>> = [prev, next].into_iter().filter(|y| !y.is_empty()).collect();
            let bs2 = nonempty.iter().map(|y| pm.projected_diameter(y)).max();
            let bs3 = nonempty
                .iter()
                .map(|y| y.iter().map(|p| pm.distance_to(p)).min().unwrap())
                .max();
            let bs4 = (!prev.is_empty() && !next.is_empty()).then(|| {
                let pp: Vec<Word> = prev.iter().map(|y| pm.project(y)).collect();
                let pn: Vec<Word> = next.iter().map(|y| pm.project(y)).collect();
                min_distance(g, &pp, &pn).unwrap()
            });
            ConditionValues {
                index: i + 1,
                bs1,
                bs2,
                bs3,
                bs4,
            }
        })
        .collect()
}

pub fn judge(values: &[ConditionValues], params: BufferingParams) -> BufferingReport {
    let mut first_violation = None;
    'outer: for v in values {
        let checks = [
            ("BS1", v.bs1, true),
            ("BS2", v.bs2, true),
            ("BS3", v.bs3, true),
            ("BS4", v.bs4, false),
        ];
        for (name, value, upper) in checks {
            let Some(value) = value else { continue };
            let (ok, bound) = if upper {
                (value <= params.epsilon, params.epsilon)
            } else {
                (value >= params.l, params.l)
            };
            if !ok {
                first_violation = Some(ConditionWitness {
                    condition: name.to_string(),
                    index: v.index,
                    value,
                    bound,
                });
                break 'outer;
            }
        }
    }
    BufferingReport {
        params,
        pass: first_violation.is_none(),
        first_violation,
        values: values.to_vec(),
    }
}

/// Evaluates BS1-BS4 exactly over the finite sets and sampled axis
/// windows. Conditions that mention an empty end set hold vacuously.
pub fn check_buffering(seq: &BufferingSequence, params: BufferingParams) -> BufferingReport {
    judge(&condition_values(seq), params)
}

/// `min(d_A(x, Y), d_B(x, Y))` for a buffering triple `A, Y, B`.
pub fn behrstock_two(a: &Axis, y: &[Word], b: &Axis, x: &Word, params: BufferingParams) -> Result<u32> {
    let seq = triple(a, y, b)?;
    require_buffering(&seq, BufferingParams { l: 0, ..params })?;
    Ok(behrstock_value(&seq, x))
}

fn triple(a: &Axis, y: &[Word], b: &Axis) -> Result<BufferingSequence> {
    BufferingSequence::new(
        a.group(),
        vec![Vec::new(), y.to_vec(), Vec::new()],
        vec![a.clone(), b.clone()],
    )
}

fn require_buffering(seq: &BufferingSequence, params: BufferingParams) -> Result<()> {
    let rep = check_buffering(seq, params);
    match rep.first_violation {
        None => Ok(()),
        Some(w) => Err(Error::PreconditionFailed(format!(
            "not buffering: {} fails at axis {} ({} vs bound {})",
            w.condition, w.index, w.value, w.bound
        ))),
    }
}

fn behrstock_value(seq: &BufferingSequence, x: &Word) -> u32 {
    let g = &seq.group;
    let y = &seq.ys[1];
    seq.axes
        .iter()
        .map(|ax| {
            let pm = ProjectionMap::to_axis(ax.clone());
            let px = pm.project(x);
            y.iter().map(|p| g.distance(&px, &pm.project(p))).min().unwrap()
        })
        .min()
        .unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehrstockReport {
    pub radius: u32,
    pub theta: u32,
    pub samples: usize,
    pub witness: Option<String>,
}

/// Largest `min(d_A(x, Y), d_B(x, Y))` over `x ∈ B(o, r)`.
pub fn behrstock_audit(a: &Axis, y: &[Word], b: &Axis, params: BufferingParams, r: u32) -> Result<BehrstockReport> {
    let seq = triple(a, y, b)?;
    require_buffering(&seq, BufferingParams { l: 0, ..params })?;
    let g = &seq.group;
    let mut theta = 0;
    let mut witness = None;
    let pts = crate::group::Ball::new(g, r).elements()?;
    for x in &pts {
        let v = behrstock_value(&seq, x);
        if v > theta {
            theta = v;
            witness = Some(g.format_word(x));
        }
    }
    Ok(BehrstockReport {
        radius: r,
        theta,
        samples: pts.len(),
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ChainVerdict {
    /// `margins[i-1] = d_{A_i}(Y_0, Y_i) - theta`, all positive.
    Pass { margins: Vec<i64> },
    Fail { margins: Vec<i64>, index: usize },
    /// `L <= theta`: the conclusion is not claimed at this `L`.
    Inapplicable { reason: String },
}

impl ChainVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, ChainVerdict::Pass { .. })
    }
}

/// Checks `d_{A_i}(Y_0, Y_i) > theta` for every `i` on a sequence that is
/// `(delta, epsilon, L)`-buffering.
pub fn chain_separation(seq: &BufferingSequence, params: BufferingParams, theta: u32) -> Result<ChainVerdict> {
    if seq.ys[0].is_empty() {
        return Err(Error::PreconditionFailed("Y_0 is empty".into()));
    }
    require_buffering(seq, params)?;
    if params.l <= theta {
        return Ok(ChainVerdict::Inapplicable {
            reason: format!("L = {} does not exceed theta = {theta}", params.l),
        });
    }
    Ok(separation_margins(seq, theta))
}

fn separation_margins(seq: &BufferingSequence, theta: u32) -> ChainVerdict {
    let g = &seq.group;
    let margins: Vec<i64> = seq
        .axes
        .iter()
        .enumerate()
        .map(|(i, ax)| {
            let pm = ProjectionMap::to_axis(ax.clone());
            let p0: Vec<Word> = seq.ys[0].iter().map(|y| pm.project(y)).collect();
            let pi: Vec<Word> = seq.ys[i + 1].iter().map(|y| pm.project(y)).collect();
            match min_distance(g, &p0, &pi) {
                Some(d) => d as i64 - theta as i64,
                // an empty last set imposes nothing
                None => i64::MAX,
            }
        })
        .collect();
    match margins.iter().position(|&m| m <= 0) {
        None => ChainVerdict::Pass { margins },
        Some(i) => ChainVerdict::Fail { margins, index: i + 1 },
    }
}

/// Smallest `L` in the grid such that every sequence of the family that is
/// `(delta, epsilon, L')`-buffering for some `L' >= L` satisfies the
/// separation conclusion for `theta`. `None` if no grid value works.
pub fn empirical_l_threshold(
    family: &[BufferingSequence],
    delta: u32,
    epsilon: u32,
    theta: u32,
    l_grid: &[u32],
) -> Option<u32> {
    let evaluated: Vec<(Vec<ConditionValues>, bool)> = family
        .iter()
        .filter(|s| !s.ys[0].is_empty())
        .map(|s| (condition_values(s), separation_margins(s, theta).is_pass()))
        .collect();
    let mut grid: Vec<u32> = l_grid.to_vec();
    grid.sort_unstable();
    grid.into_iter().find(|&l| {
        evaluated
            .iter()
            .all(|(vals, ok)| *ok || !judge(vals, BufferingParams::new(delta, epsilon, l)).pass)
    })
}

/// One letter of an alternating word `h_1 k_1 ... h_n k_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLetter(pub String, pub String);

/// `{subgroup, g, word: [["h", "a"], ["k", "bbb"]], radius}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    #[serde(default = "default_group")]
    pub group: String,
    pub subgroup: Vec<String>,
    pub g: String,
    pub word: Vec<ChainLetter>,
    pub radius: u32,
}

fn default_group() -> String {
    "free:2".to_string()
}

impl ChainSpec {
    pub fn build(&self) -> Result<BufferingSequence> {
        let group = MarkedGroup::parse(&self.group)?;
        let gens: Vec<&str> = self.subgroup.iter().map(String::as_str).collect();
        let core = CoreGraph::from_generators(&group, &gens)?;
        let g = group.reduce(&self.g)?;
        let mut letters = Vec::new();
        for ChainLetter(kind, w) in &self.word {
            letters.push((kind.as_str(), group.reduce(w)?));
        }
        build_axis_chain(&core, &g, &letters, self.radius)
    }
}

/// `v_0 Y, u_1 A, v_1 Y, ..., u_n A, v_n Y` with `u_i = v_{i-1} h_i`,
/// `v_i = u_i k_i`, `A = axis(g)` and `Y = H ∩ B(o, r)`.
pub fn build_axis_chain(core: &CoreGraph, g: &Word, word: &[(&str, Word)], r: u32) -> Result<BufferingSequence> {
    let group = core.group();
    if word.is_empty() || !word.len().is_multiple_of(2) {
        return Err(Error::InvalidAlternatingWord(format!(
            "expected h_1 k_1 ... h_n k_n, got {} letters",
            word.len()
        )));
    }
    let base_axis = axis(group, g)?;
    for (i, (kind, w)) in word.iter().enumerate() {
        let expected = if i % 2 == 0 { "h" } else { "k" };
        if *kind != expected {
            return Err(Error::InvalidAlternatingWord(format!(
                "letter {} is '{kind}', expected '{expected}'",
                i + 1
            )));
        }
        if w.is_identity() {
            return Err(Error::InvalidAlternatingWord(format!("letter {} is trivial", i + 1)));
        }
        let ok = if expected == "h" {
            core.contains(w)
        } else {
            base_axis.param_of(&group.mul_unchecked(base_axis.conjugator(), w)).is_some()
                && group.has_infinite_order(w)
                && commutes(group, w, g)
        };
        if !ok {
            return Err(Error::InvalidAlternatingWord(format!(
                "{} is not a valid {expected}-letter",
                group.format_word(w)
            )));
        }
    }
    let y = core.elements_in_ball(r);
    let shift = |v: &Word| -> Vec<Word> { y.iter().map(|h| group.mul_unchecked(v, h)).collect() };
    let mut ys = vec![y.clone()];
    let mut axes = Vec::new();
    let mut v = group.identity();
    for pair in word.chunks(2) {
        let u = group.mul_unchecked(&v, &pair[0].1);
        axes.push(base_axis.translate(&u));
        v = group.mul_unchecked(&u, &pair[1].1);
        ys.push(shift(&v));
    }
    BufferingSequence::new(group, ys, axes)
}

fn commutes(group: &MarkedGroup, x: &Word, y: &Word) -> bool {
    group.mul_unchecked(x, y) == group.mul_unchecked(y, x)
}

/// Diameter of a finite set, exposed for reports.
pub fn set_diameter(group: &MarkedGroup, ys: &[Word]) -> u32 {
    diameter(group, ys)
}
