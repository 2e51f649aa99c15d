//! Exhaustive audits of constriction, quasi-convexity and the elementary
//! properties of projections over balls `B(o, r)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{diameter, set_distance, Axis, ProjectionMap};
use crate::error::Result;
use crate::group::{Ball, MarkedGroup, Word};
use crate::subgroup::CoreGraph;

/// Cap on geodesics enumerated between one pair of points.
pub const GEODESIC_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub x: String,
    pub y: String,
    pub projected_distance: u32,
    /// Smallest δ that would certify this pair.
    pub needed: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstrictionReport {
    pub radius: u32,
    pub delta_cs1: u32,
    pub delta_cs2: u32,
    /// Largest δ needed by any sampled (pair, geodesic), before snapping to
    /// the grid.
    pub needed_cs2: u32,
    /// Number of (pair, geodesic) samples.
    pub samples: usize,
    /// Samples with `d_A(x, y) <= delta_cs2`, where CS2 holds vacuously.
    pub vacuous: usize,
    pub violations: Vec<Violation>,
}

pub fn default_delta_grid() -> Vec<u32> {
    (0..=10).collect()
}

struct Cache<'a> {
    pm: &'a ProjectionMap,
    map: HashMap<Word, Word>,
}

impl<'a> Cache<'a> {
    fn new(pm: &'a ProjectionMap, pts: &[Word]) -> Self {
        let map = pts
            .par_iter()
            .map(|x| (x.clone(), pm.project(x)))
            .collect();
        Cache { pm, map }
    }

    fn project(&self, x: &Word) -> Word {
        match self.map.get(x) {
            Some(p) => p.clone(),
            None => self.pm.project(x),
        }
    }
}

fn dist_to_path(g: &MarkedGroup, path: &[Word], p: &Word) -> u32 {
    path.iter().map(|v| g.distance(v, p)).min().unwrap_or(0)
}

/// Smallest δ certifying CS1 and CS2 for all pairs in `B(o, r)` and all
/// geodesics between them, snapped up to `delta_grid`.
///
/// A (pair, geodesic) sample needs `min(d_A(x, y), max(d(γ, π x), d(γ, π y)))`:
/// either the projections are within δ (vacuous) or γ passes within δ of
/// both. Samples needing more than the largest grid value are violations.
pub fn constriction_audit(pm: &ProjectionMap, r: u32, delta_grid: &[u32]) -> Result<ConstrictionReport> {
    let g = pm.group();
    let pts = Ball::new(g, r).elements()?;
    let cache = Cache::new(pm, &pts);
    let delta_cs1 = pm
        .vertices_in_ball(r)
        .iter()
        .map(|v| g.distance(v, &cache.project(v)))
        .max()
        .unwrap_or(0);
    // (i, j, d_A, needed)
    let samples: Vec<(usize, usize, u32, u32)> = (0..pts.len())
        .into_par_iter()
        .map(|i| -> Result<Vec<(usize, usize, u32, u32)>> {
            let x = &pts[i];
            let px = cache.project(x);
            let mut out = Vec::new();
            for (j, y) in pts.iter().enumerate().skip(i + 1) {
                let py = cache.project(y);
                let da = g.distance(&px, &py);
                for gamma in g.geodesics(x, y, GEODESIC_CAP)? {
                    let reach = dist_to_path(g, &gamma, &px).max(dist_to_path(g, &gamma, &py));
                    out.push((i, j, da, da.min(reach)));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let needed_cs2 = samples.iter().map(|s| s.3).max().unwrap_or(0);
    let cap = delta_grid.iter().copied().max().unwrap_or(0);
    let delta_cs2 = delta_grid
        .iter()
        .copied()
        .filter(|&d| d >= needed_cs2)
        .min()
        .unwrap_or(cap);
    let violations = samples
        .iter()
        .filter(|s| s.3 > delta_cs2)
        .map(|&(i, j, da, need)| Violation {
            x: g.format_word(&pts[i]),
            y: g.format_word(&pts[j]),
            projected_distance: da,
            needed: need,
        })
        .collect();
    Ok(ConstrictionReport {
        radius: r,
        delta_cs1,
        delta_cs2,
        needed_cs2,
        samples: samples.len(),
        vacuous: samples.iter().filter(|s| s.2 <= delta_cs2).count(),
        violations,
    })
}

/// An orbit `Y = K o` for quasi-convexity checks.
#[derive(Clone, Debug)]
pub enum OrbitSpec {
    Subgroup(CoreGraph),
    /// The orbit of `⟨g⟩` for the axis element `g`.
    Cyclic(Axis),
    Whole(MarkedGroup),
}

impl OrbitSpec {
    pub fn group(&self) -> &MarkedGroup {
        match self {
            OrbitSpec::Subgroup(c) => c.group(),
            OrbitSpec::Cyclic(a) => a.group(),
            OrbitSpec::Whole(g) => g,
        }
    }

    /// Orbit points in `B(o, r)`.
    pub fn points(&self, r: u32) -> Result<Vec<Word>> {
        let g = self.group();
        Ok(match self {
            OrbitSpec::Subgroup(c) => c.elements_in_ball(r),
            OrbitSpec::Cyclic(a) => {
                let mut v = vec![g.identity()];
                for m in 1..=r as i64 {
                    for s in [m, -m] {
                        let p = g.pow(a.element(), s);
                        if g.length(&p) <= r {
                            v.push(p);
                        }
                    }
                }
                v
            }
            OrbitSpec::Whole(_) => Ball::new(g, r).elements()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiConvexity {
    pub radius: u32,
    pub eta: u32,
    pub pairs: usize,
    /// `(x, y, v)`: endpoints and the geodesic vertex realizing `eta`.
    pub witness: Option<(String, String, String)>,
}

/// Largest distance from a geodesic between two points of `Y ∩ B(o, r)` to
/// `Y`.
pub fn quasiconvexity_audit(spec: &OrbitSpec, r: u32) -> Result<QuasiConvexity> {
    let g = spec.group();
    let pts = spec.points(r)?;
    // geodesic vertices stay in B(o, r), so the nearest orbit point lies in
    // B(o, 2r)
    let wide = spec.points(2 * r)?;
    let base_dist = match spec {
        OrbitSpec::Subgroup(c) => c.base_distances(),
        _ => Vec::new(),
    };
    let dist_to_y = |v: &Word| -> u32 {
        match spec {
            OrbitSpec::Subgroup(c) => c.distance_to_orbit(v, &base_dist),
            OrbitSpec::Whole(_) => 0,
            OrbitSpec::Cyclic(_) => set_distance(g, v, &wide).unwrap_or(0),
        }
    };
    let mut eta = 0;
    let mut witness = None;
    let mut pairs = 0;
    for (i, x) in pts.iter().enumerate() {
        for y in &pts[i + 1..] {
            pairs += 1;
            for gamma in g.geodesics(x, y, GEODESIC_CAP)? {
                for v in &gamma {
                    let d = dist_to_y(v);
                    if d > eta {
                        eta = d;
                        witness = Some((g.format_word(x), g.format_word(y), g.format_word(v)));
                    }
                }
            }
        }
    }
    Ok(QuasiConvexity {
        radius: r,
        eta,
        pairs,
        witness,
    })
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    /// Neighbourhood radius for property (4).
    pub delta: u32,
    /// Powers `g^j`, `1 <= |j| <= equivariance_powers`, for property (2).
    pub equivariance_powers: i64,
    pub kappas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Longest detour spur for property (6).
    pub detour_height: u32,
    pub epsilons: Vec<u32>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            delta: 0,
            equivariance_powers: 2,
            kappas: vec![1.0, 2.0, 3.0],
            lambdas: vec![0.0, 2.0, 4.0, 6.0],
            detour_height: 3,
            epsilons: vec![0, 1, 2],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSample {
    pub kappa: f64,
    pub lambda: f64,
    /// Largest distance to `A` over the passing paths.
    pub sigma: u32,
    /// Number of sampled paths that were `(kappa, lambda)`-quasi-geodesics.
    pub paths: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZetaSample {
    pub epsilon: u32,
    pub zeta: u32,
}

/// Empirical constants, one per property. Properties (2) and (6) need an
/// axis target and (5) a second target; they are `None` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditTable {
    pub radius: u32,
    pub points: usize,
    pub pairs: usize,
    pub theta_1: u32,
    pub theta_2: Option<u32>,
    pub theta_3: u32,
    pub theta_4: u32,
    pub theta_5: Option<u32>,
    pub sigma: Vec<SigmaSample>,
    pub zeta: Vec<ZetaSample>,
}

/// `(diam(A^{+δ} ∩ γ), diam_A(γ))` for a vertex path `γ`.
pub fn property4_pair(pm: &ProjectionMap, gamma: &[Word], delta: u32) -> (u32, u32) {
    let g = pm.group();
    let near: Vec<Word> = gamma
        .iter()
        .filter(|v| pm.distance_to(v) <= delta)
        .cloned()
        .collect();
    (diameter(g, &near), pm.projected_diameter(gamma))
}

/// Target vertices sampled for `d_A(x, B)`: enough of `B` to contain the
/// projections of `B(o, r)` and of `A`'s nearby stretch.
fn target_sample(pm: &ProjectionMap, r: u32, other: &ProjectionMap) -> Vec<Word> {
    let reach = |p: &ProjectionMap| match p.axis() {
        Some(a) => p.group().length(a.conjugator()) + a.translation_length(),
        None => 0,
    };
    pm.vertices_in_ball(3 * r + 2 * (reach(pm) + reach(other)) + 2)
}

pub fn elementary_properties_audit(
    pm_a: &ProjectionMap,
    pm_b: Option<&ProjectionMap>,
    r: u32,
    opts: &AuditOptions,
) -> Result<AuditTable> {
    let g = pm_a.group();
    let pts = Ball::new(g, r).elements()?;
    let cache = Cache::new(pm_a, &pts);

    // (1): compare with a brute-force distance to A
    let wide = target_sample(pm_a, r, pm_a);
    let theta_1 = pts
        .par_iter()
        .map(|x| {
            let exact = set_distance(g, x, &wide).unwrap_or(0);
            g.distance(x, &cache.project(x)).saturating_sub(exact)
        })
        .max()
        .unwrap_or(0);

    // (2): π(g^j x) against g^j π(x)
    let theta_2 = pm_a.axis().map(|a| {
        let el = a.element();
        let mut worst = 0;
        for j in -opts.equivariance_powers..=opts.equivariance_powers {
            if j == 0 {
                continue;
            }
            let gj = g.pow(el, j);
            for x in &pts {
                let lhs = pm_a.project(&g.mul_unchecked(&gj, x));
                let rhs = g.mul_unchecked(&gj, &cache.project(x));
                worst = worst.max(g.distance(&lhs, &rhs));
            }
        }
        worst
    });

    // (3) and (4) over pairs
    let (theta_3, theta_4, pairs) = (0..pts.len())
        .into_par_iter()
        .map(|i| -> Result<(u32, u32, usize)> {
            let x = &pts[i];
            let px = cache.project(x);
            let (mut t3, mut t4, mut n) = (0u32, 0u32, 0usize);
            for y in &pts[i + 1..] {
                n += 1;
                let da = g.distance(&px, &cache.project(y));
                t3 = t3.max(da.saturating_sub(g.distance(x, y)));
                for gamma in g.geodesics(x, y, GEODESIC_CAP)? {
                    let near: Vec<Word> = gamma
                        .iter()
                        .filter(|v| g.distance(v, &cache.project(v)) <= opts.delta)
                        .cloned()
                        .collect();
                    let proj: Vec<Word> = gamma.iter().map(|v| cache.project(v)).collect();
                    t4 = t4.max(diameter(g, &near).abs_diff(diameter(g, &proj)));
                }
            }
            Ok((t3, t4, n))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2 + b.2));

    // (5) Behrstock
    let theta_5 = pm_b.map(|pm_b| {
        let b_pts = target_sample(pm_b, r, pm_a);
        let a_pts = target_sample(pm_a, r, pm_b);
        let pa_b: Vec<Word> = b_pts.iter().map(|b| pm_a.project(b)).collect();
        let pb_a: Vec<Word> = a_pts.iter().map(|a| pm_b.project(a)).collect();
        pts.par_iter()
            .map(|x| {
                let da = set_distance(g, &cache.project(x), &pa_b).unwrap_or(0);
                let db = set_distance(g, &pm_b.project(x), &pb_a).unwrap_or(0);
                da.min(db)
            })
            .max()
            .unwrap_or(0)
    });

    let sigma = match pm_a.axis() {
        Some(a) => sigma_table(pm_a, a, r, opts)?,
        None => Vec::new(),
    };
    let zeta = zeta_table(pm_a, &pts, &cache, r, opts)?;
    Ok(AuditTable {
        radius: r,
        points: pts.len(),
        pairs,
        theta_1,
        theta_2,
        theta_3,
        theta_4,
        theta_5,
        sigma,
        zeta,
    })
}

/// Detour paths: the axis segment `A(0..=r)` with a spur `p p^-1` inserted
/// at one vertex, for every `p` of length at most `detour_height`.
fn detour_paths(a: &Axis, r: u32, height: u32) -> Result<Vec<Vec<Word>>> {
    let g = a.group();
    let seg = a.vertices(0, r as i64);
    let spurs: Vec<Word> = Ball::new(g, height)
        .elements()?
        .into_iter()
        .filter(|p| !p.is_identity())
        .collect();
    let mut out = Vec::new();
    for m in 0..seg.len() {
        for p in &spurs {
            let mut path: Vec<Word> = seg[..=m].to_vec();
            let mut cur = seg[m].clone();
            let steps = g.steps_of(p);
            for &s in &steps {
                cur = g.mul_step(&cur, s);
                path.push(cur.clone());
            }
            for &s in steps.iter().rev() {
                cur = g.mul_step(&cur, s.flip());
                path.push(cur.clone());
            }
            path.extend_from_slice(&seg[m + 1..]);
            out.push(path);
        }
    }
    Ok(out)
}

/// `len(α[i..j]) <= kappa d(α_i, α_j) + lambda` for all `i < j`.
pub fn is_quasi_geodesic(g: &MarkedGroup, path: &[Word], kappa: f64, lambda: f64) -> bool {
    (0..path.len()).all(|i| {
        (i + 1..path.len())
            .all(|j| (j - i) as f64 <= kappa * g.distance(&path[i], &path[j]) as f64 + lambda + 1e-9)
    })
}

fn sigma_table(pm: &ProjectionMap, a: &Axis, r: u32, opts: &AuditOptions) -> Result<Vec<SigmaSample>> {
    let g = pm.group();
    let paths = detour_paths(a, r, opts.detour_height)?;
    let depth: Vec<u32> = paths
        .par_iter()
        .map(|p| p.iter().map(|v| pm.distance_to(v)).max().unwrap_or(0))
        .collect();
    let mut out = Vec::new();
    for &kappa in &opts.kappas {
        for &lambda in &opts.lambdas {
            let passing: Vec<usize> = (0..paths.len())
                .into_par_iter()
                .filter(|&i| is_quasi_geodesic(g, &paths[i], kappa, lambda))
                .collect();
            out.push(SigmaSample {
                kappa,
                lambda,
                sigma: passing.iter().map(|&i| depth[i]).max().unwrap_or(0),
                paths: passing.len(),
            });
        }
    }
    Ok(out)
}

/// Moves every target vertex by a word of length `epsilon` and measures how
/// far projections move.
fn zeta_table(
    pm: &ProjectionMap,
    pts: &[Word],
    cache: &Cache<'_>,
    r: u32,
    opts: &AuditOptions,
) -> Result<Vec<ZetaSample>> {
    let g = pm.group();
    let mut out = Vec::new();
    for &eps in &opts.epsilons {
        let sphere: Vec<Word> = Ball::new(g, eps)
            .elements_shortlex()?
            .into_iter()
            .filter(|w| g.length(w) == eps)
            .collect();
        let mut base = pm.vertices_in_ball(2 * r + eps + 2);
        // origin first so the set projector breaks ties towards it
        base.sort_by(|p, q| g.shortlex_cmp(p, q));
        let moved: Vec<Word> = base
            .iter()
            .enumerate()
            .map(|(i, v)| g.mul_unchecked(v, &sphere[i % sphere.len()]))
            .collect();
        let pm2 = ProjectionMap::to_set(g, moved)?;
        let zeta = pts
            .par_iter()
            .map(|x| g.distance(&cache.project(x), &pm2.project(x)))
            .max()
            .unwrap_or(0);
        out.push(ZetaSample { epsilon: eps, zeta });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionImageRecord {
    pub intersection_diameter: u32,
    pub image_diameter: u32,
    pub difference: u32,
    pub zeta: u32,
    pub flagged: bool,
}

/// Compares `diam(A^{+θ+ε1} ∩ Y^{+ε2})` with `diam_A(Y)` for the finite
/// sample `Y ∩ B(o, r)`.
pub fn intersection_image_audit(
    pm: &ProjectionMap,
    ys: &[Word],
    theta: u32,
    eps1: u32,
    eps2: u32,
    zeta: u32,
    r: u32,
) -> Result<IntersectionImageRecord> {
    let g = pm.group();
    let ys: Vec<Word> = ys.iter().filter(|y| g.length(y) <= r).cloned().collect();
    let nbhd = Ball::new(g, eps2).elements()?;
    let mut region: Vec<Word> = ys
        .iter()
        .flat_map(|y| nbhd.iter().map(move |n| g.mul_unchecked(y, n)))
        .filter(|z| pm.distance_to(z) <= theta + eps1)
        .collect();
    region.sort_by(|p, q| g.shortlex_cmp(p, q));
    region.dedup();
    let intersection_diameter = diameter(g, &region);
    let image_diameter = pm.projected_diameter(&ys);
    let difference = intersection_diameter.abs_diff(image_diameter);
    Ok(IntersectionImageRecord {
        intersection_diameter,
        image_diameter,
        difference,
        zeta,
        flagged: difference > zeta,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryRecord {
    pub diam_a_of_b: u32,
    pub diam_b_of_a: u32,
    pub difference: u32,
}

/// `|diam_A(B) - diam_B(A)|` over target vertices in `B(o, r)`.
pub fn projection_symmetry_audit(pm_a: &ProjectionMap, pm_b: &ProjectionMap, r: u32) -> SymmetryRecord {
    let diam_a_of_b = pm_a.projected_diameter(&pm_b.vertices_in_ball(r));
    let diam_b_of_a = pm_b.projected_diameter(&pm_a.vertices_in_ball(r));
    SymmetryRecord {
        diam_a_of_b,
        diam_b_of_a,
        difference: diam_a_of_b.abs_diff(diam_b_of_a),
    }
}
