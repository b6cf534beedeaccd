//! Empirical inequality suites over the builtin maps.
//!
//! Each case fits the smallest constant that makes an inequality hold on a
//! sample, once at a coarse and once at a refined resolution. A case passes
//! when both fits are finite and agree within [`STABILITY`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carleson::{carleson_norm, ratio_measure_cached, AfCache, Quadrature};
use crate::functionals::{area_integral, cone_af_sup_lpsi, hl_maximal, AreaMode, Settings, Verdict};
use crate::growth::{doubling_report, inverse_doubling_report, DoublingGrid, DoublingVerdict, GrowthFunction};
use crate::modulus::CheckStatus as Status;
use crate::point::{frame, Point};
use crate::qcmaps::{MapKind, QcMap};
use crate::quad::GaussLegendre;
use crate::sphere::{ball_integral, make_grid, Cap, Region};

/// Largest relative drift of a fitted constant under one refinement.
pub const STABILITY: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuiteError {
    #[error("unknown suite '{0}' (expected lemma1, lemma2, lemma3, lemma4, lemma6, lemma7, lemma8 or thm4)")]
    Unknown(String),
    #[error("suite {suite} failed to evaluate {map}: {message}")]
    Evaluation { suite: SuiteId, map: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteId {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Lemma6,
    Lemma7,
    Lemma8,
    Thm4,
}

impl SuiteId {
    pub const ALL: [SuiteId; 8] = [
        SuiteId::Lemma1,
        SuiteId::Lemma2,
        SuiteId::Lemma3,
        SuiteId::Lemma4,
        SuiteId::Lemma6,
        SuiteId::Lemma7,
        SuiteId::Lemma8,
        SuiteId::Thm4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteId::Lemma1 => "lemma1",
            SuiteId::Lemma2 => "lemma2",
            SuiteId::Lemma3 => "lemma3",
            SuiteId::Lemma4 => "lemma4",
            SuiteId::Lemma6 => "lemma6",
            SuiteId::Lemma7 => "lemma7",
            SuiteId::Lemma8 => "lemma8",
            SuiteId::Thm4 => "thm4",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SuiteError> {
        SuiteId::ALL.iter().copied().find(|id| id.as_str() == s).ok_or_else(|| SuiteError::Unknown(s.into()))
    }
}

impl std::fmt::Display for SuiteId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub map: String,
    pub detail: String,
    pub coarse: f64,
    pub fine: f64,
    pub drift: f64,
    pub status: Status,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteId,
    pub dim: usize,
    pub cases: Vec<SuiteCase>,
    pub status: Status,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub dim: usize,
    pub seed: u64,
    /// Random interior points for the pointwise lemmas.
    pub samples: usize,
}

impl SuiteConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        SuiteConfig { dim, seed, samples: if dim == 2 { 1000 } else { 300 } }
    }
}

fn drift(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn case(map: &str, detail: String, coarse: f64, fine: f64, extra_ok: bool, notes: Vec<String>) -> SuiteCase {
    let d = drift(coarse, fine);
    let status = if !coarse.is_finite() || !fine.is_finite() || !extra_ok || d > STABILITY {
        Status::Fail
    } else {
        Status::Pass
    };
    SuiteCase { map: map.into(), detail, coarse, fine, drift: d, status, notes }
}

/// Random interior points with `1 - |x|` log-uniform in `[1e-3, 1]`.
fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir = loop {
                let mut c = [0.0; 3];
                for v in c.iter_mut().take(dim) {
                    *v = rng.gen_range(-1.0..1.0);
                }
                let p = Point(c);
                let n = p.norm();
                if n > 1e-3 && n <= 1.0 {
                    break p * (1.0 / n);
                }
            };
            let gap = 10f64.powf(-3.0 * rng.gen::<f64>());
            dir * (1.0 - gap).max(0.0)
        })
        .collect()
}

/// Quadrature nodes on the cap `S_x`, weights summing to its measure.
fn cap_nodes(dim: usize, cap: &Cap, m: usize) -> Vec<(Point, f64)> {
    let c = cap.center.normalized();
    let a = cap.angular_radius;
    let gl = GaussLegendre::new(m);
    let (u, v) = frame(dim, c);
    if dim == 2 {
        return gl.on(-a, a).map(|(t, w)| (c * t.cos() + u * t.sin(), w)).collect();
    }
    let az = 2 * m;
    let mut out = Vec::new();
    for (t, w) in gl.on(0.0, a) {
        for j in 0..az {
            let b = 2.0 * PI * (j as f64 + 0.5) / az as f64;
            out.push((c * t.cos() + (u * b.cos() + v * b.sin()) * t.sin(), w * t.sin() * 2.0 * PI / az as f64));
        }
    }
    out
}

fn cap_of(x: &Point) -> Cap {
    let c = Cap::of(x);
    if x.norm() == 0.0 {
        Cap { center: Point::e1(), angular_radius: c.angular_radius }
    } else {
        c
    }
}

/// Builtins moved off the origin, as required where `|f|` must stay positive.
pub fn nonvanishing_builtins(dim: usize) -> Vec<QcMap> {
    let shift = if dim == 2 { Point::new2(2.0, 0.0) } else { Point::new3(2.0, 0.0, 0.0) };
    QcMap::builtins(dim)
        .into_iter()
        .map(|f| {
            // log(1+z) has real part below log 2, so shifting left keeps it off 0
            let s = if matches!(f.kind, MapKind::Log1p) { shift * -1.0 } else { shift };
            QcMap::translate(s, f).expect("valid translation")
        })
        .collect()
}

fn eval_err(suite: SuiteId, f: &QcMap, e: impl ToString) -> SuiteError {
    SuiteError::Evaluation { suite, map: f.name.clone(), message: e.to_string() }
}

fn lemma1(cfg: &SuiteConfig) -> Result<Vec<SuiteCase>, SuiteError> {
    let pts = sample_points(cfg.dim, cfg.samples, cfg.seed);
    let mut cases = Vec::new();
    for f in QcMap::builtins(cfg.dim) {
        let fit = |samples: usize| -> Result<(f64, f64, f64), SuiteError> {
            let ratios: Result<Vec<f64>, SuiteError> = pts
                .par_iter()
                .map(|x| {
                    let d = f.boundary_distance(x).map_err(|e| eval_err(SuiteId::Lemma1, &f, e))?.value;
                    Ok(f.image_diameter(x, samples) / d)
                })
                .collect();
            let r = ratios?;
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.iter().cloned().fold(0.0, f64::max);
            Ok((hi.max(1.0 / lo), lo, hi))
        };
        let (c0, _, _) = fit(32)?;
        let (c1, lo, hi) = fit(96)?;
        cases.push(case(
            &f.name,
            format!("diam f(B_x) / d(f(x), boundary) in [{lo:.4}, {hi:.4}]"),
            c0,
            c1,
            lo > 0.0,
            vec![],
        ));
    }
    Ok(cases)
}

fn lemma4(cfg: &SuiteConfig) -> Result<Vec<SuiteCase>, SuiteError> {
    let pts = sample_points(cfg.dim, cfg.samples, cfg.seed ^ 4);
    let mut cases = Vec::new();
    for f in QcMap::builtins(cfg.dim) {
        let fit = |budget: usize| -> Result<(f64, f64), SuiteError> {
            let vals: Result<Vec<(f64, f64)>, SuiteError> = pts
                .par_iter()
                .map(|x| {
                    let d = f.boundary_distance(x).map_err(|e| eval_err(SuiteId::Lemma4, &f, e))?.value;
                    let a = f.avg_derivative(x, budget, cfg.seed).map_err(|e| eval_err(SuiteId::Lemma4, &f, e))?;
                    let ratio = a.value * (1.0 - x.norm()) / d;
                    // conformal maps: a_f equals |f'| by the mean value property
                    let dev = match f.conformal_factor(x) {
                        Some(c) => ((a.value / c - 1.0).abs() - 3.0 * a.stderr / a.value).max(0.0),
                        None => 0.0,
                    };
                    Ok((ratio, dev))
                })
                .collect();
            let v = vals?;
            let lo = v.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = v.iter().map(|p| p.0).fold(0.0, f64::max);
            let dev = v.iter().map(|p| p.1).fold(0.0, f64::max);
            Ok((hi.max(1.0 / lo), dev))
        };
        let (c0, _) = fit(64)?;
        let (c1, dev) = fit(256)?;
        let conformal_ok = dev <= 1e-9;
        let mut notes = vec![];
        if f.is_conformal() {
            notes.push(format!("a_f vs |f'| excess beyond 3 stderr: {dev:.3e}"));
        }
        cases.push(case(&f.name, "a_f(x)(1-|x|) / d(f(x), boundary)".into(), c0, c1, conformal_ok, notes));
    }
    Ok(cases)
}

/// Shared driver of the two cap-event lemmas: fits the smallest `C` with
/// `sigma(E_M(x)) <= C sigma(S_x) rate(M)` over sampled `x` and `M`.
fn cap_event_suite(
    cfg: &SuiteConfig,
    suite: SuiteId,
    maps: Vec<QcMap>,
    event: CapEvent,
    rate: fn(f64, usize) -> f64,
) -> Result<Vec<SuiteCase>, SuiteError> {
    let count = (cfg.samples / 5).max(20);
    let pts = sample_points(cfg.dim, count, cfg.seed ^ 2);
    let ms = [2.0, 4.0, 8.0, 16.0];
    let mut cases = Vec::new();
    for f in maps {
        let fit = |m: usize| -> Result<f64, SuiteError> {
            let per_x: Result<Vec<f64>, SuiteError> = pts
                .par_iter()
                .map(|x| {
                    let cap = cap_of(x);
                    let nodes = cap_nodes(cfg.dim, &cap, m);
                    let total: f64 = nodes.iter().map(|n| n.1).sum();
                    let limits: Vec<Point> = nodes.iter().map(|(w, _)| f.radial_limit(w, None).value).collect();
                    let fx = f.eval(x);
                    let d = match event {
                        CapEvent::LargeDeviation => f.boundary_distance(x).map_err(|e| eval_err(suite, &f, e))?.value,
                        CapEvent::SmallValue => 0.0,
                    };
                    let mut worst = 0.0f64;
                    for mm in ms {
                        let mut hit = 0.0;
                        for ((_, w), lim) in nodes.iter().zip(&limits) {
                            let hit_here = match event {
                                CapEvent::LargeDeviation => lim.dist(&fx) > mm * d,
                                CapEvent::SmallValue => lim.norm() < fx.norm() / mm,
                            };
                            if hit_here {
                                hit += w;
                            }
                        }
                        worst = worst.max(hit / total / rate(mm, cfg.dim));
                    }
                    Ok(worst)
                })
                .collect();
            Ok(per_x?.into_iter().fold(0.0, f64::max))
        };
        // the integrand is an indicator, so node error decays only like 1/m
        let (m0, m1) = if cfg.dim == 2 { (256, 512) } else { (16, 24) };
        let c0 = fit(m0)?;
        let c1 = fit(m1)?;
        cases.push(case(&f.name, format!("M in {ms:?}"), c0, c1, true, vec![]));
    }
    Ok(cases)
}

#[derive(Clone, Copy)]
enum CapEvent {
    /// `|f(omega) - f(x)| > M d(f(x), boundary)`
    LargeDeviation,
    /// `|f(omega)| < |f(x)| / M`
    SmallValue,
}

fn lemma6(cfg: &SuiteConfig) -> Result<Vec<SuiteCase>, SuiteError> {
    let n = cfg.dim;
    let q = n as i32;
    let region = Region::ball(1.0 - 0.5f64.powi(8));
    let mut cases = Vec::new();
    let mut ps: Vec<i32> = vec![1, 2];
    if !ps.contains(&q) {
        ps.push(q);
    }
    for f in QcMap::builtins(n) {
        let focus = f.singular_directions().first().copied();
        for &p in &ps {
            for weighted in [false, true] {
                if weighted && p == 1 {
                    continue;
                }
                let u = move |x: &Point| if weighted { (1.0 - x.norm()).powi(p - 1) } else { 1.0 };
                let fit = |budget: usize| -> Result<f64, SuiteError> {
                    let af = |x: &Point| f.avg_derivative(x, budget.max(64), cfg.seed).map(|s| s.value).unwrap_or(f64::NAN);
                    let lhs = ball_integral(n, |x| af(x).powi(p) * u(x), region, budget, focus)
                        .map_err(|e| eval_err(SuiteId::Lemma6, &f, e))?;
                    let rhs = ball_integral(
                        n,
                        |x| {
                            let df = f.operator_norm(x).unwrap_or(f64::NAN);
                            af(x).powi(p - q) * df.powi(q) * u(x)
                        },
                        region,
                        budget,
                        focus,
                    )
                    .map_err(|e| eval_err(SuiteId::Lemma6, &f, e))?;
                    let r = lhs.value / rhs.value;
                    Ok(r.max(1.0 / r))
                };
                let (b0, b1) = if n == 2 { (64, 128) } else { (16, 24) };
                let c0 = fit(b0)?;
                let c1 = fit(b1)?;
                let w = if weighted { format!("(1-|x|)^{}", p - 1) } else { "1".into() };
                let mut notes = vec![];
                if p < q {
                    notes.push("p < q lies outside the lemma's range; reported as a comparison".into());
                }
                cases.push(case(&f.name, format!("p={p}, q={q}, u={w}"), c0, c1, true, notes));
            }
        }
    }
    Ok(cases)
}

fn both_doubling(psi: &GrowthFunction) -> bool {
    let g = DoublingGrid::default();
    matches!(doubling_report(psi, g), Ok(r) if r.verdict == DoublingVerdict::Doubling)
        && matches!(inverse_doubling_report(psi, g), Ok(r) if r.verdict == DoublingVerdict::Doubling)
}

fn suite_powers() -> Vec<GrowthFunction> {
    [0.5, 1.0, 2.0].iter().map(|p| GrowthFunction::power(*p).unwrap()).collect()
}

fn lemma7(cfg: &SuiteConfig) -> Result<Vec<SuiteCase>, SuiteError> {
    let n = cfg.dim;
    // the quadrature stays fixed; only the sample of ball centres is refined
    let q = if n == 2 {
        Quadrature { radial_points: 6, angular_points: 12, azimuth: 12, ..Quadrature::for_dim(n) }
    } else {
        // the densities are smooth in 3D; finer rules agree to five digits
        Quadrature { radial_points: 4, angular_points: 8, azimuth: 8, ..Quadrature::for_dim(n) }
    };
    let (coarse, fine) = if n == 2 { (16, 32) } else { (8, 10) };
    let mut psis = suite_powers();
    psis.push(GrowthFunction::counterexample1());
    let mut cases = Vec::new();
    for f in nonvanishing_builtins(n) {
        let mode = if f.is_conformal() { AreaMode::Analytic } else { AreaMode::Averaged };
        let cache = AfCache::default();
        for psi in &psis {
            let mu = ratio_measure_cached(&f, psi, mode, 64, cfg.seed, cache.clone()).map_err(|e| eval_err(SuiteId::Lemma7, &f, e))?;
            let run = |res: usize| {
                let grid = make_grid(n, res).map_err(|e| eval_err(SuiteId::Lemma7, &f, e))?;
                carleson_norm(&mu, &grid, &q).map_err(|e| eval_err(SuiteId::Lemma7, &f, e))
            };
            let a = run(coarse)?;
            let b = run(fine)?;
            let binding = both_doubling(psi);
            let mut c = case(
                &f.name,
                format!("psi={}, Carleson norm of the ratio measure", psi.name),
                a.norm_estimate,
                b.norm_estimate,
                !binding || b.stable,
                b.flags.clone(),
            );
            if binding && c.drift > 0.05 {
                c.status = Status::Fail;
                c.notes.push("norm moved more than 5% under refinement".into());
            }
            if !binding {
                // hypothesis of the lemma fails: reported, never asserted
                c.status = Status::Pass;
                c.notes.push("psi or its inverse is not doubling; reported only".into());
            }
            cases.push(c);
        }
    }
    Ok(cases)
}

fn lemma8(cfg: &SuiteConfig) -> Result<Vec<SuiteCase>, SuiteError> {
    let n = cfg.dim;
    // t^(1/2) converges like eps^(1/2); depth 20 is the first to settle it
    let coarse = Settings { depth: 20, sphere_resolution: if n == 2 { 128 } else { 12 }, ..Settings::for_dim(n) };
    let fine = Settings { depth: 24, sphere_resolution: if n == 2 { 256 } else { 16 }, ..Settings::for_dim(n) };
    let mut cases = Vec::new();
    for f in QcMap::builtins(n) {
        for psi in suite_powers() {
            let run = |s: &Settings| -> Result<(Verdict, Verdict, f64), SuiteError> {
                let a = area_integral(&f, &psi, AreaMode::Averaged, s).map_err(|e| eval_err(SuiteId::Lemma8, &f, e))?;
                let c = cone_af_sup_lpsi(&f, &psi, s).map_err(|e| eval_err(SuiteId::Lemma8, &f, e))?;
                let ratio = c.value.unwrap_or(f64::INFINITY) / a.value.unwrap_or(f64::NAN);
                Ok((a.verdict, c.verdict, ratio))
            };
            let (a0, c0, r0) = run(&coarse)?;
            let (a1, c1, r1) = run(&fine)?;
            let implication = a1 != Verdict::Finite || c1 == Verdict::Finite;
            let mut k = case(
                &f.name,
                format!("psi={}, cone sup integral / area integral (area {a1:?}, cone {c1:?})", psi.name),
                r0,
                r1,
                implication,
                vec![],
            );
            if a0 != a1 || c0 != c1 {
                k.notes.push("verdicts changed under refinement".into());
            }
            if a1 != Verdict::Finite {
                k.status = if a1 == Verdict::Inconclusive { Status::Inconclusive } else { Status::Pass };
                k.notes.push("area integral not finite; implication vacuous".into());
            }
            cases.push(k);
        }
    }
    Ok(cases)
}

fn thm4(cfg: &SuiteConfig) -> Result<Vec<SuiteCase>, SuiteError> {
    let n = cfg.dim;
    let deltas = [1.0, 0.25, 1.0 / 16.0];
    let mut cases = Vec::new();
    for f in nonvanishing_builtins(n) {
        for psi in suite_powers() {
            let fit = |res: usize| -> Result<f64, SuiteError> {
                let grid = make_grid(n, res).map_err(|e| eval_err(SuiteId::Thm4, &f, e))?;
                let levels = 12;
                let data: Vec<(f64, f64)> = grid
                    .nodes
                    .par_iter()
                    .map(|w| (f.radial_limit(w, None).value.norm(), f.nontangential_max(w, 16)))
                    .collect();
                let mut c1 = 0.0f64;
                for d in deltas {
                    // phi = psi^(1/2)
                    let phi: Vec<f64> = data.iter().map(|(b, _)| psi.value(d * b).sqrt()).collect();
                    let m = hl_maximal(&phi, &grid, levels);
                    for ((_, star), mv) in data.iter().zip(&m) {
                        let y = 2.0 * mv;
                        let inv = psi.inverse(y * y).map_err(|e| eval_err(SuiteId::Thm4, &f, e))?;
                        c1 = c1.max(d * star / inv);
                    }
                }
                Ok(c1)
            };
            let (r0, r1) = if n == 2 { (64, 128) } else { (8, 12) };
            let c0 = fit(r0)?;
            let c1 = fit(r1)?;
            let pow2 = 2f64.powi(c1.max(1.0).log2().ceil() as i32);
            cases.push(case(
                &f.name,
                format!("psi={}, fitted C1 (power of two {pow2})", psi.name),
                c0,
                c1,
                c1 > 0.0,
                vec![],
            ));
        }
    }
    Ok(cases)
}

pub fn run_suite(id: SuiteId, cfg: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    let cases = match id {
        SuiteId::Lemma1 => lemma1(cfg)?,
        SuiteId::Lemma2 => cap_event_suite(cfg, id, QcMap::builtins(cfg.dim), CapEvent::LargeDeviation, |m, n| m.ln().powi(1 - n as i32))?,
        SuiteId::Lemma3 => cap_event_suite(cfg, id, nonvanishing_builtins(cfg.dim), CapEvent::SmallValue, |m, _| 1.0 / m.ln())?,
        SuiteId::Lemma4 => lemma4(cfg)?,
        SuiteId::Lemma6 => lemma6(cfg)?,
        SuiteId::Lemma7 => lemma7(cfg)?,
        SuiteId::Lemma8 => lemma8(cfg)?,
        SuiteId::Thm4 => thm4(cfg)?,
    };
    let status = if cases.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if cases.iter().any(|c| c.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(SuiteReport { suite: id, dim: cfg.dim, cases, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dim: usize) -> SuiteConfig {
        SuiteConfig { dim, seed: 7, samples: 100 }
    }

    #[test]
    fn parse_and_names() {
        for id in SuiteId::ALL {
            assert_eq!(SuiteId::parse(id.as_str()).unwrap(), id);
        }
        assert!(SuiteId::parse("lemma5").is_err());
    }

    #[test]
    fn sample_points_are_inside_and_reproducible() {
        let a = sample_points(3, 200, 1);
        assert_eq!(a, sample_points(3, 200, 1));
        assert!(a.iter().all(|p| p.norm() < 1.0 && p.norm() >= 0.0));
        assert!(a.iter().any(|p| p.norm() > 0.99));
    }

    #[test]
    fn cap_nodes_integrate_cap_measure() {
        for dim in [2, 3] {
            let cap = Cap { center: Point::e1(), angular_radius: 0.3 };
            let total: f64 = cap_nodes(dim, &cap, 12).iter().map(|n| n.1).sum();
            assert!((total - cap.measure(dim)).abs() < 1e-10 * cap.measure(dim));
        }
    }

    #[test]
    fn nonvanishing_builtins_omit_zero() {
        for dim in [2, 3] {
            for f in nonvanishing_builtins(dim) {
                assert!(f.omits_origin(), "{}", f.name);
            }
        }
    }

    #[test]
    fn identity_suites_give_expected_brackets() {
        let cfg = small(2);
        let r = run_suite(SuiteId::Lemma4, &cfg).unwrap();
        let id = &r.cases[0];
        assert_eq!(id.map, "identity");
        // a_f = 1 and d = 1-|x| give ratio exactly one
        assert!((id.fine - 1.0).abs() < 1e-12);
        let r = run_suite(SuiteId::Thm4, &cfg).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.cases);
        assert!(r.cases[0].fine <= 1.0 + 1e-9, "{}", r.cases[0].fine);
    }

    #[test]
    fn pointwise_suites_pass_in_the_plane() {
        let cfg = small(2);
        for id in [SuiteId::Lemma1, SuiteId::Lemma2, SuiteId::Lemma3] {
            let r = run_suite(id, &cfg).unwrap();
            assert_eq!(r.status, Status::Pass, "{id}: {:?}", r.cases);
        }
    }
}
