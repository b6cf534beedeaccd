//! Carleson measures on the ball: norm estimates and embedding checks.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::AreaMode;
use crate::growth::GrowthFunction;
use crate::point::{frame, Point};
use crate::qcmaps::{QcError, QcMap};
use crate::quad::GaussLegendre;
use crate::sphere::{make_grid, radial_nodes, SphereGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarlesonError {
    #[error("{0} takes the value 0 in the ball; compose with a translation first")]
    VanishingMap(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("negative mass {0}")]
    NegativeMass(f64),
    #[error(transparent)]
    Map(#[from] QcError),
}

pub type Density = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum MeasureKind {
    PointMasses(Vec<(Point, f64)>),
    Density(Density),
}

/// A positive measure on the unit ball.
#[derive(Clone)]
pub struct BallMeasure {
    pub dim: usize,
    pub label: String,
    pub kind: MeasureKind,
    /// Boundary directions where a density concentrates; planar ball masses
    /// grade their angular panels towards them.
    pub focus: Vec<Point>,
}

impl fmt::Debug for BallMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            MeasureKind::PointMasses(m) => format!("{} point masses", m.len()),
            MeasureKind::Density(_) => "density".to_string(),
        };
        write!(f, "BallMeasure({}, n={}, {kind})", self.label, self.dim)
    }
}

impl BallMeasure {
    pub fn point_masses(dim: usize, masses: Vec<(Point, f64)>) -> Result<Self, CarlesonError> {
        if let Some((_, m)) = masses.iter().find(|(_, m)| !(*m >= 0.0)) {
            return Err(CarlesonError::NegativeMass(*m));
        }
        Ok(BallMeasure { dim, label: "point-masses".into(), kind: MeasureKind::PointMasses(masses), focus: Vec::new() })
    }

    pub fn density(dim: usize, label: &str, g: Density) -> Self {
        BallMeasure { dim, label: label.into(), kind: MeasureKind::Density(g), focus: Vec::new() }
    }

    pub fn with_focus(mut self, focus: Vec<Point>) -> Self {
        self.focus = focus.iter().map(|p| p.normalized()).collect();
        self
    }

    pub fn lebesgue(dim: usize) -> Self {
        Self::density(dim, "lebesgue", Arc::new(|_| 1.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            MeasureKind::PointMasses(m) => MeasureKind::PointMasses(m.iter().map(|(x, w)| (*x, w * c)).collect()),
            MeasureKind::Density(g) => {
                let g = g.clone();
                MeasureKind::Density(Arc::new(move |x| c * g(x)))
            }
        };
        BallMeasure { dim: self.dim, label: format!("{c}*{}", self.label), kind, focus: self.focus.clone() }
    }

    pub fn total_mass(&self, q: &Quadrature) -> f64 {
        self.integrate(|_| 1.0, q, q.truncations[0]).0
    }

    /// `int h dmu` with densities cut off at `|x| <= 1 - eta`; also returns the
    /// number of non-finite samples.
    pub fn integrate<H: Fn(&Point) -> f64 + Sync>(&self, h: H, q: &Quadrature, eta: f64) -> (f64, usize) {
        match &self.kind {
            MeasureKind::PointMasses(m) => {
                let v: f64 = m.iter().map(|(x, w)| if *w == 0.0 { 0.0 } else { w * h(x) }).sum();
                (v, usize::from(!v.is_finite()))
            }
            MeasureKind::Density(g) => {
                let grid = match make_grid(self.dim, q.sphere_resolution) {
                    Ok(g) => g,
                    Err(_) => return (f64::NAN, 1),
                };
                let gl = GaussLegendre::new(q.radial_points);
                let dim = self.dim as i32;
                let rings: Vec<(f64, usize)> = radial_nodes(0.0, 1.0 - eta, &gl)
                    .par_iter()
                    .map(|(s, ws)| {
                        let mut acc = 0.0;
                        let mut bad = 0;
                        for (om, w) in grid.nodes.iter().zip(&grid.weights) {
                            let x = *om * *s;
                            let v = g(&x) * h(&x);
                            if v.is_finite() {
                                acc += w * v;
                            } else {
                                bad += 1;
                            }
                        }
                        (acc * ws * s.powi(dim - 1), bad)
                    })
                    .collect();
                rings.iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
            }
        }
    }

    /// `mu(B(omega, r) cap B^n)` for the closed ball `|x - omega| <= r`.
    /// Densities are integrated shell by shell over the spherical cap
    /// `{theta : |s theta - omega| <= r}` of each radius `s`.
    pub fn ball_mass(&self, omega: &Point, r: f64, q: &Quadrature, eta: f64) -> (f64, usize) {
        match &self.kind {
            MeasureKind::PointMasses(m) => {
                let v = m.iter().filter(|(x, _)| x.dist(omega) <= r * (1.0 + 1e-12)).map(|(_, w)| w).sum();
                (v, 0)
            }
            MeasureKind::Density(_) => {
                let gl = GaussLegendre::new(q.radial_points);
                self.shell_mass(omega, r, q, shell_nodes(r, 1.0 - eta, &gl))
            }
        }
    }

    /// `ball_mass` for every truncation in `etas` (decreasing), reusing the
    /// shells of the previous truncation whenever they nest exactly.
    pub fn ball_masses(&self, omega: &Point, r: f64, q: &Quadrature, etas: &[f64]) -> Vec<(f64, usize)> {
        if matches!(self.kind, MeasureKind::PointMasses(_)) {
            return etas.iter().map(|e| self.ball_mass(omega, r, q, *e)).collect();
        }
        let gl = GaussLegendre::new(q.radial_points);
        let mut out: Vec<(f64, usize)> = Vec::with_capacity(etas.len());
        let mut prev: Option<f64> = None;
        for &eta in etas {
            let hi = 1.0 - eta;
            let m = match prev {
                Some(lo) if lo <= hi && lo > graded_end(r) && is_dyadic_edge(lo) => {
                    let (m0, b0) = *out.last().unwrap();
                    let (m1, b1) = self.shell_mass(omega, r, q, radial_nodes(lo, hi, &gl));
                    (m0 + m1, b0 + b1)
                }
                _ => self.shell_mass(omega, r, q, shell_nodes(r, hi, &gl)),
            };
            out.push(m);
            prev = Some(hi);
        }
        out
    }

    fn shell_mass(&self, omega: &Point, r: f64, q: &Quadrature, nodes: Vec<(f64, f64)>) -> (f64, usize) {
        match &self.kind {
            MeasureKind::PointMasses(_) => unreachable!("point masses have no density"),
            MeasureKind::Density(g) => {
                let dim = self.dim;
                let ang = GaussLegendre::new(q.angular_points);
                let (u, v) = frame(dim, *omega);
                let mut total = 0.0;
                let mut bad = 0;
                for (s, ws) in nodes {
                    let c = ((s * s + 1.0 - r * r) / (2.0 * s)).clamp(-1.0, 1.0);
                    let phi = c.acos();
                    if phi <= 0.0 {
                        continue;
                    }
                    let mut shell = 0.0;
                    if dim == 2 {
                        let panels = angular_panels(omega, &self.focus, phi, 1.0 - s);
                        for (t, wt) in panels.windows(2).flat_map(|w| ang.on(w[0], w[1])) {
                            let x = (*omega * t.cos() + u * t.sin()) * s;
                            let val = g(&x);
                            if val.is_finite() {
                                shell += wt * val;
                            } else {
                                bad += 1;
                            }
                        }
                    } else {
                        let az = q.azimuth;
                        for (t, wt) in ang.on(0.0, phi) {
                            for j in 0..az {
                                let a = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / az as f64;
                                let dir = *omega * t.cos() + (u * a.cos() + v * a.sin()) * t.sin();
                                let val = g(&(dir * s));
                                if val.is_finite() {
                                    shell += wt * t.sin() * 2.0 * std::f64::consts::PI / az as f64 * val;
                                } else {
                                    bad += 1;
                                }
                            }
                        }
                    }
                    total += ws * s.powi(dim as i32 - 1) * shell;
                }
                (total, bad)
            }
        }
    }
}

/// Breakpoints of `[-phi, phi]` (angles from `omega`), graded geometrically
/// from width `scale` towards each focus direction, clamped into the interval.
fn angular_panels(omega: &Point, focus: &[Point], phi: f64, scale: f64) -> Vec<f64> {
    let mut cuts = vec![-phi, phi];
    let h0 = scale.max(1e-15);
    for d in focus {
        let cross = omega[0] * d[1] - omega[1] * d[0];
        let t = cross.atan2(omega.dot(d));
        // the angle is periodic: grade towards every nearest copy
        let copies = [t, t - 2.0 * PI, t + 2.0 * PI];
        let gap = |c: f64| (c - c.clamp(-phi, phi)).abs();
        let nearest = copies.iter().map(|c| gap(*c)).fold(f64::INFINITY, f64::min);
        for c in copies.into_iter().filter(|c| gap(*c) <= nearest + 1e-12) {
            let tf = c.clamp(-phi, phi);
            cuts.push(tf);
            let mut h = h0;
            while h < 2.0 * phi {
                cuts.push(tf - h);
                cuts.push(tf + h);
                h *= 2.0;
            }
        }
    }
    cuts.retain(|t| *t >= -phi && *t <= phi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    cuts
}

/// Outer end of the square-root graded part of [`shell_nodes`].
fn graded_end(r: f64) -> f64 {
    let start = if r > 1.0 { r - 1.0 } else { 1.0 - r };
    start + 0.5 * (1.0 - start)
}

/// `1 - s` is a power of two, a panel edge of [`radial_nodes`].
fn is_dyadic_edge(s: f64) -> bool {
    let d = 1.0 - s;
    d > 0.0 && d.log2().fract() == 0.0
}

/// Radial nodes for `mu(B(omega, r))`: the shell cap opens like a square
/// root at `s = |1 - r|`, so that end gets a quadratic substitution.
fn shell_nodes(r: f64, hi: f64, gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let start = if r > 1.0 {
        let a = (r - 1.0).min(hi);
        out.extend(radial_nodes(0.0, a, gl));
        a
    } else {
        1.0 - r
    };
    if start >= hi {
        return out;
    }
    let m = graded_end(r).min(hi);
    let len = m - start;
    for p in 0..4 {
        for (t, wt) in gl.on(p as f64 / 4.0, (p + 1) as f64 / 4.0) {
            out.push((start + len * t * t, wt * 2.0 * t * len));
        }
    }
    out.extend(radial_nodes(m, hi, gl));
    out
}

/// Sampling and quadrature parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Resolution of the sphere grid of ball centres (and of density integrals).
    pub sphere_resolution: usize,
    /// Radii `2^-j`, `j = -1..=max_level`.
    pub max_level: u32,
    pub radial_points: usize,
    pub angular_points: usize,
    pub azimuth: usize,
    /// Density cutoffs `eta`; the first is the reported one.
    pub truncations: Vec<f64>,
}

impl Quadrature {
    pub fn for_dim(dim: usize) -> Self {
        Quadrature {
            sphere_resolution: if dim == 2 { 64 } else { 8 },
            max_level: 12,
            radial_points: 6,
            angular_points: 12,
            azimuth: 12,
            truncations: vec![0.5f64.powi(25), 0.5f64.powi(50)],
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (-1..=self.max_level as i32).map(|j| 0.5f64.powi(j)).collect()
    }

    fn validate(&self) -> Result<(), CarlesonError> {
        if self.sphere_resolution < 8 || self.radial_points == 0 || self.angular_points == 0 || self.azimuth < 4 {
            return Err(CarlesonError::Params("resolutions below minimum".into()));
        }
        // 1 - eta must stay below 1 in floating point
        if self.truncations.is_empty() || self.truncations.iter().any(|e| !(*e >= f64::EPSILON && *e < 1.0)) {
            return Err(CarlesonError::Params("truncations must lie in [2^-52, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub omega: Point,
    pub r: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlesonEstimate {
    pub measure: String,
    pub dim: usize,
    /// `sup mu(B(omega, r) cap B^n) / r^{n-1}` over the samples at the first cutoff.
    pub norm_estimate: f64,
    pub witness: Witness,
    /// Largest ratio per radius, `(r, ratio)`.
    pub by_radius: Vec<(f64, f64)>,
    /// Norm estimate per density cutoff `(eta, norm)`.
    pub by_truncation: Vec<(f64, f64)>,
    pub balls: usize,
    pub unreliable_balls: usize,
    /// Stable under the cutoff and not growing along shrinking radii.
    pub stable: bool,
    pub flags: Vec<String>,
}

/// Estimates the Carleson norm over balls centred at grid nodes with radii
/// `2^1, ..., 2^-max_level`.
pub fn carleson_norm(mu: &BallMeasure, grid: &SphereGrid, q: &Quadrature) -> Result<CarlesonEstimate, CarlesonError> {
    q.validate()?;
    let radii = q.radii();
    let dim = mu.dim;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..radii.len()).map(move |j| (i, j))).collect();
    let all: Vec<Vec<(f64, usize)>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let scale = radii[j].powi(dim as i32 - 1);
            mu.ball_masses(&grid.nodes[i], radii[j], q, &q.truncations).into_iter().map(|(m, bad)| (m / scale, bad)).collect()
        })
        .collect();
    let by_truncation: Vec<(f64, f64)> =
        q.truncations.iter().enumerate().map(|(t, eta)| (*eta, all.iter().map(|v| v[t].0).fold(0.0, f64::max))).collect();
    let vals: Vec<(f64, usize)> = all.iter().map(|v| v[0]).collect();
    let unreliable = vals.iter().filter(|v| v.1 > 0).count();
    let mut best = (0usize, 0.0f64);
    for (k, v) in vals.iter().enumerate() {
        if v.0 > best.1 {
            best = (k, v.0);
        }
    }
    let (bi, bj) = jobs[best.0];
    let by_radius: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .map(|(j, r)| (*r, (0..grid.len()).map(|i| vals[i * radii.len() + j].0).fold(0.0, f64::max)))
        .collect();

    let mut flags = Vec::new();
    let base = by_truncation[0].1;
    let truncation_stable = by_truncation.iter().all(|(_, v)| (v - base).abs() <= 0.05 * base.max(f64::MIN_POSITIVE));
    if !truncation_stable {
        flags.push("norm grows as the density cutoff shrinks: not a Carleson measure at this resolution".into());
    }
    // growth along the three smallest radii
    let tail: Vec<f64> = by_radius.iter().rev().take(3).map(|p| p.1).collect();
    let growing = tail.len() == 3 && tail[0] > 1.05 * tail[1] && tail[1] > 1.05 * tail[2] && tail[0] >= 0.95 * base;
    if growing {
        flags.push("ratio still increasing at the smallest radii".into());
    }
    if unreliable * 20 > jobs.len() {
        flags.push(format!("{unreliable} of {} balls had non-finite density samples", jobs.len()));
    }
    Ok(CarlesonEstimate {
        measure: mu.label.clone(),
        dim,
        norm_estimate: base,
        witness: Witness { omega: grid.nodes[bi], r: radii[bj], ratio: best.1 },
        by_radius,
        by_truncation,
        balls: jobs.len(),
        unreliable_balls: unreliable,
        stable: truncation_stable && !growing,
        flags,
    })
}

/// Masses `2^{-k(n-1)}` at points `x_k` with `|f(x_k)| = M(1 - 2^-k, f)`, `k = 1..=k_max`.
pub fn dyadic_point_measure(f: &QcMap, grid: &SphereGrid, k_max: u32) -> Result<BallMeasure, CarlesonError> {
    if k_max == 0 || k_max > 60 {
        return Err(CarlesonError::Params("k_max must lie in 1..=60".into()));
    }
    let masses = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let r = 1.0 - 0.5f64.powi(k as i32);
            let m = f.max_modulus(r, grid);
            (m.argmax * r, 0.5f64.powi(k as i32 * (f.dim as i32 - 1)))
        })
        .collect();
    let mut mu = BallMeasure::point_masses(f.dim, masses)?;
    mu.label = format!("dyadic:{}", f.name);
    Ok(mu)
}

fn af(f: &QcMap, x: &Point, mode: AreaMode, budget: usize, seed: u64) -> f64 {
    match mode {
        AreaMode::Analytic => f.conformal_factor(x).unwrap_or(f64::NAN),
        AreaMode::Averaged => f.avg_derivative(x, budget, seed).map(|s| s.value).unwrap_or(f64::NAN),
    }
}

/// Memo of averaged derivatives keyed by the bits of the point; share one
/// between ratio measures of the same map that differ only in `psi`.
#[derive(Clone, Default)]
pub struct AfCache(Arc<Mutex<HashMap<[u64; 3], f64>>>);

impl AfCache {
    pub fn len(&self) -> usize {
        self.0.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `dmu = psi(a_f(x)(1-|x|)) / psi(|f(x)|) dx / (1-|x|)`.
pub fn ratio_measure(f: &QcMap, psi: &GrowthFunction, mode: AreaMode, budget: usize, seed: u64) -> Result<BallMeasure, CarlesonError> {
    ratio_measure_cached(f, psi, mode, budget, seed, AfCache::default())
}

/// [`ratio_measure`] reading and filling `cache` in averaged mode. The cache
/// must only be shared between calls with the same map, budget and seed.
pub fn ratio_measure_cached(
    f: &QcMap,
    psi: &GrowthFunction,
    mode: AreaMode,
    budget: usize,
    seed: u64,
    cache: AfCache,
) -> Result<BallMeasure, CarlesonError> {
    if !f.omits_origin() {
        return Err(CarlesonError::VanishingMap(f.name.clone()));
    }
    if mode == AreaMode::Analytic && !f.is_conformal() {
        return Err(CarlesonError::Params(format!("{} has no analytic derivative", f.name)));
    }
    let (f2, p2) = (f.clone(), psi.clone());
    let radial = f.has_radial_jacobian();
    let g: Density = Arc::new(move |x| {
        let d = 1.0 - x.norm();
        let a = if mode == AreaMode::Averaged {
            // a radial Jacobian lets every point of a sphere share one value,
            // computed at a fixed representative so the result is order-free
            let (key, at) = if radial {
                let r = x.norm();
                ([r.to_bits(), 0, 0], Point::e1() * r)
            } else {
                (x.0.map(f64::to_bits), *x)
            };
            let hit = cache.0.lock().ok().and_then(|m| m.get(&key).copied());
            hit.unwrap_or_else(|| {
                let v = af(&f2, &at, mode, budget, seed);
                if let Ok(mut m) = cache.0.lock() {
                    m.insert(key, v);
                }
                v
            })
        } else {
            af(&f2, x, mode, budget, seed)
        };
        p2.value(a * d) / p2.value(f2.eval(x).norm()) / d
    });
    Ok(BallMeasure::density(f.dim, &format!("ratio:{}:{}", f.name, psi.name), g).with_focus(f.singular_directions()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub delta: f64,
    /// `int psi(delta |f| / C1) dmu` at the fitted `C1`.
    pub lhs: f64,
    /// `int psi(delta |f(omega)|) dsigma`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub map: String,
    pub growth: String,
    pub measure: String,
    pub carleson_norm: f64,
    /// Smallest power of two at least the Carleson norm.
    pub c2: f64,
    /// Smallest power of two making the inequality hold for every scanned `delta`.
    pub c1: Option<f64>,
    pub records: Vec<EmbeddingRecord>,
    /// Every right side diverged.
    pub vacuous: bool,
}

/// `int psi(delta |f(x)| / C1) dmu <= C2 int psi(delta |f(omega)|) dsigma`
/// over a scan of `delta`, with `C2` taken from the Carleson norm and `C1`
/// found by doubling.
pub fn embedding_check(
    f: &QcMap,
    psi: &GrowthFunction,
    mu: &BallMeasure,
    deltas: &[f64],
    grid: &SphereGrid,
    q: &Quadrature,
) -> Result<EmbeddingReport, CarlesonError> {
    if !f.omits_origin() {
        return Err(CarlesonError::VanishingMap(f.name.clone()));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(CarlesonError::Params("deltas must be positive".into()));
    }
    let norm = carleson_norm(mu, grid, q)?.norm_estimate;
    let c2 = 2f64.powi(norm.max(f64::MIN_POSITIVE).log2().ceil().max(0.0) as i32);
    let limits: Vec<f64> = grid.nodes.par_iter().map(|w| f.radial_limit(w, None).value.norm()).collect();
    let rhs: Vec<f64> = deltas
        .iter()
        .map(|d| limits.iter().zip(&grid.weights).map(|(l, w)| w * psi.value(d * l)).sum())
        .collect();
    let eta = q.truncations[0];
    let lhs_at = |c1: f64| -> Vec<f64> {
        deltas.iter().map(|d| mu.integrate(|x| psi.value(d * f.eval(x).norm() / c1), q, eta).0).collect()
    };
    let vacuous = rhs.iter().all(|r| !r.is_finite());
    let mut c1 = None;
    let mut lhs = lhs_at(1.0);
    if !vacuous {
        for j in 0..=40 {
            let c = 2f64.powi(j);
            let l = lhs_at(c);
            let ok = l.iter().zip(&rhs).all(|(a, b)| !b.is_finite() || *a <= c2 * b);
            if ok {
                c1 = Some(c);
                lhs = l;
                break;
            }
        }
    }
    let records = deltas
        .iter()
        .zip(lhs.iter().zip(&rhs))
        .map(|(d, (l, r))| EmbeddingRecord { delta: *d, lhs: *l, rhs: *r, holds: !r.is_finite() || *l <= c2 * r })
        .collect();
    Ok(EmbeddingReport {
        map: f.name.clone(),
        growth: psi.name.clone(),
        measure: mu.label.clone(),
        carleson_norm: norm,
        c2,
        c1,
        records,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q2() -> Quadrature {
        Quadrature { sphere_resolution: 32, ..Quadrature::for_dim(2) }
    }

    #[test]
    fn lebesgue_ball_masses_match_lens_area() {
        let q = q2();
        let mu = BallMeasure::lebesgue(2);
        // lens area of two unit-radius-1 / radius-r discs at distance 1
        let lens = |r: f64| {
            let d: f64 = 1.0;
            let a = r * r * ((d * d + r * r - 1.0) / (2.0 * d * r)).clamp(-1.0, 1.0).acos();
            let b = ((d * d + 1.0 - r * r) / (2.0 * d)).clamp(-1.0, 1.0).acos();
            let c = 0.5 * ((-d + r + 1.0) * (d + r - 1.0) * (d - r + 1.0) * (d + r + 1.0)).max(0.0).sqrt();
            a + b - c
        };
        for r in [2.0, 1.0, 0.5, 0.125] {
            let (m, _) = mu.ball_mass(&Point::e1(), r, &q, q.truncations[0]);
            assert!((m - lens(r)).abs() < 1e-6 * lens(r).max(1e-3), "r={r}: {m} vs {}", lens(r));
        }
        let g = make_grid(2, 32).unwrap();
        let est = carleson_norm(&mu, &g, &q).unwrap();
        assert!((est.norm_estimate - PI / 2.0).abs() < 1e-6);
        assert_eq!(est.witness.r, 2.0);
        assert!(est.stable);
        // small balls: pi r^2 / 2 / r -> 0
        assert!(est.by_radius.last().unwrap().1 < 1e-3);
    }

    #[test]
    fn unit_mass_at_origin() {
        let mu = BallMeasure::point_masses(2, vec![(Point::ORIGIN, 1.0)]).unwrap();
        let est = carleson_norm(&mu, &make_grid(2, 16).unwrap(), &q2()).unwrap();
        assert!((est.norm_estimate - 1.0).abs() < 1e-12);
        assert!(BallMeasure::point_masses(2, vec![(Point::ORIGIN, -1.0)]).is_err());
    }

    #[test]
    fn boundary_singular_density_is_flagged() {
        let mu = BallMeasure::density(2, "1/(1-|x|)", Arc::new(|x| 1.0 / (1.0 - x.norm())));
        let est = carleson_norm(&mu, &make_grid(2, 16).unwrap(), &q2()).unwrap();
        assert!(!est.stable);
        // mass of the cap-shell at cutoff eta grows like log(1/eta)
        let (a, b) = (est.by_truncation[0].1, est.by_truncation[1].1);
        assert!(b > 1.5 * a);
    }

    #[test]
    fn dyadic_measure_of_identity() {
        let g = make_grid(2, 32).unwrap();
        let f = QcMap::identity(2).unwrap();
        let mu = dyadic_point_measure(&f, &g, 30).unwrap();
        let q = q2();
        assert!((mu.total_mass(&q) - (1.0 - 0.5f64.powi(30))).abs() < 1e-15);
        let MeasureKind::PointMasses(m) = &mu.kind else { panic!() };
        let est = carleson_norm(&mu, &g, &q).unwrap();
        // oracle: finite sums over the closed balls
        let mut sup: f64 = 0.0;
        for om in &g.nodes {
            for r in q.radii() {
                let s: f64 = m.iter().filter(|(x, _)| x.dist(om) <= r * (1.0 + 1e-12)).map(|p| p.1).sum();
                sup = sup.max(s / r);
            }
        }
        assert_eq!(est.norm_estimate, sup);
        let short = dyadic_point_measure(&f, &g, 20).unwrap();
        let e2 = carleson_norm(&short, &g, &q).unwrap();
        assert!((e2.norm_estimate - est.norm_estimate).abs() < 1e-3 * est.norm_estimate);
    }

    #[test]
    fn dyadic_measure_of_log1p_sits_near_minus_one() {
        let g = make_grid(2, 64).unwrap();
        let mu = dyadic_point_measure(&QcMap::log1p(), &g, 20).unwrap();
        let MeasureKind::PointMasses(m) = &mu.kind else { panic!() };
        for (k, (x, _)) in m.iter().enumerate().skip(3) {
            let r = 1.0 - 0.5f64.powi(k as i32 + 1);
            assert!(x.dist(&Point::new2(-r, 0.0)) < 0.5f64.powi(k as i32 + 1), "{k}: {x:?}");
        }
        assert!(carleson_norm(&mu, &g, &q2()).unwrap().norm_estimate.is_finite());
    }

    #[test]
    fn ratio_measure_of_translated_identity() {
        let f = QcMap::parse("translate:2,0", 2).unwrap();
        let id = GrowthFunction::identity();
        let mu = ratio_measure(&f, &id, AreaMode::Analytic, 64, 1).unwrap();
        let x = Point::new2(0.3, -0.4);
        assert!((match &mu.kind { MeasureKind::Density(g) => g(&x), _ => panic!() } - 1.0 / (x + Point::new2(2.0, 0.0)).norm()).abs() < 1e-12);
        let q = q2();
        let g = make_grid(2, 32).unwrap();
        let est = carleson_norm(&mu, &g, &q).unwrap();
        assert!(est.stable && est.norm_estimate < 1.0);
        // int psi(|f|) dmu reproduces the area integral, here the area of the disc
        let area = mu.integrate(|x| f.eval(x).norm(), &q, q.truncations[0]).0;
        assert!((area - PI).abs() < 1e-6);
        assert!(ratio_measure(&QcMap::identity(2).unwrap(), &id, AreaMode::Analytic, 64, 1).is_err());
    }

    #[test]
    fn whole_disc_mass_does_not_depend_on_the_centre() {
        // a ball of radius 2 covers the disc, so its mass is the total mass
        let f = QcMap::parse("translate:-2,0+log1p", 2).unwrap();
        let mu = ratio_measure(&f, &GrowthFunction::identity(), AreaMode::Analytic, 64, 1).unwrap();
        let q = Quadrature::for_dim(2);
        let masses: Vec<f64> = [0.0, 2.0, 3.0, 3.1]
            .iter()
            .map(|t: &f64| mu.ball_mass(&Point::new2(t.cos(), t.sin()), 2.0, &q, q.truncations[0]).0)
            .collect();
        for m in &masses {
            assert!((m - masses[0]).abs() < 1e-6 * masses[0], "{masses:?}");
        }
    }

    #[test]
    fn cached_averaged_measure_matches_uncached() {
        let f = QcMap::parse("translate:2,0+stretch:2", 2).unwrap();
        let psi = GrowthFunction::power(2.0).unwrap();
        let q = Quadrature { sphere_resolution: 8, max_level: 3, radial_points: 2, angular_points: 3, ..Quadrature::for_dim(2) };
        let grid = make_grid(2, 8).unwrap();
        let plain = carleson_norm(&ratio_measure(&f, &psi, AreaMode::Averaged, 64, 1).unwrap(), &grid, &q).unwrap();
        let cache = AfCache::default();
        let mu = ratio_measure_cached(&f, &psi, AreaMode::Averaged, 64, 1, cache.clone()).unwrap();
        let first = carleson_norm(&mu, &grid, &q).unwrap();
        let filled = cache.len();
        assert!(filled > 0);
        let again = carleson_norm(&mu, &grid, &q).unwrap();
        assert_eq!(cache.len(), filled);
        assert_eq!(plain.norm_estimate, first.norm_estimate);
        assert_eq!(first.norm_estimate, again.norm_estimate);
    }

    #[test]
    fn radial_jacobian_shares_one_value_per_sphere() {
        for n in [2, 3] {
            let f = QcMap::parse(if n == 2 { "translate:2,0+stretch:2" } else { "translate:2,0,0+stretch:2" }, n).unwrap();
            assert!(f.has_radial_jacobian());
            let psi = GrowthFunction::power(1.0).unwrap();
            let cache = AfCache::default();
            let mu = ratio_measure_cached(&f, &psi, AreaMode::Averaged, 64, 1, cache.clone()).unwrap();
            let MeasureKind::Density(g) = &mu.kind else { panic!() };
            let x = if n == 2 { Point::new2(0.0, -0.6) } else { Point::new3(0.0, 0.36, -0.48) };
            let on_axis = Point::e1() * 0.6;
            // density at x uses a_f(0.6 e1), which equals a_f(x) up to quadrature error
            let (at_x, at_axis) = (f.avg_derivative(&x, 64, 1).unwrap(), f.avg_derivative(&on_axis, 64, 1).unwrap());
            let direct = at_x.value / f.eval(&x).norm();
            let tol = 3.0 * (at_x.stderr + at_axis.stderr) / f.eval(&x).norm();
            assert!((g(&x) - direct).abs() <= tol, "{} vs {direct}", g(&x));
            let via_axis = at_axis.value / f.eval(&x).norm();
            assert_eq!(g(&x), via_axis);
            assert_eq!(cache.len(), 1);
        }
        assert!(!QcMap::parse("translate:2,0+mobius:0.5,0", 2).unwrap().has_radial_jacobian());
    }

    #[test]
    fn nested_truncations_match_separate_ball_masses() {
        let f = QcMap::parse("translate:-2,0+log1p", 2).unwrap();
        let mu = ratio_measure(&f, &GrowthFunction::power(0.5).unwrap(), AreaMode::Analytic, 64, 1).unwrap();
        let q = Quadrature::for_dim(2);
        for r in [2.0, 0.5, 0.5f64.powi(10)] {
            let om = Point::new2(-0.6, 0.8);
            let both = mu.ball_masses(&om, r, &q, &q.truncations);
            for (k, eta) in q.truncations.iter().enumerate() {
                let one = mu.ball_mass(&om, r, &q, *eta).0;
                assert!((both[k].0 - one).abs() <= 1e-9 * one, "r={r} eta={eta}: {} vs {one}", both[k].0);
            }
        }
    }

    #[test]
    fn ratio_measure_refinement_is_stable() {
        let f = QcMap::parse("translate:2,0+mobius:0.3,0.2", 2).unwrap();
        let psi = GrowthFunction::power(2.0).unwrap();
        let mu = ratio_measure(&f, &psi, AreaMode::Analytic, 64, 1).unwrap();
        let a = carleson_norm(&mu, &make_grid(2, 16).unwrap(), &q2()).unwrap().norm_estimate;
        let b = carleson_norm(&mu, &make_grid(2, 32).unwrap(), &Quadrature { sphere_resolution: 64, ..q2() }).unwrap().norm_estimate;
        assert!((a - b).abs() < 0.05 * b, "{a} vs {b}");
    }

    #[test]
    fn norm_is_monotone_in_the_sample_set() {
        let f = QcMap::parse("translate:2,0+mobius:0.3,0.2", 2).unwrap();
        let mu = ratio_measure(&f, &GrowthFunction::power(2.0).unwrap(), AreaMode::Analytic, 64, 1).unwrap();
        let a = make_grid(2, 16).unwrap();
        let b = make_grid(2, 24).unwrap();
        let mut union = a.clone();
        union.nodes.extend(b.nodes.iter().cloned());
        union.weights.extend(b.weights.iter().cloned());
        let q = q2();
        let na = carleson_norm(&mu, &a, &q).unwrap().norm_estimate;
        let nu = carleson_norm(&mu, &union, &q).unwrap().norm_estimate;
        assert!(nu >= na);
    }

    #[test]
    fn embedding_with_lebesgue_and_dyadic_measures() {
        let f = QcMap::parse("translate:2,0", 2).unwrap();
        let id = GrowthFunction::identity();
        let g = make_grid(2, 32).unwrap();
        let q = q2();
        let deltas: Vec<f64> = (0..6).map(|j| 0.5f64.powi(j)).collect();
        let rep = embedding_check(&f, &id, &BallMeasure::lebesgue(2), &deltas, &g, &q).unwrap();
        assert_eq!(rep.c1, Some(1.0));
        assert!(rep.records.iter().all(|r| r.holds && r.lhs.is_finite() && r.rhs.is_finite()));
        let mu = dyadic_point_measure(&f, &g, 30).unwrap();
        let rep = embedding_check(&f, &id, &mu, &deltas, &g, &q).unwrap();
        assert!(rep.c1.is_some());
        // linearity in the measure
        let l1 = BallMeasure::lebesgue(2).integrate(|x| x.norm(), &q, q.truncations[0]).0;
        let l3 = BallMeasure::lebesgue(2).scaled(3.0).integrate(|x| x.norm(), &q, q.truncations[0]).0;
        assert!((l3 - 3.0 * l1).abs() < 1e-12 * l3);
    }
}
