//! Analytic quasiconformal test maps on the unit ball and the raw
//! ingredients of the Hardy-Orlicz functionals: differentials, Jacobians,
//! distance to the image boundary, averaged derivatives, radial limits,
//! maximal modulus and non-tangential maxima.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::{frame, Point};
use crate::quad::{cube_to_ball, golden_max, halton, halton_ball, random_shifts, GaussLegendre};
use crate::sphere::{SphereGrid, StolzCone};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("point {0:?} is outside the open unit ball")]
    Domain(Point),
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    Translate { offset: Point, inner: Box<QcMap> },
    /// Mobius automorphism of the ball sending `a` to 0.
    Mobius { a: Point },
    /// `log(1 + z)` on the unit disk.
    Log1p,
    /// `|x|^(alpha-1) x`.
    RadialStretch { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct QcMap {
    pub dim: usize,
    pub kind: MapKind,
    pub name: String,
}

impl fmt::Display for QcMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn fmt_point(p: &Point, dim: usize) -> String {
    p.coords(dim).iter().map(|c| fmt_num(*c)).collect::<Vec<_>>().join(",")
}

fn check_dim(dim: usize) -> Result<(), QcError> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(QcError::Parameter(format!("dimension {dim} is not supported (expected 2 or 3)")))
    }
}

impl QcMap {
    pub fn identity(dim: usize) -> Result<Self, QcError> {
        check_dim(dim)?;
        Ok(QcMap { dim, kind: MapKind::Identity, name: "identity".into() })
    }

    pub fn mobius(dim: usize, a: Point) -> Result<Self, QcError> {
        check_dim(dim)?;
        if dim == 2 && a[2] != 0.0 {
            return Err(QcError::Parameter("planar mobius center must have two coordinates".into()));
        }
        if !a.is_finite() || a.norm() >= 1.0 {
            return Err(QcError::Parameter(format!("mobius center must satisfy |a| < 1, got {}", a.norm())));
        }
        Ok(QcMap { dim, kind: MapKind::Mobius { a }, name: format!("mobius:{}", fmt_point(&a, dim)) })
    }

    pub fn log1p() -> Self {
        QcMap { dim: 2, kind: MapKind::Log1p, name: "log1p".into() }
    }

    pub fn radial_stretch(dim: usize, alpha: f64) -> Result<Self, QcError> {
        check_dim(dim)?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(QcError::Parameter(format!("stretch exponent must be positive, got {alpha}")));
        }
        Ok(QcMap { dim, kind: MapKind::RadialStretch { alpha }, name: format!("stretch:{}", fmt_num(alpha)) })
    }

    pub fn translate(offset: Point, inner: QcMap) -> Result<Self, QcError> {
        if !offset.is_finite() || (inner.dim == 2 && offset[2] != 0.0) {
            return Err(QcError::Parameter("translation offset has the wrong dimension".into()));
        }
        let name = if matches!(inner.kind, MapKind::Identity) {
            format!("translate:{}", fmt_point(&offset, inner.dim))
        } else {
            format!("translate:{}+{}", fmt_point(&offset, inner.dim), inner.name)
        };
        Ok(QcMap { dim: inner.dim, name, kind: MapKind::Translate { offset, inner: Box::new(inner) } })
    }

    /// Parses a map token: `identity`, `mobius:ax,ay[,az]`, `log1p`,
    /// `stretch:alpha` or `translate:y1,y2[,y3][+inner]`.
    pub fn parse(token: &str, dim: usize) -> Result<Self, QcError> {
        check_dim(dim)?;
        let token = token.trim();
        let (head, rest) = match token.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (token, None),
        };
        let nums = |s: &str| -> Result<Point, QcError> {
            let v: Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let v = v.map_err(|e| QcError::Parameter(format!("bad coordinate list '{s}': {e}")))?;
            if v.is_empty() || v.len() > dim {
                return Err(QcError::Parameter(format!("expected at most {dim} coordinates in '{s}'")));
            }
            Ok(Point::from_slice(&v))
        };
        match (head, rest) {
            ("identity", None) => QcMap::identity(dim),
            ("log1p" | "planar_log1p", None) => {
                if dim != 2 {
                    return Err(QcError::Parameter("log1p is planar only (dim 2)".into()));
                }
                Ok(QcMap::log1p())
            }
            ("mobius", Some(r)) => QcMap::mobius(dim, nums(r)?),
            ("stretch" | "radial_stretch", Some(r)) => {
                let alpha = r.trim().parse::<f64>().map_err(|e| QcError::Parameter(format!("bad exponent '{r}': {e}")))?;
                QcMap::radial_stretch(dim, alpha)
            }
            ("translate", Some(r)) => {
                let (off, inner) = match r.split_once('+') {
                    Some((o, i)) => (o, QcMap::parse(i, dim)?),
                    None => (r, QcMap::identity(dim)?),
                };
                QcMap::translate(nums(off)?, inner)
            }
            _ => Err(QcError::Parameter(format!("unknown map '{token}'"))),
        }
    }

    /// The builtin matrix used by suites and scans.
    pub fn builtins(dim: usize) -> Vec<QcMap> {
        let mut v = vec![QcMap::identity(dim).unwrap()];
        if dim == 2 {
            v.push(QcMap::mobius(2, Point::new2(0.5, 0.0)).unwrap());
            v.push(QcMap::log1p());
        } else {
            v.push(QcMap::mobius(3, Point::new3(0.5, 0.0, 0.0)).unwrap());
        }
        v.push(QcMap::radial_stretch(dim, 2.0).unwrap());
        v.push(QcMap::translate(Point::new2(0.5, 0.0), QcMap::identity(dim).unwrap()).unwrap());
        v
    }

    pub fn eval(&self, x: &Point) -> Point {
        match &self.kind {
            MapKind::Identity => *x,
            MapKind::Translate { offset, inner } => inner.eval(x) + *offset,
            MapKind::Mobius { a } => {
                let a2 = a.norm_sq();
                let xa = *x - *a;
                let num = xa * (1.0 - a2) - *a * xa.norm_sq();
                let den = 1.0 - 2.0 * x.dot(a) + x.norm_sq() * a2;
                num * (1.0 / den)
            }
            MapKind::Log1p => {
                let (re, im) = (1.0 + x[0], x[1]);
                Point::new2(0.5 * (re * re + im * im).ln(), im.atan2(re))
            }
            MapKind::RadialStretch { alpha } => {
                let r = x.norm();
                if r == 0.0 {
                    *x
                } else {
                    *x * r.powf(alpha - 1.0)
                }
            }
        }
    }

    pub fn differential(&self, x: &Point) -> Mat3 {
        let n = self.dim;
        let mut m = [[0.0; 3]; 3];
        match &self.kind {
            MapKind::Identity => {
                for (i, row) in m.iter_mut().enumerate().take(n) {
                    row[i] = 1.0;
                }
            }
            MapKind::Translate { inner, .. } => return inner.differential(x),
            MapKind::Mobius { a } => {
                let a2 = a.norm_sq();
                let xa = *x - *a;
                let num = xa * (1.0 - a2) - *a * xa.norm_sq();
                let den = 1.0 - 2.0 * x.dot(a) + x.norm_sq() * a2;
                let grad_den = (*x * a2 - *a) * 2.0;
                for i in 0..n {
                    for j in 0..n {
                        let dnum = if i == j { 1.0 - a2 } else { 0.0 } - 2.0 * a[i] * xa[j];
                        m[i][j] = dnum / den - num[i] * grad_den[j] / (den * den);
                    }
                }
            }
            MapKind::Log1p => {
                let (re, im) = (1.0 + x[0], x[1]);
                let d = re * re + im * im;
                let (wr, wi) = (re / d, -im / d);
                m[0][0] = wr;
                m[0][1] = -wi;
                m[1][0] = wi;
                m[1][1] = wr;
            }
            MapKind::RadialStretch { alpha } => {
                let r = x.norm();
                let s = r.powf(alpha - 1.0);
                for i in 0..n {
                    for j in 0..n {
                        let id = if i == j { 1.0 } else { 0.0 };
                        let radial = if r > 0.0 { (alpha - 1.0) * x[i] * x[j] / (r * r) } else { 0.0 };
                        m[i][j] = s * (id + radial);
                    }
                }
            }
        }
        m
    }

    /// Central differences with step `1e-6 (1 - |x|)`.
    pub fn differential_fd(&self, x: &Point) -> Mat3 {
        let h = 1e-6 * (1.0 - x.norm()).max(1e-12);
        let mut m = [[0.0; 3]; 3];
        for j in 0..self.dim {
            let mut e = [0.0; 3];
            e[j] = h;
            let e = Point(e);
            let d = (self.eval(&(*x + e)) - self.eval(&(*x - e))) * (0.5 / h);
            for (i, row) in m.iter_mut().enumerate().take(self.dim) {
                row[j] = d[i];
            }
        }
        m
    }

    pub fn jacobian(&self, x: &Point) -> f64 {
        match &self.kind {
            MapKind::Identity => 1.0,
            MapKind::Translate { inner, .. } => inner.jacobian(x),
            MapKind::Log1p => {
                1.0 / ((1.0 + x[0]).powi(2) + x[1] * x[1])
            }
            MapKind::RadialStretch { alpha } => alpha * x.norm().powf(self.dim as f64 * (alpha - 1.0)),
            MapKind::Mobius { .. } => self.conformal_factor(x).unwrap().powi(self.dim as i32),
        }
    }

    /// `|f'(x)|` for conformal maps, where `Df` is a similarity.
    pub fn conformal_factor(&self, x: &Point) -> Option<f64> {
        match &self.kind {
            MapKind::Identity => Some(1.0),
            MapKind::Translate { inner, .. } => inner.conformal_factor(x),
            MapKind::Mobius { a } => {
                let a2 = a.norm_sq();
                Some((1.0 - a2) / (1.0 - 2.0 * x.dot(a) + x.norm_sq() * a2))
            }
            MapKind::Log1p => Some(1.0 / ((1.0 + x[0]).powi(2) + x[1] * x[1]).sqrt()),
            MapKind::RadialStretch { alpha } if *alpha == 1.0 => Some(1.0),
            MapKind::RadialStretch { .. } => None,
        }
    }

    pub fn is_conformal(&self) -> bool {
        self.conformal_factor(&Point::ORIGIN).is_some()
    }

    pub fn k_bound(&self) -> f64 {
        match &self.kind {
            MapKind::Translate { inner, .. } => inner.k_bound(),
            MapKind::RadialStretch { alpha } => alpha.max(1.0 / alpha).powi(self.dim as i32 - 1),
            _ => 1.0,
        }
    }

    /// Whether `p` lies in the image `f(B^n)`.
    pub fn image_contains(&self, p: &Point) -> bool {
        match &self.kind {
            MapKind::Translate { offset, inner } => inner.image_contains(&(*p - *offset)),
            MapKind::Log1p => p[1].abs() < FRAC_PI_2 && p[0] < (2.0 * p[1].cos()).ln(),
            _ => p.norm() < 1.0,
        }
    }

    /// Whether `0` is omitted by the image.
    pub fn omits_origin(&self) -> bool {
        !self.image_contains(&Point::ORIGIN)
    }

    /// Boundary directions where the map is unbounded.
    pub fn singular_directions(&self) -> Vec<Point> {
        match &self.kind {
            MapKind::Log1p => vec![-Point::e1()],
            MapKind::Translate { inner, .. } => inner.singular_directions(),
            _ => Vec::new(),
        }
    }

    /// Whether `J_f(x)` depends only on `|x|`; then so does `a_f`.
    pub fn has_radial_jacobian(&self) -> bool {
        match &self.kind {
            MapKind::Identity | MapKind::RadialStretch { .. } => true,
            MapKind::Translate { inner, .. } => inner.has_radial_jacobian(),
            _ => false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.singular_directions().is_empty()
    }

    fn check_inside(&self, x: &Point) -> Result<(), QcError> {
        if x.is_finite() && x.norm() < 1.0 {
            Ok(())
        } else {
            Err(QcError::Domain(*x))
        }
    }

    pub fn operator_norm(&self, x: &Point) -> Result<f64, QcError> {
        self.check_inside(x)?;
        Ok(operator_norm(&self.differential(x), self.dim))
    }

    /// `d(f(x), boundary of f(B^n))`.
    pub fn boundary_distance(&self, x: &Point) -> Result<BoundaryDistance, QcError> {
        self.check_inside(x)?;
        let y = self.eval(x);
        Ok(BoundaryDistance { value: self.image_boundary_distance(&y), method: DistanceMethod::Analytic })
    }

    fn image_boundary_distance(&self, y: &Point) -> f64 {
        match &self.kind {
            MapKind::Translate { offset, inner } => inner.image_boundary_distance(&(*y - *offset)),
            MapKind::Log1p => log1p_image_distance(y),
            _ => 1.0 - y.norm(),
        }
    }

    /// Minimum distance from `f(x)` to the image of a boundary sample with
    /// `resolution` points (circle) or latitude bands (sphere).
    pub fn boundary_distance_sampled(&self, x: &Point, resolution: usize) -> Result<BoundaryDistance, QcError> {
        self.check_inside(x)?;
        let y = self.eval(x);
        let grid = crate::sphere::make_grid(self.dim, resolution).map_err(|e| QcError::Parameter(e.to_string()))?;
        let d = grid
            .nodes
            .iter()
            .map(|w| self.eval(w))
            .filter(|p| p.is_finite())
            .map(|p| p.dist(&y))
            .fold(f64::INFINITY, f64::min);
        Ok(BoundaryDistance { value: d, method: DistanceMethod::Sampled { resolution } })
    }

    /// `a_f(x)`, the exponential of the mean of `(1/n) log J_f` over `B_x`.
    pub fn avg_derivative(&self, x: &Point, budget: usize, seed: u64) -> Result<AvgDerivativeSample, QcError> {
        self.check_inside(x)?;
        if budget < 64 {
            return Err(QcError::Parameter(format!("budget must be at least 64, got {budget}")));
        }
        let rho = 0.5 * (1.0 - x.norm());
        let n = self.dim as f64;
        let log_j = |y: &Point| -> Result<f64, QcError> {
            let j = self.jacobian(y);
            if j > 0.0 && j.is_finite() {
                Ok(j.ln() / n)
            } else {
                Err(QcError::InvalidMap(format!("Jacobian {j} at {y:?}")))
            }
        };
        if self.dim == 2 {
            let polar_mean = |radial: usize, angular: usize| -> Result<f64, QcError> {
                let gl = GaussLegendre::new(radial);
                let mut acc = 0.0;
                for (s, ws) in gl.on(0.0, 1.0) {
                    let mut ring = 0.0;
                    for k in 0..angular {
                        let t = 2.0 * PI * (k as f64 + 0.5) / angular as f64;
                        ring += log_j(&(*x + Point::new2(t.cos(), t.sin()) * (rho * s)))?;
                    }
                    acc += ws * s * ring / angular as f64;
                }
                // normalised by the area of the unit disk in polar form (1/2)
                Ok(2.0 * acc)
            };
            let radial = ((budget as f64 / 4.0).sqrt().round() as usize).max(4);
            let angular = (budget / radial).max(64);
            let fine = polar_mean(radial, angular)?;
            let coarse = polar_mean((radial / 2).max(2), (angular / 2).max(32))?;
            let value = fine.exp();
            let stderr = ((fine - coarse).abs() * value).max(1e-12 * value);
            Ok(AvgDerivativeSample { x: *x, value, method: AvgMethod::Quadrature, stderr })
        } else {
            let shifts = random_shifts(seed, 8, self.dim);
            let per = budget / shifts.len();
            let mut means = Vec::with_capacity(shifts.len());
            for sh in &shifts {
                let mut acc = 0.0;
                for i in 0..per {
                    let h = halton(i as u64, self.dim);
                    let u: Vec<f64> = (0..self.dim).map(|d| (h[d] + sh[d]).fract()).collect();
                    acc += log_j(&(*x + cube_to_ball(self.dim, &u) * rho))?;
                }
                means.push(acc / per as f64);
            }
            let m = means.iter().sum::<f64>() / means.len() as f64;
            let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
            let value = m.exp();
            let stderr = (var / means.len() as f64).sqrt() * value;
            Ok(AvgDerivativeSample { x: *x, value, method: AvgMethod::QuasiMonteCarlo, stderr })
        }
    }

    /// Radial limit along `omega` over the schedule `r_k` (default
    /// `1 - 2^-k`, k = 1..=48).
    pub fn radial_limit(&self, omega: &Point, schedule: Option<&[f64]>) -> RadialLimit {
        let default: Vec<f64> = (1..=48).map(|k| 1.0 - 0.5f64.powi(k)).collect();
        let rs = schedule.unwrap_or(&default);
        let omega = omega.normalized();
        let mut vals: Vec<Point> = Vec::new();
        let mut diffs: Vec<f64> = Vec::new();
        for &r in rs {
            let v = self.eval(&(omega * r));
            if !v.is_finite() {
                return RadialLimit { value: v, status: LimitStatus::Divergent, steps: vals.len() + 1, last_radius: r };
            }
            if let Some(prev) = vals.last() {
                let d = v.dist(prev);
                diffs.push(d);
                if d <= 1e-13 * (1.0 + v.norm()) {
                    vals.push(v);
                    return RadialLimit { value: v, status: LimitStatus::Converged, steps: vals.len(), last_radius: r };
                }
            }
            vals.push(v);
        }
        let last_radius = *rs.last().unwrap_or(&0.0);
        let k = vals.len();
        if k < 3 {
            return RadialLimit {
                value: vals.last().copied().unwrap_or(Point::ORIGIN),
                status: LimitStatus::Inconclusive,
                steps: k,
                last_radius,
            };
        }
        let tail = diffs.len().min(4);
        let ratios: Vec<f64> = diffs[diffs.len() - tail..].windows(2).map(|w| w[1] / w[0]).collect();
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
        let growing = vals[k - tail..].windows(2).all(|w| w[1].norm() > w[0].norm());
        let (last, prev) = (vals[k - 1], vals[k - 2]);
        let status = if mean_ratio <= 0.75 {
            LimitStatus::Converged
        } else if growing && mean_ratio >= 0.9 {
            LimitStatus::Divergent
        } else {
            LimitStatus::Inconclusive
        };
        let value = if status == LimitStatus::Converged { last * 2.0 - prev } else { last };
        RadialLimit { value, status, steps: k, last_radius }
    }

    /// `M(r, f)`: the grid maximum of `|f(r omega)|`, refined by
    /// golden-section search along great circles through the best node.
    pub fn max_modulus(&self, r: f64, grid: &SphereGrid) -> MaxModulus {
        let g = |w: &Point| self.eval(&(*w * r)).norm();
        let mut best = (Point::e1(), f64::NEG_INFINITY);
        for w in grid.nodes.iter().chain(self.singular_directions().iter()) {
            let v = g(w);
            if v > best.1 {
                best = (*w, v);
            }
        }
        let spacing = if self.dim == 2 {
            2.0 * PI / grid.len() as f64
        } else {
            PI / grid.resolution as f64
        };
        let (mut center, mut value) = best;
        let passes = if self.dim == 2 { 1 } else { 3 };
        for _ in 0..passes {
            let (u, v) = frame(self.dim, center);
            let dirs: Vec<Point> = if self.dim == 2 { vec![u] } else { vec![u, v] };
            for d in dirs {
                let along = |t: f64| center * t.cos() + d * t.sin();
                let (t, val) = golden_max(|t| g(&along(t)), -1.5 * spacing, 1.5 * spacing, 80);
                if val > value {
                    value = val;
                    center = along(t).normalized();
                }
            }
        }
        MaxModulus { r, value, argmax: center }
    }

    /// `f*(omega)` sampled over Whitney balls `B_{t_k omega}`,
    /// `t_k = 1 - 2^-k` for `k = 0..=depth`.
    pub fn nontangential_max(&self, omega: &Point, depth: u32) -> f64 {
        self.cone_sup(omega, depth, |p| p.norm())
    }

    /// `f_i*(omega)` for the 1-based coordinate `i`.
    pub fn component_nontangential_max(&self, i: usize, omega: &Point, depth: u32) -> Result<f64, QcError> {
        if i == 0 || i > self.dim {
            return Err(QcError::Parameter(format!("component {i} out of range 1..={}", self.dim)));
        }
        Ok(self.cone_sup(omega, depth, |p| p[i - 1].abs()))
    }

    /// Supremum of `h(f(x))` over the sampled cone.
    pub fn cone_sup<H: Fn(&Point) -> f64>(&self, omega: &Point, depth: u32, h: H) -> f64 {
        let cone = StolzCone::new(*omega);
        let offsets = cone_offsets(self.dim);
        let mut best = 0.0f64;
        for k in 0..=depth {
            let c = cone.whitney_center(k);
            let rho = 0.5 * (1.0 - c.norm());
            for o in offsets.iter() {
                best = best.max(h(&self.eval(&(c + *o * rho))));
            }
        }
        best
    }

    /// Sample points of the cone at Whitney scales.
    pub fn cone_points(&self, omega: &Point, depth: u32) -> Vec<Point> {
        let cone = StolzCone::new(*omega);
        let offsets = cone_offsets(self.dim);
        let mut pts = Vec::new();
        for k in 0..=depth {
            let c = cone.whitney_center(k);
            let rho = 0.5 * (1.0 - c.norm());
            pts.extend(offsets.iter().map(|o| c + *o * rho));
        }
        pts
    }

    /// `diam f(B_x)` from boundary samples of `B_x`.
    pub fn image_diameter(&self, x: &Point, samples: usize) -> f64 {
        let rho = 0.5 * (1.0 - x.norm());
        let pts: Vec<Point> = if self.dim == 2 {
            (0..samples)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / samples as f64;
                    self.eval(&(*x + Point::new2(t.cos(), t.sin()) * (rho * 0.999_999)))
                })
                .collect()
        } else {
            let bands = ((samples as f64 / 2.0).sqrt() as usize).max(8);
            crate::sphere::make_grid(3, bands)
                .unwrap()
                .nodes
                .iter()
                .map(|w| self.eval(&(*x + *w * (rho * 0.999_999))))
                .collect()
        };
        let mut d = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max(pts[i].dist(&pts[j]));
            }
        }
        d
    }

    /// Worst `|Df|^n / J_f` over quasi-random interior points.
    pub fn dilatation_check(&self, samples: usize) -> Result<DilatationReport, QcError> {
        if samples == 0 {
            return Err(QcError::Parameter("need at least one sample".into()));
        }
        let mut worst = 0.0f64;
        for x in halton_ball(self.dim, samples) {
            let j = self.jacobian(&x);
            if !(j > 0.0) {
                return Err(QcError::InvalidMap(format!("Jacobian {j} at {x:?}")));
            }
            let ratio = operator_norm(&self.differential(&x), self.dim).powi(self.dim as i32) / j;
            worst = worst.max(ratio);
        }
        let k = self.k_bound();
        Ok(DilatationReport { map: self.name.clone(), worst_ratio: worst, k_bound: k, samples, passes: worst <= k * (1.0 + 1e-6) })
    }
}

fn cone_offsets(dim: usize) -> Vec<Point> {
    let mut v = vec![Point::ORIGIN];
    v.extend(halton_ball(dim, 32).into_iter().map(|p| p * 0.999_999));
    v
}

/// Largest singular value.
pub fn operator_norm(m: &Mat3, dim: usize) -> f64 {
    if dim == 2 {
        // split into conformal and anticonformal parts; exact when either vanishes
        let (a, b) = (0.5 * (m[0][0] + m[1][1]), 0.5 * (m[1][0] - m[0][1]));
        let (c, d) = (0.5 * (m[0][0] - m[1][1]), 0.5 * (m[1][0] + m[0][1]));
        a.hypot(b) + c.hypot(d)
    } else {
        let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
        a.singular_values().max()
    }
}

/// Distance from `y` to the boundary curve `u = log(2 cos v)` of the image
/// of `log(1 + z)`.
fn log1p_image_distance(y: &Point) -> f64 {
    let u0 = y[0];
    let central = |v: f64| Point::new2((2.0 * v.cos()).ln(), v);
    let dist_c = |v: f64| -central(v).dist(y);
    let vc: f64 = 1.2;
    let u_split = (2.0 * vc.cos()).ln();
    let u_low = u0.min(u_split) - 4.0;
    let branch = |s: f64, u: f64| Point::new2(u, s * (0.5 * u.exp()).min(1.0).acos());
    let mut best = f64::INFINITY;
    let n = 2000;
    // central arc, parametrised by v
    let mut arg = (0.0, f64::INFINITY);
    for i in 0..=n {
        let v = -vc + 2.0 * vc * i as f64 / n as f64;
        let d = -dist_c(v);
        if d < arg.1 {
            arg = (v, d);
        }
    }
    let h = 2.0 * vc / n as f64;
    let (_, d) = golden_max(dist_c, (arg.0 - h).max(-vc), (arg.0 + h).min(vc), 80);
    best = best.min(-d).min(arg.1);
    // the two tails, parametrised by u
    for s in [-1.0, 1.0] {
        let dist_b = |u: f64| -branch(s, u).dist(y);
        let mut arg = (0.0, f64::INFINITY);
        for i in 0..=n {
            let u = u_low + (u_split - u_low) * i as f64 / n as f64;
            let d = -dist_b(u);
            if d < arg.1 {
                arg = (u, d);
            }
        }
        let h = (u_split - u_low) / n as f64;
        let (_, d) = golden_max(dist_b, (arg.0 - h).max(u_low), (arg.0 + h).min(u_split), 80);
        best = best.min(-d).min(arg.1);
    }
    // curve points left of u_low are more than 4 away, farther than the sampled branch point at u0
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DistanceMethod {
    Analytic,
    Sampled { resolution: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDistance {
    pub value: f64,
    pub method: DistanceMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvgMethod {
    Quadrature,
    QuasiMonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvgDerivativeSample {
    pub x: Point,
    pub value: f64,
    pub method: AvgMethod,
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitStatus {
    Converged,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialLimit {
    pub value: Point,
    pub status: LimitStatus,
    pub steps: usize,
    pub last_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxModulus {
    pub r: f64,
    pub value: f64,
    /// Unit direction `omega` with `|f(r omega)| = M(r, f)`.
    pub argmax: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilatationReport {
    pub map: String,
    pub worst_ratio: f64,
    pub k_bound: f64,
    pub samples: usize,
    pub passes: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::make_grid;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn builtin_examples() {
        let id = QcMap::identity(2).unwrap();
        assert_eq!(id.k_bound(), 1.0);
        assert_eq!(id.jacobian(&Point::new2(0.3, 0.2)), 1.0);
        let l = QcMap::log1p();
        assert_eq!(l.eval(&Point::ORIGIN), Point::ORIGIN);
        assert!(close(l.operator_norm(&Point::ORIGIN).unwrap(), 1.0, 1e-15));
        let s = QcMap::radial_stretch(2, 2.0).unwrap();
        assert!(s.eval(&Point::new2(0.5, 0.0)).dist(&Point::new2(0.25, 0.0)) < 1e-15);
        assert!(close(s.operator_norm(&Point::new2(0.5, 0.0)).unwrap(), 1.0, 1e-14));
        assert_eq!(QcMap::radial_stretch(3, 3.0).unwrap().k_bound(), 9.0);
        assert!(QcMap::radial_stretch(2, 0.0).is_err());
        assert!(QcMap::mobius(2, Point::new2(1.0, 0.0)).is_err());
        assert!(id.operator_norm(&Point::new2(1.0, 0.0)).is_err());
    }

    #[test]
    fn parse_tokens() {
        assert_eq!(QcMap::parse("mobius:0.5,0", 2).unwrap().name, "mobius:0.5,0");
        assert_eq!(QcMap::parse("stretch:2", 3).unwrap().k_bound(), 4.0);
        let t = QcMap::parse("translate:-2,0+log1p", 2).unwrap();
        assert!(t.omits_origin());
        assert!(!QcMap::log1p().omits_origin());
        assert!(QcMap::parse("log1p", 3).is_err());
        assert!(QcMap::parse("banana", 2).is_err());
        assert!(QcMap::parse("translate:1,2,3", 2).is_err());
    }

    #[test]
    fn analytic_differentials_match_finite_differences() {
        let mut maps = QcMap::builtins(2);
        maps.extend(QcMap::builtins(3));
        maps.push(QcMap::mobius(3, Point::new3(0.2, -0.4, 0.3)).unwrap());
        maps.push(QcMap::radial_stretch(3, 0.5).unwrap());
        for f in &maps {
            for x in halton_ball(f.dim, 50) {
                let a = f.differential(&x);
                let b = f.differential_fd(&x);
                let scale = operator_norm(&a, f.dim);
                for i in 0..f.dim {
                    for j in 0..f.dim {
                        assert!((a[i][j] - b[i][j]).abs() < 1e-5 * scale, "{} at {x:?}", f.name);
                    }
                }
                let det = if f.dim == 2 {
                    a[0][0] * a[1][1] - a[0][1] * a[1][0]
                } else {
                    nalgebra::Matrix3::from_fn(|i, j| a[i][j]).determinant()
                };
                assert!(close(f.jacobian(&x), det, 1e-10), "{}", f.name);
            }
        }
    }

    #[test]
    fn dilatation_examples() {
        assert!(close(QcMap::identity(2).unwrap().dilatation_check(100).unwrap().worst_ratio, 1.0, 1e-15));
        let m = QcMap::mobius(2, Point::new2(0.3, -0.6)).unwrap().dilatation_check(200).unwrap();
        assert!((m.worst_ratio - 1.0).abs() < 1e-9 && m.passes);
        let m3 = QcMap::mobius(3, Point::new3(0.3, -0.2, 0.5)).unwrap().dilatation_check(200).unwrap();
        assert!((m3.worst_ratio - 1.0).abs() < 1e-9);
        let s = QcMap::radial_stretch(3, 3.0).unwrap().dilatation_check(200).unwrap();
        assert!((s.worst_ratio - 9.0).abs() < 1e-6 * 9.0 && s.passes);
    }

    #[test]
    fn mobius_maps_ball_to_ball() {
        let a = Point::new3(0.3, -0.2, 0.5);
        let f = QcMap::mobius(3, a).unwrap();
        assert!(f.eval(&a).norm() < 1e-15);
        assert!(close(f.boundary_distance(&a).unwrap().value, 1.0, 1e-15));
        for w in make_grid(3, 16).unwrap().nodes {
            assert!((f.eval(&w).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn injective_on_sampled_pairs() {
        for f in QcMap::builtins(2).iter().chain(QcMap::builtins(3).iter()) {
            let pts = halton_ball(f.dim, 300);
            let imgs: Vec<Point> = pts.iter().map(|p| f.eval(p)).collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    assert!(imgs[i].dist(&imgs[j]) > 0.0, "{}", f.name);
                }
            }
        }
    }

    #[test]
    fn log1p_boundary_distance_matches_dense_sampling() {
        let f = QcMap::log1p();
        // oracle: brute-force distance to log(1 + e^{it}) at resolution 1e-4
        let brute = |y: Point| {
            let n = 62_832;
            (0..n)
                .map(|k| {
                    let t = -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64;
                    f.eval(&Point::new2(t.cos(), t.sin()))
                })
                .map(|p| p.dist(&y))
                .fold(f64::INFINITY, f64::min)
        };
        for x in [Point::ORIGIN, Point::new2(0.5, 0.3), Point::new2(-0.9, 0.05), Point::new2(0.2, -0.95)] {
            let a = f.boundary_distance(&x).unwrap().value;
            let b = brute(f.eval(&x));
            assert!((a - b).abs() < 2e-4 * (1.0 + b), "{x:?}: {a} vs {b}");
            assert!(a <= b + 1e-12);
        }
        let s = f.boundary_distance_sampled(&Point::ORIGIN, 4096).unwrap();
        assert_eq!(s.method, DistanceMethod::Sampled { resolution: 4096 });
    }

    #[test]
    fn avg_derivative_examples() {
        let id = QcMap::identity(2).unwrap();
        assert!(close(id.avg_derivative(&Point::new2(0.4, 0.1), 256, 1).unwrap().value, 1.0, 1e-14));
        let f = QcMap::log1p();
        for (x, expect) in [(Point::ORIGIN, 1.0), (Point::new2(0.5, 0.0), 2.0 / 3.0)] {
            let s = f.avg_derivative(&x, 1024, 1).unwrap();
            assert!((s.value - expect).abs() <= 3.0 * s.stderr, "{} vs {} (+-{})", s.value, expect, s.stderr);
        }
        let s3 = QcMap::identity(3).unwrap().avg_derivative(&Point::new3(0.1, 0.2, 0.3), 512, 9).unwrap();
        assert_eq!(s3.method, AvgMethod::QuasiMonteCarlo);
        assert!(close(s3.value, 1.0, 1e-14));
        assert!(id.avg_derivative(&Point::ORIGIN, 10, 1).is_err());
    }

    #[test]
    fn stretch_average_matches_radial_oracle() {
        // log J = log a + 2(a-1) log|y|; the disk mean of log|y| over B(x, rho)
        // with |x| > rho is log|x| (harmonic), so a_f = sqrt(a) |x|^(a-1)
        let f = QcMap::radial_stretch(2, 3.0).unwrap();
        let x = Point::new2(0.6, 0.0);
        let s = f.avg_derivative(&x, 1024, 1).unwrap();
        let expect = 3f64.sqrt() * 0.6f64.powi(2);
        assert!((s.value - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn radial_limit_examples() {
        let id = QcMap::identity(2).unwrap();
        let w = Point::new2(0.6, 0.8);
        let r = id.radial_limit(&w, None);
        assert_eq!(r.status, LimitStatus::Converged);
        assert!(r.value.dist(&w) < 1e-12);
        let f = QcMap::log1p();
        let r = f.radial_limit(&Point::e1(), None);
        assert_eq!(r.status, LimitStatus::Converged);
        assert!((r.value[0] - 2f64.ln()).abs() < 1e-12 && r.value[1].abs() < 1e-15);
        assert_eq!(f.radial_limit(&-Point::e1(), None).status, LimitStatus::Divergent);
    }

    #[test]
    fn max_modulus_examples() {
        let g = make_grid(2, 1024).unwrap();
        assert!(close(QcMap::identity(2).unwrap().max_modulus(0.7, &g).value, 0.7, 1e-14));
        let t = QcMap::parse("translate:0.3,0.4", 2).unwrap();
        assert!(close(t.max_modulus(0.7, &g).value, 1.2, 1e-10));
        let f = QcMap::log1p();
        for k in [4, 10, 20] {
            let r = 1.0 - 0.5f64.powi(k);
            let m = f.max_modulus(r, &g);
            assert!(m.value >= (1.0 / (1.0 - r)).ln() - 1e-9);
            assert!(m.argmax.dist(&-Point::e1()) < 1e-6);
        }
        let g3 = make_grid(3, 32).unwrap();
        let t3 = QcMap::parse("translate:0.1,0.2,0.2", 3).unwrap();
        assert!(close(t3.max_modulus(0.5, &g3).value, 0.8, 1e-8));
    }

    #[test]
    fn nontangential_examples() {
        let id = QcMap::identity(2).unwrap();
        let w = Point::new2(0.0, 1.0);
        let mut prev = 0.0;
        for d in [1, 4, 8, 16] {
            let v = id.nontangential_max(&w, d);
            assert!(v >= prev && v < 1.0);
            prev = v;
        }
        assert!(prev > 0.9999);
        let f = QcMap::log1p();
        let v = f.nontangential_max(&Point::e1(), 20);
        assert!(v.is_finite() && v < 1.0 && v > 2f64.ln() * 0.9);
        for a in [0.0, 1.0, 2.5, PI] {
            let om = Point::new2(a.cos(), a.sin());
            assert!(f.component_nontangential_max(2, &om, 24).unwrap() <= PI);
        }
        assert!(f.component_nontangential_max(3, &w, 4).is_err());
        let s = QcMap::radial_stretch(2, 2.0).unwrap();
        let c = s.component_nontangential_max(1, &Point::e1(), 20).unwrap();
        assert!(c < 1.0 && c > 0.999);
    }

    #[test]
    fn image_diameter_of_identity() {
        let x = Point::new2(0.5, 0.0);
        let d = QcMap::identity(2).unwrap().image_diameter(&x, 256);
        assert!(close(d, 0.5, 1e-5));
    }
}
