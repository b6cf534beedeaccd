//! Hardy-Orlicz membership criteria and their convergence classification.
//!
//! Every criterion is first reduced to a [`Profile`]: weighted samples of a
//! nonnegative quantity `X` (such as `|f(r omega)|` or `M(r, f)`), grouped by
//! the cutoff schedule `eps_k = 2^-k`. The profile does not depend on the
//! growth function or on `delta`, so a full `delta` scan only re-weights
//! stored samples.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growth::{doubling_report, inverse_doubling_report, DoublingGrid, DoublingReport, DoublingVerdict, GrowthFunction};
use crate::point::Point;
use crate::qcmaps::{LimitStatus, QcError, QcMap};
use crate::quad::{fit_line, halton_ball, GaussLegendre, LineFit};
use crate::sphere::{make_grid, radial_nodes, AngularRule, SphereGrid, StolzCone};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Map(#[from] QcError),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("criterion needs an analytic derivative, which {0} does not have")]
    NotConformal(String),
}

/// Discretization parameters shared by all criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Number of cutoffs `K`; partials are reported at `eps_k = 2^-k`, `k = 0..=K`.
    pub depth: usize,
    /// Circle nodes (n = 2) or latitude bands (n = 3) of uniform sphere grids.
    pub sphere_resolution: usize,
    /// Gauss-Legendre nodes per radial panel.
    pub radial_points: usize,
    /// Gauss-Legendre nodes per angular shell of focused rules.
    pub angular_points: usize,
    /// Azimuthal nodes per shell of focused rules (n = 3).
    pub azimuth: usize,
    /// Budget of each averaged-derivative evaluation.
    pub af_budget: usize,
    pub seed: u64,
    pub deltas: Vec<f64>,
    /// Keep scanning after the first finite `delta`.
    pub exhaustive_scan: bool,
}

impl Settings {
    pub fn for_dim(dim: usize) -> Self {
        Settings {
            depth: 24,
            sphere_resolution: if dim == 2 { 1024 } else { 32 },
            radial_points: 8,
            angular_points: 8,
            azimuth: 16,
            af_budget: 64,
            seed: 1,
            deltas: (0..=16).map(|j| 0.5f64.powi(j)).collect(),
            exhaustive_scan: false,
        }
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        let bad = |m: &str| Err(FunctionalError::Settings(m.into()));
        if self.depth < 8 || self.depth > 40 {
            return bad("depth must lie in 8..=40");
        }
        if self.sphere_resolution < 8 {
            return bad("sphere resolution must be at least 8");
        }
        if self.radial_points == 0 || self.angular_points == 0 || self.azimuth < 4 {
            return bad("quadrature orders must be positive (azimuth at least 4)");
        }
        if self.af_budget < 64 {
            return bad("averaged-derivative budget must be at least 64");
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0)) {
            return bad("deltas must be positive");
        }
        Ok(())
    }

    fn eps(&self) -> Vec<f64> {
        (0..=self.depth).map(|k| 0.5f64.powi(k as i32)).collect()
    }

    fn u(&self) -> Vec<f64> {
        (0..=self.depth).map(|k| k as f64 * LN_2).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionId {
    #[serde(rename = "H_psi_sup")]
    HPsiSup,
    #[serde(rename = "boundary_L1")]
    BoundaryL1,
    #[serde(rename = "ntmax_L1")]
    NtmaxL1,
    #[serde(rename = "maxmod_integral")]
    MaxmodIntegral,
    #[serde(rename = "area_integral")]
    AreaIntegral,
    #[serde(rename = "component_ntmax")]
    ComponentNtmax,
    #[serde(rename = "cone_af_sup")]
    ConeAfSup,
}

impl CriterionId {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionId::HPsiSup => "H_psi_sup",
            CriterionId::BoundaryL1 => "boundary_L1",
            CriterionId::NtmaxL1 => "ntmax_L1",
            CriterionId::MaxmodIntegral => "maxmod_integral",
            CriterionId::AreaIntegral => "area_integral",
            CriterionId::ComponentNtmax => "component_ntmax",
            CriterionId::ConeAfSup => "cone_af_sup",
        }
    }

    /// The four criteria that characterize membership for every growth function.
    pub fn unconditional(&self) -> bool {
        matches!(
            self,
            CriterionId::HPsiSup | CriterionId::BoundaryL1 | CriterionId::NtmaxL1 | CriterionId::MaxmodIntegral
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

impl Verdict {
    pub fn conclusive(&self) -> bool {
        *self != Verdict::Inconclusive
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartialModel {
    Constant,
    LogU,
    LinearU,
    ExpU,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    Bounded,
    Linear,
    Exponential,
    PowerDecay,
    ExpDecay,
    Unknown,
}

/// Extrapolated contribution beyond the last cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub model: TailModel,
    /// `None` when the tail is infinite or no model fits.
    pub value: Option<f64>,
    pub non_integrable: bool,
    pub r_squared: f64,
}

impl TailEstimate {
    fn unknown() -> Self {
        TailEstimate { model: TailModel::Unknown, value: None, non_integrable: false, r_squared: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Best of the log-u, linear-u and exponential models for the partials.
    pub model: PartialModel,
    pub slope: f64,
    pub r_squared: f64,
    /// Relative gap between the last two partials.
    pub gap: Option<f64>,
    pub tail: TailEstimate,
}

mod nullable {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let o: Vec<Option<f64>> = v.iter().map(|x| if x.is_finite() { Some(*x) } else { None }).collect();
        o.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let o: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(o.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: CriterionId,
    pub label: String,
    pub component: Option<usize>,
    pub mode: Option<String>,
    /// `None` for criteria without a scaling parameter.
    pub delta: Option<f64>,
    pub eps: Vec<f64>,
    /// Partial values; non-finite entries serialize as `null`.
    #[serde(with = "nullable")]
    pub partials: Vec<f64>,
    pub value: Option<f64>,
    pub verdict: Verdict,
    pub fit: FitDiagnostics,
    /// Cutoff `eps_k` at which the partials first overflowed.
    pub overflow_at: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accumulate {
    /// `partial_k` sums the cells of bins `0..=k`.
    Bins,
    /// `partial_k` is the running maximum of the level sums `0..=k`.
    LevelMax,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule {
    /// Integrand `c e^{-m u} psi(delta X(u))` extrapolated from the profile `X`.
    Profile { c: f64, m: f64, sup: bool },
    /// Decay model fitted to the per-bin increments.
    Increments,
}

/// Weighted samples of a criterion, independent of `psi` and `delta`.
#[derive(Clone, Debug)]
pub struct Profile {
    pub criterion: CriterionId,
    pub label: String,
    pub component: Option<usize>,
    pub mode: Option<String>,
    pub dim: usize,
    pub accumulate: Accumulate,
    pub u: Vec<f64>,
    pub eps: Vec<f64>,
    /// `(weight, X)` cells per bin or level.
    pub cells: Vec<Vec<(f64, f64)>>,
    /// Largest `X` per bin, the input of tail extrapolation.
    pub edge: Vec<f64>,
    pub tail: TailRule,
    pub uses_delta: bool,
    pub inconclusive_nodes: usize,
    pub total_nodes: usize,
    pub notes: Vec<String>,
}

/// Angular constant of the cap measure, `sigma(cap of radius e^-u)` decaying like `c e^{-(n-1)u}` per unit `u`.
fn angular_tail_constant(dim: usize) -> f64 {
    if dim == 2 {
        2.0
    } else {
        2.0 * PI
    }
}

fn window(len: usize) -> usize {
    // bins 1..len-1 carry data; use the last half, at least six
    (len / 2).max(6).min(len.saturating_sub(1))
}

impl Profile {
    pub fn evaluate(&self, psi: &GrowthFunction, delta: f64) -> CriterionResult {
        let d = if self.uses_delta { delta } else { 1.0 };
        let sums: Vec<f64> = self
            .cells
            .iter()
            .map(|cells| cells.iter().map(|(w, x)| if *w == 0.0 { 0.0 } else { w * psi.value(d * x) }).sum())
            .collect();
        let mut partials = Vec::with_capacity(sums.len());
        let mut acc = 0.0f64;
        for s in &sums {
            acc = match self.accumulate {
                Accumulate::Bins => acc + s,
                Accumulate::LevelMax => {
                    if s.is_nan() {
                        f64::INFINITY
                    } else {
                        acc.max(*s)
                    }
                }
            };
            partials.push(if acc.is_nan() { f64::INFINITY } else { acc });
        }
        let tail = match self.tail {
            TailRule::Profile { c, m, sup } => profile_tail(&self.u, &self.edge, psi, d, c, m, sup),
            TailRule::Increments => increments_tail(&self.u, &sums),
        };
        let (verdict, fit, overflow_at) = classify(&self.u, &self.eps, &partials, tail, self.tail);
        let mut notes = self.notes.clone();
        let mut verdict = verdict;
        if self.total_nodes > 0 && self.inconclusive_nodes * 100 > self.total_nodes && verdict != Verdict::Divergent {
            notes.push(format!(
                "{} of {} radial limits inconclusive",
                self.inconclusive_nodes, self.total_nodes
            ));
            verdict = Verdict::Inconclusive;
        }
        let last = *partials.last().unwrap_or(&0.0);
        CriterionResult {
            criterion: self.criterion,
            label: self.label.clone(),
            component: self.component,
            mode: self.mode.clone(),
            delta: if self.uses_delta { Some(delta) } else { None },
            eps: self.eps.clone(),
            value: if last.is_finite() { Some(last) } else { None },
            partials,
            verdict,
            fit,
            overflow_at,
            notes,
        }
    }
}

fn fit_window(u: &[f64], y: &[f64]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = u.iter().zip(y).filter(|(_, b)| b.is_finite()).map(|(a, b)| (*a, *b)).collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_line(&x, &y)
}

const TAIL_FIT_R2: f64 = 0.95;
const TAIL_U_MAX: f64 = 1e12;

/// Tail of `int c e^{-m u} psi(delta X(u)) du` (or its supremum) beyond the
/// last cutoff, with `X` extrapolated by a bounded, linear or exponential
/// model fitted to the last bins.
fn profile_tail(u: &[f64], edge: &[f64], psi: &GrowthFunction, delta: f64, c: f64, m: f64, sup: bool) -> TailEstimate {
    let n = u.len();
    let w = window(n);
    let us = &u[n - w..];
    let xs = &edge[n - w..];
    if xs.iter().any(|x| !x.is_finite()) {
        return TailEstimate { model: TailModel::Unknown, value: None, non_integrable: true, r_squared: 1.0 };
    }
    let max = xs.iter().cloned().fold(0.0, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let (model, r2, xhat): (TailModel, f64, Box<dyn Fn(f64) -> f64>) = if max == 0.0 || (max - min) <= 0.05 * max {
        (TailModel::Bounded, 1.0, Box::new(move |_| max))
    } else {
        let lin = fit_window(us, xs).filter(|f| f.slope > 0.0);
        let logx: Vec<f64> = xs.iter().map(|x| if *x > 0.0 { x.ln() } else { f64::NAN }).collect();
        let exp = fit_window(us, &logx);
        match (lin, exp) {
            (Some(l), e) if l.r_squared >= TAIL_FIT_R2 && e.map_or(true, |e| e.r_squared <= l.r_squared) => {
                (TailModel::Linear, l.r_squared, Box::new(move |v| l.intercept + l.slope * v))
            }
            (_, Some(e)) if e.r_squared >= TAIL_FIT_R2 => {
                (TailModel::Exponential, e.r_squared, Box::new(move |v| (e.intercept + e.slope * v).exp()))
            }
            _ => return TailEstimate::unknown(),
        }
    };
    let u0 = *u.last().unwrap();
    let points = 2000;
    let mut grid = Vec::with_capacity(points);
    let mut lng = Vec::with_capacity(points);
    for i in 0..points {
        let v = u0 * (TAIL_U_MAX / u0).powf(i as f64 / (points - 1) as f64);
        let x = xhat(v);
        let l = if x > 0.0 { c.ln() - m * v + psi.ln_value_at_ln(delta.ln() + x.ln()) } else { f64::NEG_INFINITY };
        grid.push(v);
        lng.push(l);
    }
    let overflow = lng.iter().any(|l| *l > 700.0 || l.is_nan());
    if overflow {
        return TailEstimate { model, value: None, non_integrable: true, r_squared: r2 };
    }
    if sup {
        let v = lng.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
        return TailEstimate { model, value: Some(v), non_integrable: false, r_squared: r2 };
    }
    let non_integrable = *lng.last().unwrap() > -40.0;
    let mut total = 0.0;
    for i in 1..points {
        total += 0.5 * (lng[i].exp() + lng[i - 1].exp()) * (grid[i] - grid[i - 1]);
    }
    TailEstimate {
        model,
        value: if non_integrable { None } else { Some(total) },
        non_integrable,
        r_squared: r2,
    }
}

/// Tail from the decay of the per-unit-`u` increments: exponential or power law.
fn increments_tail(u: &[f64], sums: &[f64]) -> TailEstimate {
    let n = u.len();
    let w = window(n);
    let mut us = Vec::new();
    let mut ys = Vec::new();
    for k in n - w..n {
        let du = u[k] - u[k - 1];
        us.push(u[k]);
        ys.push(sums[k] / du);
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return TailEstimate { model: TailModel::Unknown, value: None, non_integrable: true, r_squared: 1.0 };
    }
    if ys.iter().all(|y| *y == 0.0) {
        return TailEstimate { model: TailModel::ExpDecay, value: Some(0.0), non_integrable: false, r_squared: 1.0 };
    }
    if ys.iter().any(|y| *y <= 0.0) {
        return TailEstimate::unknown();
    }
    let lny: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let lnu: Vec<f64> = us.iter().map(|v| v.ln()).collect();
    let exp = fit_line(&us, &lny);
    let pow = fit_line(&lnu, &lny);
    let y_last = *ys.last().unwrap();
    let u_last = *us.last().unwrap();
    let best = match (exp, pow) {
        (Some(e), Some(p)) if p.r_squared > e.r_squared => (TailModel::PowerDecay, p),
        (Some(e), _) => (TailModel::ExpDecay, e),
        (None, Some(p)) => (TailModel::PowerDecay, p),
        _ => return TailEstimate::unknown(),
    };
    let (model, f) = best;
    if f.r_squared < TAIL_FIT_R2 {
        return TailEstimate::unknown();
    }
    match model {
        TailModel::ExpDecay if f.slope < 0.0 => {
            TailEstimate { model, value: Some(y_last / -f.slope), non_integrable: false, r_squared: f.r_squared }
        }
        TailModel::PowerDecay if -f.slope > 1.05 => TailEstimate {
            model,
            value: Some(y_last * u_last / (-f.slope - 1.0)),
            non_integrable: false,
            r_squared: f.r_squared,
        },
        _ => TailEstimate { model, value: None, non_integrable: true, r_squared: f.r_squared },
    }
}

fn partial_fit(u: &[f64], partials: &[f64]) -> (PartialModel, f64, f64) {
    let n = partials.len();
    let w = window(n);
    let us = &u[n - w..];
    let ps = &partials[n - w..];
    if ps.iter().any(|p| !p.is_finite()) {
        return (PartialModel::None, 0.0, 0.0);
    }
    let max = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
    if max - min <= 1e-12 * max.abs() {
        return (PartialModel::Constant, 0.0, 1.0);
    }
    let lnu: Vec<f64> = us.iter().map(|v| v.ln()).collect();
    let lnp: Vec<f64> = ps.iter().map(|p| if *p > 0.0 { p.ln() } else { f64::NAN }).collect();
    let candidates = [
        (PartialModel::LogU, fit_line(&lnu, ps)),
        (PartialModel::LinearU, fit_line(us, ps)),
        (PartialModel::ExpU, fit_window(us, &lnp)),
    ];
    candidates
        .iter()
        .filter_map(|(m, f)| f.map(|f| (*m, f.slope, f.r_squared)))
        .fold((PartialModel::None, 0.0, 0.0), |best, c| if c.2 > best.2 { c } else { best })
}

const FINITE_GAP: f64 = 0.005;
const DIVERGENT_R2: f64 = 0.99;

fn classify(
    u: &[f64],
    eps: &[f64],
    partials: &[f64],
    tail: TailEstimate,
    rule: TailRule,
) -> (Verdict, FitDiagnostics, Option<f64>) {
    let overflow_at = partials.iter().position(|p| !p.is_finite()).map(|k| eps[k]);
    let (model, slope, r2) = partial_fit(u, partials);
    let n = partials.len();
    let (last, prev) = (partials[n - 1], partials[n - 2]);
    let gap = if last.is_finite() && prev.is_finite() {
        Some(if last > 0.0 { (last - prev) / last } else { 0.0 })
    } else {
        None
    };
    let fit = FitDiagnostics { model, slope, r_squared: r2, gap, tail };
    let grows = r2 > DIVERGENT_R2 && slope > 0.0 && model != PartialModel::Constant;
    let verdict = if overflow_at.is_some() {
        Verdict::Divergent
    } else if tail.non_integrable && (matches!(rule, TailRule::Profile { .. }) || grows) {
        Verdict::Divergent
    } else if gap.map_or(false, |g| g < FINITE_GAP)
        && match tail.value {
            Some(t) => t <= FINITE_GAP * last.max(f64::MIN_POSITIVE) || last == 0.0 && t == 0.0,
            None if tail.model == TailModel::Unknown && !tail.non_integrable => {
                let w = window(n);
                last <= 0.0 || (last - partials[n - w]) / last < 0.01
            }
            None => false,
        }
    {
        Verdict::Finite
    } else if tail.model == TailModel::Unknown && grows {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };
    (verdict, fit, overflow_at)
}

fn focus_of(f: &QcMap) -> Point {
    f.singular_directions().first().copied().unwrap_or_else(Point::e1)
}

/// Angular rule for integrals over whole spheres: graded towards the
/// singular direction when the map has one, uniform otherwise.
fn sphere_rule(f: &QcMap, s: &Settings) -> Result<AngularRule, FunctionalError> {
    Ok(match f.singular_directions().first() {
        Some(d) => AngularRule::focused(f.dim, *d, s.depth + 12, s.angular_points, s.azimuth),
        None => AngularRule::uniform(&grid(f.dim, s.sphere_resolution)?),
    })
}

fn grid(dim: usize, res: usize) -> Result<SphereGrid, FunctionalError> {
    make_grid(dim, res).map_err(|e| FunctionalError::Settings(e.to_string()))
}

fn base_profile(criterion: CriterionId, f: &QcMap, s: &Settings, accumulate: Accumulate, tail: TailRule) -> Profile {
    Profile {
        criterion,
        label: criterion.as_str().to_string(),
        component: None,
        mode: None,
        dim: f.dim,
        accumulate,
        u: s.u(),
        eps: s.eps(),
        cells: vec![Vec::new(); s.depth + 1],
        edge: vec![0.0; s.depth + 1],
        tail,
        uses_delta: true,
        inconclusive_nodes: 0,
        total_nodes: 0,
        notes: Vec::new(),
    }
}

/// `sup_r int psi(delta |f(r omega)|) d sigma` over `r_k = 1 - 2^-k`.
pub fn hpsi_sup_profile(f: &QcMap, s: &Settings) -> Result<Profile, FunctionalError> {
    s.validate()?;
    let rule = sphere_rule(f, s)?;
    let m = (f.dim - 1) as f64;
    let mut p = base_profile(
        CriterionId::HPsiSup,
        f,
        s,
        Accumulate::LevelMax,
        TailRule::Profile { c: angular_tail_constant(f.dim), m, sup: true },
    );
    let levels: Vec<Vec<(f64, f64)>> = (0..=s.depth)
        .into_par_iter()
        .map(|k| {
            let r = 1.0 - 0.5f64.powi(k as i32);
            rule.nodes.iter().zip(&rule.weights).map(|(om, w)| (*w, f.eval(&(*om * r)).norm())).collect()
        })
        .collect();
    for (k, level) in levels.into_iter().enumerate() {
        p.edge[k] = level.iter().map(|c| c.1).fold(0.0, f64::max);
        p.cells[k] = level;
    }
    Ok(p)
}

/// `int_0^{1-eps_k} (1-r)^{n-2} psi(delta M(r, f)) dr`.
pub fn maxmod_profile(f: &QcMap, s: &Settings) -> Result<Profile, FunctionalError> {
    s.validate()?;
    let g = grid(f.dim, s.sphere_resolution)?;
    let gl = GaussLegendre::new(s.radial_points);
    let m = (f.dim - 1) as f64;
    let mut p = base_profile(
        CriterionId::MaxmodIntegral,
        f,
        s,
        Accumulate::Bins,
        TailRule::Profile { c: 1.0, m, sup: false },
    );
    let bins: Vec<(Vec<(f64, f64)>, f64)> = (0..=s.depth)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return (Vec::new(), f.eval(&Point::ORIGIN).norm());
            }
            let (a, b) = (1.0 - 0.5f64.powi(k as i32 - 1), 1.0 - 0.5f64.powi(k as i32));
            let cells = radial_nodes(a, b, &gl)
                .into_iter()
                .map(|(r, w)| (w * (1.0 - r).powi(f.dim as i32 - 2), f.max_modulus(r, &g).value))
                .collect();
            (cells, f.max_modulus(b, &g).value)
        })
        .collect();
    for (k, (cells, edge)) in bins.into_iter().enumerate() {
        p.cells[k] = cells;
        p.edge[k] = edge;
    }
    Ok(p)
}

/// Per-node boundary data shared by the boundary, non-tangential and
/// component criteria.
struct BoundaryNode {
    weight: f64,
    shell: usize,
    limit: Point,
    status: LimitStatus,
    /// Running maxima over Whitney balls `0..=k` of `|f|` and of each `|f_i|`.
    cone: Vec<[f64; 4]>,
}

/// Profiles for the boundary, non-tangential and component criteria.
pub struct BoundaryProfiles {
    pub boundary: Profile,
    pub ntmax: Profile,
    pub components: Vec<Profile>,
}

/// Samples radial limits and cone maxima on a rule graded towards the
/// singular direction; cutoff `k` drops the cap of angular radius `2^-k`.
pub fn boundary_profiles(f: &QcMap, s: &Settings) -> Result<BoundaryProfiles, FunctionalError> {
    s.validate()?;
    let rule = AngularRule::focused(f.dim, focus_of(f), s.depth, s.angular_points, s.azimuth);
    let offsets = {
        let mut v = vec![Point::ORIGIN];
        v.extend(halton_ball(f.dim, 32).into_iter().map(|q| q * 0.999_999));
        v
    };
    let dim = f.dim;
    let nodes: Vec<BoundaryNode> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let om = rule.nodes[i];
            let lim = f.radial_limit(&om, None);
            let cone = StolzCone::new(om);
            let mut run = [0.0f64; 4];
            let mut levels = Vec::with_capacity(s.depth + 1);
            for k in 0..=s.depth {
                let c = cone.whitney_center(k as u32);
                let rho = 0.5 * (1.0 - c.norm());
                for o in &offsets {
                    let y = f.eval(&(c + *o * rho));
                    run[0] = run[0].max(y.norm());
                    for d in 0..dim {
                        run[d + 1] = run[d + 1].max(y[d].abs());
                    }
                }
                levels.push(run);
            }
            BoundaryNode { weight: rule.weights[i], shell: rule.shells[i], limit: lim.value, status: lim.status, cone: levels }
        })
        .collect();
    let inconclusive = nodes.iter().filter(|n| n.status == LimitStatus::Inconclusive).count();
    let divergent = nodes.iter().filter(|n| n.status == LimitStatus::Divergent).count();
    let m = (dim - 1) as f64;
    let tail = TailRule::Profile { c: angular_tail_constant(dim), m, sup: false };

    let mut boundary = base_profile(CriterionId::BoundaryL1, f, s, Accumulate::Bins, tail);
    for n in &nodes {
        let x = n.limit.norm();
        boundary.cells[n.shell].push((n.weight, x));
        boundary.edge[n.shell] = boundary.edge[n.shell].max(x);
    }
    boundary.inconclusive_nodes = inconclusive;
    boundary.total_nodes = nodes.len();
    if divergent > 0 {
        boundary.notes.push(format!("{divergent} nodes use the last sampled value along a divergent ray"));
    }

    // closure with the radial limit keeps the cone supremum above |f(omega)|
    let level_profile = |criterion: CriterionId, idx: usize, lim: &dyn Fn(&Point) -> f64| {
        let mut p = base_profile(criterion, f, s, Accumulate::LevelMax, tail);
        for k in 0..=s.depth {
            p.cells[k] = nodes
                .iter()
                .filter(|n| n.shell <= k)
                .map(|n| (n.weight, n.cone[k][idx].max(lim(&n.limit))))
                .collect();
        }
        for n in &nodes {
            let x = n.cone[s.depth][idx].max(lim(&n.limit));
            p.edge[n.shell] = p.edge[n.shell].max(x);
        }
        p.inconclusive_nodes = inconclusive;
        p.total_nodes = nodes.len();
        p
    };
    let ntmax = level_profile(CriterionId::NtmaxL1, 0, &|l| l.norm());
    let components = (1..=dim)
        .map(|i| {
            let mut p = level_profile(CriterionId::ComponentNtmax, i, &|l| l[i - 1].abs());
            p.component = Some(i);
            p.label = format!("component_ntmax[{i}]");
            p.uses_delta = false;
            p
        })
        .collect();
    Ok(BoundaryProfiles { boundary, ntmax, components })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaMode {
    /// `a_f = |f'|` for conformal maps.
    Analytic,
    /// `a_f` from the averaged Jacobian over Whitney balls.
    Averaged,
}

impl AreaMode {
    fn as_str(&self) -> &'static str {
        match self {
            AreaMode::Analytic => "analytic",
            AreaMode::Averaged => "averaged",
        }
    }
}

fn af(f: &QcMap, x: &Point, mode: AreaMode, s: &Settings) -> Result<f64, FunctionalError> {
    match mode {
        AreaMode::Analytic => f.conformal_factor(x).ok_or_else(|| FunctionalError::NotConformal(f.name.clone())),
        AreaMode::Averaged => Ok(f.avg_derivative(x, s.af_budget, s.seed)?.value),
    }
}

/// `int_{|x| < 1 - eps_k} psi(a_f(x)(1-|x|)) dx / (1-|x|)`.
pub fn area_profile(f: &QcMap, mode: AreaMode, s: &Settings) -> Result<Profile, FunctionalError> {
    s.validate()?;
    let rule = sphere_rule(f, s)?;
    let gl = GaussLegendre::new(s.radial_points);
    let mut p = base_profile(CriterionId::AreaIntegral, f, s, Accumulate::Bins, TailRule::Increments);
    p.uses_delta = false;
    p.mode = Some(mode.as_str().into());
    p.label = format!("area_integral({})", mode.as_str());
    let dim = f.dim as i32;
    let mut jobs = Vec::new();
    for k in 1..=s.depth {
        let (a, b) = (1.0 - 0.5f64.powi(k as i32 - 1), 1.0 - 0.5f64.powi(k as i32));
        for (r, w) in radial_nodes(a, b, &gl) {
            jobs.push((k, r, w * r.powi(dim - 1) / (1.0 - r)));
        }
    }
    let cells: Result<Vec<Vec<(usize, f64, f64)>>, FunctionalError> = jobs
        .par_iter()
        .map(|&(k, r, wr)| {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(om, w)| Ok((k, wr * w, af(f, &(*om * r), mode, s)? * (1.0 - r))))
                .collect()
        })
        .collect();
    for ring in cells? {
        for (k, w, x) in ring {
            p.cells[k].push((w, x));
            p.edge[k] = p.edge[k].max(x);
        }
    }
    Ok(p)
}

/// `psi(sup_{Gamma(omega)} a_f(x)(1-|x|))` integrated over the sphere, with
/// the cone truncated at Whitney scale `k` and the cap of radius `2^-k` removed.
pub fn cone_af_profile(f: &QcMap, s: &Settings) -> Result<Profile, FunctionalError> {
    s.validate()?;
    let rule = AngularRule::focused(f.dim, focus_of(f), s.depth, s.angular_points, s.azimuth);
    let mode = if f.is_conformal() { AreaMode::Analytic } else { AreaMode::Averaged };
    let offsets = {
        let mut v = vec![Point::ORIGIN];
        let extra = if mode == AreaMode::Analytic { 32 } else { 4 };
        v.extend(halton_ball(f.dim, extra).into_iter().map(|q| q * 0.999_999));
        v
    };
    let runs: Result<Vec<Vec<f64>>, FunctionalError> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let cone = StolzCone::new(rule.nodes[i]);
            let mut run = 0.0f64;
            let mut out = Vec::with_capacity(s.depth + 1);
            for k in 0..=s.depth {
                let c = cone.whitney_center(k as u32);
                let rho = 0.5 * (1.0 - c.norm());
                for o in &offsets {
                    let x = c + *o * rho;
                    run = run.max(af(f, &x, mode, s)? * (1.0 - x.norm()));
                }
                out.push(run);
            }
            Ok(out)
        })
        .collect();
    let runs = runs?;
    let tail = TailRule::Profile { c: angular_tail_constant(f.dim), m: (f.dim - 1) as f64, sup: false };
    let mut p = base_profile(CriterionId::ConeAfSup, f, s, Accumulate::LevelMax, tail);
    p.uses_delta = false;
    p.mode = Some(mode.as_str().into());
    for k in 0..=s.depth {
        p.cells[k] = (0..rule.len())
            .filter(|&i| rule.shells[i] <= k)
            .map(|i| (rule.weights[i], runs[i][k]))
            .collect();
    }
    for i in 0..rule.len() {
        let sh = rule.shells[i];
        p.edge[sh] = p.edge[sh].max(runs[i][s.depth]);
    }
    Ok(p)
}

pub fn hpsi_sup_integral(f: &QcMap, psi: &GrowthFunction, delta: f64, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    Ok(hpsi_sup_profile(f, s)?.evaluate(psi, delta))
}

pub fn boundary_lpsi(f: &QcMap, psi: &GrowthFunction, delta: f64, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    Ok(boundary_profiles(f, s)?.boundary.evaluate(psi, delta))
}

pub fn ntmax_lpsi(f: &QcMap, psi: &GrowthFunction, delta: f64, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    Ok(boundary_profiles(f, s)?.ntmax.evaluate(psi, delta))
}

pub fn maxmod_integral(f: &QcMap, psi: &GrowthFunction, delta: f64, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    Ok(maxmod_profile(f, s)?.evaluate(psi, delta))
}

pub fn area_integral(f: &QcMap, psi: &GrowthFunction, mode: AreaMode, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    Ok(area_profile(f, mode, s)?.evaluate(psi, 1.0))
}

/// `psi(f_i*)` integrated over the sphere, `i` 1-based.
pub fn component_ntmax_lpsi(f: &QcMap, i: usize, psi: &GrowthFunction, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    if i == 0 || i > f.dim {
        return Err(QcError::Parameter(format!("component {i} out of range 1..={}", f.dim)).into());
    }
    let mut b = boundary_profiles(f, s)?;
    Ok(b.components.swap_remove(i - 1).evaluate(psi, 1.0))
}

pub fn cone_af_sup_lpsi(f: &QcMap, psi: &GrowthFunction, s: &Settings) -> Result<CriterionResult, FunctionalError> {
    Ok(cone_af_profile(f, s)?.evaluate(psi, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub delta: f64,
    pub verdict: Verdict,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaScan {
    pub label: String,
    pub records: Vec<ScanRecord>,
    pub first_finite: Option<f64>,
    /// Finite if some scanned `delta` is finite, Divergent if all are.
    pub verdict: Verdict,
    /// Whether all conclusive records agree.
    pub delta_independent: bool,
    pub exhaustive: bool,
}

/// Runs a criterion for `delta` descending, stopping at the first finite
/// verdict unless `exhaustive`. Returns the scan and the result that
/// represents it (the first finite one, else the last).
pub fn delta_scan(profile: &Profile, psi: &GrowthFunction, deltas: &[f64], exhaustive: bool) -> (DeltaScan, CriterionResult) {
    let mut ds: Vec<f64> = deltas.to_vec();
    ds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut records = Vec::new();
    let mut representative = None;
    for d in ds {
        let r = profile.evaluate(psi, d);
        records.push(ScanRecord { delta: d, verdict: r.verdict, value: r.value });
        let finite = r.verdict == Verdict::Finite;
        if finite && representative.is_none() {
            representative = Some(r);
            if !exhaustive {
                break;
            }
        } else if representative.is_none() && records.len() == deltas.len() {
            representative = Some(r);
        }
    }
    let first_finite = records.iter().find(|r| r.verdict == Verdict::Finite).map(|r| r.delta);
    let verdict = if first_finite.is_some() {
        Verdict::Finite
    } else if records.iter().all(|r| r.verdict == Verdict::Divergent) {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };
    let conclusive: Vec<Verdict> = records.iter().map(|r| r.verdict).filter(|v| v.conclusive()).collect();
    let delta_independent = conclusive.windows(2).all(|w| w[0] == w[1]);
    let rep = representative.expect("at least one delta");
    (
        DeltaScan { label: profile.label.clone(), records, first_finite, verdict, delta_independent, exhaustive },
        rep,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Characterizes membership for every growth function.
    Unconditional,
    /// Characterizes membership when both `psi` and its inverse are doubling.
    Doubling,
    /// Implied by the area criterion; reported, never voted.
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionEntry {
    pub label: String,
    pub role: Role,
    pub binding: bool,
    pub verdict: Verdict,
    pub result: CriterionResult,
    pub scan: Option<DeltaScan>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    Agree,
    Disagree,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    In,
    Out,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub map: String,
    pub growth: String,
    pub dim: usize,
    pub doubling: DoublingReport,
    pub inverse_doubling: DoublingReport,
    pub entries: Vec<CriterionEntry>,
    pub labels: Vec<String>,
    pub agreement: Vec<Vec<Agreement>>,
    /// Common verdict of the conclusive unconditional criteria, if they agree.
    pub unconditional_verdict: Verdict,
    pub unconditional_consistent: bool,
    pub doubling_consistent: bool,
    /// A disagreement explained by a growth function (or inverse) that is not doubling.
    pub counterexample_regime: bool,
    pub verdict: Membership,
    pub flags: Vec<String>,
}

/// Runs every criterion, scans `delta` for the unconditional ones and
/// assembles the agreement matrix.
pub fn membership_report(f: &QcMap, psi: &GrowthFunction, s: &Settings) -> Result<MembershipReport, FunctionalError> {
    s.validate()?;
    let dg = DoublingGrid::default();
    let doubling = doubling_report(psi, dg).map_err(|e| FunctionalError::Settings(e.to_string()))?;
    let inverse_doubling = inverse_doubling_report(psi, dg).map_err(|e| FunctionalError::Settings(e.to_string()))?;
    let both = doubling.verdict == DoublingVerdict::Doubling && inverse_doubling.verdict == DoublingVerdict::Doubling;

    let bp = boundary_profiles(f, s)?;
    let unconditional = vec![hpsi_sup_profile(f, s)?, bp.boundary.clone(), bp.ntmax.clone(), maxmod_profile(f, s)?];
    let mut entries = Vec::new();
    for p in &unconditional {
        let (scan, result) = delta_scan(p, psi, &s.deltas, s.exhaustive_scan);
        entries.push(CriterionEntry {
            label: p.label.clone(),
            role: Role::Unconditional,
            binding: true,
            verdict: scan.verdict,
            result,
            scan: Some(scan),
        });
    }
    let mut conditional = Vec::new();
    if f.is_conformal() {
        conditional.push(area_profile(f, AreaMode::Analytic, s)?);
    }
    conditional.push(area_profile(f, AreaMode::Averaged, s)?);
    conditional.extend(bp.components.iter().cloned());
    for p in &conditional {
        let result = p.evaluate(psi, 1.0);
        entries.push(CriterionEntry {
            label: p.label.clone(),
            role: Role::Doubling,
            binding: both,
            verdict: result.verdict,
            result,
            scan: None,
        });
    }
    let cone = cone_af_profile(f, s)?.evaluate(psi, 1.0);
    entries.push(CriterionEntry {
        label: cone.label.clone(),
        role: Role::Auxiliary,
        binding: false,
        verdict: cone.verdict,
        result: cone,
        scan: None,
    });

    let labels: Vec<String> = entries.iter().map(|e| e.label.clone()).collect();
    let agreement: Vec<Vec<Agreement>> = entries
        .iter()
        .map(|a| {
            entries
                .iter()
                .map(|b| {
                    if !a.verdict.conclusive() || !b.verdict.conclusive() {
                        Agreement::NotApplicable
                    } else if a.verdict == b.verdict {
                        Agreement::Agree
                    } else {
                        Agreement::Disagree
                    }
                })
                .collect()
        })
        .collect();

    let group: Vec<Verdict> = entries
        .iter()
        .filter(|e| e.role == Role::Unconditional && e.verdict.conclusive())
        .map(|e| e.verdict)
        .collect();
    let unconditional_consistent = group.windows(2).all(|w| w[0] == w[1]);
    let unconditional_verdict = match (group.first(), unconditional_consistent) {
        (Some(v), true) => *v,
        _ => Verdict::Inconclusive,
    };
    let mut flags = Vec::new();
    if !unconditional_consistent {
        flags.push("unconditional criteria disagree".to_string());
    }
    let mut disagreeing = Vec::new();
    if unconditional_verdict.conclusive() {
        for e in entries.iter().filter(|e| e.role == Role::Doubling && e.verdict.conclusive()) {
            if e.verdict != unconditional_verdict {
                disagreeing.push(e.label.clone());
            }
        }
    }
    let counterexample_regime = !both && !disagreeing.is_empty();
    let doubling_consistent = !(both && !disagreeing.is_empty());
    if counterexample_regime {
        flags.push(format!(
            "counterexample regime: {} disagree with the unconditional criteria while psi or its inverse is not doubling",
            disagreeing.join(", ")
        ));
    } else if !doubling_consistent {
        flags.push(format!("{} disagree although psi and its inverse are doubling", disagreeing.join(", ")));
    }
    if let Some(area) = entries.iter().find(|e| e.label.starts_with("area_integral") && e.verdict == Verdict::Finite) {
        let cone = entries.last().unwrap();
        if cone.verdict == Verdict::Divergent && doubling.verdict == DoublingVerdict::Doubling {
            flags.push(format!("{} finite but cone_af_sup divergent", area.label));
        }
    }

    let binding: Vec<&CriterionEntry> = entries.iter().filter(|e| e.binding && e.verdict.conclusive()).collect();
    let verdict = if binding.is_empty() {
        Membership::Inconclusive
    } else if binding.iter().all(|e| e.verdict == Verdict::Finite) {
        Membership::In
    } else {
        Membership::Out
    };
    Ok(MembershipReport {
        map: f.name.clone(),
        growth: psi.name.clone(),
        dim: f.dim,
        doubling,
        inverse_doubling,
        entries,
        labels,
        agreement,
        unconditional_verdict,
        unconditional_consistent,
        doubling_consistent,
        counterexample_regime,
        verdict,
        flags,
    })
}

/// Non-centred Hardy-Littlewood maximal function of grid samples `g`:
/// the largest average over caps containing each node, with caps centred at
/// grid nodes, angular radii `pi 2^-j` (`j = 0..levels`) and the degenerate
/// cap `{omega}` itself.
pub fn hl_maximal(g: &[f64], grid: &SphereGrid, levels: usize) -> Vec<f64> {
    let n = grid.len();
    assert_eq!(g.len(), n, "one sample per grid node");
    let radii: Vec<f64> = (0..levels).map(|j| PI * 0.5f64.powi(j as i32)).collect();
    // average over the cap (centre c, radius radii[j])
    let averages: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut num = vec![0.0; radii.len()];
            let mut den = vec![0.0; radii.len()];
            for i in 0..n {
                let a = grid.nodes[c].angle_to(&grid.nodes[i]);
                for (j, r) in radii.iter().enumerate() {
                    if a <= *r {
                        num[j] += grid.weights[i] * g[i];
                        den[j] += grid.weights[i];
                    }
                }
            }
            num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect()
        })
        .collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = g[i];
            for c in 0..n {
                let a = grid.nodes[c].angle_to(&grid.nodes[i]);
                for (j, r) in radii.iter().enumerate() {
                    if a <= *r {
                        best = best.max(averages[c][j]);
                    }
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(dim: usize) -> Settings {
        let mut s = Settings::for_dim(dim);
        s.depth = 16;
        s.sphere_resolution = if dim == 2 { 256 } else { 16 };
        s
    }

    #[test]
    fn classifier_on_synthetic_sequences() {
        let s = quick(2);
        let u = s.u();
        let eps = s.eps();
        // geometric convergence
        let p: Vec<f64> = u.iter().map(|v| 1.0 - (-v).exp()).collect();
        let sums: Vec<f64> = p.iter().enumerate().map(|(k, v)| if k == 0 { *v } else { v - p[k - 1] }).collect();
        let t = increments_tail(&u, &sums);
        assert_eq!(classify(&u, &eps, &p, t, TailRule::Increments).0, Verdict::Finite);
        // log-log divergence
        let p: Vec<f64> = u.iter().map(|v| (1.0 + v).ln()).collect();
        let sums: Vec<f64> = p.iter().enumerate().map(|(k, v)| if k == 0 { *v } else { v - p[k - 1] }).collect();
        let t = increments_tail(&u, &sums);
        assert!(t.non_integrable);
        assert_eq!(classify(&u, &eps, &p, t, TailRule::Increments).0, Verdict::Divergent);
        // overflow
        let mut p: Vec<f64> = u.clone();
        *p.last_mut().unwrap() = f64::INFINITY;
        let (v, _, at) = classify(&u, &eps, &p, TailEstimate::unknown(), TailRule::Increments);
        assert_eq!(v, Verdict::Divergent);
        assert_eq!(at, Some(*eps.last().unwrap()));
    }

    #[test]
    fn identity_closed_forms() {
        let f = QcMap::identity(2).unwrap();
        let s = quick(2);
        let sq = GrowthFunction::power(2.0).unwrap();
        let h = hpsi_sup_integral(&f, &sq, 1.0, &s).unwrap();
        assert_eq!(h.verdict, Verdict::Finite);
        assert!((h.value.unwrap() - 2.0 * PI).abs() < 1e-3 * 2.0 * PI);
        let m = maxmod_integral(&f, &sq, 1.0, &s).unwrap();
        assert_eq!(m.verdict, Verdict::Finite);
        assert!((m.value.unwrap() - 1.0 / 3.0).abs() < 1e-4);
        let a = area_integral(&f, &sq, AreaMode::Averaged, &s).unwrap();
        assert_eq!(a.verdict, Verdict::Finite);
        // 2 pi int_0^1 (1-r) r dr = pi/3
        assert!((a.value.unwrap() - PI / 3.0).abs() < 1e-3);
        for r in [&h, &m, &a] {
            assert!(r.partials.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn boundary_and_ntmax_domination() {
        let s = quick(2);
        let id = GrowthFunction::identity();
        for f in [QcMap::log1p(), QcMap::parse("translate:0.3,0.2", 2).unwrap(), QcMap::mobius(2, Point::new2(0.2, 0.5)).unwrap()] {
            let b = boundary_profiles(&f, &s).unwrap();
            let rb = b.boundary.evaluate(&id, 1.0);
            let rn = b.ntmax.evaluate(&id, 1.0);
            for (x, y) in rb.partials.iter().zip(&rn.partials) {
                assert!(*y >= x * (1.0 - 1e-12), "{}: {y} < {x}", f.name);
            }
            assert_eq!(rb.verdict, Verdict::Finite, "{}", f.name);
            assert_eq!(rn.verdict, Verdict::Finite, "{}", f.name);
        }
    }

    #[test]
    fn log1p_boundary_integral_matches_1d_oracle() {
        let s = quick(2);
        let r = boundary_lpsi(&QcMap::log1p(), &GrowthFunction::identity(), 1.0, &s).unwrap();
        // oracle: int |log(1 + e^{it})| dt with the log singularity at t = pi split out
        let g = |t: f64| {
            let (re, im) = (1.0 + t.cos(), t.sin());
            (0.25 * (re * re + im * im).ln().powi(2) + im.atan2(re).powi(2)).sqrt()
        };
        let gl = GaussLegendre::new(20);
        let mut oracle = 0.0;
        let mut a = 0.0;
        for k in 0..60 {
            let b = PI - PI * 0.5f64.powi(k + 1);
            oracle += 2.0 * gl.integrate(a, b, g);
            a = b;
        }
        let cut = PI * 0.5f64.powi(60);
        let _ = cut;
        assert!((r.value.unwrap() - oracle).abs() < 1e-3 * oracle, "{} vs {oracle}", r.value.unwrap());
    }

    #[test]
    fn log1p_exp_square_diverges_for_every_delta() {
        let s = quick(2);
        let f = QcMap::log1p();
        let psi = GrowthFunction::counterexample2();
        for p in [hpsi_sup_profile(&f, &s).unwrap(), maxmod_profile(&f, &s).unwrap(), boundary_profiles(&f, &s).unwrap().boundary] {
            let (scan, _) = delta_scan(&p, &psi, &s.deltas, true);
            assert_eq!(scan.verdict, Verdict::Divergent, "{}: {:?}", p.label, scan.records);
        }
        let c = component_ntmax_lpsi(&f, 2, &psi, &s).unwrap();
        assert_eq!(c.verdict, Verdict::Finite);
        let c1 = component_ntmax_lpsi(&f, 1, &psi, &s).unwrap();
        assert_eq!(c1.verdict, Verdict::Divergent);
    }

    #[test]
    fn hl_maximal_examples() {
        let g = make_grid(2, 128).unwrap();
        let c = vec![3.0; g.len()];
        assert!(hl_maximal(&c, &g, 10).iter().all(|v| (v - 3.0).abs() < 1e-12));
        let half: Vec<f64> = g.nodes.iter().map(|p| if p[1] > 0.0 { 1.0 } else { 0.0 }).collect();
        let m = hl_maximal(&half, &g, 10);
        assert!(m.iter().zip(&half).all(|(a, b)| a >= b && *a >= 0.5 - 1e-12));
    }

    #[test]
    fn area_counterexample_values() {
        let s = quick(2);
        let a = area_integral(&QcMap::log1p(), &GrowthFunction::counterexample3(), AreaMode::Analytic, &s).unwrap();
        assert_eq!(a.verdict, Verdict::Finite);
        // psi(t) = 2e t on the relevant range, and int dx/|x+1| = int 2 cos = 4
        let raw = a.value.unwrap();
        assert!((raw / (2.0 * std::f64::consts::E) - 4.0).abs() < 0.02 * 4.0, "{raw}");
        let b = area_integral(&QcMap::identity(2).unwrap(), &GrowthFunction::counterexample1(), AreaMode::Averaged, &s).unwrap();
        assert_eq!(b.verdict, Verdict::Divergent);
        assert_eq!(b.fit.model, PartialModel::LogU);
    }

    #[test]
    fn identity_power_area_matches_radial_oracle() {
        let s = quick(2);
        let f = QcMap::identity(2).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let a = area_integral(&f, &GrowthFunction::power(p).unwrap(), AreaMode::Analytic, &s).unwrap();
            let oracle = GaussLegendre::new(40).integrate(0.0, 1.0, |r| 2.0 * PI * r * (1.0 - r).powf(p - 1.0));
            assert_eq!(a.verdict, Verdict::Finite);
            assert!((a.value.unwrap() - oracle).abs() < 1e-3 * oracle, "p={p}");
        }
    }

    #[test]
    fn cone_af_examples() {
        let s = quick(2);
        let id = GrowthFunction::identity();
        let c = cone_af_sup_lpsi(&QcMap::identity(2).unwrap(), &id, &s).unwrap();
        assert_eq!(c.verdict, Verdict::Finite);
        assert!((c.value.unwrap() - 2.0 * PI).abs() < 1e-3);
        for f in [QcMap::log1p(), QcMap::mobius(2, Point::new2(0.5, 0.0)).unwrap()] {
            let r = cone_af_sup_lpsi(&f, &id, &s).unwrap();
            assert_eq!(r.verdict, Verdict::Finite, "{}", f.name);
        }
    }

    #[test]
    fn translated_identity_ntmax_bracket() {
        let s = quick(2);
        let f = QcMap::parse("translate:0.5,0", 2).unwrap();
        let r = ntmax_lpsi(&f, &GrowthFunction::identity(), 1.0, &s).unwrap();
        let gl = GaussLegendre::new(40);
        // radial ray gives a lower bound, 1 + |y0| an upper one
        let lower = gl.integrate(0.0, 2.0 * PI, |t| ((t.cos() + 0.5).powi(2) + t.sin().powi(2)).sqrt());
        let v = r.value.unwrap();
        assert!(v >= lower * (1.0 - 1e-6) && v <= 2.0 * PI * 1.5, "{v} vs {lower}");
    }

    #[test]
    fn membership_report_regimes() {
        let s = quick(2);
        let id = QcMap::identity(2).unwrap();
        let r = membership_report(&id, &GrowthFunction::power(2.0).unwrap(), &s).unwrap();
        assert_eq!(r.verdict, Membership::In);
        assert!(r.agreement.iter().flatten().all(|a| *a == Agreement::Agree));
        assert!(!r.counterexample_regime);

        let r = membership_report(&id, &GrowthFunction::counterexample1(), &s).unwrap();
        assert_eq!(r.unconditional_verdict, Verdict::Finite);
        assert!(r.counterexample_regime);
        assert!(r.entries.iter().filter(|e| e.label.starts_with("area")).all(|e| e.verdict == Verdict::Divergent));

        let r = membership_report(&QcMap::log1p(), &GrowthFunction::counterexample3(), &s).unwrap();
        assert_eq!(r.unconditional_verdict, Verdict::Divergent);
        assert_eq!(r.verdict, Membership::Out);
        assert!(r.counterexample_regime);
        assert!(r.entries.iter().filter(|e| e.label.starts_with("area")).all(|e| e.verdict == Verdict::Finite));
    }

    #[test]
    fn scan_stops_at_first_finite() {
        let s = quick(2);
        let p = boundary_profiles(&QcMap::log1p(), &s).unwrap().boundary;
        let (scan, rep) = delta_scan(&p, &GrowthFunction::identity(), &s.deltas, false);
        assert_eq!(scan.records.len(), 1);
        assert_eq!(scan.first_finite, Some(1.0));
        assert_eq!(rep.delta, Some(1.0));
        let (scan, _) = delta_scan(&p, &GrowthFunction::power(2.0).unwrap(), &s.deltas, true);
        assert_eq!(scan.records.len(), s.deltas.len());
        assert!(scan.delta_independent);
    }

    #[test]
    fn three_dimensional_identity() {
        let s = quick(3);
        let f = QcMap::identity(3).unwrap();
        let sq = GrowthFunction::power(2.0).unwrap();
        let h = hpsi_sup_integral(&f, &sq, 1.0, &s).unwrap();
        assert!((h.value.unwrap() - 4.0 * PI).abs() < 1e-3 * 4.0 * PI);
        // int_0^1 (1-r) r^2 dr = 1/12
        let m = maxmod_integral(&f, &sq, 1.0, &s).unwrap();
        assert!((m.value.unwrap() - 1.0 / 12.0).abs() < 1e-4);
        assert_eq!(m.verdict, Verdict::Finite);
    }
}
