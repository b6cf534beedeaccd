//! Growth functions: strictly increasing maps `[0, inf] -> [0, inf]` vanishing
//! at zero, together with the doubling diagnostics used to decide which
//! membership criteria are interchangeable.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::sync::Arc;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("growth function evaluated at negative argument {0}")]
    Domain(f64),
    #[error("value {0} is beyond the numeric range of the growth function")]
    Overflow(f64),
    #[error("malformed growth function: {0}")]
    Malformed(String),
    #[error("unknown growth function `{0}`")]
    Unknown(String),
    #[error("no exponents up to {cap} satisfy the two-term bound")]
    NoExponents { cap: u32 },
}

/// The closed-form family a growth function belongs to.
#[derive(Clone, Debug)]
pub enum GrowthKind {
    Identity,
    Power(f64),
    /// `1/log(1/t)` below one half, `2t/log 2` above.
    LogBelowHalf,
    /// `e^{t^2} - 1`.
    ExpSquare,
    /// `2et` up to one, `e^{t^2} + e` above.
    LinearThenExpSquare,
    Expression(Arc<Piecewise>),
}

/// A user expression in the variable `t`, optionally split at breakpoints.
#[derive(Debug)]
pub struct Piecewise {
    source: String,
    pieces: Vec<Node<DefaultNumericTypes>>,
    breaks: Vec<f64>,
}

impl Piecewise {
    /// Parses `e0` or `e0;b1;e1;b2;e2...` where `e_k` applies on `[b_k, b_{k+1})`.
    pub fn parse(source: &str) -> Result<Self, GrowthError> {
        let parts: Vec<&str> = source.split(';').map(str::trim).collect();
        if parts.len() % 2 == 0 {
            return Err(GrowthError::Malformed(format!(
                "piecewise spec `{source}` must alternate expressions and breakpoints"
            )));
        }
        let mut pieces = Vec::new();
        let mut breaks = Vec::new();
        for (i, part) in parts.iter().enumerate() {
            if i % 2 == 0 {
                let node = evalexpr::build_operator_tree::<DefaultNumericTypes>(part)
                    .map_err(|e| GrowthError::Malformed(format!("`{part}`: {e}")))?;
                pieces.push(node);
            } else {
                let b: f64 = part
                    .parse()
                    .map_err(|_| GrowthError::Malformed(format!("bad breakpoint `{part}`")))?;
                if breaks.last().is_some_and(|&prev| b <= prev) || b <= 0.0 {
                    return Err(GrowthError::Malformed("breakpoints must increase".into()));
                }
                breaks.push(b);
            }
        }
        Ok(Piecewise { source: source.to_string(), pieces, breaks })
    }

    fn eval(&self, t: f64) -> f64 {
        let idx = self.breaks.iter().take_while(|&&b| t >= b).count();
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        if ctx.set_value("t".into(), Value::from_float(t)).is_err() {
            return f64::NAN;
        }
        match self.pieces[idx].eval_with_context(&ctx) {
            Ok(Value::Float(v)) => v,
            Ok(Value::Int(v)) => v as f64,
            _ => f64::NAN,
        }
    }
}

/// Derivative value; `one_sided` is set when `t` sits on a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub value: f64,
    pub one_sided: bool,
    pub analytic: bool,
}

#[derive(Clone, Debug)]
pub struct GrowthFunction {
    pub kind: GrowthKind,
    pub name: String,
}

impl fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl GrowthFunction {
    pub fn identity() -> Self {
        GrowthFunction { kind: GrowthKind::Identity, name: "identity".into() }
    }

    pub fn power(p: f64) -> Result<Self, GrowthError> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(GrowthError::Malformed(format!("power exponent must be positive, got {p}")));
        }
        Ok(GrowthFunction { kind: GrowthKind::Power(p), name: format!("power:{p}") })
    }

    /// Powers `t^{1/2}, t, t^2` and the three counterexample functions.
    pub fn builtins() -> Vec<GrowthFunction> {
        vec![
            GrowthFunction::identity(),
            GrowthFunction::power(0.5).unwrap(),
            GrowthFunction::power(2.0).unwrap(),
            GrowthFunction::counterexample1(),
            GrowthFunction::counterexample2(),
            GrowthFunction::counterexample3(),
        ]
    }

    pub fn counterexample1() -> Self {
        GrowthFunction { kind: GrowthKind::LogBelowHalf, name: "counterexample1".into() }
    }

    pub fn counterexample2() -> Self {
        GrowthFunction { kind: GrowthKind::ExpSquare, name: "counterexample2".into() }
    }

    pub fn counterexample3() -> Self {
        GrowthFunction { kind: GrowthKind::LinearThenExpSquare, name: "counterexample3".into() }
    }

    /// Builds a growth function from an expression spec and checks that it
    /// vanishes at zero and increases on a sample grid.
    pub fn expression(source: &str) -> Result<Self, GrowthError> {
        let pw = Piecewise::parse(source)?;
        let g = GrowthFunction {
            name: format!("piecewise:{}", pw.source),
            kind: GrowthKind::Expression(Arc::new(pw)),
        };
        let at0 = match &g.kind {
            GrowthKind::Expression(pw) => pw.eval(0.0),
            _ => 0.0,
        };
        if !(at0.abs() <= 1e-12) {
            return Err(GrowthError::Malformed(format!("psi(0) = {at0}, expected 0")));
        }
        let mut prev = at0;
        for i in 0..=400 {
            let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 400.0);
            let v = g.value(t);
            if !(v > prev) && v.is_finite() {
                return Err(GrowthError::Malformed(format!("not strictly increasing near t = {t}")));
            }
            if v.is_nan() {
                return Err(GrowthError::Malformed(format!("undefined at t = {t}")));
            }
            prev = v;
        }
        Ok(g)
    }

    /// Parses a CLI token: `identity`, `power:p`, `counterexample1..3`,
    /// `expr:<e>` or `piecewise:<e0;b1;e1...>`.
    pub fn parse(token: &str) -> Result<Self, GrowthError> {
        let token = token.trim();
        match token {
            "identity" => return Ok(Self::identity()),
            "counterexample1" => return Ok(Self::counterexample1()),
            "counterexample2" => return Ok(Self::counterexample2()),
            "counterexample3" => return Ok(Self::counterexample3()),
            _ => {}
        }
        if let Some(p) = token.strip_prefix("power:") {
            let p: f64 = p.parse().map_err(|_| GrowthError::Unknown(token.into()))?;
            return Self::power(p);
        }
        if let Some(e) = token.strip_prefix("expr:").or_else(|| token.strip_prefix("piecewise:")) {
            return Self::expression(e);
        }
        Err(GrowthError::Unknown(token.into()))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            GrowthKind::LogBelowHalf => vec![0.5],
            GrowthKind::LinearThenExpSquare => vec![1.0],
            GrowthKind::Expression(pw) => pw.breaks.clone(),
            _ => Vec::new(),
        }
    }

    /// `psi(t)` without argument checks; `t` must be nonnegative.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return f64::INFINITY;
        }
        match &self.kind {
            GrowthKind::Identity => t,
            GrowthKind::Power(p) => t.powf(*p),
            GrowthKind::LogBelowHalf => {
                if t < 0.5 {
                    -1.0 / t.ln()
                } else {
                    2.0 * t / LN_2
                }
            }
            GrowthKind::ExpSquare => (t * t).exp_m1(),
            GrowthKind::LinearThenExpSquare => {
                if t <= 1.0 {
                    2.0 * E * t
                } else {
                    (t * t).exp() + E
                }
            }
            GrowthKind::Expression(pw) => pw.eval(t),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, GrowthError> {
        if t < 0.0 || t.is_nan() {
            return Err(GrowthError::Domain(t));
        }
        Ok(self.value(t))
    }

    /// `ln psi(e^lt)`, finite or `+inf`, computed without forming `psi` when it
    /// would overflow.
    pub fn ln_value_at_ln(&self, lt: f64) -> f64 {
        if lt == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if lt == f64::INFINITY {
            return f64::INFINITY;
        }
        let t = lt.exp();
        match &self.kind {
            GrowthKind::Identity => lt,
            GrowthKind::Power(p) => p * lt,
            GrowthKind::LogBelowHalf => {
                if t < 0.5 {
                    -(-lt).ln()
                } else {
                    (2.0 / LN_2).ln() + lt
                }
            }
            GrowthKind::ExpSquare => {
                let s = (2.0 * lt).exp();
                if s < 1e-300 {
                    2.0 * lt
                } else if s > 30.0 {
                    s + (-(-s).exp()).ln_1p()
                } else {
                    s.exp_m1().ln()
                }
            }
            GrowthKind::LinearThenExpSquare => {
                if t <= 1.0 {
                    (2.0 * E).ln() + lt
                } else {
                    let s = (2.0 * lt).exp();
                    s + (1.0 - s).exp().ln_1p()
                }
            }
            GrowthKind::Expression(pw) => pw.eval(t).ln(),
        }
    }

    fn analytic_derivative(&self, t: f64) -> Option<f64> {
        Some(match &self.kind {
            GrowthKind::Identity => 1.0,
            GrowthKind::Power(p) => p * t.powf(p - 1.0),
            GrowthKind::LogBelowHalf => {
                if t < 0.5 {
                    let l = t.ln();
                    1.0 / (t * l * l)
                } else {
                    2.0 / LN_2
                }
            }
            GrowthKind::ExpSquare => 2.0 * t * (t * t).exp(),
            GrowthKind::LinearThenExpSquare => {
                if t <= 1.0 {
                    2.0 * E
                } else {
                    2.0 * t * (t * t).exp()
                }
            }
            GrowthKind::Expression(_) => return None,
        })
    }

    /// `psi'(t)`: analytic where a closed form exists, otherwise a central
    /// difference with step `max(1e-6, 1e-6 t)`. On a breakpoint the
    /// right-sided derivative is returned and flagged.
    pub fn derivative(&self, t: f64) -> Result<Derivative, GrowthError> {
        if !(t > 0.0) {
            return Err(GrowthError::Domain(t));
        }
        let h = (1e-6 * t).max(1e-6);
        if let Some(b) = self.breakpoints().into_iter().find(|&b| (t - b).abs() <= h) {
            let analytic = self.analytic_derivative(b).is_some();
            let value = if analytic {
                // right branch just past the joint
                self.analytic_derivative(b * (1.0 + 1e-12)).unwrap_or(f64::NAN)
            } else {
                (self.value(b + h) - self.value(b)) / h
            };
            return Ok(Derivative { value, one_sided: true, analytic });
        }
        if let Some(v) = self.analytic_derivative(t) {
            return Ok(Derivative { value: v, one_sided: false, analytic: true });
        }
        let lo = (t - h).max(0.0);
        let value = (self.value(t + h) - self.value(lo)) / (t + h - lo);
        Ok(Derivative { value, one_sided: false, analytic: false })
    }

    fn analytic_inverse(&self, y: f64) -> Option<f64> {
        Some(match &self.kind {
            GrowthKind::Identity => y,
            GrowthKind::Power(p) => y.powf(1.0 / p),
            GrowthKind::LogBelowHalf => {
                if y < 1.0 / LN_2 {
                    (-1.0 / y).exp()
                } else {
                    y * LN_2 / 2.0
                }
            }
            GrowthKind::ExpSquare => y.ln_1p().sqrt(),
            GrowthKind::LinearThenExpSquare => {
                if y <= 2.0 * E {
                    y / (2.0 * E)
                } else {
                    (y - E).ln().sqrt()
                }
            }
            GrowthKind::Expression(_) => return None,
        })
    }

    /// `psi^{-1}(y)` with `|psi(t) - y| <= 1e-10 max(1, y)`.
    pub fn inverse(&self, y: f64) -> Result<f64, GrowthError> {
        if y < 0.0 || y.is_nan() {
            return Err(GrowthError::Domain(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if y == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        if let Some(t) = self.analytic_inverse(y) {
            return Ok(t);
        }
        let mut hi = 1.0;
        let mut grow = 0;
        while self.value(hi) < y {
            hi *= 2.0;
            grow += 1;
            if grow > 2000 || !hi.is_finite() {
                return Err(GrowthError::Overflow(y));
            }
        }
        let mut lo = 0.0;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoublingVerdict {
    Doubling,
    NotDoubling,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for DoublingGrid {
    fn default() -> Self {
        DoublingGrid { t_min: 1e-9, t_max: 1e9, samples: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub name: String,
    /// `None` when the sampled ratio is unbounded (serialized as `null`).
    pub constant_estimate: Option<f64>,
    pub verdict: DoublingVerdict,
    pub witness_t: f64,
    pub grid: DoublingGrid,
}

/// Ratio `psi(2t)/psi(t)` above which a monotone tail counts as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

fn sampled_ratios<F: Fn(f64) -> f64>(f: &F, grid: DoublingGrid) -> Vec<(f64, f64)> {
    let (a, b) = (grid.t_min.ln(), grid.t_max.ln());
    (0..grid.samples)
        .filter_map(|i| {
            let t = (a + (b - a) * i as f64 / (grid.samples - 1) as f64).exp();
            let lo = f(t);
            let hi = f(2.0 * t);
            if (lo == 0.0 && hi == 0.0) || (lo.is_infinite() && hi.is_infinite()) {
                // saturated at the end of the floating-point range
                return None;
            }
            let r = if lo == 0.0 { f64::INFINITY } else { hi / lo };
            Some((t, r))
        })
        .collect()
}

fn tail_blows_up(points: &[(f64, f64)]) -> bool {
    if points.len() < 2 {
        return false;
    }
    let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12));
    monotone && points.last().map(|p| p.1 > BLOW_UP_THRESHOLD).unwrap_or(false)
}

/// Doubling scan of an arbitrary increasing function.
pub fn doubling_scan<F: Fn(f64) -> f64>(
    f: F,
    name: &str,
    grid: DoublingGrid,
) -> Result<DoublingReport, GrowthError> {
    if !(grid.t_min > 0.0 && grid.t_min < grid.t_max) || grid.samples < 16 {
        return Err(GrowthError::Malformed("doubling grid needs 0 < t_min < t_max and >= 16 samples".into()));
    }
    let pts = sampled_ratios(&f, grid);
    if pts.is_empty() || pts.iter().all(|p| p.1.is_nan()) {
        return Err(GrowthError::Malformed(format!("{name} vanishes on the whole grid")));
    }
    if pts.iter().any(|p| p.1.is_nan() || p.1 < 1.0 - 1e-9) {
        return Err(GrowthError::Malformed(format!("{name} is not increasing on the grid")));
    }
    let (wt, wr) = pts
        .iter()
        .copied()
        .fold((pts[0].0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });

    let first = pts[0].0;
    let last = pts[pts.len() - 1].0;
    let upper: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= last / 10.0).collect();
    let mut lower: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 <= first * 10.0).collect();
    lower.reverse();
    let blow_up = tail_blows_up(&upper) || tail_blows_up(&lower);

    let (verdict, constant) = if blow_up {
        (DoublingVerdict::NotDoubling, if wr.is_finite() { Some(wr) } else { None })
    } else {
        let fine = DoublingGrid { samples: 2 * grid.samples, ..grid };
        let refined = sampled_ratios(&f, fine).into_iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let stable = wr.is_finite() && refined.is_finite() && (refined - wr).abs() <= 0.01 * wr;
        let verdict = if stable { DoublingVerdict::Doubling } else { DoublingVerdict::Inconclusive };
        (verdict, if refined.is_finite() { Some(refined.max(wr)) } else { None })
    };
    Ok(DoublingReport {
        name: name.to_string(),
        constant_estimate: constant.map(|c| c.max(1.0)),
        verdict,
        witness_t: wt,
        grid,
    })
}

pub fn doubling_report(psi: &GrowthFunction, grid: DoublingGrid) -> Result<DoublingReport, GrowthError> {
    doubling_scan(|t| psi.value(t), &psi.name, grid)
}

pub fn inverse_doubling_report(psi: &GrowthFunction, grid: DoublingGrid) -> Result<DoublingReport, GrowthError> {
    doubling_scan(|y| psi.inverse(y).unwrap_or(f64::NAN), &format!("inverse of {}", psi.name), grid)
}

/// Both `psi` and its inverse classified as doubling on the default grid.
pub fn is_doubling_both_ways(psi: &GrowthFunction) -> bool {
    let g = DoublingGrid::default();
    matches!(doubling_report(psi, g).map(|r| r.verdict), Ok(DoublingVerdict::Doubling))
        && matches!(inverse_doubling_report(psi, g).map(|r| r.verdict), Ok(DoublingVerdict::Doubling))
}

/// Smallest integer exponents `p, q <= cap` with
/// `psi(a)/psi(b) <= 2^p ((a/b)^p + (a/b)^{1/q})` on a sampled `(a, b)` grid.
pub fn scaled_bound_exponents(psi: &GrowthFunction, cap: u32) -> Result<(u32, u32), GrowthError> {
    let grid: Vec<f64> = (0..=48).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 48.0)).collect();
    let lpsi: Vec<f64> = grid.iter().map(|t| psi.ln_value_at_ln(t.ln())).collect();
    let holds = |p: u32, q: u32| {
        grid.iter().enumerate().all(|(i, a)| {
            grid.iter().enumerate().all(|(j, b)| {
                let l = (a / b).ln();
                let lhs = lpsi[i] - lpsi[j];
                let x1 = p as f64 * l;
                let x2 = l / q as f64;
                let m = x1.max(x2);
                let rhs = p as f64 * LN_2 + m + ((x1 - m).exp() + (x2 - m).exp()).ln();
                lhs <= rhs + 1e-12 * rhs.abs().max(1.0)
            })
        })
    };
    for p in 1..=cap {
        if let Some(q) = (1..=cap).find(|&q| holds(p, q)) {
            return Ok((p, q));
        }
    }
    Err(GrowthError::NoExponents { cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> Vec<GrowthFunction> {
        GrowthFunction::builtins()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(GrowthFunction::power(2.0).unwrap().eval(3.0).unwrap(), 9.0);
        let c1 = GrowthFunction::counterexample1();
        assert!((c1.eval(0.5).unwrap() - 1.0 / LN_2).abs() < 1e-15);
        assert!((c1.value(0.5 - 1e-15) - 1.0 / LN_2).abs() < 1e-12);
        let c3 = GrowthFunction::counterexample3();
        assert!((c3.eval(1.0).unwrap() - 2.0 * E).abs() < 1e-15);
        assert!(((c3.value(1.0 + 1e-13) - 2.0 * E) / (2.0 * E)).abs() < 1e-12);
        assert!(matches!(c3.eval(-1.0), Err(GrowthError::Domain(_))));
        assert_eq!(c3.eval(f64::INFINITY).unwrap(), f64::INFINITY);
    }

    #[test]
    fn derivative_examples() {
        let d = GrowthFunction::power(2.0).unwrap().derivative(3.0).unwrap();
        assert_eq!(d.value, 6.0);
        let d2 = GrowthFunction::counterexample2().derivative(1.0).unwrap();
        assert!((d2.value - 2.0 * E).abs() < 1e-12);
        // finite-difference oracle for the log branch
        let c1 = GrowthFunction::counterexample1();
        let h = 1e-6;
        let fd = (c1.value(0.25 + h) - c1.value(0.25 - h)) / (2.0 * h);
        let d1 = c1.derivative(0.25).unwrap();
        assert!((d1.value - fd).abs() / fd < 1e-8);
        assert!((d1.value - 2.081369).abs() < 1e-5);
        let corner = c1.derivative(0.5).unwrap();
        assert!(corner.one_sided);
        assert!((corner.value - 2.0 / LN_2).abs() < 1e-9);
    }

    #[test]
    fn analytic_derivative_agrees_with_finite_difference() {
        for g in builtins() {
            for &t in &[0.05, 0.3, 0.8, 1.7, 2.5] {
                if g.breakpoints().iter().any(|b| (b - t).abs() < 1e-3) {
                    continue;
                }
                let h = (1e-6 * t).max(1e-6);
                let fd = (g.value(t + h) - g.value(t - h)) / (2.0 * h);
                let d = g.derivative(t).unwrap().value;
                assert!((d - fd).abs() <= 1e-4 * d.abs(), "{} at {t}: {d} vs {fd}", g.name);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(GrowthFunction::power(2.0).unwrap().inverse(4.0).unwrap(), 2.0);
        assert!((GrowthFunction::counterexample3().inverse(2.0 * E).unwrap() - 1.0).abs() < 1e-15);
        for g in builtins() {
            assert_eq!(g.inverse(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn expression_growth_function() {
        let g = GrowthFunction::parse("piecewise:2*t;1;t*t+1").unwrap();
        assert!((g.value(0.5) - 1.0).abs() < 1e-15);
        assert!((g.value(2.0) - 5.0).abs() < 1e-15);
        let t = g.inverse(3.0).unwrap();
        assert!((g.value(t) - 3.0).abs() <= 1e-10 * 3.0);
        let d = g.derivative(2.0).unwrap();
        assert!(!d.analytic && (d.value - 4.0).abs() < 1e-4);
        assert!(GrowthFunction::parse("expr:t+1").is_err());
        assert!(GrowthFunction::parse("expr:1-t").is_err());
        assert!(GrowthFunction::parse("nonsense").is_err());
    }

    #[test]
    fn ln_value_matches_value() {
        for g in builtins() {
            for &t in &[1e-5, 0.1, 0.49, 0.7, 1.0, 3.0, 10.0] {
                let direct = g.value(t).ln();
                let via = g.ln_value_at_ln(t.ln());
                assert!((direct - via).abs() <= 1e-9 * direct.abs().max(1.0), "{} at {t}", g.name);
            }
        }
        assert!(GrowthFunction::counterexample2().ln_value_at_ln(400.0).is_infinite());
        assert!((GrowthFunction::counterexample2().ln_value_at_ln(3.0) - (6f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn doubling_classification_of_builtins() {
        let g = DoublingGrid::default();
        let v = |r: Result<DoublingReport, GrowthError>| r.unwrap().verdict;
        use DoublingVerdict::*;
        for p in [0.5, 1.0, 2.0, 3.0] {
            let psi = GrowthFunction::power(p).unwrap();
            let r = doubling_report(&psi, g).unwrap();
            assert_eq!(r.verdict, Doubling);
            assert!((r.constant_estimate.unwrap() - 2f64.powf(p)).abs() < 1e-9);
            let ri = inverse_doubling_report(&psi, g).unwrap();
            assert_eq!(ri.verdict, Doubling);
            assert!((ri.constant_estimate.unwrap() - 2f64.powf(1.0 / p)).abs() < 1e-9);
        }
        let id = inverse_doubling_report(&GrowthFunction::identity(), g).unwrap();
        assert_eq!(id.verdict, Doubling);
        assert!((id.constant_estimate.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(v(doubling_report(&GrowthFunction::counterexample1(), g)), Doubling);
        assert_eq!(v(inverse_doubling_report(&GrowthFunction::counterexample1(), g)), NotDoubling);
        assert_eq!(v(doubling_report(&GrowthFunction::counterexample2(), g)), NotDoubling);
        assert_eq!(v(doubling_report(&GrowthFunction::counterexample3(), g)), NotDoubling);
        let small = DoublingGrid { t_min: 1e-3, t_max: 100.0, samples: 256 };
        assert_eq!(v(doubling_report(&GrowthFunction::counterexample2(), small)), NotDoubling);
    }

    #[test]
    fn doubling_constant_is_at_least_one() {
        for psi in builtins() {
            let r = doubling_report(&psi, DoublingGrid::default()).unwrap();
            if let Some(c) = r.constant_estimate {
                assert!(c >= 1.0);
            }
        }
    }

    #[test]
    fn doubling_report_rejects_bad_grid() {
        let g = DoublingGrid { t_min: 1.0, t_max: 0.5, samples: 32 };
        assert!(doubling_report(&GrowthFunction::identity(), g).is_err());
        let z = doubling_scan(|_| 0.0, "zero", DoublingGrid::default());
        assert!(matches!(z, Err(GrowthError::Malformed(_))));
    }

    #[test]
    fn scaled_bound_exponent_examples() {
        assert_eq!(scaled_bound_exponents(&GrowthFunction::identity(), 16).unwrap(), (1, 1));
        assert_eq!(scaled_bound_exponents(&GrowthFunction::power(2.0).unwrap(), 16).unwrap().0, 2);
        assert_eq!(scaled_bound_exponents(&GrowthFunction::power(0.5).unwrap(), 16).unwrap(), (1, 2));
        assert!(scaled_bound_exponents(&GrowthFunction::counterexample2(), 16).is_err());
    }

    #[test]
    fn doubling_iteration_property() {
        for psi in builtins() {
            let r = doubling_report(&psi, DoublingGrid::default()).unwrap();
            if r.verdict != DoublingVerdict::Doubling {
                continue;
            }
            let c = r.constant_estimate.unwrap();
            for &t in &[1e-6, 1e-3, 0.2, 1.0, 30.0] {
                for &s in &[1.0f64, 1.5, 3.0, 10.0, 100.0] {
                    let k = s.log2().ceil().max(0.0) as i32;
                    assert!(psi.value(s * t) <= c.powi(k) * psi.value(t) * (1.0 + 1e-12));
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone(i in 0usize..6, s in 1e-6f64..50.0, frac in 1e-6f64..1.0) {
                let g = &builtins()[i];
                let t = s * (1.0 + frac);
                prop_assert!(g.value(s) < g.value(t) || g.value(s).is_infinite());
            }

            #[test]
            fn round_trip(i in 0usize..6, lt in -9.0f64..1.3) {
                let g = &builtins()[i];
                let t = 10f64.powf(lt);
                let back = g.inverse(g.value(t)).unwrap();
                prop_assert!((back - t).abs() <= 1e-8 * t.max(1.0));
            }
        }
    }
}
