//! Conformal (n-)modulus of curve families: closed forms and a discrete
//! convex-programming estimator.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::Point;
use crate::qcmaps::{QcError, QcMap};
use crate::sphere::{cap_area, sphere_measure, Cap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("invalid family: {0}")]
    Family(String),
    #[error("invalid solver parameters: {0}")]
    Params(String),
    #[error("curve vertex {0:?} lies outside the closed unit ball")]
    OutsideDomain([f64; 3]),
    #[error(transparent)]
    Map(#[from] QcError),
}

/// `sigma(E) (log 1/r)^{1-n}`: modulus of the radial segments from `r E` to `E`.
pub fn exact_radial_modulus(sigma_e: f64, r: f64, dim: usize) -> f64 {
    sigma_e * (1.0 / r).ln().powi(1 - dim as i32)
}

/// `omega_{n-1} (log R/r)^{1-n}`, exact for the family joining concentric spheres.
pub fn ring_modulus_upper(r: f64, big_r: f64, dim: usize) -> f64 {
    sphere_measure(dim) * (big_r / r).ln().powi(1 - dim as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    Radial { cap: Cap, r_inner: f64 },
    Ring { center: Point, r: f64, big_r: f64 },
    Image { map: String, source: Box<Generator> },
    Polylines,
}

/// A polyline; `anchors[j]` is the index of the `j`-th generating vertex
/// after refinement, so image curves keep correspondence with preimages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<Point>,
    pub anchors: Vec<usize>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Self {
        let anchors = (0..points.len()).collect();
        Curve { points, anchors }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub dim: usize,
    pub generator: Generator,
    pub curves: Vec<Curve>,
}

fn fibonacci_sphere(count: usize) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let s = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Point::new3(s * phi.cos(), s * phi.sin(), z)
        })
        .collect()
}

/// About `count` directions spread evenly over a cap.
fn cap_directions(dim: usize, cap: &Cap, count: usize) -> Vec<Point> {
    let c = cap.center.normalized();
    let a = cap.angular_radius;
    if dim == 2 {
        let theta0 = c[1].atan2(c[0]);
        return (0..count)
            .map(|i| {
                let t = if a >= PI {
                    theta0 + 2.0 * PI * i as f64 / count as f64
                } else {
                    theta0 - a + 2.0 * a * (i as f64 + 0.5) / count as f64
                };
                Point::new2(t.cos(), t.sin())
            })
            .collect();
    }
    let fraction = cap_area(3, a) / sphere_measure(3);
    let total = ((count as f64 / fraction).ceil() as usize).max(count);
    fibonacci_sphere(total).into_iter().filter(|p| p.angle_to(&c) <= a).collect()
}

fn segment(a: Point, b: Point, vertices: usize) -> Curve {
    let m = vertices.max(2);
    Curve::new((0..m).map(|j| a + (b - a) * (j as f64 / (m - 1) as f64)).collect())
}

const VERTICES: usize = 33;

impl CurveFamily {
    fn check_dim(dim: usize) -> Result<(), ModulusError> {
        if dim == 2 || dim == 3 {
            Ok(())
        } else {
            Err(ModulusError::Family(format!("dimension {dim} unsupported")))
        }
    }

    /// Radial segments from `r_inner omega` to `omega`, `omega` in the cap.
    pub fn radial(dim: usize, cap: Cap, r_inner: f64, count: usize) -> Result<Self, ModulusError> {
        Self::check_dim(dim)?;
        if !(r_inner > 0.0 && r_inner < 1.0) || !(cap.angular_radius > 0.0) || count == 0 {
            return Err(ModulusError::Family("radial family needs 0 < r < 1, a nonempty cap and curves".into()));
        }
        let curves = cap_directions(dim, &cap, count)
            .into_iter()
            .map(|w| segment(w * r_inner, w, VERTICES))
            .collect();
        Ok(CurveFamily { dim, generator: Generator::Radial { cap, r_inner }, curves })
    }

    /// Radial segments joining the spheres of radii `r < big_r` about `center`.
    pub fn ring(dim: usize, center: Point, r: f64, big_r: f64, count: usize) -> Result<Self, ModulusError> {
        Self::check_dim(dim)?;
        if !(r > 0.0 && big_r > r) || count == 0 {
            return Err(ModulusError::Family("ring family needs 0 < r < R and curves".into()));
        }
        let full = Cap { center: Point::e1(), angular_radius: PI };
        let curves = cap_directions(dim, &full, count)
            .into_iter()
            .map(|w| segment(center + w * r, center + w * big_r, VERTICES))
            .collect();
        Ok(CurveFamily { dim, generator: Generator::Ring { center, r, big_r }, curves })
    }

    pub fn polylines(dim: usize, curves: Vec<Vec<Point>>) -> Result<Self, ModulusError> {
        Self::check_dim(dim)?;
        let curves: Vec<Curve> = curves.into_iter().map(Curve::new).collect();
        if curves.is_empty() || curves.iter().any(|c| c.points.len() < 2 || !(c.length() > 0.0)) {
            return Err(ModulusError::Family("every curve needs positive length".into()));
        }
        Ok(CurveFamily { dim, generator: Generator::Polylines, curves })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Closed-form modulus of the continuum family, when known.
    pub fn exact_reference(&self) -> Option<f64> {
        match &self.generator {
            Generator::Radial { cap, r_inner } => Some(exact_radial_modulus(cap.measure(self.dim), *r_inner, self.dim)),
            Generator::Ring { r, big_r, .. } => Some(ring_modulus_upper(*r, *big_r, self.dim)),
            _ => None,
        }
    }

    pub fn subfamily(&self, indices: &[usize]) -> CurveFamily {
        CurveFamily {
            dim: self.dim,
            generator: Generator::Polylines,
            curves: indices.iter().map(|i| self.curves[*i].clone()).collect(),
        }
    }

    /// Dilation by `lambda` about the origin.
    pub fn scaled(&self, lambda: f64) -> CurveFamily {
        CurveFamily {
            dim: self.dim,
            generator: Generator::Polylines,
            curves: self
                .curves
                .iter()
                .map(|c| Curve { points: c.points.iter().map(|p| *p * lambda).collect(), anchors: c.anchors.clone() })
                .collect(),
        }
    }

    fn bbox(&self) -> (Point, Point) {
        let mut lo = Point([f64::INFINITY; 3]);
        let mut hi = Point([f64::NEG_INFINITY; 3]);
        for p in self.curves.iter().flat_map(|c| &c.points) {
            for d in 0..self.dim {
                lo.0[d] = lo.0[d].min(p[d]);
                hi.0[d] = hi.0[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    fn spacing(&self) -> f64 {
        self.curves
            .iter()
            .flat_map(|c| c.points.windows(2).map(|w| w[0].dist(&w[1])))
            .fold(0.0, f64::max)
    }
}

/// Image family `f Gamma`, subdividing segments whose image is longer than
/// the source spacing.
pub fn map_family(f: &QcMap, family: &CurveFamily) -> Result<CurveFamily, ModulusError> {
    if f.dim != family.dim {
        return Err(ModulusError::Family(format!("map dimension {} differs from family dimension {}", f.dim, family.dim)));
    }
    let h = family.spacing();
    let image = |x: &Point| -> Result<Point, ModulusError> {
        if x.norm() > 1.0 + 1e-12 {
            return Err(ModulusError::OutsideDomain(x.0));
        }
        let y = f.eval(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QcError::Domain(*x).into())
        }
    };
    let curves: Result<Vec<Curve>, ModulusError> = family
        .curves
        .par_iter()
        .map(|c| {
            let mut points = vec![image(&c.points[0])?];
            let mut anchors = vec![0];
            for w in c.points.windows(2) {
                refine(&image, w[0], w[1], points[points.len() - 1], h, 0, &mut points)?;
                anchors.push(points.len() - 1);
            }
            Ok(Curve { points, anchors })
        })
        .collect();
    let source = Box::new(family.generator.clone());
    Ok(CurveFamily { dim: family.dim, generator: Generator::Image { map: f.name.clone(), source }, curves: curves? })
}

fn refine(
    image: &dyn Fn(&Point) -> Result<Point, ModulusError>,
    a: Point,
    b: Point,
    fa: Point,
    h: f64,
    depth: usize,
    out: &mut Vec<Point>,
) -> Result<(), ModulusError> {
    let fb = image(&b)?;
    if fa.dist(&fb) <= h || depth >= 16 {
        out.push(fb);
        return Ok(());
    }
    let m = (a + b) * 0.5;
    refine(image, a, m, fa, h, depth + 1, out)?;
    let fm = out[out.len() - 1];
    refine(image, m, b, fm, h, depth + 1, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Cells along the longest side of the bounding box.
    pub resolution: usize,
    pub max_iterations: usize,
    /// Stop once the relative duality gap falls below this.
    pub tolerance: f64,
}

impl SolverParams {
    pub fn for_dim(dim: usize) -> Self {
        SolverParams { resolution: if dim == 2 { 256 } else { 48 }, max_iterations: 4000, tolerance: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub origin: [f64; 3],
    pub cell_size: f64,
    pub shape: [usize; 3],
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    /// Objective at the best admissible density: an upper bound for the discrete problem.
    pub value: f64,
    /// Best dual objective: a lower bound for the discrete problem.
    pub lower_bound: f64,
    pub exact_reference: Option<f64>,
    pub relative_error: Option<f64>,
    pub grid: GridInfo,
    pub curves: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest `int_gamma rho ds` over the curves for the reported density.
    pub min_length: f64,
    /// Best primal value after each iteration.
    pub history: Vec<f64>,
    #[serde(skip)]
    pub rho: Vec<f64>,
}

struct Incidence {
    grid: GridInfo,
    rows: Vec<Vec<(u32, f64)>>,
    vol: f64,
}

/// Exact clipping of a segment against the cells it crosses.
fn traverse(p: &[f64; 3], q: &[f64; 3], g: &GridInfo, out: &mut Vec<(u32, f64)>) {
    let dim = g.dim;
    let h = g.cell_size;
    let mut a = [0.0; 3];
    let mut d = [0.0; 3];
    let mut len = 0.0;
    for k in 0..dim {
        a[k] = (p[k] - g.origin[k]) / h;
        d[k] = (q[k] - p[k]) / h;
        len += (q[k] - p[k]).powi(2);
    }
    let len = len.sqrt();
    if len == 0.0 {
        return;
    }
    let mut cell = [0i64; 3];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for k in 0..dim {
        cell[k] = (a[k].floor() as i64).clamp(0, g.shape[k] as i64 - 1);
        if d[k] > 0.0 {
            step[k] = 1;
            t_max[k] = ((cell[k] + 1) as f64 - a[k]) / d[k];
            t_delta[k] = 1.0 / d[k];
        } else if d[k] < 0.0 {
            step[k] = -1;
            t_max[k] = (cell[k] as f64 - a[k]) / d[k];
            t_delta[k] = -1.0 / d[k];
        }
    }
    let mut t = 0.0;
    loop {
        let axis = (0..dim).min_by(|x, y| t_max[*x].partial_cmp(&t_max[*y]).unwrap()).unwrap();
        let t_next = t_max[axis].min(1.0);
        if t_next > t {
            let idx = cell[0] as usize + g.shape[0] * (cell[1] as usize + g.shape[1] * cell[2] as usize);
            out.push((idx as u32, (t_next - t) * len));
        }
        if t_next >= 1.0 {
            break;
        }
        t = t_next;
        cell[axis] += step[axis];
        if cell[axis] < 0 || cell[axis] >= g.shape[axis] as i64 {
            break;
        }
        t_max[axis] += t_delta[axis];
    }
}

fn incidence(family: &CurveFamily, resolution: usize) -> Result<Incidence, ModulusError> {
    if resolution < 4 {
        return Err(ModulusError::Params("resolution must be at least 4".into()));
    }
    if family.is_empty() {
        return Err(ModulusError::Family("empty family".into()));
    }
    let dim = family.dim;
    let (lo, hi) = family.bbox();
    let extent = (0..dim).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(ModulusError::Family("degenerate bounding box".into()));
    }
    let h = extent / resolution as f64;
    let mut origin = [0.0; 3];
    let mut shape = [1usize; 3];
    for d in 0..dim {
        origin[d] = lo[d] - 2.0 * h;
        shape[d] = (((hi[d] - lo[d]) / h).ceil() as usize).max(1) + 4;
    }
    let cells = shape.iter().product();
    let grid = GridInfo { dim, origin, cell_size: h, shape, cells };
    let rows = family
        .curves
        .par_iter()
        .map(|c| {
            let mut row = Vec::new();
            for w in c.points.windows(2) {
                traverse(&w[0].0, &w[1].0, &grid, &mut row);
            }
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for (i, l) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += l,
                    _ => merged.push((i, l)),
                }
            }
            merged
        })
        .collect();
    Ok(Incidence { grid, rows, vol: h.powi(dim as i32) })
}

impl Incidence {
    fn lengths(&self, rho: &[f64]) -> Vec<f64> {
        self.rows.par_iter().map(|r| r.iter().map(|(c, l)| rho[*c as usize] * l).sum()).collect()
    }

    fn adjoint(&self, lambda: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.grid.cells];
        for (row, lam) in self.rows.iter().zip(lambda) {
            if *lam != 0.0 {
                for (c, l) in row {
                    s[*c as usize] += lam * l;
                }
            }
        }
        s
    }
}

/// Lagrangian minimizer `rho(lambda)` and the dual value `g(lambda)`.
fn dual(inc: &Incidence, lambda: &[f64], n: f64) -> (Vec<f64>, f64) {
    let s = inc.adjoint(lambda);
    let rho: Vec<f64> = s.iter().map(|si| (si / (n * inc.vol)).powf(1.0 / (n - 1.0))).collect();
    let g = lambda.iter().sum::<f64>() - (n - 1.0) / n * s.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>();
    (rho, g)
}

/// Minimizes `sum rho^n vol` subject to `int_gamma rho ds >= 1` for every
/// curve, by accelerated projected gradient ascent on the dual. Every dual
/// iterate yields an admissible density after scaling by the shortest
/// `rho`-length, so `value` only decreases.
pub fn numeric_modulus(family: &CurveFamily, params: &SolverParams) -> Result<ModulusEstimate, ModulusError> {
    if params.max_iterations == 0 || !(params.tolerance > 0.0) {
        return Err(ModulusError::Params("iterations and tolerance must be positive".into()));
    }
    let inc = incidence(family, params.resolution)?;
    if inc.rows.iter().any(|r| r.is_empty()) {
        return Err(ModulusError::Family("a curve misses the grid".into()));
    }
    let n = family.dim as f64;
    let m = inc.rows.len();

    let ones = vec![1.0; m];
    let (rho1, _) = dual(&inc, &ones, n);
    let mean_len = inc.lengths(&rho1).iter().sum::<f64>() / m as f64;
    let mut lambda = vec![mean_len.powf(-(n - 1.0)); m];
    let mut y = lambda.clone();
    let (_, mut g_lambda) = dual(&inc, &lambda, n);
    let mut t = 1.0f64;
    let mut step = 1.0 / m as f64;

    let mut best = f64::INFINITY;
    let mut best_rho = Vec::new();
    let mut lower = g_lambda;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..params.max_iterations {
        iterations = it + 1;
        let (rho_y, g_y) = dual(&inc, &y, n);
        let grad: Vec<f64> = inc.lengths(&rho_y).iter().map(|l| 1.0 - l).collect();
        let (next, g_next, rho_next) = loop {
            let cand: Vec<f64> = y.iter().zip(&grad).map(|(a, b)| (a + step * b).max(0.0)).collect();
            let (rho_c, g_c) = dual(&inc, &cand, n);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for i in 0..m {
                let dv = cand[i] - y[i];
                lin += grad[i] * dv;
                quad += dv * dv;
            }
            if g_c >= g_y + lin - quad / (2.0 * step) - 1e-15 * g_y.abs() || step < 1e-300 {
                break (cand, g_c, rho_c);
            }
            step *= 0.5;
        };
        step *= 1.2;

        // admissible density from the Lagrangian minimizer
        let lens = inc.lengths(&rho_next);
        let min_len = lens.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_len > 0.0 {
            let scaled: f64 = rho_next.iter().map(|r| (r / min_len).powf(n)).sum::<f64>() * inc.vol;
            if scaled < best {
                best = scaled;
                best_rho = rho_next.iter().map(|r| r / min_len).collect();
            }
        }
        lower = lower.max(g_next);
        history.push(best);

        if g_next < g_lambda {
            // restart momentum
            t = 1.0;
            y = next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = next.iter().zip(&lambda).map(|(a, b)| (a + beta * (a - b)).max(0.0)).collect();
            t = t_next;
        }
        lambda = next;
        g_lambda = g_next;
        if best.is_finite() && (best - lower) <= params.tolerance * best {
            converged = true;
            break;
        }
    }
    if !best.is_finite() {
        return Err(ModulusError::Params("solver found no admissible density".into()));
    }
    let min_length = inc.lengths(&best_rho).iter().cloned().fold(f64::INFINITY, f64::min);
    let exact_reference = family.exact_reference();
    Ok(ModulusEstimate {
        value: best,
        lower_bound: lower,
        relative_error: exact_reference.map(|e| (best - e).abs() / e),
        exact_reference,
        grid: inc.grid,
        curves: m,
        iterations,
        converged,
        min_length,
        history,
        rho: best_rho,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiInvarianceReport {
    pub map: String,
    pub k_bound: f64,
    pub slack: f64,
    pub source: ModulusEstimate,
    pub image: ModulusEstimate,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub status: CheckStatus,
}

pub const QUASI_INVARIANCE_SLACK: f64 = 1.25;

/// `Mod(f Gamma) / Mod(Gamma)` against `[1/(K s), K s]` with slack `s`.
pub fn quasi_invariance_check(
    f: &QcMap,
    family: &CurveFamily,
    params: &SolverParams,
) -> Result<QuasiInvarianceReport, ModulusError> {
    let image_family = map_family(f, family)?;
    let source = numeric_modulus(family, params)?;
    let image = numeric_modulus(&image_family, params)?;
    let k = f.k_bound();
    let s = QUASI_INVARIANCE_SLACK;
    let ratio = image.value / source.value;
    let (lower, upper) = (1.0 / (k * s), k * s);
    let status = if !source.converged || !image.converged {
        CheckStatus::Inconclusive
    } else if ratio >= lower && ratio <= upper {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(QuasiInvarianceReport { map: f.name.clone(), k_bound: k, slack: s, source, image, ratio, lower, upper, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dim: usize, resolution: usize) -> SolverParams {
        SolverParams { resolution, ..SolverParams::for_dim(dim) }
    }

    #[test]
    fn closed_forms() {
        assert!((exact_radial_modulus(2.0 * PI, (-1f64).exp(), 2) - 2.0 * PI).abs() < 1e-12);
        assert!((exact_radial_modulus(2.0 * PI, (-1f64).exp(), 3) - 2.0 * PI).abs() < 1e-12);
        assert_eq!(exact_radial_modulus(0.0, 0.5, 2), 0.0);
        assert!((ring_modulus_upper(1.0, 1f64.exp(), 2) - 2.0 * PI).abs() < 1e-12);
        assert!((ring_modulus_upper(1.0, 2f64.exp(), 3) - PI).abs() < 1e-12);
        assert!(ring_modulus_upper(1.0, 1e300, 2) < 0.01);
    }

    #[test]
    fn traversal_lengths_sum_to_segment_length() {
        let fam = CurveFamily::polylines(3, vec![vec![Point::new3(-0.7, 0.2, 0.1), Point::new3(0.6, -0.4, 0.5)]]).unwrap();
        let inc = incidence(&fam, 20).unwrap();
        let total: f64 = inc.rows[0].iter().map(|e| e.1).sum();
        assert!((total - fam.curves[0].length()).abs() < 1e-12);
        assert!(inc.rows[0].iter().all(|e| e.1 > 0.0));
    }

    #[test]
    fn single_segment_matches_cauchy_schwarz_oracle() {
        let fam = CurveFamily::polylines(2, vec![vec![Point::new2(0.1, 0.13), Point::new2(0.83, 0.61)]]).unwrap();
        let mut values = Vec::new();
        for res in [32, 64] {
            let p = small(2, res);
            let est = numeric_modulus(&fam, &p).unwrap();
            let inc = incidence(&fam, res).unwrap();
            // one constraint: optimal rho proportional to the cell lengths
            let oracle = 1.0 / inc.rows[0].iter().map(|(_, l)| l * l / inc.vol).sum::<f64>();
            assert!((est.value - oracle).abs() < 1e-3 * oracle, "{} vs {oracle}", est.value);
            values.push(est.value);
        }
        // value scales with the cell size
        assert!((values[0] / values[1] - 2.0).abs() < 0.05 * 2.0);
    }

    #[test]
    fn ring_and_radial_families_reproduce_closed_forms() {
        let ring = CurveFamily::ring(2, Point::ORIGIN, 1.0, 1f64.exp(), 1000).unwrap();
        let est = numeric_modulus(&ring, &SolverParams::for_dim(2)).unwrap();
        assert!(est.relative_error.unwrap() < 0.10, "{:?}", (est.value, est.lower_bound, est.iterations));
        assert!(est.min_length >= 1.0 - 1e-9);
        assert!(est.history.windows(2).all(|w| w[1] <= w[0]));

        let full = Cap { center: Point::e1(), angular_radius: PI };
        let radial = CurveFamily::radial(2, full, (-1f64).exp(), 2048).unwrap();
        let est = numeric_modulus(&radial, &SolverParams::for_dim(2)).unwrap();
        assert!(est.relative_error.unwrap() < 0.10, "{}", est.value);

        let fine = SolverParams { resolution: 512, ..SolverParams::for_dim(2) };
        let ring = CurveFamily::ring(2, Point::ORIGIN, 1.0, 1f64.exp(), 2048).unwrap();
        let est = numeric_modulus(&ring, &fine).unwrap();
        assert!(est.relative_error.unwrap() < 0.05, "{}", est.value);
    }

    #[test]
    fn scaling_leaves_modulus_unchanged() {
        let ring = CurveFamily::ring(2, Point::ORIGIN, 0.3, 0.9, 256).unwrap();
        let p = small(2, 64);
        let a = numeric_modulus(&ring, &p).unwrap().value;
        let b = numeric_modulus(&ring.scaled(3.7), &p).unwrap().value;
        assert!((a - b).abs() < 1e-6 * a);
    }

    #[test]
    fn enlarging_family_does_not_decrease_modulus() {
        let ring = CurveFamily::ring(2, Point::ORIGIN, 0.3, 0.9, 256).unwrap();
        let half: Vec<usize> = (0..128).collect();
        let p = small(2, 64);
        let a = numeric_modulus(&ring.subfamily(&half), &p).unwrap();
        let b = numeric_modulus(&ring, &p).unwrap();
        assert!(b.value >= a.lower_bound * (1.0 - 1e-9));
        assert!(b.value >= a.value * (1.0 - 0.02));
    }

    #[test]
    fn image_families() {
        let ring = CurveFamily::ring(2, Point::ORIGIN, 0.25, 0.5, 64).unwrap();
        let same = map_family(&QcMap::identity(2).unwrap(), &ring).unwrap();
        for (a, b) in ring.curves.iter().zip(&same.curves) {
            assert_eq!(a.points, b.points);
        }
        let st = map_family(&QcMap::radial_stretch(2, 2.0).unwrap(), &ring).unwrap();
        for c in &st.curves {
            assert!((c.points[0].norm() - 0.0625).abs() < 1e-12);
            assert!((c.points.last().unwrap().norm() - 0.25).abs() < 1e-12);
        }
        let cap = Cap { center: Point::e1(), angular_radius: 1.0 };
        let radial = CurveFamily::radial(2, cap, 0.5, 32).unwrap();
        let mo = QcMap::mobius(2, Point::new2(0.5, 0.0)).unwrap();
        let img = map_family(&mo, &radial).unwrap();
        for (a, b) in radial.curves.iter().zip(&img.curves) {
            for (j, &k) in b.anchors.iter().enumerate() {
                assert!(b.points[k].dist(&mo.eval(&a.points[j])) < 1e-12);
            }
        }
        let outside = CurveFamily::ring(2, Point::ORIGIN, 0.5, 1.5, 8).unwrap();
        assert!(matches!(map_family(&mo, &outside), Err(ModulusError::OutsideDomain(_))));
    }

    #[test]
    fn quasi_invariance_examples() {
        let p = small(2, 128);
        let ring = CurveFamily::ring(2, Point::ORIGIN, 0.25, 0.5, 512).unwrap();
        let id = quasi_invariance_check(&QcMap::identity(2).unwrap(), &ring, &p).unwrap();
        assert!((id.ratio - 1.0).abs() < 1e-9);
        let st = quasi_invariance_check(&QcMap::radial_stretch(2, 2.0).unwrap(), &ring, &p).unwrap();
        assert_eq!(st.status, CheckStatus::Pass, "{}", st.ratio);
        assert!((st.ratio - 0.5).abs() < 0.1, "{}", st.ratio);
        let ring = CurveFamily::ring(2, Point::ORIGIN, 0.2, 0.6, 512).unwrap();
        let mo = quasi_invariance_check(&QcMap::mobius(2, Point::new2(0.5, 0.0)).unwrap(), &ring, &p).unwrap();
        assert_eq!(mo.status, CheckStatus::Pass, "{}", mo.ratio);
    }

    #[test]
    fn three_dimensional_ring() {
        let ring = CurveFamily::ring(3, Point::ORIGIN, 1.0, 2f64.exp(), 4096).unwrap();
        let est = numeric_modulus(&ring, &small(3, 40)).unwrap();
        assert!(est.relative_error.unwrap() < 0.15, "{} vs {}", est.value, PI);
    }
}
