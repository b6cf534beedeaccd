//! Geometry of the unit ball: quadrature on the sphere, Whitney balls, their
//! radial projections (caps) and Stolz cones.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::{direction_from, Point};
use crate::quad::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("sphere resolution {0} is below the minimum of 8")]
    Resolution(usize),
    #[error("point {0:?} is outside the open unit ball")]
    OutsideBall(Point),
}

pub fn check_dim(dim: usize) -> Result<(), GeometryError> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(GeometryError::UnsupportedDimension(dim))
    }
}

/// Surface measure of the unit sphere `S^{n-1}`.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Volume of the unit ball.
pub fn ball_volume(dim: usize) -> f64 {
    match dim {
        2 => PI,
        _ => 4.0 * PI / 3.0,
    }
}

/// Measure of the spherical cap of angular radius `alpha`.
pub fn cap_area(dim: usize, alpha: f64) -> f64 {
    let alpha = alpha.clamp(0.0, PI);
    match dim {
        2 => 2.0 * alpha,
        _ => 2.0 * PI * (1.0 - alpha.cos()),
    }
}

/// Radius of the Whitney ball `B_x`.
pub fn whitney_radius(x: &Point) -> f64 {
    0.5 * (1.0 - x.norm())
}

/// Quadrature nodes on `S^{n-1}`; weights sum to the sphere measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereGrid {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub resolution: usize,
}

/// Builds a grid: `resolution` equally spaced angles on the circle, or an
/// equal-area partition into `resolution` latitude bands on `S^2`.
pub fn make_grid(dim: usize, resolution: usize) -> Result<SphereGrid, GeometryError> {
    check_dim(dim)?;
    if resolution < 8 {
        return Err(GeometryError::Resolution(resolution));
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        let w = 2.0 * PI / resolution as f64;
        for i in 0..resolution {
            let t = (i as f64 + 0.5) * w;
            nodes.push(Point::new2(t.cos(), t.sin()));
            weights.push(w);
        }
    } else {
        let bands = resolution;
        let dz = 2.0 / bands as f64;
        for j in 0..bands {
            let z = -1.0 + (j as f64 + 0.5) * dz;
            let s = (1.0 - z * z).sqrt();
            // roughly square cells: band height in angle is about pi/bands
            let cells = ((2.0 * bands as f64 * s).round() as usize).max(3);
            let w = 2.0 * PI * dz / cells as f64;
            let offset = if j % 2 == 0 { 0.0 } else { 0.5 };
            for i in 0..cells {
                let a = 2.0 * PI * (i as f64 + offset) / cells as f64;
                nodes.push(Point::new3(s * a.cos(), s * a.sin(), z));
                weights.push(w);
            }
        }
    }
    Ok(SphereGrid { dim, nodes, weights, resolution })
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// CSV with one `x,y,z,weight` row per node.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z,weight\n");
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            s.push_str(&format!("{},{},{},{}\n", p[0], p[1], p[2], w));
        }
        s
    }
}

/// The cap `S_x`, the radial projection of the Whitney ball `B_x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: Point,
    /// `pi` when `B_x` contains the origin (the whole sphere).
    pub angular_radius: f64,
}

impl Cap {
    pub fn of(x: &Point) -> Cap {
        let s = x.norm();
        let rho = 0.5 * (1.0 - s);
        if s <= rho {
            return Cap { center: Point::e1(), angular_radius: PI };
        }
        Cap { center: x.normalized(), angular_radius: (rho / s).asin() }
    }

    pub fn contains(&self, omega: &Point) -> bool {
        self.angular_radius >= PI || self.center.angle_to(omega) < self.angular_radius
    }

    pub fn measure(&self, dim: usize) -> f64 {
        cap_area(dim, self.angular_radius)
    }
}

/// `sigma(S_x)`; the whole sphere when `x = 0`.
pub fn cap_measure(dim: usize, x: &Point) -> f64 {
    Cap::of(x).measure(dim)
}

/// `x in Gamma(omega)`, decided through `omega in S_x`.
pub fn cone_membership(omega: &Point, x: &Point) -> bool {
    Cap::of(x).contains(omega)
}

/// Stolz cone `Gamma(omega)`, the union of Whitney balls along the radius.
///
/// `contains` decides membership in the union itself. It is slightly wider
/// than the cap test of [`cone_membership`]: near the boundary the union has
/// aperture `(1-|x|)/sqrt(3)` against `(1-|x|)/2` for the caps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StolzCone {
    pub vertex: Point,
}

impl StolzCone {
    pub fn new(omega: Point) -> Self {
        StolzCone { vertex: omega.normalized() }
    }

    pub fn contains(&self, x: &Point) -> bool {
        // |x - t w|^2 - (1-t)^2/4 is quadratic in t; test its minimum on [0, 1]
        let c = x.dot(&self.vertex);
        let t = ((4.0 * c - 1.0) / 3.0).clamp(0.0, 1.0);
        0.75 * t * t + (0.5 - 2.0 * c) * t + x.norm_sq() - 0.25 < 0.0
    }

    /// Center of the Whitney ball at scale `t_k = 1 - 2^-k`.
    pub fn whitney_center(&self, k: u32) -> Point {
        self.vertex * (1.0 - 0.5f64.powi(k as i32))
    }
}

/// Angular quadrature with each node tagged by its shell.
///
/// A focused rule grades nodes towards `focus`: shell 0 covers angles
/// `[1, pi]` from the focus and shell `k >= 1` covers `[2^-k, 2^{1-k})`, so a
/// cutoff at `2^-k` keeps exactly shells `0..=k`.
#[derive(Clone, Debug)]
pub struct AngularRule {
    pub dim: usize,
    pub focus: Point,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub shells: Vec<usize>,
    pub shell_count: usize,
}

impl AngularRule {
    pub fn uniform(grid: &SphereGrid) -> Self {
        AngularRule {
            dim: grid.dim,
            focus: Point::e1(),
            nodes: grid.nodes.clone(),
            weights: grid.weights.clone(),
            shells: vec![0; grid.len()],
            shell_count: 1,
        }
    }

    pub fn focused(dim: usize, focus: Point, shells: usize, gl_nodes: usize, azimuth: usize) -> Self {
        let focus = focus.normalized();
        let gl = GaussLegendre::new(gl_nodes);
        let mut rule = AngularRule {
            dim,
            focus,
            nodes: Vec::new(),
            weights: Vec::new(),
            shells: Vec::new(),
            shell_count: shells + 1,
        };
        let outer_panels = 12;
        let step = (PI - 1.0) / outer_panels as f64;
        for p in 0..outer_panels {
            rule.push_panel(&gl, 1.0 + p as f64 * step, 1.0 + (p + 1) as f64 * step, 0, azimuth);
        }
        for k in 1..=shells {
            let lo = 0.5f64.powi(k as i32);
            rule.push_panel(&gl, lo, 2.0 * lo, k, azimuth);
        }
        rule
    }

    fn push_panel(&mut self, gl: &GaussLegendre, a: f64, b: f64, shell: usize, azimuth: usize) {
        for (phi, w) in gl.on(a, b) {
            if self.dim == 2 {
                for alpha in [0.0, PI] {
                    self.nodes.push(direction_from(2, self.focus, phi, alpha));
                    self.weights.push(w);
                    self.shells.push(shell);
                }
            } else {
                let wa = 2.0 * PI / azimuth as f64;
                for j in 0..azimuth {
                    let alpha = (j as f64 + 0.5 * (shell % 2) as f64) * wa;
                    self.nodes.push(direction_from(3, self.focus, phi, alpha));
                    self.weights.push(w * phi.sin() * wa);
                    self.shells.push(shell);
                }
            }
        }
    }

    /// Measure of the polar cap left uncovered around the focus.
    pub fn uncovered_measure(&self) -> f64 {
        if self.shell_count <= 1 && self.shells.iter().all(|&s| s == 0) && self.nodes.len() > 0 {
            let covered: f64 = self.weights.iter().sum();
            return (sphere_measure(self.dim) - covered).max(0.0);
        }
        cap_area(self.dim, 0.5f64.powi((self.shell_count - 1) as i32))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Radial nodes on `[a, b] subset [0, 1)` in the variable `u = log 1/(1-r)`.
///
/// Panels have width at most `log 2` in `u`, aligned to multiples of `log 2`,
/// so panel edges fall on the dyadic radii `1 - 2^-k`.
pub fn radial_nodes(a: f64, b: f64, gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let ua = -(1.0 - a).ln();
    let ub = -(1.0 - b).ln();
    let mut out = Vec::new();
    if !(ub > ua) || !ub.is_finite() {
        return out;
    }
    let mut lo = ua;
    while lo < ub {
        let next_edge = ((lo / LN_2).floor() + 1.0) * LN_2;
        let hi = next_edge.min(ub);
        if hi - lo > 1e-14 {
            for (u, w) in gl.on(lo, hi) {
                let e = (-u).exp();
                out.push((1.0 - e, w * e));
            }
        }
        lo = hi;
    }
    out
}

/// Annulus `r_inner < |x| < r_outer` (a ball when `r_inner = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Region {
    pub fn ball(r: f64) -> Self {
        Region { r_inner: 0.0, r_outer: r }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallIntegral {
    pub value: f64,
    /// Difference against the same rule at half resolution.
    pub error_estimate: f64,
    /// False when the integrand was non-finite at some node.
    pub reliable: bool,
    pub nonfinite_nodes: usize,
}

/// Polar product quadrature: log-graded Gauss-Legendre in the radius times
/// an angular rule on the sphere.
pub fn integrate_polar<F: Fn(&Point) -> f64 + Sync>(
    dim: usize,
    g: &F,
    region: Region,
    radial_gl: usize,
    angular: &AngularRule,
) -> (f64, usize) {
    use rayon::prelude::*;
    let gl = GaussLegendre::new(radial_gl);
    let nodes = radial_nodes(region.r_inner, region.r_outer, &gl);
    let parts: Vec<(f64, usize)> = nodes
        .par_iter()
        .map(|&(r, wr)| {
            let mut acc = 0.0;
            let mut bad = 0;
            for (w, om) in angular.weights.iter().zip(&angular.nodes) {
                let v = g(&(*om * r));
                if v.is_finite() {
                    acc += w * v;
                } else {
                    bad += 1;
                }
            }
            (acc * wr * r.powi(dim as i32 - 1), bad)
        })
        .collect();
    parts.iter().fold((0.0, 0), |(s, b), (v, c)| (s + v, b + c))
}

/// Integral of `g` over a ball or annulus with a two-level error estimate.
///
/// `budget` is the angular resolution (circle nodes, or latitude bands in
/// three dimensions). A `focus` direction grades the angular nodes towards a
/// boundary point where `g` may be singular.
pub fn ball_integral<F: Fn(&Point) -> f64 + Sync>(
    dim: usize,
    g: F,
    region: Region,
    budget: usize,
    focus: Option<Point>,
) -> Result<BallIntegral, GeometryError> {
    check_dim(dim)?;
    let make = |res: usize, gl: usize| -> Result<AngularRule, GeometryError> {
        Ok(match focus {
            Some(f) => AngularRule::focused(dim, f, 40, gl, (res / 4).max(8)),
            None => AngularRule::uniform(&make_grid(dim, res)?),
        })
    };
    let fine = make(budget, 12)?;
    let coarse = make((budget / 2).max(8), 6)?;
    let (value, bad) = integrate_polar(dim, &g, region, 12, &fine);
    let (rough, _) = integrate_polar(dim, &g, region, 6, &coarse);
    Ok(BallIntegral {
        value,
        error_estimate: (value - rough).abs(),
        reliable: bad == 0,
        nonfinite_nodes: bad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;


    #[test]
    fn grid_weights_sum_to_sphere_measure() {
        let g2 = make_grid(2, 1024).unwrap();
        assert!((g2.total_weight() - 2.0 * PI).abs() < 1e-10 * 2.0 * PI);
        let g3 = make_grid(3, 64).unwrap();
        assert!((g3.total_weight() - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
        assert!(g3.integrate(|p| p[0]).abs() < 1e-8);
        assert!(g3.integrate(|p| p[2]).abs() < 1e-8);
        assert!(g2.integrate(|p| p[0]).abs() < 1e-8);
        assert!(make_grid(4, 64).is_err());
        assert!(make_grid(2, 4).is_err());
    }

    #[test]
    fn polar_cap_quadrature() {
        let g3 = make_grid(3, 64).unwrap();
        let v = g3.integrate(|p| if p[2] > 0.5 { 1.0 } else { 0.0 });
        assert!((v - PI).abs() < 0.01 * PI);
    }

    #[test]
    fn grid_refinement_is_stable() {
        let f = |p: &Point| (p[0] + 2.0 * p[1] * p[2]).exp();
        let a = make_grid(3, 48).unwrap().integrate(f);
        let b = make_grid(3, 96).unwrap().integrate(f);
        assert!((a - b).abs() < 1e-3 * b.abs());
    }

    #[test]
    fn cap_measure_examples() {
        let x = Point::new2(0.5, 0.0);
        let c = Cap::of(&x);
        assert!((c.angular_radius - PI / 6.0).abs() < 1e-15);
        assert!((cap_measure(2, &x) - PI / 3.0).abs() < 1e-14);
        assert_eq!(cap_measure(2, &Point::ORIGIN), 2.0 * PI);
        assert_eq!(cap_measure(3, &Point::ORIGIN), 4.0 * PI);
        let near = Point::new2(1.0 - 1e-7, 0.0);
        assert!((cap_measure(2, &near) / 1e-7 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cap_measure_comparable_to_boundary_distance() {
        for dim in [2, 3] {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..=60 {
                let s = 1.0 - 0.5 * 10f64.powf(-6.0 * i as f64 / 60.0);
                let x = Point::new3(s, 0.0, 0.0);
                let ratio = cap_measure(dim, &x) / (1.0 - s).powi(dim as i32 - 1);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            assert!(lo > 0.5 && hi < 4.0, "dim {dim}: [{lo}, {hi}]");
        }
    }

    #[test]
    fn cone_membership_examples() {
        let om = Point::new2(0.0, 1.0);
        for t in [0.0, 0.3, 0.9, 0.999999] {
            assert!(cone_membership(&om, &(om * t)));
        }
        assert!(!cone_membership(&om, &Point::new2(0.3, -0.6)));
        assert!(cone_membership(&Point::new2(-1.0, 0.0), &Point::ORIGIN));
    }

    /// Membership through the defining union of Whitney balls, by brute force.
    fn in_union_of_balls(omega: &Point, x: &Point) -> bool {
        let n = 20_000;
        (0..n).any(|i| {
            let t = i as f64 / n as f64;
            x.dist(&(*omega * t)) < 0.5 * (1.0 - t)
        })
    }

    fn random_pairs(dim: usize, count: usize) -> Vec<(Point, Point)> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        (0..count)
            .map(|_| {
                let u: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
                let x = crate::quad::cube_to_ball(dim, &u);
                let w: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
                let om = crate::quad::cube_to_ball(dim, &[1.0, w[1], w[2]]);
                (om.normalized(), x)
            })
            .collect()
    }

    #[test]
    fn cone_predicate_matches_union_of_balls() {
        for (om, x) in random_pairs(2, 400) {
            let exact = StolzCone::new(om).contains(&x);
            if exact != in_union_of_balls(&om, &x) {
                // brute force misses only razor-thin boundary cases
                let c = x.dot(&om);
                let t = ((4.0 * c - 1.0) / 3.0).clamp(0.0, 1.0);
                let q = 0.75 * t * t + (0.5 - 2.0 * c) * t + x.norm_sq() - 0.25;
                assert!(q.abs() < 1e-4);
            }
        }
    }

    #[test]
    fn caps_sit_inside_cones_with_bounded_aperture() {
        for dim in [2, 3] {
            let mut wider = 0;
            for (om, x) in random_pairs(dim, 10_000) {
                let by_cap = cone_membership(&om, &x);
                let by_cone = StolzCone::new(om).contains(&x);
                assert!(!by_cap || by_cone, "cap point outside cone: {om:?} {x:?}");
                if by_cone && !by_cap {
                    wider += 1;
                    // away from the central ball the cone stays within twice the cap angle
                    if x.norm() >= 0.5 {
                        assert!(x.angle_to(&om) < 2.0 * Cap::of(&x).angular_radius);
                    }
                }
            }
            assert!(wider > 0);
        }
    }

    #[test]
    fn focused_rule_covers_sphere() {
        for dim in [2, 3] {
            let r = AngularRule::focused(dim, Point::new3(0.0, -1.0, 0.0), 30, 8, 16);
            let total: f64 = r.weights.iter().sum::<f64>() + r.uncovered_measure();
            assert!((total - sphere_measure(dim)).abs() < 1e-9, "dim {dim}: {total}");
        }
    }

    #[test]
    fn ball_integral_examples() {
        let one = ball_integral(2, |_| 1.0, Region::ball(1.0 - 1e-15), 256, None).unwrap();
        assert!((one.value - PI).abs() < 1e-6, "{}", one.value);
        let sing = ball_integral(
            2,
            |x: &Point| 1.0 / (*x + Point::e1()).norm(),
            Region::ball(1.0 - 1e-13),
            256,
            Some(-Point::e1()),
        )
        .unwrap();
        assert!((sing.value - 4.0).abs() < 1e-4, "{}", sing.value);
    }

    #[test]
    fn annulus_integral_matches_radial_antiderivative() {
        let eps = 1e-5;
        let region = Region { r_inner: 0.5, r_outer: 1.0 - eps };
        let v = ball_integral(2, |x: &Point| 1.0 / (1.0 - x.norm()), region, 64, None).unwrap();
        // 2 pi * int r/(1-r) dr = 2 pi [ -r - ln(1-r) ]
        let anti = |r: f64| -r - (1.0 - r).ln();
        let exact = 2.0 * PI * (anti(1.0 - eps) - anti(0.5));
        assert!((v.value - exact).abs() < 1e-6 * exact, "{} vs {}", v.value, exact);
    }

    #[test]
    fn nonfinite_integrand_is_flagged() {
        let v = ball_integral(2, |x: &Point| if x[0] > 0.9 { f64::NAN } else { 1.0 }, Region::ball(0.99), 64, None)
            .unwrap();
        assert!(!v.reliable && v.nonfinite_nodes > 0);
    }
}
