//! Boundary curves, panel meshes and the coarse/fine discretization grids.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::interp::{gauss_legendre, CanonicalRule};

pub type Point = Vector2<f64>;

/// A closed, regular, counterclockwise curve `r(t)`, `t ∈ [−π, π]`.
///
/// Every curve used here is starlike about the origin; `radial` gives the
/// distance from the origin to the curve along polar angle `theta`.
pub trait Curve: Send + Sync + std::fmt::Debug {
    fn position(&self, t: f64) -> Point;
    fn velocity(&self, t: f64) -> Point;
    fn acceleration(&self, t: f64) -> Point;
    fn radial(&self, theta: f64) -> f64;

    fn speed(&self, t: f64) -> f64 {
        self.velocity(t).norm()
    }

    /// Outward unit normal, `(ẏ, −ẋ)/|ṙ|` for counterclockwise orientation.
    fn normal(&self, t: f64) -> Point {
        let v = self.velocity(t);
        Point::new(v.y, -v.x) / v.norm()
    }
}

/// The five-armed test curve `r(t) = (9/20)(1 + (20/81) sin 5t)(cos t, sin t)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Starfish;

const STAR_R0: f64 = 9.0 / 20.0;
const STAR_AMP: f64 = 20.0 / 81.0;

impl Starfish {
    fn rho(t: f64) -> (f64, f64, f64) {
        let (s5, c5) = (5.0 * t).sin_cos();
        (
            STAR_R0 * (1.0 + STAR_AMP * s5),
            STAR_R0 * STAR_AMP * 5.0 * c5,
            -STAR_R0 * STAR_AMP * 25.0 * s5,
        )
    }
}

impl Curve for Starfish {
    fn position(&self, t: f64) -> Point {
        let (r, _, _) = Self::rho(t);
        let (s, c) = t.sin_cos();
        Point::new(r * c, r * s)
    }

    fn velocity(&self, t: f64) -> Point {
        let (r, dr, _) = Self::rho(t);
        let (s, c) = t.sin_cos();
        Point::new(dr * c - r * s, dr * s + r * c)
    }

    fn acceleration(&self, t: f64) -> Point {
        let (r, dr, ddr) = Self::rho(t);
        let (s, c) = t.sin_cos();
        Point::new(
            ddr * c - 2.0 * dr * s - r * c,
            ddr * s + 2.0 * dr * c - r * s,
        )
    }

    fn radial(&self, theta: f64) -> f64 {
        Self::rho(theta).0
    }
}

/// The curve of [`Starfish`] as a shared trait object.
pub fn starfish_curve() -> Arc<dyn Curve> {
    Arc::new(Starfish)
}

/// Circle of radius `radius` centred at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub radius: f64,
}

impl Curve for Circle {
    fn position(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        Point::new(self.radius * c, self.radius * s)
    }

    fn velocity(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        Point::new(-self.radius * s, self.radius * c)
    }

    fn acceleration(&self, t: f64) -> Point {
        -self.position(t)
    }

    fn radial(&self, _theta: f64) -> f64 {
        self.radius
    }
}

/// True iff `p` lies strictly inside the starlike curve.
pub fn point_in_interior(curve: &dyn Curve, p: Point) -> bool {
    let theta = p.y.atan2(p.x);
    p.norm() < curve.radial(theta)
}

/// Cumulative arclength `σ(t)` from `t = −π`, tabulated on a uniform
/// partition and completed with Gauss–Legendre on the last partial cell.
#[derive(Debug, Clone)]
pub struct ArclengthMap {
    cells: usize,
    cumulative: Vec<f64>,
    rule: CanonicalRule,
}

const ARCLENGTH_CELLS: usize = 128;
const ARCLENGTH_RULE: usize = 32;
const NEWTON_MAX_ITER: usize = 60;

impl ArclengthMap {
    pub fn new(curve: &dyn Curve) -> Self {
        let rule = gauss_legendre(ARCLENGTH_RULE);
        let h = 2.0 * PI / ARCLENGTH_CELLS as f64;
        let mut cumulative = Vec::with_capacity(ARCLENGTH_CELLS + 1);
        cumulative.push(0.0);
        for c in 0..ARCLENGTH_CELLS {
            let a = -PI + c as f64 * h;
            let len = rule.integrate(a, a + h, |t| curve.speed(t));
            cumulative.push(cumulative[c] + len);
        }
        Self {
            cells: ARCLENGTH_CELLS,
            cumulative,
            rule,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.cumulative[self.cells]
    }

    /// `σ(t)` for `t ∈ [−π, π]`.
    pub fn sigma(&self, curve: &dyn Curve, t: f64) -> f64 {
        let h = 2.0 * PI / self.cells as f64;
        let pos = ((t + PI) / h).floor().clamp(0.0, (self.cells - 1) as f64) as usize;
        let a = -PI + pos as f64 * h;
        self.cumulative[pos] + self.rule.integrate(a, t, |s| curve.speed(s))
    }

    /// Parameter `t` with `σ(t) = target`, by safeguarded Newton iteration.
    pub fn inverse(&self, curve: &dyn Curve, target: f64) -> Result<f64> {
        let total = self.total_length();
        if target <= 0.0 {
            return Ok(-PI);
        }
        if target >= total {
            return Ok(PI);
        }
        let (mut lo, mut hi) = (-PI, PI);
        let mut t = -PI + 2.0 * PI * target / total;
        for _ in 0..NEWTON_MAX_ITER {
            let f = self.sigma(curve, t) - target;
            if f > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            let step = f / curve.speed(t);
            let mut next = t - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
                return Ok(next);
            }
            t = next;
        }
        Err(Error::Numerical(format!(
            "arclength inversion did not converge for sigma = {target}"
        )))
    }
}

/// Panel subdivision of the parameter interval `[−π, π]`.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// `n_pan + 1` increasing parameter values from `−π` to `π`.
    pub breakpoints: Vec<f64>,
    pub arclengths: Vec<f64>,
}

impl Mesh {
    /// Mesh with arbitrary increasing breakpoints spanning `[−π, π]`.
    pub fn from_breakpoints(curve: &dyn Curve, breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 4 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 panels, got {}",
                breakpoints.len().saturating_sub(1)
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMesh("breakpoints must be strictly increasing".into()));
        }
        let span = breakpoints[breakpoints.len() - 1] - breakpoints[0];
        if (span - 2.0 * PI).abs() > 1e-12 {
            return Err(Error::InvalidMesh(format!("breakpoints span {span}, expected 2π")));
        }
        let map = ArclengthMap::new(curve);
        let arclengths = breakpoints
            .windows(2)
            .map(|w| map.sigma(curve, w[1]) - map.sigma(curve, w[0]))
            .collect();
        Ok(Self {
            breakpoints,
            arclengths,
        })
    }

    pub fn n_pan(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn total_length(&self) -> f64 {
        self.arclengths.iter().sum()
    }
}

/// Panels of equal parameter length `2π/n_pan`.
pub fn equal_parameter_mesh(curve: &dyn Curve, n_pan: usize) -> Result<Mesh> {
    if n_pan < 3 {
        return Err(Error::InvalidMesh(format!("need at least 3 panels, got {n_pan}")));
    }
    let bp = (0..=n_pan)
        .map(|p| -PI + 2.0 * PI * p as f64 / n_pan as f64)
        .collect();
    Mesh::from_breakpoints(curve, bp)
}

/// Panels of equal arclength; breakpoints found by inverting `σ(t)`.
///
/// `tol` bounds the allowed deviation of each panel length from `L/n_pan`
/// relative to `L`.
pub fn equal_arclength_mesh(curve: &dyn Curve, n_pan: usize, tol: f64) -> Result<Mesh> {
    if n_pan < 3 {
        return Err(Error::InvalidMesh(format!("need at least 3 panels, got {n_pan}")));
    }
    let map = ArclengthMap::new(curve);
    let total = map.total_length();
    let mut bp = Vec::with_capacity(n_pan + 1);
    bp.push(-PI);
    for p in 1..n_pan {
        bp.push(map.inverse(curve, total * p as f64 / n_pan as f64)?);
    }
    bp.push(PI);
    let mesh = Mesh::from_breakpoints(curve, bp)?;
    let target = total / n_pan as f64;
    let worst = mesh
        .arclengths
        .iter()
        .map(|l| (l - target).abs())
        .fold(0.0, f64::max);
    if worst > tol.max(1e-15) * total {
        return Err(Error::Numerical(format!(
            "equal-arclength panels deviate by {worst:e} (tolerance {tol:e})"
        )));
    }
    Ok(mesh)
}

/// Discretization nodes on the curve, `n_pt` per panel.
///
/// Quantities are expressed in the grid parameter: the curve parameter
/// `t` for ordinary grids and arclength `σ` for unit-speed grids, in which
/// case every speed equals one.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n_pt: usize,
    pub n_pan: usize,
    pub unit_speed: bool,
    /// Canonical rule the panel nodes were mapped from.
    pub rule: CanonicalRule,
    /// Node positions in the grid parameter.
    pub nodes: Vec<f64>,
    /// Curve parameter `t` at each node.
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    /// `|dr/d(grid parameter)|`.
    pub speeds: Vec<f64>,
    /// `(ν·r̈)/|ṙ|²`, the signed curvature (parameterization invariant).
    pub curvature: Vec<f64>,
    /// Panel lengths in the grid parameter.
    pub panel_lengths: Vec<f64>,
    /// Curve parameter at the panel endpoints (`n_pan + 1` values).
    pub panel_t: Vec<f64>,
    pub panel_arclengths: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index range of the nodes on panel `p`.
    pub fn panel_range(&self, p: usize) -> std::ops::Range<usize> {
        p * self.n_pt..(p + 1) * self.n_pt
    }

    /// `dr/d(grid parameter) · w` at node `j`, the weighted velocity.
    pub fn weighted_velocity(&self, j: usize) -> Point {
        let n = self.normals[j];
        Point::new(-n.y, n.x) * (self.speeds[j] * self.weights[j])
    }

    /// `s_j w_j`, the arclength quadrature weight.
    pub fn arc_weight(&self, j: usize) -> f64 {
        self.speeds[j] * self.weights[j]
    }

    pub fn total_length(&self) -> f64 {
        (0..self.len()).map(|j| self.arc_weight(j)).sum()
    }
}

fn build_grid(
    curve: &dyn Curve,
    mesh: &Mesh,
    map: &ArclengthMap,
    rule: CanonicalRule,
    unit_speed: bool,
) -> Result<Grid> {
    let n_pt = rule.len();
    let n_pan = mesh.n_pan();
    let n = n_pt * n_pan;
    let mut grid = Grid {
        n_pt,
        n_pan,
        unit_speed,
        rule: rule.clone(),
        nodes: Vec::with_capacity(n),
        t: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        speeds: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        panel_lengths: Vec::with_capacity(n_pan),
        panel_t: mesh.breakpoints.clone(),
        panel_arclengths: mesh.arclengths.clone(),
    };
    let mut sigma_start = 0.0;
    for p in 0..n_pan {
        let (ta, tb) = (mesh.breakpoints[p], mesh.breakpoints[p + 1]);
        let (start, len) = if unit_speed {
            (sigma_start, mesh.arclengths[p])
        } else {
            (ta, tb - ta)
        };
        grid.panel_lengths.push(len);
        for (&node, &weight) in rule.nodes.iter().zip(&rule.weights) {
            let x = start + 0.5 * len * (1.0 + node);
            let t = if unit_speed { map.inverse(curve, x)? } else { x };
            let v = curve.velocity(t);
            let s = v.norm();
            let nu = Point::new(v.y, -v.x) / s;
            grid.nodes.push(x);
            grid.t.push(t);
            grid.weights.push(0.5 * len * weight);
            grid.points.push(curve.position(t));
            grid.normals.push(nu);
            grid.speeds.push(if unit_speed { 1.0 } else { s });
            grid.curvature.push(nu.dot(&curve.acceleration(t)) / (s * s));
        }
        sigma_start += mesh.arclengths[p];
    }
    Ok(grid)
}

/// Coarse (`n_pt` per panel) and fine (`2 n_pt` per panel) grids.
pub fn build_grids(
    curve: &dyn Curve,
    mesh: &Mesh,
    n_pt: usize,
    unit_speed: bool,
) -> Result<(Grid, Grid)> {
    if n_pt == 0 {
        return Err(Error::Config("n_pt must be positive".into()));
    }
    let map = ArclengthMap::new(curve);
    let coarse = build_grid(curve, mesh, &map, gauss_legendre(n_pt), unit_speed)?;
    let fine = build_grid(curve, mesh, &map, gauss_legendre(2 * n_pt), unit_speed)?;
    Ok((coarse, fine))
}
