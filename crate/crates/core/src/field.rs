//! Evaluation of `u(r) = ½ ∫_γ M_E(r, r') ρ(r') dσ'` at exterior points.
//!
//! For every target and panel one of three rules is used: product
//! integration with log corrections and Cauchy compensation on the
//! near-evaluation grid (`Route::Star`), the plain fine-grid rule applied to
//! the interpolated density (`Route::StarCirc`, Schemes B–D only) or the
//! plain coarse rule (`Route::Circ`).

use std::f64::consts::FRAC_1_PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::{Discretization, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{point_in_interior, Grid, Point};
use crate::kernel::CombinedKernel;
use crate::quadrature::{field_factor, min_distance_to_panel, PanelNearData};

/// Default outer radius, in panel arclengths, of the plain fine-grid zone.
pub const DEFAULT_ZONE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    Circ,
    StarCirc,
    Star,
}

#[derive(Debug, Clone)]
pub struct FieldEvaluation {
    pub values: Vec<Complex64>,
    /// Most specialised rule used for each target.
    pub routes: Vec<Route>,
    /// Target within rounding distance of a panel endpoint.
    pub low_accuracy: Vec<bool>,
}

/// Precomputed panel data for repeated field evaluation.
#[derive(Debug)]
pub struct FieldEvaluator<'a> {
    disc: &'a Discretization,
    kernel: CombinedKernel,
    near: Vec<PanelNearData>,
    /// Bounding circle `(center, radius)` of each panel.
    bounds: Vec<(Point, f64)>,
    near_factor: f64,
    zone_factor: f64,
}

fn near_grid(disc: &Discretization) -> &Grid {
    if disc.scheme == Scheme::A {
        &disc.coarse
    } else {
        &disc.fine
    }
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(disc: &'a Discretization, k: f64, eta: f64) -> Result<Self> {
        Self::with_zone(disc, k, eta, DEFAULT_ZONE_FACTOR)
    }

    pub fn with_zone(disc: &'a Discretization, k: f64, eta: f64, zone_factor: f64) -> Result<Self> {
        if !(zone_factor >= 0.0) {
            return Err(Error::Config(format!("zone factor must be non-negative, got {zone_factor}")));
        }
        let grid = near_grid(disc);
        let curve = disc.curve.as_ref();
        let mut near = Vec::with_capacity(grid.n_pan);
        let mut bounds = Vec::with_capacity(grid.n_pan);
        for p in 0..grid.n_pan {
            let range = grid.panel_range(p);
            let (ta, tb) = (grid.panel_t[p], grid.panel_t[p + 1]);
            let (ra, rb) = (curve.position(ta), curve.position(tb));
            let rj: Vec<Point> = range.clone().map(|j| grid.points[j]).collect();
            let nuj: Vec<Point> = range.clone().map(|j| grid.normals[j]).collect();
            let rpwj: Vec<Point> = range.clone().map(|j| grid.weighted_velocity(j)).collect();
            near.push(PanelNearData::new(ra, rb, &rj, &nuj, &rpwj)?);
            let center = curve.position(0.5 * (ta + tb));
            let radius = rj
                .iter()
                .chain([&ra, &rb])
                .map(|x| (x - center).norm())
                .fold(0.0, f64::max);
            bounds.push((center, radius + 0.05 * grid.panel_arclengths[p]));
        }
        Ok(Self {
            disc,
            kernel: CombinedKernel::new(k, eta),
            near,
            bounds,
            near_factor: field_factor(grid.n_pt),
            zone_factor,
        })
    }

    pub fn evaluate(&self, rho: &[Complex64], targets: &[Point]) -> Result<FieldEvaluation> {
        if rho.len() != self.disc.n_unknowns() {
            return Err(Error::Config(format!(
                "density has length {}, expected {}",
                rho.len(),
                self.disc.n_unknowns()
            )));
        }
        let rho_fine = if self.disc.scheme == Scheme::A {
            Vec::new()
        } else {
            self.disc.prolong_density(rho)
        };
        let results: Vec<(Complex64, Route, bool)> = targets
            .par_iter()
            .map(|&r| self.evaluate_one(rho, &rho_fine, r))
            .collect::<Result<_>>()?;
        let mut out = FieldEvaluation {
            values: Vec::with_capacity(targets.len()),
            routes: Vec::with_capacity(targets.len()),
            low_accuracy: Vec::with_capacity(targets.len()),
        };
        for (u, route, flag) in results {
            out.values.push(u);
            out.routes.push(route);
            out.low_accuracy.push(flag);
        }
        Ok(out)
    }

    fn plain_sum(&self, grid: &Grid, p: usize, density: &[Complex64], r: Point) -> Complex64 {
        grid.panel_range(p)
            .map(|j| self.kernel.full(r, grid.points[j], grid.normals[j]) * grid.arc_weight(j) * density[j])
            .sum()
    }

    fn evaluate_one(&self, rho: &[Complex64], rho_fine: &[Complex64], r: Point) -> Result<(Complex64, Route, bool)> {
        let disc = self.disc;
        let curve = disc.curve.as_ref();
        if point_in_interior(curve, r) {
            return Err(Error::Contract(format!("target ({}, {}) is not exterior", r.x, r.y)));
        }
        let grid = near_grid(disc);
        let near_density = if disc.scheme == Scheme::A { rho } else { rho_fine };
        let mut total = Complex64::new(0.0, 0.0);
        let mut route = Route::Circ;
        let mut low_accuracy = false;
        for p in 0..grid.n_pan {
            let len = grid.panel_arclengths[p];
            let (center, radius) = self.bounds[p];
            let outer = if disc.scheme == Scheme::A {
                self.near_factor
            } else {
                self.near_factor.max(self.zone_factor)
            };
            let lower = (r - center).norm() - radius;
            let dist = if lower >= outer * len {
                f64::INFINITY
            } else {
                min_distance_to_panel(curve, grid.panel_t[p], grid.panel_t[p + 1], r)
            };
            if dist == 0.0 {
                return Err(Error::Contract(format!("target ({}, {}) lies on the boundary", r.x, r.y)));
            }
            if dist < self.near_factor * len {
                let w = self.near[p].weights(r)?;
                low_accuracy |= w.near_endpoint;
                for (jl, j) in grid.panel_range(p).enumerate() {
                    let (full, gl) = self.kernel.eval(r, grid.points[j], grid.normals[j]);
                    let sw = grid.arc_weight(j);
                    total += (full * sw + gl * (sw * w.corr_log[jl]) - FRAC_1_PI * w.cmp_cauchy[jl])
                        * near_density[j];
                }
                route = route.max(Route::Star);
            } else if disc.scheme != Scheme::A && dist < self.zone_factor * len {
                total += self.plain_sum(&disc.fine, p, rho_fine, r);
                route = route.max(Route::StarCirc);
            } else {
                total += self.plain_sum(&disc.coarse, p, rho, r);
            }
        }
        Ok((0.5 * total, route, low_accuracy))
    }
}

/// `u` at `targets` for the coarse density `rho`.
pub fn evaluate_field(
    disc: &Discretization,
    k: f64,
    eta: f64,
    rho: &[Complex64],
    targets: &[Point],
) -> Result<FieldEvaluation> {
    FieldEvaluator::new(disc, k, eta)?.evaluate(rho, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::starfish_curve;

    #[test]
    fn zero_density_gives_zero_field() {
        let disc = Discretization::new(Scheme::C, starfish_curve(), 16, 12).unwrap();
        let rho = vec![Complex64::new(0.0, 0.0); disc.n_unknowns()];
        let targets = [Point::new(1.25, 0.0), Point::new(0.6, 0.1), Point::new(-0.2, 0.7)];
        let out = evaluate_field(&disc, 10.0, 5.0, &rho, &targets).unwrap();
        assert!(out.values.iter().all(|u| u.norm() == 0.0));
        assert_eq!(out.routes[0], Route::Circ);
    }

    #[test]
    fn interior_target_is_rejected() {
        let disc = Discretization::new(Scheme::A, starfish_curve(), 16, 12).unwrap();
        let rho = vec![Complex64::new(1.0, 0.0); disc.n_unknowns()];
        let out = evaluate_field(&disc, 10.0, 5.0, &rho, &[Point::new(0.0, 0.0)]);
        assert!(matches!(out, Err(Error::Contract(_))));
    }

    #[test]
    fn routes_by_distance() {
        let curve = starfish_curve();
        let disc = Discretization::new(Scheme::B, curve.clone(), 16, 20).unwrap();
        let rho = vec![Complex64::new(1.0, 0.0); disc.n_unknowns()];
        let len = disc.fine.panel_arclengths[0];
        let t = disc.fine.panel_t[0] + 0.4 * (disc.fine.panel_t[1] - disc.fine.panel_t[0]);
        let (x, nu) = (curve.position(t), curve.normal(t));
        let targets = [x + 0.1 * len * nu, x + 1.0 * len * nu, x + 5.0 * len * nu];
        let out = evaluate_field(&disc, 5.0, 2.5, &rho, &targets).unwrap();
        assert_eq!(out.routes, vec![Route::Star, Route::StarCirc, Route::Circ]);
    }
}
