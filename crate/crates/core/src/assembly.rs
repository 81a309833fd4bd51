//! Discretizations for Schemes A–D and the split system operator
//! `I + M_γ = I + M⋆ + M∘`.
//!
//! `M⋆` holds the interactions of each coarse panel with itself and its two
//! neighbours (for Scheme D also the next-nearest ones reached through the
//! widened interpolation stencil); `M∘` holds every remaining coarse-grid
//! interaction, discretized with the plain Gauss–Legendre rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_grids, equal_arclength_mesh, equal_parameter_mesh, Curve, Grid, Mesh};
use crate::gmres::LinearOperator;
use crate::interp::{build_p, build_px, build_q, InterpOperator};
use crate::kernel::CombinedKernel;
use crate::quadrature::{activate_boundary, neighbor_map, self_panel_corrections, wfrakl_init};
use crate::quadrature::{corrections_from, LogWeightMatrix};

/// Stencil half-width of the extended interpolation used by Scheme D.
pub const SCHEME_D_HALO: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Coarse grid only, panels equal in parameter.
    A,
    /// Near interactions on the fine grid, `Q M⋆ P`.
    B,
    /// As B with equal-arclength panels and unit-speed grids.
    C,
    /// As C with the extended interpolation `P_x`.
    D,
}

impl Scheme {
    pub fn uses_fine_grid(self) -> bool {
        self != Scheme::A
    }

    pub fn unit_speed(self) -> bool {
        matches!(self, Scheme::C | Scheme::D)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::A => "A",
            Scheme::B => "B",
            Scheme::C => "C",
            Scheme::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Scheme::A),
            "B" => Ok(Scheme::B),
            "C" => Ok(Scheme::C),
            "D" => Ok(Scheme::D),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Mesh, grids and interpolation operators for one scheme.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub scheme: Scheme,
    pub curve: Arc<dyn Curve>,
    pub mesh: Mesh,
    pub coarse: Grid,
    pub fine: Grid,
    /// Coarse to fine: `P`, or `P_x` for Scheme D.
    pub prolong: InterpOperator,
    /// Fine to coarse.
    pub restrict: InterpOperator,
}

impl Discretization {
    /// The scheme's standard mesh: equal parameter panels for A and B,
    /// equal arclength panels with unit-speed grids for C and D.
    pub fn new(scheme: Scheme, curve: Arc<dyn Curve>, n_pt: usize, n_pan: usize) -> Result<Self> {
        let mesh = if scheme.unit_speed() {
            equal_arclength_mesh(curve.as_ref(), n_pan, 1e-13)?
        } else {
            equal_parameter_mesh(curve.as_ref(), n_pan)?
        };
        Self::with_mesh(scheme, curve, mesh, n_pt, scheme.unit_speed())
    }

    pub fn with_mesh(
        scheme: Scheme,
        curve: Arc<dyn Curve>,
        mesh: Mesh,
        n_pt: usize,
        unit_speed: bool,
    ) -> Result<Self> {
        check_scheme_mesh(scheme, &mesh, unit_speed)?;
        let (coarse, fine) = build_grids(curve.as_ref(), &mesh, n_pt, unit_speed)?;
        let n_pan = mesh.n_pan();
        let prolong = if scheme == Scheme::D {
            build_px(&coarse.panel_lengths, &coarse.rule, &fine.rule, SCHEME_D_HALO)?
        } else {
            build_p(&coarse.rule, &fine.rule, n_pan)?
        };
        let restrict = build_q(&coarse.rule, &fine.rule, n_pan)?;
        Ok(Self {
            scheme,
            curve,
            mesh,
            coarse,
            fine,
            prolong,
            restrict,
        })
    }

    /// Replace the coarse-to-fine operator, e.g. by `P_x` with another
    /// stencil width.
    pub fn with_prolongation(mut self, op: InterpOperator) -> Result<Self> {
        if op.input_len() != self.coarse.len() || op.output_len() != self.fine.len() {
            return Err(Error::Config("prolongation does not match the grids".into()));
        }
        self.prolong = op;
        Ok(self)
    }

    pub fn n_unknowns(&self) -> usize {
        self.coarse.len()
    }

    pub fn n_pan(&self) -> usize {
        self.mesh.n_pan()
    }

    pub fn n_pt(&self) -> usize {
        self.coarse.n_pt
    }

    /// Coarse density to fine-grid density.
    pub fn prolong_density(&self, rho: &[Complex64]) -> Vec<Complex64> {
        self.prolong.apply(rho)
    }
}

fn check_scheme_mesh(scheme: Scheme, mesh: &Mesh, unit_speed: bool) -> Result<()> {
    let n_pan = mesh.n_pan();
    if scheme.unit_speed() {
        if !unit_speed {
            return Err(Error::Config(format!("scheme {scheme} needs unit-speed grids")));
        }
        let target = mesh.total_length() / n_pan as f64;
        let worst = mesh.arclengths.iter().map(|l| (l - target).abs()).fold(0.0, f64::max);
        if worst > 1e-10 * mesh.total_length() {
            return Err(Error::Config(format!("scheme {scheme} needs panels of equal arclength")));
        }
    } else {
        if unit_speed {
            return Err(Error::Config(format!("scheme {scheme} uses the curve parameterization")));
        }
        let h = 2.0 * std::f64::consts::PI / n_pan as f64;
        let worst = mesh
            .breakpoints
            .windows(2)
            .map(|w| (w[1] - w[0] - h).abs())
            .fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(Error::Config(format!("scheme {scheme} needs panels of equal parameter length")));
        }
    }
    Ok(())
}

/// Near-interaction blocks of one grid: for every panel `p` the blocks
/// coupling targets on `p` to sources on `p − 1`, `p`, `p + 1`, with
/// product integration where activated.
pub(crate) fn boundary_star_blocks(grid: &Grid, kernel: &CombinedKernel) -> Result<Vec<[DMatrix<Complex64>; 3]>> {
    let n_pt = grid.n_pt;
    let n_pan = grid.n_pan;
    let rule = &grid.rule;
    let wl_self = wfrakl_init(0.0, 1.0, rule)?;
    let mut neighbor_cache: Vec<(f64, f64, LogWeightMatrix)> = Vec::new();
    let mut neighbor = |trans: f64, scale: f64| -> Result<DMatrix<f64>> {
        if let Some((_, _, wl)) = neighbor_cache.iter().find(|(t, s, _)| *t == trans && *s == scale) {
            return Ok(corrections_from(wl, rule));
        }
        let wl = wfrakl_init(trans, scale, rule)?;
        let corr = corrections_from(&wl, rule);
        neighbor_cache.push((trans, scale, wl));
        Ok(corr)
    };
    // canonical corrections and activation per (target panel, source offset)
    let mut plans = Vec::with_capacity(n_pan);
    for p in 0..n_pan {
        let speeds = &grid.speeds[grid.panel_range(p)];
        let own = self_panel_corrections(&wl_self, rule, grid.panel_lengths[p], speeds);
        let prev = (p + n_pan - 1) % n_pan;
        let next = (p + 1) % n_pan;
        let mut entry = Vec::with_capacity(3);
        for q in [prev, p, next] {
            if q == p {
                entry.push((q, own.clone(), vec![true; n_pt]));
            } else {
                let (trans, scale) = neighbor_map(&grid.panel_lengths, q, p)?;
                let active = rule
                    .nodes
                    .iter()
                    .map(|&x| activate_boundary(trans + scale * x, -1.0, 1.0, n_pt))
                    .collect();
                entry.push((q, neighbor(trans, scale)?, active));
            }
        }
        plans.push(entry);
    }
    plans
        .par_iter()
        .enumerate()
        .map(|(p, entry)| {
            let rows = grid.panel_range(p);
            let mut out: Vec<DMatrix<Complex64>> = Vec::with_capacity(3);
            for (q, corr, active) in entry {
                let cols = grid.panel_range(*q);
                let mut block = DMatrix::from_element(n_pt, n_pt, Complex64::new(0.0, 0.0));
                for (il, i) in rows.clone().enumerate() {
                    for (jl, j) in cols.clone().enumerate() {
                        let sw = grid.arc_weight(j);
                        block[(il, jl)] = if i == j {
                            let (m0, gl) = kernel.diagonal(grid.curvature[i]);
                            (m0 + gl * corr[(il, il)]) * sw
                        } else {
                            let (full, gl) = kernel.eval(grid.points[i], grid.points[j], grid.normals[j]);
                            if active[il] {
                                (full + gl * corr[(il, jl)]) * sw
                            } else {
                                full * sw
                            }
                        };
                    }
                }
                out.push(block);
            }
            Ok([out[0].clone(), out[1].clone(), out[2].clone()])
        })
        .collect()
}

/// The discretized operator `I + M_γ` on the coarse grid.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    pub scheme: Scheme,
    pub k: f64,
    pub eta: f64,
    n_pt: usize,
    n_pan: usize,
    /// Per coarse panel: `(source panel, block)` pairs of `M⋆`.
    star: Vec<Vec<(usize, DMatrix<Complex64>)>>,
    /// `M∘`, dense, zero on the star support.
    circ: DMatrix<Complex64>,
}

fn in_star(p: usize, q: usize, n_pan: usize) -> bool {
    q == p || q == (p + 1) % n_pan || (q + 1) % n_pan == p
}

pub fn assemble(disc: &Discretization, k: f64, eta: f64) -> Result<SystemOperator> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Config(format!("wavenumber must be positive, got {k}")));
    }
    if eta == 0.0 || !eta.is_finite() {
        return Err(Error::Config(format!("coupling parameter must be finite and nonzero, got {eta}")));
    }
    let kernel = CombinedKernel::new(k, eta);
    let coarse = &disc.coarse;
    let (n_pt, n_pan) = (coarse.n_pt, coarse.n_pan);
    let star = match disc.scheme {
        Scheme::A => boundary_star_blocks(coarse, &kernel)?
            .into_iter()
            .enumerate()
            .map(|(p, blocks)| {
                let q = [(p + n_pan - 1) % n_pan, p, (p + 1) % n_pan];
                q.into_iter().zip(blocks).collect()
            })
            .collect(),
        _ => refine_star(disc, &kernel)?,
    };
    let circ = circ_matrix(coarse, &kernel);
    Ok(SystemOperator {
        scheme: disc.scheme,
        k,
        eta,
        n_pt,
        n_pan,
        star,
        circ,
    })
}

/// `Q M⋆(22) P` (or `P_x`) as coarse blocks.
fn refine_star(disc: &Discretization, kernel: &CombinedKernel) -> Result<Vec<Vec<(usize, DMatrix<Complex64>)>>> {
    let fine = &disc.fine;
    let n_pan = fine.n_pan;
    let n_pt = disc.coarse.n_pt;
    let fine_blocks = boundary_star_blocks(fine, kernel)?;
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let rows: Vec<Vec<(usize, DMatrix<Complex64>)>> = fine_blocks
        .par_iter()
        .enumerate()
        .map(|(p, blocks)| {
            let q_blk = to_c(disc.restrict.block(p));
            let mut acc: BTreeMap<usize, DMatrix<Complex64>> = BTreeMap::new();
            let sources = [(p + n_pan - 1) % n_pan, p, (p + 1) % n_pan];
            for (q, m22) in sources.iter().zip(blocks) {
                let p_blk = to_c(disc.prolong.block(*q));
                let prod = &q_blk * m22 * p_blk;
                for (c, idx) in disc.prolong.column_indices(*q).into_iter().enumerate() {
                    let (panel, local) = (idx / n_pt, idx % n_pt);
                    let target = acc
                        .entry(panel)
                        .or_insert_with(|| DMatrix::from_element(n_pt, n_pt, Complex64::new(0.0, 0.0)));
                    for r in 0..n_pt {
                        target[(r, local)] += prod[(r, c)];
                    }
                }
            }
            acc.into_iter().collect()
        })
        .collect();
    Ok(rows)
}

fn circ_matrix(grid: &Grid, kernel: &CombinedKernel) -> DMatrix<Complex64> {
    let n = grid.len();
    let (n_pt, n_pan) = (grid.n_pt, grid.n_pan);
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    // column-major: chunk j is column j
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let q = j / n_pt;
        let (rj, nuj, sw) = (grid.points[j], grid.normals[j], grid.arc_weight(j));
        for (i, entry) in col.iter_mut().enumerate() {
            if !in_star(i / n_pt, q, n_pan) {
                *entry = kernel.full(grid.points[i], rj, nuj) * sw;
            }
        }
    });
    DMatrix::from_vec(n, n, data)
}

impl SystemOperator {
    pub fn n_unknowns(&self) -> usize {
        self.n_pt * self.n_pan
    }

    /// Stored entries of `M⋆`.
    pub fn star_nonzeros(&self) -> usize {
        self.star.iter().map(|row| row.len() * self.n_pt * self.n_pt).sum()
    }

    /// `M⋆ x`.
    pub fn apply_star(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n_pt = self.n_pt;
        let mut y = vec![Complex64::new(0.0, 0.0); self.n_unknowns()];
        y.par_chunks_mut(n_pt).enumerate().for_each(|(p, yp)| {
            for (q, block) in &self.star[p] {
                let xq = &x[q * n_pt..(q + 1) * n_pt];
                for (c, xv) in xq.iter().enumerate() {
                    for (r, yv) in yp.iter_mut().enumerate() {
                        *yv += block[(r, c)] * xv;
                    }
                }
            }
        });
        y
    }

    /// `M∘ x`.
    pub fn apply_circ(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_unknowns();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (j, xj) in x.iter().enumerate() {
            if *xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (yv, a) in y.iter_mut().zip(self.circ.column(j).iter()) {
                *yv += a * xj;
            }
        }
        y
    }

    /// Dense `I + M_γ`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut a = self.circ.clone();
        let n_pt = self.n_pt;
        for (p, row) in self.star.iter().enumerate() {
            for (q, block) in row {
                for r in 0..n_pt {
                    for c in 0..n_pt {
                        a[(p * n_pt + r, q * n_pt + c)] += block[(r, c)];
                    }
                }
            }
        }
        for i in 0..a.nrows() {
            a[(i, i)] += Complex64::new(1.0, 0.0);
        }
        a
    }

    /// Dense `M⋆` and `M∘` separately, for inspection.
    pub fn star_dense(&self) -> DMatrix<Complex64> {
        let n = self.n_unknowns();
        let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let n_pt = self.n_pt;
        for (p, row) in self.star.iter().enumerate() {
            for (q, block) in row {
                a.view_mut((p * n_pt, q * n_pt), (n_pt, n_pt)).copy_from(block);
            }
        }
        a
    }

    pub fn circ_dense(&self) -> &DMatrix<Complex64> {
        &self.circ
    }
}

impl LinearOperator for SystemOperator {
    fn dim(&self) -> usize {
        self.n_unknowns()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let star = self.apply_star(x);
        let circ = self.apply_circ(x);
        x.iter()
            .zip(star.iter().zip(&circ))
            .map(|(a, (b, c))| a + b + c)
            .collect()
    }
}

/// 2-norm condition number of a square matrix from its singular values.
pub fn condition_number(a: &DMatrix<Complex64>) -> Result<f64> {
    if a.nrows() != a.ncols() || a.is_empty() {
        return Err(Error::Config("condition number needs a non-empty square matrix".into()));
    }
    let sv = a.clone().singular_values();
    let (min, max) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if !(min > 0.0) || !max.is_finite() {
        return Err(Error::Numerical(format!("singular matrix (smallest singular value {min:e})")));
    }
    Ok(max / min)
}

/// Condition number of `I + M_γ`, computed densely.
pub fn condition_estimate(op: &SystemOperator) -> Result<f64> {
    condition_number(&op.to_dense())
}
