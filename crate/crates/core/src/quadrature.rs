//! Product integration against `log|r − r'|` and the Cauchy kernel on
//! single panels.
//!
//! Boundary targets use real product weights on the canonical interval
//! (`wfrakl_init`), turned into corrections of the underlying
//! Gauss–Legendre weights. Field targets use complex moments of the panel in
//! the complex plane (`wlc_init`), giving log corrections and Cauchy
//! compensation weights.
//!
//! Both build monomial moments `p_k = ∫ z^k/(z − x) dz` by the three-term
//! recursion `p_k = x p_{k−1} + c_k`. Forward recursion multiplies rounding
//! errors by `|x|` per step, so for `|x| > BACKWARD_THRESHOLD` the moments
//! are instead obtained by running the recursion downwards from zero,
//! which converges to the bounded (straight segment) solution.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Curve, Point};
use crate::interp::{gauss_legendre, vandermonde, CanonicalRule};

/// Targets farther than this (in canonical units) use backward recursion.
pub const BACKWARD_THRESHOLD: f64 = 1.1;

/// Distance to a panel endpoint, in canonical units, below which field
/// weights are flagged as inaccurate.
pub const ENDPOINT_TOLERANCE: f64 = 1e-13;

/// `c_k = ∫₋₁¹ t^{k−1} dt`.
fn c(k: usize) -> f64 {
    if k % 2 == 1 {
        2.0 / k as f64
    } else {
        0.0
    }
}

/// `p[0..=npt]` from `p[0]` with `p[k] = x p[k−1] + c_k`.
fn moments<T>(x: T, abs_x: f64, p0: T, npt: usize) -> Vec<T>
where
    T: Copy + From<f64> + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let mut p = vec![T::from(0.0); npt + 1];
    p[0] = p0;
    if abs_x <= BACKWARD_THRESHOLD {
        for k in 1..=npt {
            p[k] = x * p[k - 1] + T::from(c(k));
        }
        return p;
    }
    // every downward step damps the start error by 1/|x|
    let extra = ((40.0 / abs_x.ln()).ceil() as usize).min(4000);
    let mut v = T::from(0.0);
    for k in (npt + 1..=npt + extra).rev() {
        v = (v - T::from(c(k))) / x;
    }
    p[npt] = v;
    for k in (2..=npt).rev() {
        p[k - 1] = (p[k] - T::from(c(k))) / x;
    }
    p
}

/// Product weights `𝔚_L` for targets `trans + scale·𝔱_m` and sources at the
/// canonical nodes: `Σ_j 𝔚_L[m, j] f(𝔱_j) = ∫₋₁¹ log|tt_m − t| f(t) dt`
/// for polynomials `f` of degree below `n_pt`.
#[derive(Debug, Clone)]
pub struct LogWeightMatrix {
    pub weights: DMatrix<f64>,
    pub trans: f64,
    pub scale: f64,
}

pub fn wfrakl_init(trans: f64, scale: f64, rule: &CanonicalRule) -> Result<LogWeightMatrix> {
    let npt = rule.len();
    let mut q = DMatrix::zeros(npt, npt);
    for m in 0..npt {
        let tt = trans + scale * rule.nodes[m];
        if tt == 1.0 || tt == -1.0 {
            return Err(Error::Domain(format!("target {tt} at a panel endpoint")));
        }
        let p0 = ((1.0 - tt) / (1.0 + tt)).abs().ln();
        let p1 = (1.0 - tt * tt).abs().ln();
        let p = moments(tt, tt.abs(), p0, npt);
        for j in 1..=npt {
            let head = if j % 2 == 1 { p1 } else { p0 };
            q[(m, j - 1)] = (head - p[j]) / j as f64;
        }
    }
    // W A = Q with A[i][j] = 𝔱_i^j
    let a = vandermonde(&rule.nodes, npt);
    let wt = a
        .transpose()
        .lu()
        .solve(&q.transpose())
        .ok_or_else(|| Error::Numerical("singular Vandermonde matrix".into()))?;
    Ok(LogWeightMatrix {
        weights: wt.transpose(),
        trans,
        scale,
    })
}

/// Corrections `w_Lj^corr(r_i)` for targets and sources on the same panel.
///
/// `param_length` is the panel length in the grid parameter and `speeds`
/// the speeds at the panel's nodes.
pub fn self_panel_corrections(
    wl: &LogWeightMatrix,
    rule: &CanonicalRule,
    param_length: f64,
    speeds: &[f64],
) -> DMatrix<f64> {
    let n = rule.len();
    DMatrix::from_fn(n, n, |i, j| {
        let w = wl.weights[(i, j)] / rule.weights[j];
        if i == j {
            w + (param_length * speeds[i] / 2.0).abs().ln()
        } else {
            w - (rule.nodes[i] - rule.nodes[j]).abs().ln()
        }
    })
}

/// Canonical placement of the nodes of panel `target` relative to an
/// adjacent panel `source`: `(trans, scale)`.
pub fn neighbor_map(panel_lengths: &[f64], source: usize, target: usize) -> Result<(f64, f64)> {
    let n = panel_lengths.len();
    if source >= n || target >= n {
        return Err(Error::Contract(format!("panel index out of range ({source}, {target})")));
    }
    let scale = panel_lengths[target] / panel_lengths[source];
    if target == (source + 1) % n {
        Ok((1.0 + scale, scale))
    } else if (target + 1) % n == source {
        Ok((-(1.0 + scale), scale))
    } else {
        Err(Error::Contract(format!("panels {source} and {target} are not adjacent")))
    }
}

/// Corrections for targets on panel `target` and sources on the adjacent
/// panel `source`; rows index target nodes, columns source nodes.
pub fn neighbor_corrections(
    panel_lengths: &[f64],
    source: usize,
    target: usize,
    rule: &CanonicalRule,
) -> Result<DMatrix<f64>> {
    let (trans, scale) = neighbor_map(panel_lengths, source, target)?;
    let wl = wfrakl_init(trans, scale, rule)?;
    Ok(corrections_from(&wl, rule))
}

/// `𝔚_L[i, j]/𝔴_j − log|tt_i − 𝔱_j|` for all pairs, valid when no target
/// coincides with a source node.
pub fn corrections_from(wl: &LogWeightMatrix, rule: &CanonicalRule) -> DMatrix<f64> {
    let n = rule.len();
    DMatrix::from_fn(n, n, |i, j| {
        let tt = wl.trans + wl.scale * rule.nodes[i];
        wl.weights[(i, j)] / rule.weights[j] - (tt - rule.nodes[j]).abs().ln()
    })
}

/// Field-target weights on one panel.
#[derive(Debug, Clone, PartialEq)]
pub struct NearEvalWeights {
    /// Corrections multiplying `G_L ρ_j s_j w_j`.
    pub corr_log: Vec<f64>,
    /// Compensation weights multiplying `G_C ρ_j`.
    pub cmp_cauchy: Vec<f64>,
    /// Target within `ENDPOINT_TOLERANCE` of a panel endpoint: the moments
    /// suffer cancellation and the weights may be inaccurate.
    pub near_endpoint: bool,
}

/// Target-independent data of one panel for `wlc_init`, with the transposed
/// Vandermonde matrix of the panel nodes factorized once.
#[derive(Debug, Clone)]
pub struct PanelNearData {
    center: Complex64,
    dr: Complex64,
    rj: Vec<Complex64>,
    nuj: Vec<Complex64>,
    rpwj: Vec<Complex64>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    shape: PanelShape,
}

/// Panel in chord coordinates (endpoints at ∓1), interpolated through the
/// endpoints and the nodes in the panel parameter `s ∈ [−1, 1]`.
#[derive(Debug, Clone)]
struct PanelShape {
    s: Vec<f64>,
    z: Vec<Complex64>,
    bary: Vec<f64>,
    /// `z` at `SHAPE_SAMPLES + 1` equispaced parameters.
    samples: Vec<Complex64>,
    top: f64,
}

const SHAPE_SAMPLES: usize = 128;

/// Height above the panel, in chord units, beyond which a target in the
/// half-strip over the chord is taken as not enclosed by panel and chord.
const ABOVE_MARGIN: f64 = 0.05;

impl PanelShape {
    fn new(nodes: &[f64], z: &[Complex64]) -> Self {
        let mut s = Vec::with_capacity(nodes.len() + 2);
        s.push(-1.0);
        s.extend_from_slice(nodes);
        s.push(1.0);
        let mut zz = Vec::with_capacity(s.len());
        zz.push(Complex64::new(-1.0, 0.0));
        zz.extend_from_slice(z);
        zz.push(Complex64::new(1.0, 0.0));
        let bary: Vec<f64> = (0..s.len())
            .map(|j| 1.0 / (0..s.len()).filter(|&k| k != j).map(|k| s[j] - s[k]).product::<f64>())
            .collect();
        let mut shape = Self {
            s,
            z: zz,
            bary,
            samples: Vec::new(),
            top: 0.0,
        };
        shape.samples = (0..=SHAPE_SAMPLES)
            .map(|i| shape.eval(-1.0 + 2.0 * i as f64 / SHAPE_SAMPLES as f64))
            .collect();
        shape.top = shape.samples.iter().map(|w| w.im).fold(0.0, f64::max);
        shape
    }

    fn eval(&self, x: f64) -> Complex64 {
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for ((&sj, &zj), &bj) in self.s.iter().zip(&self.z).zip(&self.bary) {
            if x == sj {
                return zj;
            }
            let t = bj / (x - sj);
            num += t * zj;
            den += t;
        }
        num / den
    }

    /// True if every point of the panel straight below or above `w` lies
    /// lower than `w` by more than `ABOVE_MARGIN`.
    fn clearly_above(&self, w: Complex64) -> bool {
        if w.im > self.top + ABOVE_MARGIN {
            return true;
        }
        let h = 2.0 / SHAPE_SAMPLES as f64;
        for i in 0..SHAPE_SAMPLES {
            let (za, zb) = (self.samples[i], self.samples[i + 1]);
            if (za.re < w.re) == (zb.re < w.re) {
                continue;
            }
            let neg_a = za.re < w.re;
            let (mut a, mut b) = (-1.0 + i as f64 * h, -1.0 + (i + 1) as f64 * h);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (self.eval(m).re < w.re) == neg_a {
                    a = m;
                } else {
                    b = m;
                }
            }
            if self.eval(0.5 * (a + b)).im > w.im - ABOVE_MARGIN {
                return false;
            }
        }
        true
    }
}

#[inline]
pub fn to_complex(p: Point) -> Complex64 {
    Complex64::new(p.x, p.y)
}

impl PanelNearData {
    /// `ra`, `rb`: panel endpoints; `rj`, `nuj`, `rpwj`: nodes, unit
    /// normals and weighted velocities `ṙ_j w_j`.
    pub fn new(ra: Point, rb: Point, rj: &[Point], nuj: &[Point], rpwj: &[Point]) -> Result<Self> {
        let npt = rj.len();
        if nuj.len() != npt || rpwj.len() != npt || npt == 0 {
            return Err(Error::Config("inconsistent panel data lengths".into()));
        }
        let (ra, rb) = (to_complex(ra), to_complex(rb));
        let dr = 0.5 * (rb - ra);
        if dr.norm() == 0.0 {
            return Err(Error::InvalidMesh("panel with coincident endpoints".into()));
        }
        let center = 0.5 * (ra + rb);
        let rj: Vec<Complex64> = rj.iter().map(|&p| to_complex(p)).collect();
        let rjtr: Vec<Complex64> = rj.iter().map(|&z| (z - center) / dr).collect();
        let a = DMatrix::from_fn(npt, npt, |i, j| rjtr[j].powi(i as i32));
        let shape = PanelShape::new(&gauss_legendre(npt).nodes, &rjtr);
        Ok(Self {
            center,
            dr,
            nuj: nuj.iter().map(|&p| to_complex(p)).collect(),
            rpwj: rpwj.iter().map(|&p| to_complex(p)).collect(),
            rj,
            lu: a.lu(),
            shape,
        })
    }

    pub fn len(&self) -> usize {
        self.rj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rj.is_empty()
    }

    /// Weights for the target `r`, which must not lie on the panel.
    pub fn weights(&self, r: Point) -> Result<NearEvalWeights> {
        let npt = self.len();
        let r = to_complex(r);
        let rtr = (r - self.center) / self.dr;
        let near_endpoint =
            (rtr - 1.0).norm() < ENDPOINT_TOLERANCE || (rtr + 1.0).norm() < ENDPOINT_TOLERANCE;
        if rtr == Complex64::new(1.0, 0.0) || rtr == Complex64::new(-1.0, 0.0) {
            return Err(Error::Contract("field target at a panel endpoint".into()));
        }
        if self.rj.contains(&r) {
            return Err(Error::Contract("field target coincides with a panel node".into()));
        }
        let l_plus = (1.0 - rtr).ln();
        let l_minus = (-1.0 - rtr).ln();
        let mut p0 = l_plus - l_minus;
        let mut p1 = l_plus + l_minus;
        // the logs give moments over the chord; a target enclosed between
        // chord and panel picks up the residue term. Targets in the strip
        // over the chord count as enclosed unless clearly above the panel,
        // which happens across concave regions of coarse discretizations.
        let branch = rtr.im > 0.0 && rtr.re.abs() < 1.0 && !self.shape.clearly_above(rtr);
        let shift = Complex64::new(0.0, if branch { -2.0 * PI } else { 0.0 });
        p0 += shift;
        p1 -= shift;
        let mut p = moments(rtr, rtr.norm(), p0, npt);
        if branch && rtr.norm() > BACKWARD_THRESHOLD {
            // the downward recursion yields the chord moments
            let mut power = rtr;
            for pk in p.iter_mut().skip(1) {
                *pk += shift * power;
                power *= rtr;
            }
        }
        let q = DVector::from_fn(npt, |i, _| {
            let j = i + 1;
            let head = if j % 2 == 1 { p1 } else { p0 };
            (head - p[j]) / j as f64
        });
        let pv = DVector::from_fn(npt, |i, _| p[i]);
        let xq = self
            .lu
            .solve(&q)
            .ok_or_else(|| Error::Numerical("singular panel Vandermonde matrix".into()))?;
        let xp = self
            .lu
            .solve(&pv)
            .ok_or_else(|| Error::Numerical("singular panel Vandermonde matrix".into()))?;
        let mut corr_log = Vec::with_capacity(npt);
        let mut cmp_cauchy = Vec::with_capacity(npt);
        for j in 0..npt {
            let (zj, rpw) = (self.rj[j], self.rpwj[j]);
            corr_log.push(
                (xq[j] * self.dr * self.nuj[j].conj()).im / rpw.norm()
                    - ((zj - r) / self.dr).norm().ln(),
            );
            cmp_cauchy.push((xp[j] - rpw / (zj - r)).im);
        }
        Ok(NearEvalWeights {
            corr_log,
            cmp_cauchy,
            near_endpoint,
        })
    }
}

/// Log corrections and Cauchy compensation weights for a field target `r`
/// and the panel with endpoints `ra`, `rb`.
pub fn wlc_init(
    ra: Point,
    rb: Point,
    r: Point,
    rj: &[Point],
    nuj: &[Point],
    rpwj: &[Point],
) -> Result<NearEvalWeights> {
    PanelNearData::new(ra, rb, rj, nuj, rpwj)?.weights(r)
}

/// Activation factor for boundary targets, relative to the panel length.
pub fn boundary_factor(n_pt: usize) -> f64 {
    if n_pt >= 32 {
        0.7
    } else {
        1.0
    }
}

/// Activation factor for field targets, relative to the panel arclength.
pub fn field_factor(n_pt: usize) -> f64 {
    if n_pt >= 32 {
        0.3
    } else {
        1.1
    }
}

/// Product integration for a boundary node at parameter `t_i` against the
/// panel `[t_a, t_b]`, the parameters taken on a common unwrapped axis.
pub fn activate_boundary(t_i: f64, t_a: f64, t_b: f64, n_pt: usize) -> bool {
    (t_i - 0.5 * (t_a + t_b)).abs() < boundary_factor(n_pt) * (t_b - t_a)
}

/// Product integration for a field point at minimum distance `distance`
/// from a panel of arclength `panel_arclength`.
pub fn activate_field(distance: f64, panel_arclength: f64, n_pt: usize) -> bool {
    distance < field_factor(n_pt) * panel_arclength
}

/// Minimum distance from `r` to the curve piece `t ∈ [t_a, t_b]`: a 20
/// interval scan followed by Newton on the squared distance.
pub fn min_distance_to_panel(curve: &dyn Curve, t_a: f64, t_b: f64, r: Point) -> f64 {
    const SAMPLES: usize = 20;
    let dist2 = |t: f64| (curve.position(t) - r).norm_squared();
    let h = (t_b - t_a) / SAMPLES as f64;
    let (mut best_t, mut best) = (t_a, dist2(t_a));
    for i in 1..=SAMPLES {
        let t = t_a + h * i as f64;
        let d = dist2(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let mut t = best_t;
    for _ in 0..30 {
        let diff = curve.position(t) - r;
        let v = curve.velocity(t);
        let g = diff.dot(&v);
        let hess = v.norm_squared() + diff.dot(&curve.acceleration(t));
        if hess <= 0.0 {
            break;
        }
        let next = (t - g / hess).clamp(t_a, t_b);
        let step = (next - t).abs();
        t = next;
        if step < 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    best.min(dist2(t)).sqrt()
}
