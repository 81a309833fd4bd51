//! Kernels of the single layer operator `S_k`, the double layer operator
//! `K_k` and the combined operator `M = K_k − iη S_k`, together with their
//! explicit splits
//!
//! ```text
//! G(r, r') = G_0(r, r') + log|r − r'| G_L(r, r') + ((r' − r)·ν')/|r' − r|² G_C(r, r')
//! ```
//!
//! into smooth, logarithmic and Cauchy parts. Kernels carry the factor two
//! of the operators: `S_k(r, r') = (i/2) H_0^(1)(k|r − r'|)` and
//! `K_k(r, r') = −(ik/2) H_1^(1)(k|r − r'|) ((r' − r)·ν')/|r' − r|`.
//!
//! The log factors are formed from `J_0`, `J_1` directly and the smooth
//! parts from the regular parts of `Y_0`, `Y_1`, so no large logarithms
//! cancel at small separation.

use std::f64::consts::FRAC_1_PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Curve, Point};
use crate::special::{digamma_one, y0_regular, y1_regular, Bessel01};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Components of a split kernel at one `(r, r')` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSplitParts {
    /// `G_0`
    pub smooth: Complex64,
    /// `G_L`, the coefficient of `log|r − r'|`
    pub log_factor: Complex64,
    /// `G_C`, the coefficient of `((r' − r)·ν')/|r' − r|²`
    pub cauchy_factor: Complex64,
}

impl KernelSplitParts {
    /// Recombine the parts into the kernel value at `(r, r')`.
    pub fn reassemble(&self, r: Point, rp: Point, nup: Point) -> Complex64 {
        let d = (rp - r).norm();
        self.smooth + self.log_factor * d.ln() + self.cauchy_factor * cauchy_kernel(r, rp, nup)
    }

    /// `self − iη other`, partwise.
    fn minus_i_eta(self, eta: f64, other: KernelSplitParts) -> KernelSplitParts {
        let c = -I * eta;
        KernelSplitParts {
            smooth: self.smooth + c * other.smooth,
            log_factor: self.log_factor + c * other.log_factor,
            cauchy_factor: self.cauchy_factor + c * other.cauchy_factor,
        }
    }
}

/// `((r' − r)·ν')/|r' − r|²`.
pub fn cauchy_kernel(r: Point, rp: Point, nup: Point) -> f64 {
    let diff = rp - r;
    diff.dot(&nup) / diff.norm_squared()
}

/// The coupling parameter `η` of the combined field representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParameter(f64);

impl CouplingParameter {
    pub fn new(eta: f64) -> Result<Self> {
        if eta == 0.0 || !eta.is_finite() {
            return Err(Error::Config(format!("coupling parameter must be finite and nonzero, got {eta}")));
        }
        Ok(Self(eta))
    }

    /// `η = k/2`.
    pub fn half_wavenumber(k: f64) -> Self {
        Self(0.5 * k)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn separation(r: Point, rp: Point, k: f64) -> Result<(f64, f64)> {
    let d = (rp - r).norm();
    if d == 0.0 {
        return Err(Error::Domain(
            "coincident points: use the diagonal limit instead".into(),
        ));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    Ok((d, k * d))
}

/// `S_k(r, r') = (i/2) H_0^(1)(k|r − r'|)`.
pub fn kernel_s(r: Point, rp: Point, k: f64) -> Result<Complex64> {
    let (_, x) = separation(r, rp, k)?;
    Ok(0.5 * I * Bessel01::eval(x).h0())
}

fn split_s_from(b: &Bessel01, x: f64, k: f64) -> KernelSplitParts {
    // S_0 = −(1/π) log(k/2) J0 − y0reg/2 + i J0/2
    let y0r = y0_regular(x, b.j0, b.y0);
    KernelSplitParts {
        smooth: Complex64::new(-FRAC_1_PI * (0.5 * k).ln() * b.j0 - 0.5 * y0r, 0.5 * b.j0),
        log_factor: Complex64::new(-FRAC_1_PI * b.j0, 0.0),
        cauchy_factor: Complex64::new(0.0, 0.0),
    }
}

/// Split of `S_k`; the log factor is `−(2/π) Im S_k = −J_0/π`.
pub fn split_s(r: Point, rp: Point, k: f64) -> Result<KernelSplitParts> {
    let (_, x) = separation(r, rp, k)?;
    Ok(split_s_from(&Bessel01::eval(x), x, k))
}

/// Limits of the `S_k` split as `r' → r`.
pub fn split_s_diagonal(k: f64) -> KernelSplitParts {
    KernelSplitParts {
        smooth: Complex64::new(-FRAC_1_PI * ((0.5 * k).abs().ln() - digamma_one()), 0.5),
        log_factor: Complex64::new(-FRAC_1_PI, 0.0),
        cauchy_factor: Complex64::new(0.0, 0.0),
    }
}

/// `K_k(r, r') = −(ik/2) H_1^(1)(k|r − r'|) ((r' − r)·ν')/|r' − r|`.
pub fn kernel_k(r: Point, rp: Point, nup: Point, k: f64) -> Result<Complex64> {
    let (d, x) = separation(r, rp, k)?;
    let cosine = (rp - r).dot(&nup) / d;
    Ok(-0.5 * I * k * Bessel01::eval(x).h1() * cosine)
}

fn split_k_from(b: &Bessel01, x: f64, d: f64, n_over_d: f64, k: f64, field: bool) -> KernelSplitParts {
    // (k/2) Y1 = −1/(πd) + (k/π)(log d + log(k/2)) J1 + (k/2) y1reg
    let y1r = y1_regular(x, b.j1, b.y1);
    let regular = Complex64::new(
        k * FRAC_1_PI * (0.5 * k).ln() * b.j1 + 0.5 * k * y1r,
        -0.5 * k * b.j1,
    ) * n_over_d;
    let (smooth, cauchy) = if field {
        (regular, -FRAC_1_PI)
    } else {
        (regular - FRAC_1_PI * n_over_d / d, 0.0)
    };
    KernelSplitParts {
        smooth,
        log_factor: Complex64::new(k * FRAC_1_PI * b.j1 * n_over_d, 0.0),
        cauchy_factor: Complex64::new(cauchy, 0.0),
    }
}

/// Split of `K_k` for `r` on the curve: the Cauchy-looking term is smooth
/// there and stays inside `G_0`.
pub fn split_k_boundary(r: Point, rp: Point, nup: Point, k: f64) -> Result<KernelSplitParts> {
    let (d, x) = separation(r, rp, k)?;
    let n_over_d = (rp - r).dot(&nup) / d;
    Ok(split_k_from(&Bessel01::eval(x), x, d, n_over_d, k, false))
}

/// Limits of the boundary `K_k` split as `r' → r`; `curvature` is
/// `(ν·r̈)/|ṙ|²` at `r`.
pub fn split_k_boundary_diagonal(curvature: f64) -> KernelSplitParts {
    KernelSplitParts {
        smooth: Complex64::new(0.5 * FRAC_1_PI * curvature, 0.0),
        log_factor: Complex64::new(0.0, 0.0),
        cauchy_factor: Complex64::new(0.0, 0.0),
    }
}

/// Split of `K_k` for `r` off the curve, with Cauchy factor `−1/π`.
pub fn split_k_field(r: Point, rp: Point, nup: Point, k: f64) -> Result<KernelSplitParts> {
    let (d, x) = separation(r, rp, k)?;
    let n_over_d = (rp - r).dot(&nup) / d;
    Ok(split_k_from(&Bessel01::eval(x), x, d, n_over_d, k, true))
}

/// Where the target point of a kernel evaluation lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetContext {
    Boundary,
    Field,
}

/// Split of `M = K_k − iη S_k`.
pub fn combined_kernel(
    r: Point,
    rp: Point,
    nup: Point,
    k: f64,
    eta: f64,
    context: TargetContext,
) -> Result<KernelSplitParts> {
    let (d, x) = separation(r, rp, k)?;
    let n_over_d = (rp - r).dot(&nup) / d;
    let b = Bessel01::eval(x);
    let kp = split_k_from(&b, x, d, n_over_d, k, context == TargetContext::Field);
    Ok(kp.minus_i_eta(eta, split_s_from(&b, x, k)))
}

/// Limits of the boundary split of `M` as `r' → r`.
pub fn combined_diagonal(k: f64, eta: f64, curvature: f64) -> KernelSplitParts {
    split_k_boundary_diagonal(curvature).minus_i_eta(eta, split_s_diagonal(k))
}

/// Boundary split of `M` between curve parameters `t` and `tp`, switching
/// to the closed-form limits when the parameters nearly coincide.
pub fn combined_on_curve(curve: &dyn Curve, t: f64, tp: f64, k: f64, eta: f64) -> Result<KernelSplitParts> {
    if (t - tp).abs() < 1e-10 {
        let v = curve.velocity(t);
        let curvature = curve.normal(t).dot(&curve.acceleration(t)) / v.norm_squared();
        return Ok(combined_diagonal(k, eta, curvature));
    }
    combined_kernel(
        curve.position(t),
        curve.position(tp),
        curve.normal(tp),
        k,
        eta,
        TargetContext::Boundary,
    )
}

/// Fast evaluation of `M` and its log factor for matrix assembly and field
/// evaluation. The log factor of `M` is the same on and off the curve.
#[derive(Debug, Clone, Copy)]
pub struct CombinedKernel {
    pub k: f64,
    pub eta: f64,
}

impl CombinedKernel {
    pub fn new(k: f64, eta: f64) -> Self {
        Self { k, eta }
    }

    /// `(M(r, r'), G_L(r, r'))`; requires `r ≠ r'`.
    #[inline]
    pub fn eval(&self, r: Point, rp: Point, nup: Point) -> (Complex64, Complex64) {
        let diff = rp - r;
        let d = diff.norm();
        let n_over_d = diff.dot(&nup) / d;
        let b = Bessel01::eval(self.k * d);
        let k = self.k;
        let eta = self.eta;
        // K = (k/2)(Y1 − i J1) n/d,  −iηS = η J0/2 + iη Y0/2
        let full = Complex64::new(
            0.5 * k * b.y1 * n_over_d + 0.5 * eta * b.j0,
            -0.5 * k * b.j1 * n_over_d + 0.5 * eta * b.y0,
        );
        let log = Complex64::new(k * FRAC_1_PI * b.j1 * n_over_d, eta * FRAC_1_PI * b.j0);
        (full, log)
    }

    #[inline]
    pub fn full(&self, r: Point, rp: Point, nup: Point) -> Complex64 {
        self.eval(r, rp, nup).0
    }

    /// Boundary diagonal: smooth part and log factor limits at a node.
    pub fn diagonal(&self, curvature: f64) -> (Complex64, Complex64) {
        let parts = combined_diagonal(self.k, self.eta, curvature);
        (parts.smooth, parts.log_factor)
    }
}
