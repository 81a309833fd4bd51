//! Bessel and Hankel functions of orders zero and one for positive real
//! arguments.
//!
//! The kernels of the single and double layer operators only need
//! `H_0^(1)`, `H_1^(1)` and their real parts `J_0`, `J_1`. Values of
//! `J_n`, `Y_n` come from the `libm` port of the FreeBSD/musl routines
//! (rational approximations below x = 2, Hankel asymptotic forms with
//! rational `P`, `Q` above). On top of those this module provides the
//! "regular parts" of `Y_0` and `Y_1`, i.e. what is left after the
//! logarithmic and pole terms are removed, which the kernel split needs
//! without cancellation at small argument.

use std::f64::consts::{FRAC_2_PI, FRAC_1_PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument the regular parts of `Y_0`, `Y_1` are summed from
/// their power series instead of subtracting the log term from `Y_n`.
const REGULAR_SERIES_CUTOFF: f64 = 2.0;

/// `ψ(1) = −γ`.
pub fn digamma_one() -> f64 {
    -EULER_GAMMA
}

fn check_nonnegative(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 || x.is_infinite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_positive(x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 || x.is_infinite() {
        return Err(Error::Domain(format!("Hankel argument must be finite and > 0, got {x}")));
    }
    Ok(())
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(libm::j0(x))
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(libm::j1(x))
}

/// `H_0^(1)(x) = J_0(x) + i Y_0(x)`; logarithmically singular at zero.
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    check_positive(x)?;
    Ok(Complex64::new(libm::j0(x), libm::y0(x)))
}

/// `H_1^(1)(x) = J_1(x) + i Y_1(x)`; has a simple pole at zero.
pub fn hankel1_1(x: f64) -> Result<Complex64> {
    check_positive(x)?;
    Ok(Complex64::new(libm::j1(x), libm::y1(x)))
}

/// All four order-0/1 Bessel values at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bessel01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bessel01 {
    /// Unchecked evaluation for hot loops; `x` must be positive.
    #[inline]
    pub fn eval(x: f64) -> Self {
        debug_assert!(x > 0.0);
        Self {
            j0: libm::j0(x),
            j1: libm::j1(x),
            y0: libm::y0(x),
            y1: libm::y1(x),
        }
    }

    #[inline]
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }

    #[inline]
    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

/// `Y_0(x) − (2/π) log(x/2) J_0(x)`, an entire function of `x²`.
///
/// `j0` must be `J_0(x)`; passing it in avoids a second evaluation.
pub fn y0_regular(x: f64, j0: f64, y0: f64) -> f64 {
    if x < REGULAR_SERIES_CUTOFF {
        // (2/π)[γ J0 + Σ_{k≥1} (−1)^{k+1} H_k (x²/4)^k / (k!)²]
        let z = 0.25 * x * x;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut sum = 0.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= -z / (kf * kf);
            harmonic += 1.0 / kf;
            let add = -harmonic * term;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        FRAC_2_PI * (EULER_GAMMA * j0 + sum)
    } else {
        y0 - FRAC_2_PI * (0.5 * x).ln() * j0
    }
}

/// `Y_1(x) + 2/(πx) − (2/π) log(x/2) J_1(x)`, an odd entire function.
pub fn y1_regular(x: f64, j1: f64, y1: f64) -> f64 {
    if x < REGULAR_SERIES_CUTOFF {
        // −(1/π) Σ_{k≥0} (−1)^k [ψ(k+1) + ψ(k+2)] (x/2)^{2k+1} / (k!(k+1)!)
        // with ψ(m+1) = H_m − γ; the γ part sums to (2γ/π) J1.
        let half = 0.5 * x;
        let z = half * half;
        let mut term = half;
        let mut h_k = 0.0;
        let mut sum = term; // k = 0: H_0 + H_1 = 1
        for k in 1..40 {
            let kf = k as f64;
            term *= -z / (kf * (kf + 1.0));
            h_k += 1.0 / kf;
            let add = (2.0 * h_k + 1.0 / (kf + 1.0)) * term;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        2.0 * EULER_GAMMA * FRAC_1_PI * j1 - FRAC_1_PI * sum
    } else {
        y1 + FRAC_2_PI / x - FRAC_2_PI * (0.5 * x).ln() * j1
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Independent reference values: power series summed in double-double
    //! arithmetic for moderate arguments, the Hankel asymptotic expansion
    //! for large ones.

    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::EULER_GAMMA;

    #[derive(Clone, Copy, Debug)]
    struct Dd(f64, f64);

    impl Dd {
        fn from(x: f64) -> Self {
            Dd(x, 0.0)
        }
        fn add(self, o: Dd) -> Dd {
            let s = self.0 + o.0;
            let bb = s - self.0;
            let err = (self.0 - (s - bb)) + (o.0 - bb);
            let lo = err + self.1 + o.1;
            let hi = s + lo;
            Dd(hi, lo - (hi - s))
        }
        fn mul(self, o: Dd) -> Dd {
            let p = self.0 * o.0;
            let err = self.0.mul_add(o.0, -p);
            let lo = err + self.0 * o.1 + self.1 * o.0;
            let hi = p + lo;
            Dd(hi, lo - (hi - p))
        }
        fn div_f(self, d: f64) -> Dd {
            let q1 = self.0 / d;
            let r = self.add(Dd::from(-q1).mul(Dd::from(d)));
            let q2 = r.0 / d;
            let hi = q1 + q2;
            Dd(hi, q2 - (hi - q1))
        }
        fn neg(self) -> Dd {
            Dd(-self.0, -self.1)
        }
        fn val(self) -> f64 {
            self.0 + self.1
        }
    }

    /// (J0, J1, Y0, Y1) by series in double-double; good for x <= 25.
    fn series(x: f64) -> (f64, f64, f64, f64) {
        let half = Dd::from(0.5 * x);
        let z = half.mul(half);
        // J0 and the harmonic sum for Y0
        let mut t = Dd::from(1.0);
        let mut j0 = t;
        let mut harm = Dd::from(0.0);
        let mut s0 = Dd::from(0.0);
        // J1 and the digamma sum for Y1
        let mut u = half;
        let mut j1 = u;
        let mut hk = Dd::from(0.0);
        let mut s1 = u; // k = 0 term: (H_0 + H_1) = 1
        for k in 1..200 {
            let kf = k as f64;
            t = t.mul(z).div_f(kf * kf).neg();
            j0 = j0.add(t);
            harm = harm.add(Dd::from(1.0).div_f(kf));
            s0 = s0.add(harm.mul(t).neg());
            u = u.mul(z).div_f(kf * (kf + 1.0)).neg();
            j1 = j1.add(u);
            hk = hk.add(Dd::from(1.0).div_f(kf));
            let coef = hk.add(hk).add(Dd::from(1.0).div_f(kf + 1.0));
            s1 = s1.add(coef.mul(u));
            if t.0.abs() < 1e-40 && u.0.abs() < 1e-40 {
                break;
            }
        }
        let (j0, j1) = (j0.val(), j1.val());
        let l = (0.5 * x).ln();
        let y0 = 2.0 / PI * ((l + EULER_GAMMA) * j0 + s0.val());
        let y1 = -2.0 / (PI * x) + 2.0 / PI * (l + EULER_GAMMA) * j1 - s1.val() / PI;
        (j0, j1, y0, y1)
    }

    /// Hankel asymptotic expansion of H_nu^(1), nu in {0, 1}; x >= 25.
    fn asymptotic(nu: u32, x: f64) -> Complex64 {
        let mu = 4.0 * (nu * nu) as f64;
        let mut a = Complex64::new(1.0, 0.0);
        let mut sum = a;
        let i = Complex64::new(0.0, 1.0);
        for k in 1..80 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            a = a * (mu - odd * odd) / (kf * 8.0 * x) * i;
            if a.norm() < 1e-19 {
                break;
            }
            sum += a;
        }
        // e^{i(x − ν π/2 − π/4)} without rounding the shifted argument
        let shift = (nu as f64) * PI / 2.0 + PI / 4.0;
        let phase = Complex64::new(x.cos(), x.sin()) * Complex64::new(shift.cos(), -shift.sin());
        (2.0 / (PI * x)).sqrt() * phase * sum
    }

    pub fn h0(x: f64) -> Complex64 {
        if x <= 25.0 {
            let (j0, _, y0, _) = series(x);
            Complex64::new(j0, y0)
        } else {
            asymptotic(0, x)
        }
    }

    pub fn h1(x: f64) -> Complex64 {
        if x <= 25.0 {
            let (_, j1, _, y1) = series(x);
            Complex64::new(j1, y1)
        } else {
            asymptotic(1, x)
        }
    }
}
