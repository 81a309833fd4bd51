//! Full (unrestarted) GMRES for complex systems.
//!
//! Arnoldi uses modified Gram–Schmidt with one reorthogonalization pass and
//! the Hessenberg least-squares problem is updated by Givens rotations, so
//! the residual estimate is available after every iteration without forming
//! the iterate.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A square linear map on `C^n`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Stop when the estimated relative residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Stop after this many consecutive iterations without a new smallest
    /// residual estimate and return the best iterate.
    pub stagnation_window: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: f64::EPSILON,
            max_iter: 1000,
            stagnation_window: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    /// Estimated relative residual after each iteration (entry 0 is 1).
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub stagnated: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Givens rotation `(c, s)` zeroing `b` in `(a, b)`: `c a + s b = r`,
/// `−conj(s) a + c b = 0`, with real `c`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    let phase = a / na;
    (na / r, phase * b.conj() / r)
}

/// Solve `A x = b` starting from `x = 0`.
pub fn gmres<A: LinearOperator + ?Sized>(op: &A, b: &[Complex64], opts: &GmresOptions) -> Result<GmresOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::Config(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Config(format!("GMRES threshold {} outside (0, 1)", opts.tol)));
    }
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("right-hand side is not finite".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let beta = norm(b);
    let mut residuals = vec![1.0];
    if beta == 0.0 {
        return Ok(GmresOutcome {
            solution: vec![zero; n],
            iterations: 0,
            residuals,
            converged: true,
            stagnated: false,
        });
    }
    let max_iter = opts.max_iter.max(1);
    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|z| z / beta).collect()];
    // columns of the rotated Hessenberg matrix
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut rotations: Vec<(f64, Complex64)> = Vec::new();
    let mut g = vec![Complex64::new(beta, 0.0)];
    let (mut best, mut best_iter, mut since_best) = (1.0f64, 0usize, 0usize);
    let (mut converged, mut stagnated) = (false, false);

    for j in 0..max_iter {
        let mut w = op.apply(&basis[j]);
        let mut h = vec![zero; j + 2];
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                h[i] += c;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= c * vk;
                }
            }
        }
        let hn = norm(&w);
        h[j + 1] = Complex64::new(hn, 0.0);
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical(format!("GMRES breakdown at iteration {}", j + 1)));
        }
        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a, bb) = (h[i], h[i + 1]);
            h[i] = c * a + s * bb;
            h[i + 1] = -s.conj() * a + c * bb;
        }
        let (c, s) = givens(h[j], h[j + 1]);
        h[j] = c * h[j] + s * h[j + 1];
        h[j + 1] = zero;
        rotations.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s.conj() * gj);
        h.truncate(j + 1);
        r_cols.push(h);

        let res = g[j + 1].norm() / beta;
        residuals.push(res);
        if res < best {
            best = res;
            best_iter = j + 1;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if res < opts.tol || hn == 0.0 {
            converged = true;
            break;
        }
        if since_best >= opts.stagnation_window {
            stagnated = true;
            break;
        }
        basis.push(w.iter().map(|z| z / hn).collect());
    }

    let m = best_iter;
    // back substitution R y = g on the leading m×m block
    let mut y = vec![zero; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            acc -= r_cols[jj][i] * yj;
        }
        y[i] = acc / r_cols[i][i];
    }
    let mut x = vec![zero; n];
    for (v, yi) in basis.iter().zip(&y) {
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += yi * vk;
        }
    }
    Ok(GmresOutcome {
        solution: x,
        iterations: residuals.len() - 1,
        residuals,
        converged,
        stagnated,
    })
}

/// Dense matrix as an operator.
impl LinearOperator for nalgebra::DMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (self * v).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = DMatrix::<Complex64>::identity(7, 7);
        let b: Vec<Complex64> = (0..7).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let out = gmres(&a, &b, &GmresOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        for (x, y) in out.solution.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs() {
        let a = DMatrix::<Complex64>::identity(3, 3);
        let out = gmres(&a, &[c(0.0, 0.0); 3], &GmresOptions::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.solution.iter().all(|z| z.norm() == 0.0));
    }

    fn random_system(n: usize, seed: u64) -> (DMatrix<Complex64>, Vec<Complex64>) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        a *= Complex64::new(0.3 / (n as f64).sqrt(), 0.0);
        for i in 0..n {
            a[(i, i)] += c(1.0, 0.0);
        }
        let b = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (a, b)
    }

    #[test]
    fn matches_direct_solve() {
        let (a, b) = random_system(40, 3);
        let out = gmres(
            &a,
            &b,
            &GmresOptions {
                tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.converged);
        let exact = a.clone().lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
        for (x, y) in out.solution.iter().zip(exact.iter()) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn rejects_bad_threshold_and_length() {
        let a = DMatrix::<Complex64>::identity(3, 3);
        let bad = GmresOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(gmres(&a, &[c(1.0, 0.0); 3], &bad), Err(Error::Config(_))));
        assert!(matches!(
            gmres(&a, &[c(1.0, 0.0); 2], &GmresOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn stagnation_returns_best_iterate() {
        // unattainable threshold: the estimate bottoms out, iteration stops
        // at the first plateau or when the Krylov space is exhausted
        let (a, b) = random_system(12, 9);
        let opts = GmresOptions {
            tol: 1e-300,
            max_iter: 12,
            stagnation_window: 5,
        };
        let out = gmres(&a, &b, &opts).unwrap();
        assert!(out.iterations <= 12);
        let r = a.apply(&out.solution);
        let res: f64 = r.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(res < 1e-12 * norm(&b));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn residual_history_non_increasing(seed in 0u64..10_000, n in 5usize..30) {
            let (a, b) = random_system(n, seed);
            let out = gmres(&a, &b, &GmresOptions { tol: 1e-14, ..Default::default() }).unwrap();
            for w in out.residuals.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }
}
