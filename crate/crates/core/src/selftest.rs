//! Quick oracle checks run by `helmsplit selftest`: quadrature exactness,
//! `QP = I`, kernel-split reassembly, product weights against adaptive
//! quadrature, the straight-panel Cauchy closed form and the Helmholtz
//! residual of the point-source field.

use std::f64::consts::PI;

use crate::geometry::Point;
use crate::interp::{build_p, build_q, gauss_legendre};
use crate::kernel::{cauchy_kernel, kernel_k, kernel_s, split_k_boundary, split_k_field, split_s};
use crate::oracle;
use crate::quadrature::{wfrakl_init, wlc_init};
use crate::testbench::{default_sources, exact_field};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, err: f64, tol: f64) -> Check {
    Check {
        name,
        passed: err.is_finite() && err <= tol,
        detail: format!("error {err:.2e}, tolerance {tol:.0e}"),
    }
}

/// Low-discrepancy sequence in `[0, 1)`.
fn golden(i: usize, shift: f64) -> f64 {
    (shift + i as f64 * 0.618_033_988_749_894_9).fract()
}

fn gauss_exactness() -> f64 {
    [8usize, 16, 32]
        .iter()
        .map(|&n| {
            let rule = gauss_legendre(n);
            let deg = 2 * n - 2;
            let approx = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            (approx - 2.0 / (deg + 1) as f64).abs()
        })
        .fold(0.0, f64::max)
}

fn qp_identity() -> f64 {
    let mut worst = 0.0f64;
    for n_pt in [16usize, 32] {
        let (coarse, fine) = (gauss_legendre(n_pt), gauss_legendre(2 * n_pt));
        let (Ok(p), Ok(q)) = (build_p(&coarse, &fine, 3), build_q(&coarse, &fine, 3)) else {
            return f64::INFINITY;
        };
        for i in 0..3 * n_pt {
            let mut e = vec![0.0; 3 * n_pt];
            e[i] = 1.0;
            let back = q.apply(&p.apply(&e));
            let err = back.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    worst
}

fn reassembly() -> f64 {
    let mut worst = 0.0f64;
    for i in 0..500 {
        let k = 0.5 + 300.0 * golden(i, 0.1);
        let r = Point::new(2.0 * golden(i, 0.2) - 1.0, 2.0 * golden(i, 0.3) - 1.0);
        let dist = 10f64.powf(-6.0 * golden(i, 0.4));
        let (a, b) = (2.0 * PI * golden(i, 0.5), 2.0 * PI * golden(i, 0.6));
        let rp = r + dist * Point::new(a.cos(), a.sin());
        let nup = Point::new(b.cos(), b.sin());
        let rel = |x: num_complex::Complex64, y: num_complex::Complex64| (x - y).norm() / y.norm();
        let (Ok(s), Ok(sd), Ok(kd)) = (split_s(r, rp, k), kernel_s(r, rp, k), kernel_k(r, rp, nup, k)) else {
            return f64::INFINITY;
        };
        worst = worst.max(rel(s.reassemble(r, rp, nup), sd));
        for parts in [split_k_field(r, rp, nup, k), split_k_boundary(r, rp, nup, k)] {
            match parts {
                Ok(p) if kd.norm() > 0.0 => worst = worst.max(rel(p.reassemble(r, rp, nup), kd)),
                Ok(_) => {}
                Err(_) => return f64::INFINITY,
            }
        }
    }
    worst
}

fn log_weights() -> f64 {
    let mut worst = 0.0f64;
    let rule = gauss_legendre(16);
    for (trans, scale) in [(0.0, 1.0), (2.0, 1.0), (-2.0, 1.0), (3.0, 2.0)] {
        let Ok(wl) = wfrakl_init(trans, scale, &rule) else {
            return f64::INFINITY;
        };
        for m in [0usize, 3, 8, 15] {
            for i in [0usize, 7, 15] {
                let tt = trans + scale * rule.nodes[i];
                let approx: f64 = (0..16).map(|j| wl.weights[(i, j)] * rule.nodes[j].powi(m as i32)).sum();
                let f = |t: f64| (tt - t).abs().ln() * t.powi(m as i32);
                let exact = if tt.abs() < 1.0 {
                    oracle::integrate_breaks(f, &[-1.0, tt, 1.0], 1e-15)
                } else {
                    oracle::integrate(f, -1.0, 1.0, 1e-15)
                };
                worst = worst.max((approx - exact).abs());
            }
        }
    }
    worst
}

fn straight_panel_cauchy() -> f64 {
    // panel from (1,0) to (−1,0), normal (0,1), target (0,1)
    let rule = gauss_legendre(16);
    let rj: Vec<Point> = rule.nodes.iter().map(|&t| Point::new(-t, 0.0)).collect();
    let nu = vec![Point::new(0.0, 1.0); 16];
    let rpw: Vec<Point> = rule.weights.iter().map(|&w| Point::new(-w, 0.0)).collect();
    let r = Point::new(0.0, 1.0);
    match wlc_init(Point::new(1.0, 0.0), Point::new(-1.0, 0.0), r, &rj, &nu, &rpw) {
        Ok(w) => {
            let total: f64 = (0..16)
                .map(|j| cauchy_kernel(r, rj[j], nu[j]) * rpw[j].norm() + w.cmp_cauchy[j])
                .sum();
            (total + PI / 2.0).abs()
        }
        Err(_) => f64::INFINITY,
    }
}

fn helmholtz_residual() -> f64 {
    let (k, h) = (10.0, 1e-4);
    let sources = default_sources();
    let mut worst = 0.0f64;
    for r in [Point::new(0.9, 0.3), Point::new(-0.5, 0.7), Point::new(0.1, -1.2)] {
        let u = |p: Point| exact_field(&sources, k, p);
        let stencil = [
            u(r),
            u(r + Point::new(h, 0.0)),
            u(r - Point::new(h, 0.0)),
            u(r + Point::new(0.0, h)),
            u(r - Point::new(0.0, h)),
        ];
        let Ok(v) = stencil.into_iter().collect::<crate::Result<Vec<_>>>() else {
            return f64::INFINITY;
        };
        let lap = (v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / (h * h);
        worst = worst.max((lap + k * k * v[0]).norm());
    }
    worst
}

/// Run every check.
pub fn run() -> Vec<Check> {
    vec![
        check("gauss-legendre exactness", gauss_exactness(), 1e-14),
        check("QP = I", qp_identity(), 1e-12),
        check("kernel-split reassembly", reassembly(), 1e-11),
        check("log product weights", log_weights(), 1e-11),
        check("straight-panel Cauchy compensation", straight_panel_cauchy(), 1e-11),
        check("point-source Helmholtz residual", helmholtz_residual(), 1e-5),
    ]
}
