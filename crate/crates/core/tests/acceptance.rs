//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs every criterion by default, including the full-scale `k = 280`
//! ones (tens of minutes on one core). Set `HELMSPLIT_ACCEPTANCE=quick` to
//! skip the long-running criteria.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use helmsplit::assembly::{assemble, condition_estimate, Discretization, Scheme};
use helmsplit::geometry::{build_grids, equal_parameter_mesh, starfish_curve, Curve, Grid, Point, Starfish};
use helmsplit::interp::{build_p, build_px, build_q, gauss_legendre};
use helmsplit::kernel::{
    cauchy_kernel, combined_diagonal, combined_kernel, kernel_k, kernel_s, split_k_boundary,
    split_k_boundary_diagonal, split_k_field, split_s, split_s_diagonal, TargetContext,
};
use helmsplit::oracle::{integrate, integrate_breaks};
use helmsplit::quadrature::{to_complex, wfrakl_init, wlc_init, PanelNearData};
use helmsplit::testbench::{
    exact_field, fitted_order, run_far_field, run_near_field, solve, ExperimentConfig, EtaRule, FieldGrid,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

// ---------------------------------------------------------------- 1

fn log_weight_error(n: usize, trans: f64, scale: f64) -> f64 {
    let rule = gauss_legendre(n);
    let wl = wfrakl_init(trans, scale, &rule).expect("weights");
    let mut worst = 0.0f64;
    for i in 0..n {
        let tt = trans + scale * rule.nodes[i];
        for m in 0..n {
            let approx: f64 = (0..n).map(|j| wl.weights[(i, j)] * rule.nodes[j].powi(m as i32)).sum();
            let f = |t: f64| (tt - t).abs().ln() * t.powi(m as i32);
            let exact = if tt.abs() < 1.0 {
                integrate_breaks(f, &[-1.0, tt, 1.0], 1e-16)
            } else {
                integrate(f, -1.0, 1.0, 1e-16)
            };
            worst = worst.max((approx - exact).abs());
        }
    }
    worst
}

fn straight_panel_cauchy_error() -> f64 {
    // panel from (1,0) to (−1,0): the normal is (0,1); the Cauchy integral
    // at (0,1) is ∫₋₁¹ −dx/(x²+1) = −π/2
    let rule = gauss_legendre(16);
    let rj: Vec<Point> = rule.nodes.iter().map(|&t| Point::new(-t, 0.0)).collect();
    let nu = vec![Point::new(0.0, 1.0); 16];
    let rpw: Vec<Point> = rule.weights.iter().map(|&w| Point::new(-w, 0.0)).collect();
    let r = Point::new(0.0, 1.0);
    let w = wlc_init(Point::new(1.0, 0.0), Point::new(-1.0, 0.0), r, &rj, &nu, &rpw).expect("weights");
    let total: f64 = (0..16)
        .map(|j| cauchy_kernel(r, rj[j], nu[j]) * rpw[j].norm() + w.cmp_cauchy[j])
        .sum();
    (total + PI / 2.0).abs()
}

/// Continuous change of `arg(r(t) − r)` over `[ta, tb]`.
fn winding_angle(ta: f64, tb: f64, foot: f64, r: Point) -> f64 {
    let c = Starfish;
    let mut ts: Vec<f64> = (0..=4000).map(|i| ta + (tb - ta) * i as f64 / 4000.0).collect();
    ts.push(foot);
    ts.sort_by(f64::total_cmp);
    ts.windows(2)
        .map(|w| (to_complex(c.position(w[1]) - r) / to_complex(c.position(w[0]) - r)).arg())
        .sum()
}

fn panel_data(g: &Grid, panel: usize) -> PanelNearData {
    let c = Starfish;
    let range = g.panel_range(panel);
    let rj: Vec<Point> = range.clone().map(|j| g.points[j]).collect();
    let nu: Vec<Point> = range.clone().map(|j| g.normals[j]).collect();
    let rpw: Vec<Point> = range.clone().map(|j| g.weighted_velocity(j)).collect();
    let (ta, tb) = (g.panel_t[panel], g.panel_t[panel + 1]);
    PanelNearData::new(c.position(ta), c.position(tb), &rj, &nu, &rpw).expect("panel")
}

/// Log and Cauchy integrals of a smooth density against adaptive
/// quadrature, for targets off convex and concave starfish panels.
fn curved_panel_errors(n_pt: usize) -> (f64, f64) {
    let c = Starfish;
    let mesh = equal_parameter_mesh(&c, 100).expect("mesh");
    let (g, _) = build_grids(&c, &mesh, n_pt, false).expect("grids");
    let density = |t: f64| 1.0 + 0.5 * (2.0 * t).sin();
    let (mut el, mut ec) = (0.0f64, 0.0f64);
    for panel in [0usize, 5, 10, 37] {
        let data = panel_data(&g, panel);
        let (ta, tb) = (g.panel_t[panel], g.panel_t[panel + 1]);
        let len = g.panel_arclengths[panel];
        for frac in [0.13, 0.5, 0.81] {
            let foot = ta + frac * (tb - ta);
            for d in [3e-6, 0.01, 0.1, 0.5, 1.0] {
                let r = c.position(foot) + d * len * c.normal(foot);
                let w = data.weights(r).expect("weights");
                let (mut sl, mut sc) = (0.0, 0.0);
                for (jl, j) in g.panel_range(panel).enumerate() {
                    let f = density(g.t[j]);
                    sl += f * g.arc_weight(j) * ((r - g.points[j]).norm().ln() + w.corr_log[jl]);
                    sc += f * (cauchy_kernel(r, g.points[j], g.normals[j]) * g.arc_weight(j) + w.cmp_cauchy[jl]);
                }
                let breaks = [ta, foot, tb];
                let tl = integrate_breaks(
                    |t: f64| (r - c.position(t)).norm().ln() * density(t) * c.speed(t),
                    &breaks,
                    1e-16,
                );
                let f0 = density(foot);
                let tc = f0 * winding_angle(ta, tb, foot, r)
                    + integrate_breaks(
                        |t: f64| cauchy_kernel(r, c.position(t), c.normal(t)) * (density(t) - f0) * c.speed(t),
                        &breaks,
                        1e-16,
                    );
                el = el.max((sl - tl).abs() / tl.abs().max(1.0));
                ec = ec.max((sc - tc).abs() / tc.abs().max(1.0));
            }
        }
    }
    (el, ec)
}

fn criterion_1() -> Outcome {
    let mut self_err = 0.0f64;
    let mut neighbor_err = 0.0f64;
    let mut unequal_err = 0.0f64;
    for n in [16, 32] {
        self_err = self_err.max(log_weight_error(n, 0.0, 1.0));
        neighbor_err = neighbor_err.max(log_weight_error(n, 2.0, 1.0)).max(log_weight_error(n, -2.0, 1.0));
        unequal_err = unequal_err.max(log_weight_error(n, 3.0, 2.0)).max(log_weight_error(n, -1.5, 0.5));
    }
    let straight = straight_panel_cauchy_error();
    let (l16, c16) = curved_panel_errors(16);
    let (l32, c32) = curved_panel_errors(32);
    let worst = max_abs([self_err, neighbor_err, unequal_err, straight, l16, c16, l32, c32]);
    outcome(
        worst <= 1e-11,
        format!(
            "self {self_err:.1e}, neighbour {neighbor_err:.1e}, 2:1 {unequal_err:.1e}, straight Cauchy {straight:.1e}, \
             curved log {:.1e}, curved Cauchy {:.1e} (tolerance 1e-11)",
            l16.max(l32),
            c16.max(c32)
        ),
    )
}

// ---------------------------------------------------------------- 2

fn err_vec(a: &[f64], b: &[f64]) -> f64 {
    max_abs(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

fn px_error(lengths: &[f64], n_s: usize, degree: i32) -> f64 {
    let (c, f) = (gauss_legendre(16), gauss_legendre(32));
    let px = build_px(lengths, &c, &f, n_s).expect("px");
    let mut starts = vec![0.0];
    for l in lengths {
        starts.push(starts.last().unwrap() + l);
    }
    let p = 1;
    let (center, half) = (starts[p] + 0.5 * lengths[p], 0.5 * lengths[p]);
    let poly = |x: f64| ((x - center) / half).powi(degree);
    let coarse: Vec<f64> = (0..lengths.len())
        .flat_map(|k| {
            let (s, l) = (starts[k], lengths[k]);
            c.nodes.iter().map(move |t| s + 0.5 * l * (1.0 + t)).collect::<Vec<_>>()
        })
        .map(poly)
        .collect();
    let out = px.apply(&coarse);
    let expect: Vec<f64> = f.nodes.iter().map(|t| poly(center + half * t)).collect();
    err_vec(&out[p * 32..(p + 1) * 32], &expect)
}

fn criterion_2() -> Outcome {
    let mut qp = 0.0f64;
    let mut p_exact = 0.0f64;
    let mut q_exact = 0.0f64;
    for n_pt in [16usize, 32] {
        let (c, f) = (gauss_legendre(n_pt), gauss_legendre(2 * n_pt));
        let p = build_p(&c, &f, 3).expect("p");
        let q = build_q(&c, &f, 3).expect("q");
        for i in 0..3 * n_pt {
            let mut e = vec![0.0; 3 * n_pt];
            e[i] = 1.0;
            qp = qp.max(err_vec(&q.apply(&p.apply(&e)), &e));
        }
        for deg in 0..n_pt as i32 {
            let x: Vec<f64> = c.nodes.iter().map(|t| t.powi(deg)).collect();
            let y: Vec<f64> = f.nodes.iter().map(|t| t.powi(deg)).collect();
            p_exact = p_exact.max(err_vec(&build_p(&c, &f, 1).unwrap().apply(&x), &y));
        }
        for deg in 0..2 * n_pt as i32 {
            let x: Vec<f64> = f.nodes.iter().map(|t| t.powi(deg)).collect();
            let y: Vec<f64> = c.nodes.iter().map(|t| t.powi(deg)).collect();
            q_exact = q_exact.max(err_vec(&build_q(&c, &f, 1).unwrap().apply(&x), &y));
        }
    }
    let mut px = 0.0f64;
    for lengths in [[1.0, 1.0, 1.0, 1.0], [0.5, 1.0, 2.0, 1.0]] {
        for deg in 0..24 {
            px = px.max(px_error(&lengths, 4, deg));
        }
    }
    outcome(
        qp <= 1e-12 && p_exact.max(q_exact).max(px) <= 1e-11,
        format!(
            "QP-I {qp:.1e} (1e-12); P deg<n_pt {p_exact:.1e}, Q deg<2n_pt {q_exact:.1e}, Px deg<n_pt+2n_s {px:.1e} (1e-11)"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn criterion_3() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let k = rng.gen_range(0.5..300.0);
        let eta = rng.gen_range(-300.0..300.0);
        let r = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let dist = 10f64.powf(rng.gen_range(-6.0..0.3));
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        let b: f64 = rng.gen_range(0.0..2.0 * PI);
        let rp = r + dist * Point::new(a.cos(), a.sin());
        let nup = Point::new(b.cos(), b.sin());
        let s = kernel_s(r, rp, k).unwrap();
        let kk = kernel_k(r, rp, nup, k).unwrap();
        worst = worst.max(rel(split_s(r, rp, k).unwrap().reassemble(r, rp, nup), s));
        worst = worst.max(rel(split_k_field(r, rp, nup, k).unwrap().reassemble(r, rp, nup), kk));
        worst = worst.max(rel(split_k_boundary(r, rp, nup, k).unwrap().reassemble(r, rp, nup), kk));
        let m = kk - Complex64::new(0.0, eta) * s;
        for ctx in [TargetContext::Boundary, TargetContext::Field] {
            worst = worst.max(rel(combined_kernel(r, rp, nup, k, eta, ctx).unwrap().reassemble(r, rp, nup), m));
        }
    }
    // diagonal limits against Richardson extrapolation of symmetric means
    let c = Starfish;
    let mut diag = 0.0f64;
    for (k, eta) in [(28.0, 14.0), (280.0, 140.0)] {
        for t in [-2.1, 0.0, 0.31, 1.7] {
            let v = c.velocity(t);
            let kappa = c.normal(t).dot(&c.acceleration(t)) / v.norm_squared();
            let smooth = |h: f64, which: u8| {
                let (r, rp, nup) = (c.position(t), c.position(t + h), c.normal(t + h));
                match which {
                    0 => split_s(r, rp, k).unwrap().smooth,
                    1 => split_k_boundary(r, rp, nup, k).unwrap().smooth,
                    _ => combined_kernel(r, rp, nup, k, eta, TargetContext::Boundary).unwrap().smooth,
                }
            };
            let limits = [
                split_s_diagonal(k).smooth,
                split_k_boundary_diagonal(kappa).smooth,
                combined_diagonal(k, eta, kappa).smooth,
            ];
            for (which, lim) in limits.iter().enumerate() {
                let h = 2e-4;
                let mean = |h: f64| 0.5 * (smooth(h, which as u8) + smooth(-h, which as u8));
                let extrap = (4.0 * mean(0.5 * h) - mean(h)) / 3.0;
                diag = diag.max((extrap - lim).norm() / lim.norm().max(1.0));
            }
        }
    }
    outcome(
        worst < 1e-11 && diag <= 1e-6,
        format!("500 cases reassembly {worst:.1e} (1e-11); diagonal limits {diag:.1e} (1e-6)"),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let a = FieldGrid::square(200).exterior_points();
    let b = FieldGrid::square(200).exterior_points();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        a.len() == 28_460 && a == b && secs < 1.0,
        format!("{} points, deterministic {}, {secs:.2} s for two builds", a.len(), a == b),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let sweep = vec![16, 24, 32, 48, 64, 80, 96];
    let cfg = |scheme| ExperimentConfig {
        scheme,
        n_pt: 16,
        k: 28.0,
        eta: EtaRule::HalfK,
        n_pan: sweep.clone(),
        ..Default::default()
    };
    let near_a = run_near_field(&cfg(Scheme::A)).expect("near A");
    let far_b = run_far_field(&cfg(Scheme::B)).expect("far B");
    let far_c = run_far_field(&cfg(Scheme::C)).expect("far C");

    // order from the sweep points above the rounding floor
    let (n, e): (Vec<f64>, Vec<f64>) = near_a
        .iter()
        .filter(|r| r.avg_norm_err > 1e-13)
        .map(|r| (r.n_unknowns as f64, r.avg_norm_err))
        .unzip();
    let order = if n.len() >= 2 { fitted_order(&n, &e) } else { f64::NAN };
    let order_ok = (13.0..=18.0).contains(&order);

    let best_b = far_b.iter().map(|r| r.max_rel_err).fold(f64::INFINITY, f64::min);
    let best_c = far_c.iter().map(|r| r.max_rel_err).fold(f64::INFINITY, f64::min);
    let saturation_ok = best_b <= 1e-12 && best_c <= 1e-12;

    let mut violations = Vec::new();
    for (b, c) in far_b.iter().zip(&far_c) {
        let saturated = b.max_rel_err <= 1e-12 && c.max_rel_err <= 1e-12;
        if !saturated && c.max_rel_err > b.max_rel_err {
            violations.push(format!("{}: C {:.1e} > B {:.1e}", b.n_pan, c.max_rel_err, b.max_rel_err));
        }
    }
    let series = |rows: &[helmsplit::testbench::FarFieldRow]| {
        rows.iter().map(|r| format!("{:.0e}", r.max_rel_err)).collect::<Vec<_>>().join(" ")
    };
    outcome(
        order_ok && saturation_ok && violations.is_empty(),
        format!(
            "A near-field order {order:.1} from {} points (13..18); B/C saturated far error {best_b:.1e}/{best_c:.1e} \
             (1e-12); far B [{}] C [{}]; C <= B violations: {}",
            n.len(),
            series(&far_b),
            series(&far_c),
            if violations.is_empty() { "none".to_string() } else { violations.join(", ") }
        ),
    )
}

// ---------------------------------------------------------------- 6

const DIGITS_12_5: f64 = 3.162_277_660_168_379_5e-13;

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig {
        scheme: Scheme::C,
        n_pt: 16,
        k: 280.0,
        eta: EtaRule::HalfK,
        n_pan: vec![100, 150, 200, 250, 300, 400],
        ..Default::default()
    };
    let far = run_far_field(&cfg).expect("far field");
    let best_far = far.iter().map(|r| r.max_rel_err).fold(f64::INFINITY, f64::min);
    let near_cfg = ExperimentConfig {
        n_pan: vec![300],
        ..cfg.clone()
    };
    let near = run_near_field(&near_cfg).expect("near field");
    let near_err = near[0].avg_norm_err;
    // the same far-field errors measured against the largest |u|
    let sol = solve(&cfg, 300).expect("solve");
    let targets = helmsplit::testbench::farfield_targets();
    let u = sol.evaluate(&targets, cfg.zone_factor).expect("evaluate");
    let exact: Vec<Complex64> = targets.iter().map(|&r| exact_field(&cfg.sources, cfg.k, r).unwrap()).collect();
    let scale = max_abs(exact.iter().map(|z| z.norm()));
    let normalized = max_abs(u.values.iter().zip(&exact).map(|(a, b)| (a - b).norm() / scale));
    let min_u = exact.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    outcome(
        best_far <= DIGITS_12_5 && near_err <= DIGITS_12_5,
        format!(
            "far max relative error {best_far:.2e}, near avg normalized error {near_err:.2e} at n = {} \
             (tolerance {DIGITS_12_5:.2e}); far errors [{}]; far error / max|u| {normalized:.1e}, \
             min|u| / max|u| at the targets {:.1e}",
            near[0].n_unknowns,
            far.iter().map(|r| format!("{}:{:.1e}", r.n_unknowns, r.max_rel_err)).collect::<Vec<_>>().join(" "),
            min_u / scale
        ),
    )
}

// ---------------------------------------------------------------- 7

fn iterations(scheme: Scheme, k: f64, eta: EtaRule, tol: f64, n_pan: usize) -> (usize, bool) {
    let cfg = ExperimentConfig {
        scheme,
        k,
        eta,
        tol,
        n_pan: vec![n_pan],
        ..Default::default()
    };
    let sol = solve(&cfg, n_pan).expect("solve");
    (sol.gmres.iterations, sol.gmres.converged)
}

fn criterion_7(long: bool) -> Outcome {
    let (low, low_conv) = iterations(Scheme::C, 2.8, EtaRule::HalfK, 1e-12, 16);
    let mut passed = low <= 15 && low_conv;
    let mut detail = format!("k=2.8: {low} (<= 15)");
    if long {
        for (rule, target, slack) in [(EtaRule::HalfK, 51, 8), (EtaRule::K, 60, 10), (EtaRule::MinusK, 373, 60)] {
            let (it, conv) = iterations(Scheme::C, 280.0, rule, f64::EPSILON, 200);
            let ok = conv && it.abs_diff(target) <= slack;
            passed &= ok;
            detail.push_str(&format!("; k=280 eta={rule}: {it} ({target} +- {slack}, converged {conv})"));
        }
    } else {
        detail.push_str("; k=280 checks skipped (quick mode)");
    }
    outcome(passed, detail)
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let disc = Discretization::new(Scheme::C, starfish_curve(), 16, 163).expect("discretization");
    let op = assemble(&disc, 280.0, 140.0).expect("assembly");
    let cond = condition_estimate(&op).expect("condition number");
    outcome(cond < 8.0, format!("cond(I + M) = {cond:.3} at n = {} (< 8)", disc.n_unknowns()))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let cfg = ExperimentConfig {
        scheme: Scheme::C,
        k: 280.0,
        eta: EtaRule::HalfK,
        n_pan: vec![300],
        ..Default::default()
    };
    let sol = solve(&cfg, 300).expect("solve");
    let curve = starfish_curve();
    let g = &sol.disc.coarse;
    // panel midpoints around the curve, convex tips and concave valleys alike
    let mut targets = Vec::new();
    for p in (0..g.n_pan).step_by(g.n_pan / 20) {
        for frac in [0.37, 0.5] {
            let t = g.panel_t[p] + frac * (g.panel_t[p + 1] - g.panel_t[p]);
            targets.push(curve.position(t) + 3e-6 * curve.normal(t));
        }
    }
    let scale = max_abs(
        FieldGrid::square(200)
            .exterior_points()
            .iter()
            .map(|&r| exact_field(&cfg.sources, cfg.k, r).unwrap().norm()),
    );
    let u = sol.evaluate(&targets, cfg.zone_factor).expect("evaluate");
    let err = max_abs(
        targets
            .iter()
            .zip(&u.values)
            .map(|(&r, v)| (v - exact_field(&cfg.sources, cfg.k, r).unwrap()).norm() / scale),
    );
    outcome(
        err <= 1e-11,
        format!("{} targets at distance 3e-6, max normalized error {err:.2e} (1e-11)", targets.len()),
    )
}

fn main() -> ExitCode {
    let long = std::env::var("HELMSPLIT_ACCEPTANCE").map(|v| v != "quick").unwrap_or(true);
    type Criterion = (u32, &'static str, bool, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        (1, "quadrature oracle suite", false, Box::new(criterion_1)),
        (2, "interpolation suite", false, Box::new(criterion_2)),
        (3, "kernel-split reassembly", false, Box::new(criterion_3)),
        (4, "near-field point count", false, Box::new(criterion_4)),
        (5, "desk-scale convergence, k = 28", false, Box::new(criterion_5)),
        (6, "full-scale accuracy, k = 280", true, Box::new(criterion_6)),
        (7, "GMRES iteration counts", false, Box::new(move || criterion_7(long))),
        (8, "condition number, k = 280", true, Box::new(criterion_8)),
        (9, "close evaluation at distance 3e-6", false, Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (id, title, is_long, run) in criteria {
        if is_long && !long {
            println!("criterion {id} SKIP {title}: long-running, quick mode");
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let status = if out.passed { "PASS" } else { "FAIL" };
        println!("criterion {id} {status} {title} ({secs:.1} s): {}", out.detail);
        if !out.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
