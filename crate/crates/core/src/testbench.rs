//! Point-source test problem and convergence experiments.
//!
//! Boundary data come from point sources inside the starfish, so the field
//! they radiate is the exact exterior solution and every reported error is
//! measured against it.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, Discretization, Scheme};
use crate::error::{Error, Result};
use crate::field::{FieldEvaluator, Route, DEFAULT_ZONE_FACTOR};
use crate::geometry::{point_in_interior, starfish_curve, Point};
use crate::gmres::{gmres, GmresOptions, GmresOutcome};
use crate::special::hankel1_0;

/// Source at `radius·(cos angle, sin angle)` with real strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub radius: f64,
    pub angle: f64,
    pub strength: f64,
}

impl PointSource {
    pub fn position(&self) -> Point {
        Point::new(self.radius * self.angle.cos(), self.radius * self.angle.sin())
    }
}

/// Five fixed sources with radii in `[0.1, 0.2]`, angles in `[0, 2π)` and
/// strengths in `(0, 1)`.
pub fn default_sources() -> Vec<PointSource> {
    let radii = [0.13, 0.17, 0.11, 0.19, 0.15];
    let angles = [0.7, 2.1, 3.5, 4.9, 6.0];
    let strengths = [0.9, 0.2, 0.6, 0.5, 0.8];
    (0..5)
        .map(|i| PointSource {
            radius: radii[i],
            angle: angles[i],
            strength: strengths[i],
        })
        .collect()
}

/// `Σ q_i (i/4) H0(k |r − r_i|)`.
pub fn exact_field(sources: &[PointSource], k: f64, r: Point) -> Result<Complex64> {
    let mut u = Complex64::new(0.0, 0.0);
    for s in sources {
        let d = (r - s.position()).norm();
        if d == 0.0 {
            return Err(Error::Domain(format!("field point ({}, {}) coincides with a source", r.x, r.y)));
        }
        u += Complex64::new(0.0, 0.25 * s.strength) * hankel1_0(k * d)?;
    }
    Ok(u)
}

/// The nine far-field testing locations on the circle of radius 1.25.
pub fn farfield_targets() -> Vec<Point> {
    (0..9)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 9.0;
            1.25 * Point::new(t.cos(), t.sin())
        })
        .collect()
}

/// Bounds of the square near-field zone.
pub const ZONE_HALF_WIDTH: f64 = 0.75;

/// `n × n` Cartesian grid over the near-field square, row-major with `y`
/// varying slowest; `exterior[i]` marks points outside the curve.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub points: Vec<Point>,
    pub exterior: Vec<bool>,
}

impl FieldGrid {
    pub fn square(n: usize) -> Self {
        let curve = starfish_curve();
        let (lo, hi) = (-ZONE_HALF_WIDTH, ZONE_HALF_WIDTH);
        let coord = |i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        let mut points = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                points.push(Point::new(coord(ix), coord(iy)));
            }
        }
        let exterior = points.iter().map(|&p| !point_in_interior(curve.as_ref(), p)).collect();
        Self {
            n,
            lo,
            hi,
            points,
            exterior,
        }
    }

    pub fn exterior_points(&self) -> Vec<Point> {
        self.points
            .iter()
            .zip(&self.exterior)
            .filter(|(_, &e)| e)
            .map(|(p, _)| *p)
            .collect()
    }
}

/// Rule for the coupling parameter `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    HalfK,
    K,
    MinusK,
    Value(f64),
}

impl EtaRule {
    pub fn value(self, k: f64) -> f64 {
        match self {
            EtaRule::HalfK => 0.5 * k,
            EtaRule::K => k,
            EtaRule::MinusK => -k,
            EtaRule::Value(v) => v,
        }
    }
}

impl fmt::Display for EtaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaRule::HalfK => f.write_str("k/2"),
            EtaRule::K => f.write_str("k"),
            EtaRule::MinusK => f.write_str("-k"),
            EtaRule::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for EtaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace(' ', "").as_str() {
            "k/2" => Ok(EtaRule::HalfK),
            "k" => Ok(EtaRule::K),
            "-k" => Ok(EtaRule::MinusK),
            other => other
                .parse::<f64>()
                .map(EtaRule::Value)
                .map_err(|_| Error::Config(format!("invalid eta rule '{other}'"))),
        }
    }
}

impl Serialize for EtaRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EtaRule::Value(v) => s.serialize_f64(*v),
            rule => s.serialize_str(&rule.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for EtaRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(EtaRule::Value(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSet {
    Farfield9,
    Nearfield200,
    Nearfield700,
    Custom,
}

/// Full description of an experiment; the TOML form mirrors the CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n_pt: usize,
    pub n_pan: Vec<usize>,
    pub k: f64,
    pub eta: EtaRule,
    pub tol: f64,
    pub max_iter: usize,
    /// Outer radius of the plain fine-grid evaluation zone, in panel lengths.
    pub zone_factor: f64,
    pub targets: TargetSet,
    /// Field points for `targets = "custom"`.
    pub custom_targets: Vec<[f64; 2]>,
    pub sources: Vec<PointSource>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::C,
            n_pt: 16,
            n_pan: vec![16, 32, 48, 64, 80, 96],
            k: 28.0,
            eta: EtaRule::HalfK,
            tol: f64::EPSILON,
            max_iter: 1000,
            zone_factor: DEFAULT_ZONE_FACTOR,
            targets: TargetSet::Farfield9,
            custom_targets: Vec::new(),
            sources: default_sources(),
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| path_err(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn eta_value(&self) -> f64 {
        self.eta.value(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.n_pt, 16 | 32) {
            return Err(Error::Config(format!("n_pt must be 16 or 32, got {}", self.n_pt)));
        }
        if self.n_pan.is_empty() {
            return Err(Error::Config("empty panel sweep".into()));
        }
        if let Some(&n) = self.n_pan.iter().find(|&&n| n < 3) {
            return Err(Error::Config(format!("n_pan must be at least 3, got {n}")));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("k must be positive, got {}", self.k)));
        }
        let eta = self.eta_value();
        if eta == 0.0 || !eta.is_finite() {
            return Err(Error::Config(format!("eta must be finite and nonzero, got {eta}")));
        }
        if !(self.tol >= f64::EPSILON && self.tol < 1.0) {
            return Err(Error::Config(format!("tolerance {} outside [eps, 1)", self.tol)));
        }
        if !(self.zone_factor >= 0.0) {
            return Err(Error::Config(format!("zone factor must be non-negative, got {}", self.zone_factor)));
        }
        if self.sources.is_empty() {
            return Err(Error::Config("no sources".into()));
        }
        let curve = starfish_curve();
        for s in &self.sources {
            if !point_in_interior(curve.as_ref(), s.position()) {
                return Err(Error::Config(format!(
                    "source at radius {} angle {} is not inside the curve",
                    s.radius, s.angle
                )));
            }
        }
        if self.targets == TargetSet::Custom && self.custom_targets.is_empty() {
            return Err(Error::Config("custom target set is empty".into()));
        }
        Ok(())
    }

    fn gmres_options(&self) -> GmresOptions {
        GmresOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            ..GmresOptions::default()
        }
    }

    /// Field points of the configured target set.
    pub fn target_points(&self) -> Vec<Point> {
        match self.targets {
            TargetSet::Farfield9 => farfield_targets(),
            TargetSet::Nearfield200 => FieldGrid::square(200).exterior_points(),
            TargetSet::Nearfield700 => FieldGrid::square(700).exterior_points(),
            TargetSet::Custom => self.custom_targets.iter().map(|p| Point::new(p[0], p[1])).collect(),
        }
    }
}

/// A solved density with timings.
#[derive(Debug)]
pub struct Solution {
    pub disc: Discretization,
    pub k: f64,
    pub eta: f64,
    pub rho: Vec<Complex64>,
    pub gmres: GmresOutcome,
    pub assemble_s: f64,
    pub solve_s: f64,
}

impl Solution {
    pub fn evaluate(&self, targets: &[Point], zone_factor: f64) -> Result<crate::field::FieldEvaluation> {
        FieldEvaluator::with_zone(&self.disc, self.k, self.eta, zone_factor)?.evaluate(&self.rho, targets)
    }
}

/// Discretize, assemble and solve `(I + M_γ) ρ = 2g` for one panel count.
pub fn solve(cfg: &ExperimentConfig, n_pan: usize) -> Result<Solution> {
    let disc = Discretization::new(cfg.scheme, starfish_curve(), cfg.n_pt, n_pan)?;
    solve_on(cfg, disc)
}

pub fn solve_on(cfg: &ExperimentConfig, disc: Discretization) -> Result<Solution> {
    let (k, eta) = (cfg.k, cfg.eta_value());
    let start = Instant::now();
    let op = assemble(&disc, k, eta)?;
    let assemble_s = start.elapsed().as_secs_f64();
    let rhs = disc
        .coarse
        .points
        .iter()
        .map(|&r| exact_field(&cfg.sources, k, r).map(|g| 2.0 * g))
        .collect::<Result<Vec<_>>>()?;
    let start = Instant::now();
    let outcome = gmres(&op, &rhs, &cfg.gmres_options())?;
    let solve_s = start.elapsed().as_secs_f64();
    Ok(Solution {
        disc,
        k,
        eta,
        rho: outcome.solution.clone(),
        gmres: outcome,
        assemble_s,
        solve_s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldRow {
    pub n_pan: usize,
    pub n_unknowns: usize,
    pub max_rel_err: f64,
    pub gmres_iters: usize,
    pub assemble_s: f64,
    pub solve_s: f64,
    pub eval_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldRow {
    pub n_pan: usize,
    pub n_unknowns: usize,
    pub n_points: usize,
    pub avg_norm_err: f64,
    pub max_norm_err: f64,
    pub gmres_iters: usize,
    /// Points flagged as too close to a panel endpoint.
    pub low_accuracy: usize,
}

/// Maximum relative error at the far-field targets for every panel count.
pub fn run_far_field(cfg: &ExperimentConfig) -> Result<Vec<FarFieldRow>> {
    cfg.validate()?;
    let targets = match cfg.targets {
        TargetSet::Custom => cfg.target_points(),
        _ => farfield_targets(),
    };
    let exact = exact_values(cfg, &targets)?;
    let mut rows = Vec::with_capacity(cfg.n_pan.len());
    for &n_pan in &cfg.n_pan {
        let sol = solve(cfg, n_pan)?;
        let start = Instant::now();
        let u = sol.evaluate(&targets, cfg.zone_factor)?;
        let eval_s = start.elapsed().as_secs_f64();
        let max_rel_err = u
            .values
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm() / b.norm())
            .fold(0.0, f64::max);
        rows.push(FarFieldRow {
            n_pan,
            n_unknowns: sol.disc.n_unknowns(),
            max_rel_err,
            gmres_iters: sol.gmres.iterations,
            assemble_s: sol.assemble_s,
            solve_s: sol.solve_s,
            eval_s,
        });
    }
    Ok(rows)
}

fn exact_values(cfg: &ExperimentConfig, targets: &[Point]) -> Result<Vec<Complex64>> {
    targets.iter().map(|&r| exact_field(&cfg.sources, cfg.k, r)).collect()
}

/// Average and maximum pointwise error, normalized by `max |u|`, over the
/// exterior part of the near-field square.
pub fn run_near_field(cfg: &ExperimentConfig) -> Result<Vec<NearFieldRow>> {
    cfg.validate()?;
    let targets = match cfg.targets {
        TargetSet::Nearfield700 | TargetSet::Custom => cfg.target_points(),
        _ => FieldGrid::square(200).exterior_points(),
    };
    let exact = exact_values(cfg, &targets)?;
    let scale = exact.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(cfg.n_pan.len());
    for &n_pan in &cfg.n_pan {
        let sol = solve(cfg, n_pan)?;
        let u = sol.evaluate(&targets, cfg.zone_factor)?;
        let errs: Vec<f64> = u.values.iter().zip(&exact).map(|(a, b)| (a - b).norm() / scale).collect();
        rows.push(NearFieldRow {
            n_pan,
            n_unknowns: sol.disc.n_unknowns(),
            n_points: targets.len(),
            avg_norm_err: errs.iter().sum::<f64>() / errs.len() as f64,
            max_norm_err: errs.iter().copied().fold(0.0, f64::max),
            gmres_iters: sol.gmres.iterations,
            low_accuracy: u.low_accuracy.iter().filter(|&&f| f).count(),
        });
    }
    Ok(rows)
}

/// `Re u` and `log10` of the normalized error on a square grid; interior
/// points hold NaN.
#[derive(Debug, Clone)]
pub struct FieldMap {
    pub grid: FieldGrid,
    pub n_pan: usize,
    pub n_unknowns: usize,
    pub re_u: Vec<f64>,
    pub log_err: Vec<f64>,
    pub routes: Vec<Option<Route>>,
}

pub fn run_field_map(cfg: &ExperimentConfig, n_pan: usize, n_grid: usize) -> Result<FieldMap> {
    cfg.validate()?;
    let grid = FieldGrid::square(n_grid);
    let targets = grid.exterior_points();
    let exact = exact_values(cfg, &targets)?;
    let scale = exact.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let sol = solve(cfg, n_pan)?;
    let u = sol.evaluate(&targets, cfg.zone_factor)?;
    let total = grid.points.len();
    let (mut re_u, mut log_err, mut routes) = (vec![f64::NAN; total], vec![f64::NAN; total], vec![None; total]);
    let exterior_idx = grid.exterior.iter().enumerate().filter(|(_, &e)| e).map(|(i, _)| i);
    for (j, i) in exterior_idx.enumerate() {
        re_u[i] = u.values[j].re;
        log_err[i] = ((u.values[j] - exact[j]).norm() / scale).log10();
        routes[i] = Some(u.routes[j]);
    }
    Ok(FieldMap {
        n_unknowns: sol.disc.n_unknowns(),
        grid,
        n_pan,
        re_u,
        log_err,
        routes,
    })
}

impl FieldMap {
    /// Writes `<base>.f64`, `<base>.err.f64` (little-endian, row-major) and
    /// the `<base>.meta` sidecar.
    pub fn write(&self, base: &Path, cfg: &ExperimentConfig) -> Result<()> {
        let with_suffix = |suffix: &str| {
            let mut s = base.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        write_f64(&with_suffix(".f64"), &self.re_u)?;
        write_f64(&with_suffix(".err.f64"), &self.log_err)?;
        let meta = format!(
            "{}nx = {n}\nny = {n}\nx_min = {lo}\nx_max = {hi}\ny_min = {lo}\ny_max = {hi}\n\
             layout = \"row-major, y slowest, little-endian f64\"\nmask = \"NaN\"\n\
             n_exterior = {ext}\nn_pan_used = {np}\nn_unknowns = {nu}\n",
            comment_block(cfg),
            n = self.grid.n,
            lo = self.grid.lo,
            hi = self.grid.hi,
            ext = self.grid.exterior.iter().filter(|&&e| e).count(),
            np = self.n_pan,
            nu = self.n_unknowns,
        );
        write_file(&with_suffix(".meta"), meta.as_bytes())
    }
}

fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_file(path, &bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| path_err(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaStudyRow {
    pub k: f64,
    pub eta_rule: EtaRule,
    pub eta: f64,
    pub tol: f64,
    pub n_pan: usize,
    pub gmres_iters: usize,
    pub converged: bool,
}

/// GMRES iteration counts for `η ∈ {k/2, k, −k}` at the configured `k`
/// and last panel count, followed by a `k = 2.8`, threshold `1e-12` run.
pub fn run_eta_study(cfg: &ExperimentConfig) -> Result<Vec<EtaStudyRow>> {
    cfg.validate()?;
    let n_pan = *cfg.n_pan.last().expect("validated");
    let mut cases: Vec<(f64, EtaRule, f64, usize)> = [EtaRule::HalfK, EtaRule::K, EtaRule::MinusK]
        .into_iter()
        .map(|rule| (cfg.k, rule, cfg.tol, n_pan))
        .collect();
    cases.push((2.8, EtaRule::HalfK, 1e-12, 16));
    let mut rows = Vec::with_capacity(cases.len());
    for (k, rule, tol, n_pan) in cases {
        let run = ExperimentConfig {
            k,
            eta: rule,
            tol,
            ..cfg.clone()
        };
        let sol = solve(&run, n_pan)?;
        rows.push(EtaStudyRow {
            k,
            eta_rule: rule,
            eta: rule.value(k),
            tol,
            n_pan,
            gmres_iters: sol.gmres.iterations,
            converged: sol.gmres.converged,
        });
    }
    Ok(rows)
}

/// Configuration rendered as a block of `#` comment lines.
pub fn comment_block(cfg: &ExperimentConfig) -> String {
    cfg.to_toml().lines().map(|l| format!("# {l}\n")).collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e)
}

fn path_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_far_field_csv<W: Write>(mut w: W, cfg: &ExperimentConfig, rows: &[FarFieldRow]) -> Result<()> {
    w.write_all(comment_block(cfg).as_bytes()).map_err(io_err)?;
    writeln!(w, "n_pan,n_unknowns,max_rel_err,gmres_iters,assemble_s,solve_s,eval_s").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6e},{},{:.3},{:.3},{:.3}",
            r.n_pan, r.n_unknowns, r.max_rel_err, r.gmres_iters, r.assemble_s, r.solve_s, r.eval_s
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_near_field_csv<W: Write>(mut w: W, cfg: &ExperimentConfig, rows: &[NearFieldRow]) -> Result<()> {
    w.write_all(comment_block(cfg).as_bytes()).map_err(io_err)?;
    writeln!(w, "n_pan,n_unknowns,n_points,avg_norm_err,max_norm_err,gmres_iters").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.6e},{:.6e},{}",
            r.n_pan, r.n_unknowns, r.n_points, r.avg_norm_err, r.max_norm_err, r.gmres_iters
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_eta_study_csv<W: Write>(mut w: W, cfg: &ExperimentConfig, rows: &[EtaStudyRow]) -> Result<()> {
    w.write_all(comment_block(cfg).as_bytes()).map_err(io_err)?;
    writeln!(w, "k,eta_rule,eta,tol,n_pan,gmres_iters,converged").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:e},{},{},{}",
            r.k, r.eta_rule, r.eta, r.tol, r.n_pan, r.gmres_iters, r.converged
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Least-squares slope of `log err` against `log n`.
pub fn fitted_order(n: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -sxy / sxx
}
