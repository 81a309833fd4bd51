//! Command-line test bench: convergence studies against the point-source
//! solution exterior to the starfish.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helmsplit::assembly::Scheme;
use helmsplit::testbench::{self, EtaRule, ExperimentConfig};
use helmsplit::{selftest, Error, Result};

#[derive(Parser)]
#[command(name = "helmsplit", version, about = "Kernel-split Nyström solver test bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum relative error at the nine far-field locations.
    Farfield(Common),
    /// Average normalized error on the 200 x 200 near-field grid.
    Nearfield(Common),
    /// Re u and log10 error on a square grid, as flat binary files.
    Fieldmap {
        #[command(flatten)]
        common: Common,
        /// Grid points per side.
        #[arg(long, default_value_t = 700)]
        grid: usize,
    },
    /// GMRES iteration counts for eta = k/2, k, -k and for k = 2.8.
    EtaStudy(Common),
    /// Oracle checks of the quadrature and kernel building blocks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    npt: Option<usize>,
    /// Panel counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    npan: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<f64>,
    /// k/2, k, -k or a number.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<EtaRule>,
    /// GMRES threshold on the estimated relative residual.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Outer radius of the plain fine-grid evaluation zone, in panel lengths.
    #[arg(long)]
    zone_factor: Option<f64>,
    /// Output path (CSV, or base name for field maps).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(n) = self.npt {
            cfg.n_pt = n;
        }
        if let Some(list) = &self.npan {
            cfg.n_pan = list.clone();
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(eta) = self.eta {
            cfg.eta = eta;
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(z) = self.zone_factor {
            cfg.zone_factor = z;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Farfield(common) => {
            let cfg = common.config()?;
            let rows = testbench::run_far_field(&cfg)?;
            testbench::write_far_field_csv(output(&cfg)?, &cfg, &rows)?;
        }
        Command::Nearfield(common) => {
            let cfg = common.config()?;
            let rows = testbench::run_near_field(&cfg)?;
            let flagged: usize = rows.iter().map(|r| r.low_accuracy).sum();
            if flagged > 0 {
                eprintln!("warning: {flagged} evaluations lie within rounding distance of a panel endpoint");
            }
            testbench::write_near_field_csv(output(&cfg)?, &cfg, &rows)?;
        }
        Command::Fieldmap { common, grid } => {
            let cfg = common.config()?;
            if grid < 2 {
                return Err(Error::Config(format!("grid must have at least 2 points per side, got {grid}")));
            }
            let n_pan = *cfg.n_pan.last().expect("validated");
            let map = testbench::run_field_map(&cfg, n_pan, grid)?;
            let base = cfg.out.clone().unwrap_or_else(|| PathBuf::from("fieldmap"));
            map.write(&base, &cfg)?;
            eprintln!("wrote {}.f64, {0}.err.f64 and {0}.meta", base.display());
        }
        Command::EtaStudy(common) => {
            let cfg = common.config()?;
            let rows = testbench::run_eta_study(&cfg)?;
            testbench::write_eta_study_csv(output(&cfg)?, &cfg, &rows)?;
        }
        Command::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("helmsplit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
