//! Command-line front end: reads a JSON job file, runs one pipeline stage and
//! writes a JSON report (stdout, and `report.json` under `--out-dir`) plus CSV
//! grids where the stage produces data.
//!
//! Exit codes: 0 success, 2 invalid input, 3 mathematical failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod json;

pub use commands::{
    cmd_classify, cmd_exact, cmd_map_to_constant, cmd_reduce, cmd_solve, cmd_verify, BoundaryCheck, ExactReport,
    Outcome, SolveReport, VerifyReport,
};
pub use config::{ExactSpec, GridSpec, IvpSpec, JobConfig, Preset, Tolerances};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Config(String),
    #[error("{0}")]
    Math(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn math(msg: impl Into<String>) -> Self {
        CliError::Math(msg.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Math(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kawahara", version, about = "Symmetry toolkit for variable-coefficient Kawahara equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group classification of the equation
    Classify(JobArgs),
    /// Similarity reduction by one subalgebra of the optimal system
    Reduce(JobArgs),
    /// Integrate the reduced IVP of a case-1 boundary value problem and rebuild u(t, x)
    Solve(JobArgs),
    /// Build and verify a closed-form solution family
    Exact(JobArgs),
    /// PDE and conservation-law residuals of a candidate u(t, x)
    Verify(JobArgs),
    /// Reducibility test and the map onto a constant-coefficient equation
    MapToConstant(JobArgs),
}

#[derive(Debug, Clone, Args)]
pub struct JobArgs {
    /// JSON job file
    pub config: PathBuf,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Largest normalized residual accepted for closed forms
    #[arg(long)]
    pub verify_tol: Option<f64>,
    /// t0:t1:nt,x0:x1:nx (either axis may be left empty)
    #[arg(long)]
    pub grid: Option<String>,
    /// Case the equation must fall into, e.g. 1' or 3
    #[arg(long)]
    pub case: Option<String>,
    /// Optimal-system label, e.g. g1'.1
    #[arg(long)]
    pub subalgebra: Option<String>,
    /// Subalgebra parameter (a or s0)
    #[arg(long, allow_negative_numbers = true)]
    pub param: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Threshold of the numeric zero test
    #[arg(long, env = "KAWAHARA_SEED_TOL")]
    pub seed_tol: Option<f64>,
}

impl JobArgs {
    /// The job file with command-line overrides applied.
    pub fn load(&self) -> Result<JobConfig, CliError> {
        let mut cfg = JobConfig::load(&self.config)?;
        let t = &mut cfg.tolerances;
        t.rtol = self.rtol.unwrap_or(t.rtol);
        t.atol = self.atol.unwrap_or(t.atol);
        t.verify = self.verify_tol.unwrap_or(t.verify);
        t.zero_eps = self.seed_tol.or(t.zero_eps);
        if let Some(g) = &self.grid {
            cfg.grid = Some(GridSpec::parse(g).map_err(|e| CliError::config(format!("--grid: {e}")))?);
        }
        cfg.case = self.case.clone().or(cfg.case);
        cfg.subalgebra = self.subalgebra.clone().or(cfg.subalgebra);
        cfg.param = self.param.or(cfg.param);
        cfg.out_dir = self.out_dir.clone().or(cfg.out_dir);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (name, args) = match &cli.command {
        Command::Classify(a) => ("classify", a),
        Command::Reduce(a) => ("reduce", a),
        Command::Solve(a) => ("solve", a),
        Command::Exact(a) => ("exact", a),
        Command::Verify(a) => ("verify", a),
        Command::MapToConstant(a) => ("map-to-constant", a),
    };
    let result = args.load().and_then(|cfg| {
        if let Some(eps) = cfg.tolerances.zero_eps {
            kawahara_core::expr::set_default_eps_zero(eps);
        }
        let out = match cli.command {
            Command::Classify(_) => cmd_classify(&cfg),
            Command::Reduce(_) => cmd_reduce(&cfg),
            Command::Solve(_) => cmd_solve(&cfg).map(Outcome::from),
            Command::Exact(_) => cmd_exact(&cfg).map(Outcome::from),
            Command::Verify(_) => cmd_verify(&cfg).map(Outcome::from),
            Command::MapToConstant(_) => cmd_map_to_constant(&cfg),
        }?;
        out.emit(cfg.out_dir.as_deref())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kawahara {name}: {e}");
            e.code()
        }
    }
}
