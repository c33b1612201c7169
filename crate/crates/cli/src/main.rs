use std::path::PathBuf;
use std::process::ExitCode;

use cgwave::config::{parse_mode, RunConfig};
use cgwave::{cmd_bifpoints, cmd_continue, cmd_reconstruct, cmd_sweep, cmd_verify, CliError, Mutations, Status};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgwave", version, about = "Steady capillary-gravity waves with constant vorticity")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the config file; names match its keys.
#[derive(Args)]
struct ConfigArgs {
    /// key=value file read before the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long = "N", global = true)]
    n: Option<String>,
    #[arg(long = "M", global = true)]
    m: Option<String>,
    #[arg(long = "newton_tol", global = true)]
    newton_tol: Option<String>,
    #[arg(long = "stagnation_floor", global = true)]
    stagnation_floor: Option<String>,
    #[arg(long = "stagnation_verdict", global = true)]
    stagnation_verdict: Option<String>,
    #[arg(long = "loop_tol", global = true)]
    loop_tol: Option<String>,
    #[arg(long = "trivial_tol", global = true)]
    trivial_tol: Option<String>,
    #[arg(long, global = true)]
    s0: Option<String>,
    #[arg(long = "ds_min", global = true)]
    ds_min: Option<String>,
    #[arg(long = "ds_max", global = true)]
    ds_max: Option<String>,
    #[arg(long = "max_points", global = true)]
    max_points: Option<String>,
    /// Comma-separated list such as `1+,2-`
    #[arg(long, global = true, allow_hyphen_values = true)]
    modes: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long, global = true)]
    output: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long = "test_functions", global = true)]
    test_functions: Option<String>,
    #[arg(long = "sweep_gamma", global = true, allow_hyphen_values = true)]
    sweep_gamma: Option<String>,
    #[arg(long = "sweep_sigma", global = true, allow_hyphen_values = true)]
    sweep_sigma: Option<String>,
    #[arg(long = "sweep_h", global = true, allow_hyphen_values = true)]
    sweep_h: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("h", &self.h),
            ("k", &self.k),
            ("g", &self.g),
            ("gamma", &self.gamma),
            ("sigma", &self.sigma),
            ("N", &self.n),
            ("M", &self.m),
            ("newton_tol", &self.newton_tol),
            ("stagnation_floor", &self.stagnation_floor),
            ("stagnation_verdict", &self.stagnation_verdict),
            ("loop_tol", &self.loop_tol),
            ("trivial_tol", &self.trivial_tol),
            ("s0", &self.s0),
            ("ds_min", &self.ds_min),
            ("ds_max", &self.ds_max),
            ("max_points", &self.max_points),
            ("modes", &self.modes),
            ("direction", &self.direction),
            ("output", &self.output),
            ("seed", &self.seed),
            ("test_functions", &self.test_functions),
            ("sweep_gamma", &self.sweep_gamma),
            ("sweep_sigma", &self.sweep_sigma),
            ("sweep_h", &self.sweep_h),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the bifurcation values for n = 1..N
    Bifpoints,
    /// Trace one branch and write its branch file
    Continue {
        /// Mode such as `1+`; defaults to the first entry of `modes`
        #[arg(long = "mode", allow_hyphen_values = true)]
        mode: Option<String>,
    },
    /// Run the identity and equivalence checks
    Verify {
        /// Branch file whose points are checked as well
        #[arg(long)]
        branch: Option<PathBuf>,
        #[arg(long, hide = true)]
        mutate_bracket: bool,
        #[arg(long, hide = true)]
        mutate_conjugate: bool,
    },
    /// Rebuild the physical wave at one branch point and validate it
    Reconstruct {
        #[arg(long)]
        branch: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Run bifurcation analysis and continuation over a parameter grid
    Sweep,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let cfg = cli.config.resolve()?;
    let outcome = match cli.command {
        Command::Bifpoints => {
            print!("{}", cmd_bifpoints(&cfg)?);
            return Ok(Status::Success);
        }
        Command::Continue { mode } => {
            let (n, sign) = match mode {
                Some(m) => parse_mode(&m)?,
                None => *cfg.modes.first().ok_or_else(|| CliError::Config("no mode given".into()))?,
            };
            cmd_continue(&cfg, n, sign, cfg.direction)?.1
        }
        Command::Verify { branch, mutate_bracket, mutate_conjugate } => {
            let mutations = Mutations { bracket: mutate_bracket, conjugate: mutate_conjugate };
            cmd_verify(&cfg, branch.as_deref(), mutations)?
        }
        Command::Reconstruct { branch, index } => cmd_reconstruct(&cfg, &branch, index)?.1,
        Command::Sweep => cmd_sweep(&cfg)?.1,
    };
    print!("{}", outcome.report);
    Ok(outcome.status)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
