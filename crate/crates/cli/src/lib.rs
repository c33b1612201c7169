//! Command-line front end: configuration, the `bifpoints`, `continue`,
//! `verify`, `reconstruct` and `sweep` commands, and their file formats.

pub mod config;
pub mod files;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cgwave_core::continuation::{continue_branch, switch_branch, Verdict};
use cgwave_core::linear::{BifurcationPoint, Sign};
use cgwave_core::operators::{BracketConvention, ConjugateKind};
use cgwave_core::reconstruction::{PhysicalSolution, ReconstructionTolerances, ValidationSettings};
use cgwave_core::verify::{check_function, check_point, decaying_test_function, trivial_branch_residual, VerifyTolerances};
use cgwave_core::{TrigSeries, WaveOperators};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use config::{mode_label, RunConfig};
use files::{bifpoints_text, profile_text, BranchFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

/// How a completed command ended, least severe first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Success,
    /// Finished, but some branch ended on a numerical verdict rather than
    /// one of the expected alternatives, or could not be started.
    Anomaly,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::VerificationFailed => 3,
            Status::Anomaly => 4,
        }
    }
}

pub struct Outcome {
    pub report: String,
    pub status: Status,
}

pub fn verdict_status(v: Option<Verdict>) -> Status {
    match v {
        Some(Verdict::StepSizeUnderflow | Verdict::ResolutionLimit) | None => Status::Anomaly,
        Some(_) => Status::Success,
    }
}

pub fn cmd_bifpoints(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    Ok(bifpoints_text(&cfg.flow()?, cfg.n, cfg.n))
}

pub fn branch_file_name(n: usize, sign: Sign, direction: i8) -> String {
    let s = if sign == Sign::Plus { 'p' } else { 'm' };
    let d = if direction > 0 { "up" } else { "down" };
    format!("branch_{n}{s}_{d}.txt")
}

/// Switches onto the branch at `n±` and continues it. Failure to start is
/// recorded in the file, not returned.
pub fn run_branch(cfg: &RunConfig, ops: &WaveOperators, n: usize, sign: Sign, direction: i8) -> Result<BranchFile, CliError> {
    let p = ops.params();
    let bp = match BifurcationPoint::new(p, n, sign, cfg.n, cfg.n) {
        Ok(bp) => bp,
        Err(e) => return Err(CliError::Config(format!("mode {}: {e}", mode_label(n, sign)))),
    };
    let settings = cfg.continuation();
    let start = switch_branch(ops, &bp, cfg.s0.abs(), direction, &settings.newton);
    let result = start.and_then(|sp| continue_branch(ops, &bp, sp, direction, &settings, cfg.reconnection()));
    Ok(match result {
        Ok(branch) => BranchFile::from_branch(ops, cfg.newton_tol, &branch),
        Err(e) => {
            let mut f = BranchFile::empty(ops, cfg.newton_tol, &bp, direction);
            f.failure = Some(e.to_string());
            f
        }
    })
}

pub fn cmd_continue(cfg: &RunConfig, n: usize, sign: Sign, direction: i8) -> Result<(PathBuf, Outcome), CliError> {
    cfg.validate()?;
    let ops = cfg.operators()?;
    let file = run_branch(cfg, &ops, n, sign, direction)?;
    std::fs::create_dir_all(&cfg.output)?;
    let path = cfg.output.join(branch_file_name(n, sign, direction));
    std::fs::write(&path, file.to_text())?;
    let verdict = file.verdict.map_or("NotStarted", |v| v.name());
    let mut report = format!("{}: {} points, verdict {verdict}\n", path.display(), file.records.len());
    if let Some(msg) = &file.failure {
        let _ = writeln!(report, "failure: {msg}");
    }
    Ok((path, Outcome { report, status: verdict_status(file.verdict) }))
}

/// Deliberately wrong operator variants, used to confirm the suite notices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mutations {
    pub bracket: bool,
    pub conjugate: bool,
}

fn mutate(ops: &WaveOperators, m: Mutations) -> Result<WaveOperators, CliError> {
    let mut options = *ops.options();
    if m.bracket {
        options.bracket = BracketConvention::PerWavenumber;
    }
    if m.conjugate {
        options.conjugate = ConjugateKind::Neumann;
    }
    WaveOperators::with_options(*ops.params(), ops.discretization(), options).map_err(|e| CliError::Config(e.to_string()))
}

fn seeded_functions(cfg: &RunConfig) -> Vec<(f64, TrigSeries)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Keep the last retained coefficient near 1e-8 so small N still resolves
    // the products.
    let top = 1e-8f64.powf(1.0 / cfg.n as f64).min(0.6);
    (0..cfg.test_functions)
        .map(|_| {
            let amplitude = rng.gen_range(0.05..0.3);
            let ratio = rng.gen_range(0.5 * top..top);
            let u: Vec<f64> = (0..cfg.n).map(|_| rng.gen()).collect();
            let lambda = rng.gen_range(-3.0..3.0);
            (lambda, decaying_test_function(amplitude, ratio, &u))
        })
        .collect()
}

pub fn cmd_verify(cfg: &RunConfig, branch: Option<&Path>, mutations: Mutations) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let ops = mutate(&cfg.operators()?, mutations)?;
    let tol = VerifyTolerances::default();
    let mut report = String::new();
    let mut ok = true;

    let mut worst = [0.0f64; 4];
    let mut failures = 0;
    for (lambda, w) in seeded_functions(cfg) {
        match check_function(&ops, lambda, &w) {
            Ok(c) => {
                worst[0] = worst[0].max(c.second_derivative);
                worst[1] = worst[1].max(c.conjugate);
                worst[2] = worst[2].max(c.hat_mean);
                worst[3] = worst[3].max(c.e_mean);
                if !c.passed(&tol) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    ok &= failures == 0;
    let _ = writeln!(
        report,
        "functions={} failed={failures} second_derivative={:.3e} conjugate={:.3e} hat_mean={:.3e} e_mean={:.3e}",
        cfg.test_functions, worst[0], worst[1], worst[2], worst[3]
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let lambdas: Vec<f64> = (0..100).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let trivial = trivial_branch_residual(&ops, &lambdas).unwrap_or(f64::INFINITY);
    ok &= trivial <= tol.trivial;
    let _ = writeln!(report, "trivial_residual={trivial:.3e}");

    if let Some(path) = branch {
        let file = BranchFile::parse(&std::fs::read_to_string(path)?)?;
        let bops = mutate(&file.operators()?, mutations)?;
        let tol = VerifyTolerances { solution: file.newton_tol, ..tol };
        let mut failed = 0;
        let mut worst_residual: f64 = 0.0;
        let mut worst_eqn2a: f64 = 0.0;
        for r in &file.records {
            let w = r.profile();
            match check_point(&bops, r.lambda, &w, file.stride, &tol) {
                Ok(c) => {
                    worst_residual = worst_residual.max(c.second_residual);
                    worst_eqn2a = worst_eqn2a.max(c.eqn2a_residual);
                    if !(c.passed(&tol) && c.is_solution) {
                        failed += 1;
                    }
                }
                Err(_) => failed += 1,
            }
        }
        ok &= failed == 0;
        let _ = writeln!(
            report,
            "branch={} points={} failed={failed} residual={worst_residual:.3e} eqn2a={worst_eqn2a:.3e}",
            path.display(),
            file.records.len()
        );
    }
    let _ = writeln!(report, "{}", if ok { "PASS" } else { "FAIL" });
    Ok(Outcome { report, status: if ok { Status::Success } else { Status::VerificationFailed } })
}

pub fn cmd_reconstruct(cfg: &RunConfig, branch: &Path, index: usize) -> Result<(PathBuf, Outcome), CliError> {
    let file = BranchFile::parse(&std::fs::read_to_string(branch)?)?;
    let record = file.records.get(index).ok_or_else(|| {
        CliError::Input(format!("index {index} out of range, branch has {} points", file.records.len()))
    })?;
    let ops = file.operators()?;
    let sol = PhysicalSolution::new(&ops, record.lambda, &record.profile()).map_err(|e| CliError::Input(e.to_string()))?;
    let v = sol.validate(&ops, &ValidationSettings::default()).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::create_dir_all(&cfg.output)?;
    let stem = branch.file_stem().and_then(|s| s.to_str()).unwrap_or("branch");
    let path = cfg.output.join(format!("{stem}_profile_{index}.txt"));
    std::fs::write(&path, profile_text(&sol))?;
    let a = v.admissibility;
    let passed = v.passed(&ReconstructionTolerances::default());
    let mut report = String::new();
    let _ = writeln!(report, "profile={}", path.display());
    let _ = writeln!(report, "lambda={:.16e} m={:.16e} Q={:.16e}", sol.lambda, sol.m, sol.q);
    let _ = writeln!(report, "psi_surface={:.3e} psi_bed={:.3e}", v.psi_surface, v.psi_bed);
    let _ = writeln!(report, "laplacian={:.3e} cauchy_riemann={:.3e}", v.laplacian, v.cauchy_riemann);
    let _ = writeln!(report, "bernoulli={:.3e}", v.bernoulli);
    let _ = writeln!(
        report,
        "above_bed_margin={:.6e} wkh_margin={:.6e} injectivity_margin={:.6e}",
        a.above_bed_margin, a.wkh_margin, a.injectivity_margin
    );
    let _ = writeln!(report, "{}", if passed { "PASS" } else { "FAIL" });
    Ok((path, Outcome { report, status: if passed { Status::Success } else { Status::VerificationFailed } }))
}

/// Result of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub index: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub h: f64,
    /// `mode verdict points` per seeded branch, or the error.
    pub result: Result<Vec<(String, String, usize)>, String>,
}

pub fn sweep_cells(cfg: &RunConfig) -> Vec<RunConfig> {
    let or_base = |v: &[f64], base: f64| if v.is_empty() { vec![base] } else { v.to_vec() };
    let mut cells = Vec::new();
    for &gamma in &or_base(&cfg.sweep_gamma, cfg.gamma) {
        for &sigma in &or_base(&cfg.sweep_sigma, cfg.sigma) {
            for &h in &or_base(&cfg.sweep_h, cfg.h) {
                let mut c = cfg.clone();
                c.gamma = gamma;
                c.sigma = sigma;
                c.h = h;
                c.sweep_gamma.clear();
                c.sweep_sigma.clear();
                c.sweep_h.clear();
                cells.push(c);
            }
        }
    }
    cells
}

fn run_cell(index: usize, mut cfg: RunConfig) -> CellSummary {
    let dir = cfg.output.join(format!("cell_{index:03}"));
    cfg.output = dir.clone();
    let mut summary = CellSummary { index, gamma: cfg.gamma, sigma: cfg.sigma, h: cfg.h, result: Ok(Vec::new()) };
    let run = || -> Result<Vec<(String, String, usize)>, CliError> {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("config.txt"), cfg.to_text())?;
        cfg.validate()?;
        std::fs::write(dir.join("bifpoints.txt"), cmd_bifpoints(&cfg)?)?;
        let ops = cfg.operators()?;
        let mut out = Vec::new();
        for &(n, sign) in &cfg.modes {
            let file = run_branch(&cfg, &ops, n, sign, cfg.direction)?;
            std::fs::write(dir.join(branch_file_name(n, sign, cfg.direction)), file.to_text())?;
            let verdict = file.verdict.map_or("NotStarted", |v| v.name());
            out.push((mode_label(n, sign), verdict.to_string(), file.records.len()));
        }
        Ok(out)
    };
    summary.result = run().map_err(|e| {
        let msg = e.to_string();
        let _ = std::fs::write(dir.join("error.txt"), format!("{msg}\n"));
        msg
    });
    summary
}

/// Runs every cell of the grid in parallel; each cell writes only into its
/// own directory and the summaries come back in cell order.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<(Vec<CellSummary>, Outcome), CliError> {
    if cfg.n == 0 || cfg.modes.is_empty() {
        return Err(CliError::Config("sweep needs N > 0 and at least one mode".into()));
    }
    std::fs::create_dir_all(&cfg.output)?;
    let cells: Vec<CellSummary> =
        sweep_cells(cfg).into_par_iter().enumerate().map(|(i, c)| run_cell(i, c)).collect();
    let mut report = String::from("# cell gamma sigma h result\n");
    let mut status = Status::Success;
    for c in &cells {
        let _ = write!(report, "{} {:?} {:?} {:?}", c.index, c.gamma, c.sigma, c.h);
        match &c.result {
            Ok(branches) => {
                for (mode, verdict, points) in branches {
                    let _ = write!(report, " {mode}:{verdict}:{points}");
                    status = status.max(verdict_status(Verdict::from_name(verdict)));
                }
            }
            Err(msg) => {
                let _ = write!(report, " error: {msg}");
                status = status.max(Status::Anomaly);
            }
        }
        report.push('\n');
    }
    std::fs::write(cfg.output.join("summary.txt"), &report)?;
    Ok((cells, Outcome { report, status }))
}
