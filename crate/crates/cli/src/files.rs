//! Text formats. Numbers are written with 17 significant digits so every
//! `f64` reads back exactly.

use std::fmt::Write as _;

use cgwave_core::continuation::{Branch, SolutionPoint, Verdict};
use cgwave_core::linear::{self, Sign};
use cgwave_core::reconstruction::PhysicalSolution;
use cgwave_core::{Discretization, FlowParameters, OperatorOptions, TrigSeries, WaveOperators};

use crate::config::{mode_label, parse_mode};
use crate::CliError;

pub const BRANCH_FORMAT: u32 = 1;

const FOOTER_KEYS: &[&str] = &["verdict", "failure", "points", "rejected_steps", "reconnection"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One accepted point as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub s: f64,
    pub lambda: f64,
    pub m: f64,
    pub q: f64,
    pub residual: f64,
    pub min_wkh: f64,
    pub sup_norm: f64,
    pub coeffs: Vec<f64>,
}

impl BranchRecord {
    pub fn from_point(p: &SolutionPoint) -> Self {
        Self {
            s: p.arclength,
            lambda: p.lambda,
            m: p.m,
            q: p.q,
            residual: p.residual_norm,
            min_wkh: p.min_wkh,
            sup_norm: p.sup_norm,
            coeffs: p.w.cos_coeffs().to_vec(),
        }
    }

    pub fn profile(&self) -> TrigSeries {
        TrigSeries::even(self.coeffs.clone())
    }
}

/// A branch file: self-describing header, records and verdict footer.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFile {
    pub params: FlowParameters,
    pub order: usize,
    pub grid: usize,
    pub stagnation_floor: f64,
    pub newton_tol: f64,
    pub mode: usize,
    pub sign: Sign,
    pub direction: i8,
    pub stride: usize,
    pub bifurcation_lambda: f64,
    pub records: Vec<BranchRecord>,
    pub verdict: Option<Verdict>,
    pub rejected_steps: usize,
    /// `n±` of the bifurcation value reached on a reconnection.
    pub reconnection: Option<(usize, Sign, f64)>,
    /// Why the branch could not be started, if it was not.
    pub failure: Option<String>,
}

impl BranchFile {
    pub fn from_branch(ops: &WaveOperators, newton_tol: f64, branch: &Branch) -> Self {
        let mut f = Self::empty(ops, newton_tol, &branch.origin, branch.direction);
        f.stride = branch.x_star_stride;
        f.records = branch.points.iter().map(BranchRecord::from_point).collect();
        f.verdict = Some(branch.verdict);
        f.rejected_steps = branch.rejected_steps;
        f.reconnection = branch.reconnection.as_ref().map(|r| (r.n, r.sign, r.bifurcation_lambda));
        f
    }

    pub fn empty(ops: &WaveOperators, newton_tol: f64, bp: &linear::BifurcationPoint, direction: i8) -> Self {
        Self {
            params: *ops.params(),
            order: ops.order(),
            grid: ops.discretization().grid,
            stagnation_floor: ops.options().stagnation_floor,
            newton_tol,
            mode: bp.n,
            sign: bp.sign,
            direction,
            stride: bp.x_star_stride,
            bifurcation_lambda: bp.lambda,
            records: Vec::new(),
            verdict: None,
            rejected_steps: 0,
            reconnection: None,
            failure: None,
        }
    }

    /// Operators matching the header, for re-validation after loading.
    pub fn operators(&self) -> Result<WaveOperators, CliError> {
        let disc = Discretization::with_grid(self.order, self.grid).map_err(|e| CliError::Input(e.to_string()))?;
        let options = OperatorOptions { stagnation_floor: self.stagnation_floor, ..Default::default() };
        WaveOperators::with_options(self.params, disc, options).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "format=cgwave-branch {BRANCH_FORMAT}");
        for (key, v) in [("h", p.h), ("k", p.k), ("g", p.g), ("gamma", p.gamma), ("sigma", p.sigma)] {
            let _ = writeln!(s, "{key}={}", num(v));
        }
        let _ = writeln!(s, "N={}", self.order);
        let _ = writeln!(s, "M={}", self.grid);
        let _ = writeln!(s, "stagnation_floor={}", num(self.stagnation_floor));
        let _ = writeln!(s, "newton_tol={}", num(self.newton_tol));
        let _ = writeln!(s, "mode={}", mode_label(self.mode, self.sign));
        let _ = writeln!(s, "direction={}", self.direction);
        let _ = writeln!(s, "stride={}", self.stride);
        let _ = writeln!(s, "bifurcation_lambda={}", num(self.bifurcation_lambda));
        let _ = write!(s, "# s lambda m Q residual minWkh supNorm");
        for n in 1..=self.order {
            let _ = write!(s, " a_{n}");
        }
        s.push('\n');
        for r in &self.records {
            let fields = [r.s, r.lambda, r.m, r.q, r.residual, r.min_wkh, r.sup_norm];
            let line: Vec<String> = fields.iter().chain(&r.coeffs).map(|&v| num(v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        match (&self.verdict, &self.failure) {
            (Some(v), _) => {
                let _ = writeln!(s, "verdict={}", v.name());
            }
            (None, Some(msg)) => {
                let _ = writeln!(s, "verdict=NotStarted");
                let _ = writeln!(s, "failure={}", msg.replace('\n', " "));
            }
            (None, None) => {}
        }
        let _ = writeln!(s, "points={}", self.records.len());
        let _ = writeln!(s, "rejected_steps={}", self.rejected_steps);
        if let Some((n, sign, lambda)) = self.reconnection {
            let _ = writeln!(s, "reconnection={} {}", mode_label(n, sign), num(lambda));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |msg: String| CliError::Input(msg);
        let mut header = std::collections::BTreeMap::new();
        let mut records = Vec::new();
        let mut footer = std::collections::BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let target = if FOOTER_KEYS.contains(&key.trim()) { &mut footer } else { &mut header };
                target.insert(key.trim().to_string(), value.trim().to_string());
                continue;
            }
            let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let values = values.map_err(|_| bad(format!("line {}: malformed record", i + 1)))?;
            if values.len() < 7 {
                return Err(bad(format!("line {}: record has {} fields", i + 1, values.len())));
            }
            records.push(BranchRecord {
                s: values[0],
                lambda: values[1],
                m: values[2],
                q: values[3],
                residual: values[4],
                min_wkh: values[5],
                sup_norm: values[6],
                coeffs: values[7..].to_vec(),
            });
        }
        let get = |key: &str| header.get(key).ok_or_else(|| bad(format!("missing header key {key}")));
        let float = |key: &str| -> Result<f64, CliError> {
            get(key)?.parse().map_err(|_| bad(format!("header {key} is not a number")))
        };
        let int = |key: &str| -> Result<usize, CliError> {
            get(key)?.parse().map_err(|_| bad(format!("header {key} is not an integer")))
        };
        if get("format")? != &format!("cgwave-branch {BRANCH_FORMAT}") {
            return Err(bad(format!("unsupported format {:?}", get("format")?)));
        }
        let params = FlowParameters::new(float("h")?, float("k")?, float("g")?, float("gamma")?, float("sigma")?)
            .map_err(|e| bad(e.to_string()))?;
        let order = int("N")?;
        if let Some(r) = records.iter().find(|r| r.coeffs.len() != order) {
            return Err(bad(format!("record at s={} has {} coefficients, expected {order}", r.s, r.coeffs.len())));
        }
        let (mode, sign) = parse_mode(get("mode")?).map_err(|e| bad(e.to_string()))?;
        let direction = match get("direction")?.as_str() {
            "1" => 1,
            "-1" => -1,
            other => return Err(bad(format!("direction {other:?}"))),
        };
        let verdict = match footer.get("verdict") {
            Some(v) if v == "NotStarted" => None,
            Some(v) => Some(Verdict::from_name(v).ok_or_else(|| bad(format!("unknown verdict {v}")))?),
            None => None,
        };
        let reconnection = match footer.get("reconnection") {
            Some(v) => {
                let (label, lambda) = v.split_once(' ').ok_or_else(|| bad("malformed reconnection".into()))?;
                let (n, sign) = parse_mode(label).map_err(|e| bad(e.to_string()))?;
                Some((n, sign, lambda.parse().map_err(|_| bad("malformed reconnection".into()))?))
            }
            None => None,
        };
        Ok(Self {
            params,
            order,
            grid: int("M")?,
            stagnation_floor: float("stagnation_floor")?,
            newton_tol: float("newton_tol")?,
            mode,
            sign,
            direction,
            stride: int("stride")?,
            bifurcation_lambda: float("bifurcation_lambda")?,
            records,
            verdict,
            rejected_steps: footer.get("rejected_steps").and_then(|v| v.parse().ok()).unwrap_or(0),
            reconnection,
            failure: footer.get("failure").cloned(),
        })
    }
}

/// `t X Y` at the grid nodes, one period.
pub fn profile_text(sol: &PhysicalSolution) -> String {
    let mut s = String::from("# t X Y\n");
    for p in &sol.surface {
        let _ = writeln!(s, "{} {} {}", num(p.t), num(p.x), num(p.y));
    }
    s
}

pub fn parse_profile(text: &str) -> Result<Vec<(f64, f64, f64)>, CliError> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Input(format!("malformed profile line {l:?}")))?;
            match v[..] {
                [t, x, y] => Ok((t, x, y)),
                _ => Err(CliError::Input(format!("profile line {l:?} needs three columns"))),
            }
        })
        .collect()
}

/// Bifurcation table for `n = 1..n_max`.
pub fn bifpoints_text(p: &FlowParameters, n_max: usize, order: usize) -> String {
    let mut s = String::from(
        "# n lambda_minus lambda_plus m_minus m_plus kernel_dim_minus kernel_dim_plus transversal_minus transversal_plus\n",
    );
    for n in 1..=n_max {
        let minus = linear::BifurcationPoint::new(p, n, Sign::Minus, n_max, order);
        let plus = linear::BifurcationPoint::new(p, n, Sign::Plus, n_max, order);
        match (minus, plus) {
            (Ok(a), Ok(b)) => {
                let _ = writeln!(
                    s,
                    "{n} {} {} {} {} {} {} {} {}",
                    num(a.lambda),
                    num(b.lambda),
                    num(a.m),
                    num(b.m),
                    a.kernel_dim,
                    b.kernel_dim,
                    a.transversal as u8,
                    b.transversal as u8
                );
            }
            (Err(e), _) | (_, Err(e)) => {
                let _ = writeln!(s, "{n} none none none none 0 0 0 0 # {e}");
            }
        }
    }
    s
}
