use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cgwave_core::continuation::{ContinuationSettings, NewtonSettings, ReconnectionSettings};
use cgwave_core::linear::Sign;
use cgwave_core::{Discretization, FlowParameters, OperatorOptions, WaveOperators};

use crate::CliError;

/// Every setting a run depends on. Keys of the config file and command-line
/// flags use the field names.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub h: f64,
    pub k: f64,
    pub g: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub n: usize,
    /// Grid size; 0 selects `4N`.
    pub m: usize,
    pub newton_tol: f64,
    pub stagnation_floor: f64,
    pub stagnation_verdict: f64,
    pub loop_tol: f64,
    pub trivial_tol: f64,
    pub s0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    pub modes: Vec<(usize, Sign)>,
    pub direction: i8,
    pub output: PathBuf,
    pub seed: u64,
    pub test_functions: usize,
    pub sweep_gamma: Vec<f64>,
    pub sweep_sigma: Vec<f64>,
    pub sweep_h: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            h: 1.0,
            k: 1.0,
            g: 9.81,
            gamma: 1.0,
            sigma: 0.074,
            n: 32,
            m: 0,
            newton_tol: 1e-12,
            stagnation_floor: 1e-4,
            stagnation_verdict: 5e-2,
            loop_tol: 1e-8,
            trivial_tol: 1e-8,
            s0: 1e-3,
            ds_min: 1e-5,
            ds_max: 0.1,
            max_points: 200,
            modes: vec![(1, Sign::Plus)],
            direction: 1,
            output: PathBuf::from("out"),
            seed: 1,
            test_functions: 50,
            sweep_gamma: Vec::new(),
            sweep_sigma: Vec::new(),
            sweep_h: Vec::new(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "h",
    "k",
    "g",
    "gamma",
    "sigma",
    "N",
    "M",
    "newton_tol",
    "stagnation_floor",
    "stagnation_verdict",
    "loop_tol",
    "trivial_tol",
    "s0",
    "ds_min",
    "ds_max",
    "max_points",
    "modes",
    "direction",
    "output",
    "seed",
    "test_functions",
    "sweep_gamma",
    "sweep_sigma",
    "sweep_h",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v)).collect()
}

/// `1+`, `2-`, ...
pub fn parse_mode(text: &str) -> Result<(usize, Sign), CliError> {
    let text = text.trim();
    let sign = match text.chars().last() {
        Some('+') => Sign::Plus,
        Some('-') => Sign::Minus,
        _ => return Err(CliError::Config(format!("mode {text:?} must end in + or -"))),
    };
    let n: usize = parse("modes", &text[..text.len() - 1])?;
    if n == 0 {
        return Err(CliError::Config("mode numbers start at 1".into()));
    }
    Ok((n, sign))
}

pub fn mode_label(n: usize, sign: Sign) -> String {
    format!("{n}{}", sign.symbol())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "h" => self.h = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "g" => self.g = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "N" => self.n = parse(key, value)?,
            "M" => self.m = parse(key, value)?,
            "newton_tol" => self.newton_tol = parse(key, value)?,
            "stagnation_floor" => self.stagnation_floor = parse(key, value)?,
            "stagnation_verdict" => self.stagnation_verdict = parse(key, value)?,
            "loop_tol" => self.loop_tol = parse(key, value)?,
            "trivial_tol" => self.trivial_tol = parse(key, value)?,
            "s0" => self.s0 = parse(key, value)?,
            "ds_min" => self.ds_min = parse(key, value)?,
            "ds_max" => self.ds_max = parse(key, value)?,
            "max_points" => self.max_points = parse(key, value)?,
            "modes" => {
                self.modes = value.split(',').filter(|s| !s.trim().is_empty()).map(parse_mode).collect::<Result<_, _>>()?
            }
            "direction" => {
                self.direction = match value.trim() {
                    "1" | "+1" | "+" => 1,
                    "-1" | "-" => -1,
                    other => return Err(CliError::Config(format!("direction must be 1 or -1, got {other:?}"))),
                }
            }
            "output" => self.output = PathBuf::from(value.trim()),
            "seed" => self.seed = parse(key, value)?,
            "test_functions" => self.test_functions = parse(key, value)?,
            "sweep_gamma" => self.sweep_gamma = parse_list(key, value)?,
            "sweep_sigma" => self.sweep_sigma = parse_list(key, value)?,
            "sweep_h" => self.sweep_h = parse_list(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn grid(&self) -> usize {
        if self.m == 0 {
            4 * self.n
        } else {
            self.m
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.flow()?;
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        if self.grid() < 4 * self.n {
            return bad(format!("M = {} is below 4N = {}", self.grid(), 4 * self.n));
        }
        if !(self.stagnation_verdict > self.stagnation_floor && self.stagnation_floor > 0.0) {
            return bad("need stagnation_verdict > stagnation_floor > 0".into());
        }
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds_max) {
            return bad("need 0 < ds_min <= ds_max".into());
        }
        for (name, v) in [("newton_tol", self.newton_tol), ("loop_tol", self.loop_tol), ("trivial_tol", self.trivial_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.s0 != 0.0 && self.s0.is_finite()) {
            return bad("s0 must be nonzero".into());
        }
        if self.max_points == 0 {
            return bad("max_points must be positive".into());
        }
        if let Some(&(n, _)) = self.modes.iter().find(|(n, _)| *n > self.n) {
            return bad(format!("mode {n} exceeds N = {}", self.n));
        }
        Ok(())
    }

    pub fn flow(&self) -> Result<FlowParameters, CliError> {
        FlowParameters::new(self.h, self.k, self.g, self.gamma, self.sigma)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn operator_options(&self) -> OperatorOptions {
        OperatorOptions { stagnation_floor: self.stagnation_floor, ..Default::default() }
    }

    pub fn operators(&self) -> Result<WaveOperators, CliError> {
        let disc = Discretization::with_grid(self.n, self.grid()).map_err(|e| CliError::Config(e.to_string()))?;
        WaveOperators::with_options(self.flow()?, disc, self.operator_options())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn newton(&self) -> NewtonSettings {
        NewtonSettings { tolerance: self.newton_tol, ..Default::default() }
    }

    pub fn continuation(&self) -> ContinuationSettings {
        ContinuationSettings {
            ds_min: self.ds_min,
            ds_max: self.ds_max,
            ds_initial: 1e-2f64.clamp(self.ds_min, self.ds_max),
            max_points: self.max_points,
            newton: self.newton(),
            stagnation_verdict: self.stagnation_verdict,
            loop_tol: self.loop_tol,
            ..Default::default()
        }
    }

    pub fn reconnection(&self) -> ReconnectionSettings {
        ReconnectionSettings { trivial_tol: self.trivial_tol, ..Default::default() }
    }

    /// Canonical `key=value` text; parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let modes: Vec<String> = self.modes.iter().map(|&(n, sign)| mode_label(n, sign)).collect();
        let _ = writeln!(s, "h={:?}", self.h);
        let _ = writeln!(s, "k={:?}", self.k);
        let _ = writeln!(s, "g={:?}", self.g);
        let _ = writeln!(s, "gamma={:?}", self.gamma);
        let _ = writeln!(s, "sigma={:?}", self.sigma);
        let _ = writeln!(s, "N={}", self.n);
        let _ = writeln!(s, "M={}", self.grid());
        let _ = writeln!(s, "newton_tol={:?}", self.newton_tol);
        let _ = writeln!(s, "stagnation_floor={:?}", self.stagnation_floor);
        let _ = writeln!(s, "stagnation_verdict={:?}", self.stagnation_verdict);
        let _ = writeln!(s, "loop_tol={:?}", self.loop_tol);
        let _ = writeln!(s, "trivial_tol={:?}", self.trivial_tol);
        let _ = writeln!(s, "s0={:?}", self.s0);
        let _ = writeln!(s, "ds_min={:?}", self.ds_min);
        let _ = writeln!(s, "ds_max={:?}", self.ds_max);
        let _ = writeln!(s, "max_points={}", self.max_points);
        let _ = writeln!(s, "modes={}", modes.join(","));
        let _ = writeln!(s, "direction={}", self.direction);
        let _ = writeln!(s, "output={}", self.output.display());
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "test_functions={}", self.test_functions);
        let _ = writeln!(s, "sweep_gamma={}", join(&self.sweep_gamma));
        let _ = writeln!(s, "sweep_sigma={}", join(&self.sweep_sigma));
        let _ = writeln!(s, "sweep_h={}", join(&self.sweep_h));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("gamma=-0.5\nmodes=1+,3-\nsweep_sigma=0.05,0.2\n# note\n\nM=256\n").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.modes, vec![(1, Sign::Plus), (3, Sign::Minus)]);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = RunConfig::default().apply_text("sigmaa=1").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn orderings_are_enforced() {
        let d = RunConfig::default;
        assert!(RunConfig { stagnation_verdict: 1e-5, ..d() }.validate().is_err());
        assert!(RunConfig { ds_min: 1.0, ..d() }.validate().is_err());
        assert!(RunConfig { sigma: 0.0, ..d() }.validate().is_err());
        assert!(RunConfig { m: 64, ..d() }.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
