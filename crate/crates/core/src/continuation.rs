//! Newton correction, branch switching and pseudo-arclength continuation.
//!
//! The engine works on any [`BranchSystem`]: `d` equations in `d + 1`
//! unknowns `x = (λ, state…)`, closed by one linear constraint. The wave
//! problem plugs in through [`WaveBranchSystem`], whose state is the vector of
//! cosine coefficients `a_s, a_2s, …` of the restricted space with stride `s`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linear::{self, BifurcationPoint, Sign};
use crate::operators::WaveOperators;
use crate::trig::TrigSeries;
use crate::{Error, NewtonFailure, Result};

/// Health indicators of a solution, used by the termination tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub min_wkh: f64,
    /// Norm of `(m, w)`; blow-up is declared when `1/(1 + norm)` is small.
    pub norm: f64,
    /// `‖w‖∞` on the grid.
    pub state_sup: f64,
}

/// Return to the laminar line at another bifurcation value.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconnection {
    pub n: usize,
    pub sign: Sign,
    pub bifurcation_lambda: f64,
    /// Converged point with `‖w‖∞` below the trivial tolerance.
    pub landing: Vec<f64>,
    pub landing_iterations: usize,
    pub landing_residual: f64,
}

/// `d` equations in `d + 1` unknowns.
pub trait BranchSystem {
    fn unknowns(&self) -> usize;

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Norm compared against the Newton tolerance.
    fn residual_norm(&self, _x: &[f64], r: &[f64]) -> f64 {
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies the Newton tolerance.
    fn tolerance_scale(&self, _x: &[f64]) -> f64 {
        1.0
    }

    /// Independent re-evaluation of the residual norm of an accepted point.
    fn validate(&self, x: &[f64]) -> Result<f64> {
        let r = self.residual(x)?;
        Ok(self.residual_norm(x, &r))
    }

    fn monitor(&self, x: &[f64]) -> Result<Monitor>;

    /// Detects arrival at the trivial line at a bifurcation value other than
    /// the origin of the branch. `previous` is the point before `x`.
    fn reconnection(&self, _x: &[f64], _previous: &[f64], _newton: &NewtonSettings) -> Option<Reconnection> {
        None
    }
}

/// `weights · x = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub weights: Vec<f64>,
    pub target: f64,
}

impl LinearConstraint {
    /// `x[index] = value`.
    pub fn fix(unknowns: usize, index: usize, value: f64) -> Self {
        let mut weights = vec![0.0; unknowns];
        weights[index] = 1.0;
        Self { weights, target: value }
    }

    /// `tangent · (x − anchor) = step`.
    pub fn arclength(tangent: &[f64], anchor: &[f64], step: f64) -> Self {
        Self { weights: tangent.to_vec(), target: dot(tangent, anchor) + step }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) - self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central-difference step, scaled by `max(1, |xᵢ|)`.
    pub fd_step: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 25, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn left_domain(iteration: usize, cause: Error) -> Error {
    Error::LeftDomain { iteration, cause: Box::new(cause) }
}

/// Solves `residual(x) = 0`, `constraint(x) = 0` by Newton's method with a
/// central-difference Jacobian.
///
/// Converged when the residual norm and the constraint defect are both at or
/// below `tolerance · tolerance_scale(x)`.
pub fn newton_correct<S: BranchSystem + ?Sized>(
    system: &S,
    guess: &[f64],
    constraint: &LinearConstraint,
    settings: &NewtonSettings,
) -> Result<NewtonSolution> {
    let dim = system.unknowns();
    assert_eq!(guess.len(), dim);
    assert_eq!(constraint.weights.len(), dim);
    let mut x = guess.to_vec();
    let mut best = NewtonFailure { best: x.clone(), residual: f64::INFINITY, iterations: 0 };
    for iteration in 0..=settings.max_iterations {
        let r = system.residual(&x).map_err(|e| left_domain(iteration, e))?;
        let defect = constraint.value(&x);
        let res = system.residual_norm(&x, &r).max(defect.abs());
        if !res.is_finite() {
            break;
        }
        if res < best.residual {
            best = NewtonFailure { best: x.clone(), residual: res, iterations: iteration };
        }
        if res <= settings.tolerance * system.tolerance_scale(&x) {
            return Ok(NewtonSolution { x, iterations: iteration, residual: res });
        }
        if iteration == settings.max_iterations {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        let mut probe = x.clone();
        for i in 0..dim {
            let step = settings.fd_step * x[i].abs().max(1.0);
            probe[i] = x[i] + step;
            let plus = system.residual(&probe).map_err(|e| left_domain(iteration, e))?;
            probe[i] = x[i] - step;
            let minus = system.residual(&probe).map_err(|e| left_domain(iteration, e))?;
            probe[i] = x[i];
            for row in 0..dim - 1 {
                jac[(row, i)] = (plus[row] - minus[row]) / (2.0 * step);
            }
            jac[(dim - 1, i)] = constraint.weights[i];
        }
        let mut rhs = DVector::<f64>::zeros(dim);
        for row in 0..dim - 1 {
            rhs[row] = -r[row];
        }
        rhs[dim - 1] = -defect;
        let dx = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        for i in 0..dim {
            x[i] += dx[i];
        }
        best.iterations = iteration + 1;
    }
    best.iterations = best.iterations.max(settings.max_iterations);
    Err(Error::NoConvergence(Box::new(best)))
}

/// Why a branch stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// `1/(1 + ‖(m, w)‖)` fell below its threshold.
    NormBlowup,
    /// `minₜ Wkh` fell below the verdict threshold.
    StagnationApproach,
    /// The branch passed back through its starting point.
    LoopClosure,
    /// The branch returned to the laminar line at another bifurcation value.
    TrivialReconnection,
    /// The configured number of points was reached.
    StepLimit,
    /// The corrector failed at the minimum step size.
    StepSizeUnderflow,
    /// Steps at the minimum size were rejected because the truncation no
    /// longer resolves the solution.
    ResolutionLimit,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::NormBlowup => "NormBlowup",
            Verdict::StagnationApproach => "StagnationApproach",
            Verdict::LoopClosure => "LoopClosure",
            Verdict::TrivialReconnection => "TrivialReconnection",
            Verdict::StepLimit => "StepLimit",
            Verdict::StepSizeUnderflow => "StepSizeUnderflow",
            Verdict::ResolutionLimit => "ResolutionLimit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Verdict::NormBlowup,
            Verdict::StagnationApproach,
            Verdict::LoopClosure,
            Verdict::TrivialReconnection,
            Verdict::StepLimit,
            Verdict::StepSizeUnderflow,
            Verdict::ResolutionLimit,
        ]
        .into_iter()
        .find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    pub ds_initial: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Step growth after a corrector converging in at most `fast_iterations`.
    pub growth: f64,
    pub fast_iterations: usize,
    pub max_points: usize,
    pub newton: NewtonSettings,
    pub stagnation_verdict: f64,
    pub norm_blowup: f64,
    pub loop_tol: f64,
    /// Accepted points must re-validate within this multiple of the tolerance.
    pub validation_factor: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            ds_initial: 1e-2,
            ds_min: 1e-5,
            ds_max: 0.1,
            growth: 1.3,
            fast_iterations: 3,
            max_points: 200,
            newton: NewtonSettings::default(),
            stagnation_verdict: 5e-2,
            norm_blowup: 1e-3,
            loop_tol: 1e-8,
            validation_factor: 10.0,
        }
    }
}

/// One accepted point of a traced curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedPoint {
    pub x: Vec<f64>,
    pub arclength: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Residual norm from [`BranchSystem::validate`].
    pub validation: f64,
    pub monitor: Monitor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracedCurve {
    pub points: Vec<TracedPoint>,
    pub verdict: Verdict,
    pub reconnection: Option<Reconnection>,
    pub rejected_steps: usize,
}

/// Pseudo-arclength continuation from a converged `start`.
///
/// The predictor steps along the unit `tangent` (the secant of the last two
/// accepted points after the first step); the corrector solves on the
/// hyperplane `tangent · (x − previous) = ds`. Failed corrections, points that
/// turn back on the previous tangent, and points failing re-validation halve
/// `ds`.
pub fn trace<S: BranchSystem + ?Sized>(
    system: &S,
    start: TracedPoint,
    tangent: &[f64],
    settings: &ContinuationSettings,
) -> TracedCurve {
    let mut tangent = {
        let n = norm(tangent);
        tangent.iter().map(|t| t / n).collect::<Vec<_>>()
    };
    let start_tangent = tangent.clone();
    let mut ds = settings.ds_initial.clamp(settings.ds_min, settings.ds_max);
    let mut points = vec![start];
    let mut rejected_steps = 0;
    let verdict_with = |points: Vec<TracedPoint>, verdict, reconnection, rejected_steps| TracedCurve {
        points,
        verdict,
        reconnection,
        rejected_steps,
    };

    loop {
        if points.len() >= settings.max_points {
            return verdict_with(points, Verdict::StepLimit, None, rejected_steps);
        }
        let prev = points.last().expect("start point").clone();
        let predictor: Vec<f64> = prev.x.iter().zip(&tangent).map(|(x, t)| x + ds * t).collect();
        let constraint = LinearConstraint::arclength(&tangent, &prev.x, ds);
        let accepted = match newton_correct(system, &predictor, &constraint, &settings.newton) {
            Err(e) => Err(truncation_fault(&e)),
            Ok(sol) => {
                let secant: Vec<f64> = sol.x.iter().zip(&prev.x).map(|(a, b)| a - b).collect();
                let len = norm(&secant);
                let scale = system.tolerance_scale(&sol.x);
                if !(len > 0.0) || dot(&secant, &tangent) < 0.5 * len {
                    Err(false)
                } else {
                    match system.validate(&sol.x) {
                        Err(e) => Err(truncation_fault(&e)),
                        Ok(v) if !(v <= settings.validation_factor * settings.newton.tolerance * scale) => Err(true),
                        Ok(validation) => match system.monitor(&sol.x) {
                            Ok(monitor) => Ok((sol, secant, len, validation, monitor)),
                            Err(e) => Err(truncation_fault(&e)),
                        },
                    }
                }
            }
        };
        let (sol, secant, len, validation, monitor) = match accepted {
            Ok(a) => a,
            Err(truncation) => {
                rejected_steps += 1;
                ds *= 0.5;
                if ds < settings.ds_min {
                    let verdict = if truncation { Verdict::ResolutionLimit } else { Verdict::StepSizeUnderflow };
                    return verdict_with(points, verdict, None, rejected_steps);
                }
                continue;
            }
        };

        let point = TracedPoint {
            x: sol.x,
            arclength: prev.arclength + len,
            iterations: sol.iterations,
            residual: sol.residual,
            validation,
            monitor,
        };
        tangent = secant.iter().map(|s| s / len).collect();
        points.push(point);
        let current = points.last().expect("just pushed");

        if current.monitor.min_wkh < settings.stagnation_verdict {
            return verdict_with(points, Verdict::StagnationApproach, None, rejected_steps);
        }
        if 1.0 / (1.0 + current.monitor.norm) < settings.norm_blowup {
            return verdict_with(points, Verdict::NormBlowup, None, rejected_steps);
        }
        if let Some(rc) = system.reconnection(&current.x, &prev.x, &settings.newton) {
            return verdict_with(points, Verdict::TrivialReconnection, Some(rc), rejected_steps);
        }
        if closes_loop(system, &points, &start_tangent, len, settings) {
            return verdict_with(points, Verdict::LoopClosure, None, rejected_steps);
        }
        if sol.iterations <= settings.fast_iterations {
            ds = (ds * settings.growth).min(settings.ds_max);
        }
    }
}

/// Whether a rejected step failed because the truncation no longer resolves
/// the solution: spectral tail overflow or failed re-validation.
fn truncation_fault(e: &Error) -> bool {
    match e {
        Error::AliasOverflow { .. } | Error::Unresolved { .. } => true,
        Error::LeftDomain { cause, .. } => truncation_fault(cause),
        _ => false,
    }
}

/// The last step crossed the hyperplane through the start point normal to the
/// start tangent, near the start point, and the corrector on that hyperplane
/// lands on the start point itself.
fn closes_loop<S: BranchSystem + ?Sized>(
    system: &S,
    points: &[TracedPoint],
    start_tangent: &[f64],
    step: f64,
    settings: &ContinuationSettings,
) -> bool {
    if points.len() < 4 {
        return false;
    }
    let start = &points[0].x;
    let current = &points[points.len() - 1].x;
    let previous = &points[points.len() - 2].x;
    let side = |x: &[f64]| dot(start_tangent, x) - dot(start_tangent, start);
    if !(side(previous) < 0.0 && side(current) >= 0.0) {
        return false;
    }
    if distance(current, start) > 2.0 * step {
        return false;
    }
    let constraint = LinearConstraint::arclength(start_tangent, start, 0.0);
    match newton_correct(system, current, &constraint, &settings.newton) {
        Ok(sol) => {
            let gap = sol.x.iter().zip(start).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            gap <= settings.loop_tol
        }
        Err(_) => false,
    }
}

// ---------------------------------------------------------------------------
// Wave problem
// ---------------------------------------------------------------------------

/// A converged solution `(λ, w)` with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPoint {
    pub lambda: f64,
    /// Even, zero-mean profile at order `N`.
    pub w: TrigSeries,
    pub m: f64,
    pub q: f64,
    pub min_wkh: f64,
    /// `‖w‖∞` on the grid.
    pub sup_norm: f64,
    pub arclength: f64,
    pub newton_iters: usize,
    /// `‖F(λ, w)‖∞` on the grid.
    pub residual_norm: f64,
}

/// A branch of nontrivial solutions emanating from a bifurcation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub origin: BifurcationPoint,
    /// Sign of `a_n` at the first point.
    pub direction: i8,
    pub x_star_stride: usize,
    pub points: Vec<SolutionPoint>,
    pub verdict: Verdict,
    pub reconnection: Option<Reconnection>,
    pub rejected_steps: usize,
}

/// Thresholds of the trivial-reconnection test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconnectionSettings {
    /// Detection starts once `‖w‖∞` is below this radius and shrinking.
    pub radius: f64,
    /// `‖w‖∞` of the landing point must be below this value.
    pub trivial_tol: f64,
    /// The landing `λ` must be this close to the bifurcation value.
    pub lambda_tol: f64,
}

impl Default for ReconnectionSettings {
    fn default() -> Self {
        Self { radius: 1e-2, trivial_tol: 1e-8, lambda_tol: 1e-6 }
    }
}

/// The wave problem restricted to cosine modes `s, 2s, …, ≤ N`.
#[derive(Debug, Clone)]
pub struct WaveBranchSystem<'a> {
    ops: &'a WaveOperators,
    validator: WaveOperators,
    stride: usize,
    modes: Vec<usize>,
    origin: Option<(usize, Sign)>,
    reconnection: ReconnectionSettings,
    divided_bound: f64,
}

impl<'a> WaveBranchSystem<'a> {
    pub fn new(ops: &'a WaveOperators, stride: usize) -> Result<Self> {
        assert!(stride >= 1);
        let modes: Vec<usize> = (1..=ops.order()).filter(|n| n % stride == 0).collect();
        if modes.is_empty() {
            return Err(Error::InvalidParameters(alloc::format!(
                "stride {stride} leaves no modes below order {}",
                ops.order()
            )));
        }
        Ok(Self {
            ops,
            validator: ops.doubled()?,
            stride,
            modes,
            origin: None,
            reconnection: ReconnectionSettings::default(),
            divided_bound: 1e-8,
        })
    }

    /// Excludes the branch origin from reconnection detection.
    pub fn with_origin(mut self, n: usize, sign: Sign) -> Self {
        self.origin = Some((n, sign));
        self
    }

    pub fn with_reconnection(mut self, settings: ReconnectionSettings) -> Self {
        self.reconnection = settings;
        self
    }

    /// Bound on the divided Bernoulli residual of accepted points (default
    /// `1e−8`). It sees the part of `K` above the truncation, which `F` does not.
    pub fn with_divided_bound(mut self, bound: f64) -> Self {
        self.divided_bound = bound;
        self
    }

    pub fn ops(&self) -> &WaveOperators {
        self.ops
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Position of `a_n` in the unknown vector.
    pub fn index_of(&self, n: usize) -> Option<usize> {
        self.modes.iter().position(|&m| m == n).map(|i| i + 1)
    }

    pub fn pack(&self, lambda: f64, w: &TrigSeries) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.modes.len() + 1);
        x.push(lambda);
        x.extend(self.modes.iter().map(|&n| w.a(n)));
        x
    }

    pub fn unpack(&self, x: &[f64]) -> (f64, TrigSeries) {
        let mut cos = vec![0.0; self.ops.order()];
        for (i, &n) in self.modes.iter().enumerate() {
            cos[n - 1] = x[i + 1];
        }
        (x[0], TrigSeries::even(cos))
    }

    fn grid_sup(ops: &WaveOperators, s: &TrigSeries) -> f64 {
        ops.collocation().synthesize(s).sup_norm()
    }

    /// Newton solve from `(λ, w)` under `constraint` (over the packed unknowns).
    pub fn correct(
        &self,
        lambda: f64,
        w: &TrigSeries,
        constraint: &LinearConstraint,
        settings: &NewtonSettings,
    ) -> Result<SolutionPoint> {
        let sol = newton_correct(self, &self.pack(lambda, w), constraint, settings)?;
        self.solution_point(&sol.x, sol.iterations, 0.0)
    }

    /// Newton solve with `a_n = value`.
    pub fn correct_fixing_mode(
        &self,
        lambda: f64,
        w: &TrigSeries,
        n: usize,
        value: f64,
        settings: &NewtonSettings,
    ) -> Result<SolutionPoint> {
        let index = self.index_of(n).ok_or_else(|| {
            Error::InvalidParameters(alloc::format!("mode {n} is not in the stride-{} space", self.stride))
        })?;
        let constraint = LinearConstraint::fix(self.unknowns(), index, value);
        self.correct(lambda, w, &constraint, settings)
    }

    /// Derived quantities of a packed solution.
    pub fn solution_point(&self, x: &[f64], newton_iters: usize, arclength: f64) -> Result<SolutionPoint> {
        let (lambda, w) = self.unpack(x);
        let (f, k) = self.ops.residual_f_full(lambda, &w)?;
        Ok(SolutionPoint {
            lambda,
            m: self.ops.params().m_from_lambda(lambda),
            q: k.q,
            min_wkh: k.min_wkh,
            sup_norm: Self::grid_sup(self.ops, &w),
            arclength,
            newton_iters,
            residual_norm: Self::grid_sup(self.ops, &f),
            w,
        })
    }

    fn land(&self, n: usize, lambda_b: f64, amplitude: f64, newton: &NewtonSettings) -> Option<(SolutionPoint, Vec<f64>)> {
        let order = self.ops.order();
        let guess = TrigSeries::cosine_mode(order, n, amplitude);
        let sp = self.correct_fixing_mode(lambda_b, &guess, n, amplitude, newton).ok()?;
        let x = self.pack(sp.lambda, &sp.w);
        Some((sp, x))
    }
}

impl BranchSystem for WaveBranchSystem<'_> {
    fn unknowns(&self) -> usize {
        self.modes.len() + 1
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (lambda, w) = self.unpack(x);
        let f = self.ops.residual_f(lambda, &w)?;
        Ok(self.modes.iter().map(|&n| f.a(n)).collect())
    }

    fn residual_norm(&self, x: &[f64], r: &[f64]) -> f64 {
        let _ = x;
        let mut cos = vec![0.0; self.ops.order()];
        for (i, &n) in self.modes.iter().enumerate() {
            cos[n - 1] = r[i];
        }
        Self::grid_sup(self.ops, &TrigSeries::even(cos))
    }

    fn tolerance_scale(&self, x: &[f64]) -> f64 {
        let (_, w) = self.unpack(x);
        1.0 + Self::grid_sup(self.ops, &w)
    }

    /// `‖F‖∞` on all modes, evaluated on the doubled grid. Fails with
    /// `Unresolved` when the divided form there exceeds its bound.
    fn validate(&self, x: &[f64]) -> Result<f64> {
        let (lambda, w) = self.unpack(x);
        let v = &self.validator;
        let f = v.residual_f(lambda, &w)?;
        let m = v.params().m_from_lambda(lambda);
        let divided = v.residual_eqn2a(m, v.q_value(lambda, &w)?, &w)?.sup_norm();
        if !(divided <= self.divided_bound) {
            return Err(Error::Unresolved { residual: divided, bound: self.divided_bound });
        }
        Ok(Self::grid_sup(v, &f))
    }

    fn monitor(&self, x: &[f64]) -> Result<Monitor> {
        let (lambda, w) = self.unpack(x);
        let s = self.ops.surface(&w)?;
        let m = self.ops.params().m_from_lambda(lambda);
        let c2 = s.w.sup_norm() + s.dw.sup_norm() + s.d2w.sup_norm();
        Ok(Monitor { min_wkh: s.wkh.min(), norm: m.abs() + c2, state_sup: s.w.sup_norm() })
    }

    fn reconnection(&self, x: &[f64], previous: &[f64], newton: &NewtonSettings) -> Option<Reconnection> {
        let settings = self.reconnection;
        let (lambda, w) = self.unpack(x);
        let sup = Self::grid_sup(self.ops, &w);
        let (_, w_prev) = self.unpack(previous);
        if !(sup < settings.radius) || sup >= Self::grid_sup(self.ops, &w_prev) {
            return None;
        }
        let (n, a_n) = self
            .modes
            .iter()
            .map(|&n| (n, w.a(n)))
            .fold((0usize, 0.0f64), |best, c| if c.1.abs() > best.1.abs() { c } else { best });
        if n == 0 || a_n == 0.0 {
            return None;
        }
        let p = self.ops.params();
        let (lm, lp) = linear::bifurcation_lambdas(p, n).ok()?;
        let (sign, lambda_b) = if (lambda - lm).abs() < (lambda - lp).abs() {
            (Sign::Minus, lm)
        } else {
            (Sign::Plus, lp)
        };
        if self.origin == Some((n, sign)) {
            return None;
        }
        if (lambda - lambda_b).abs() > settings.radius * (1.0 + lambda_b.abs()) {
            return None;
        }
        // Inside this neighbourhood all nontrivial solutions lie on the local
        // curve through (λ_b, 0); follow it down to the trivial tolerance.
        let amplitude = 0.5 * settings.trivial_tol * a_n.signum();
        let (landing, x_land) = self.land(n, lambda_b, amplitude, newton)?;
        if landing.sup_norm < settings.trivial_tol
            && (landing.lambda - lambda_b).abs() <= settings.lambda_tol
        {
            Some(Reconnection {
                n,
                sign,
                bifurcation_lambda: lambda_b,
                landing: x_land,
                landing_iterations: landing.newton_iters,
                landing_residual: landing.residual_norm,
            })
        } else {
            None
        }
    }
}

/// First nontrivial point on the branch from `bp`: `a_n = direction·s0`.
pub fn switch_branch(
    ops: &WaveOperators,
    bp: &BifurcationPoint,
    s0: f64,
    direction: i8,
    newton: &NewtonSettings,
) -> Result<SolutionPoint> {
    if !bp.transversal {
        linear::crossing_sign(ops.params(), bp.n, bp.lambda)?;
    }
    if !bp.kernel_in_x_star() {
        return Err(Error::InvalidParameters(alloc::format!(
            "mode {} is not in the stride-{} space; no simple kernel there",
            bp.n,
            bp.x_star_stride
        )));
    }
    if bp.n > ops.order() {
        return Err(Error::InvalidParameters(alloc::format!(
            "mode {} exceeds the truncation order {}",
            bp.n,
            ops.order()
        )));
    }
    let system = WaveBranchSystem::new(ops, bp.x_star_stride)?;
    let s = s0 * f64::from(direction.signum());
    let guess = TrigSeries::cosine_mode(ops.order(), bp.n, s);
    let mut sp = system.correct_fixing_mode(bp.lambda, &guess, bp.n, s, newton)?;
    sp.arclength = libm::sqrt((sp.lambda - bp.lambda) * (sp.lambda - bp.lambda) + sp.w.cos_coeffs().iter().map(|a| a * a).sum::<f64>());
    Ok(sp)
}

/// Continues the branch from `start` (normally the output of
/// [`switch_branch`]) with the first step along the kernel direction.
pub fn continue_branch(
    ops: &WaveOperators,
    bp: &BifurcationPoint,
    start: SolutionPoint,
    direction: i8,
    settings: &ContinuationSettings,
    reconnection: ReconnectionSettings,
) -> Result<Branch> {
    let system = WaveBranchSystem::new(ops, bp.x_star_stride)?
        .with_origin(bp.n, bp.sign)
        .with_reconnection(reconnection);
    let x0 = system.pack(start.lambda, &start.w);
    let mut tangent = vec![0.0; x0.len()];
    let index = system.index_of(bp.n).ok_or_else(|| {
        Error::InvalidParameters(alloc::format!("mode {} is not in the stride-{} space", bp.n, bp.x_star_stride))
    })?;
    tangent[index] = f64::from(direction.signum());
    let first = TracedPoint {
        validation: system.validate(&x0)?,
        monitor: system.monitor(&x0)?,
        x: x0,
        arclength: start.arclength,
        iterations: start.newton_iters,
        residual: start.residual_norm,
    };
    let curve = trace(&system, first, &tangent, settings);
    let mut points = Vec::with_capacity(curve.points.len());
    for tp in &curve.points {
        points.push(system.solution_point(&tp.x, tp.iterations, tp.arclength)?);
    }
    Ok(Branch {
        origin: bp.clone(),
        direction: direction.signum(),
        x_star_stride: bp.x_star_stride,
        points,
        verdict: curve.verdict,
        reconnection: curve.reconnection,
        rejected_steps: curve.rejected_steps,
    })
}

/// Switch onto the branch at `bp` and continue it.
pub fn trace_branch(
    ops: &WaveOperators,
    bp: &BifurcationPoint,
    s0: f64,
    direction: i8,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    let start = switch_branch(ops, bp, s0, direction, &settings.newton)?;
    continue_branch(ops, bp, start, direction, settings, ReconnectionSettings::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// λ² + a² = 1: a closed loop.
    struct Circle;

    impl BranchSystem for Circle {
        fn unknowns(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0] * x[0] + x[1] * x[1] - 1.0])
        }
        fn monitor(&self, x: &[f64]) -> Result<Monitor> {
            Ok(Monitor { min_wkh: 1.0, norm: x[0].abs() + x[1].abs(), state_sup: x[1].abs() })
        }
    }

    /// a = λ: unbounded.
    struct Line;

    impl BranchSystem for Line {
        fn unknowns(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[1] - x[0]])
        }
        fn monitor(&self, x: &[f64]) -> Result<Monitor> {
            Ok(Monitor { min_wkh: 1.0, norm: x[0].abs() + x[1].abs(), state_sup: x[1].abs() })
        }
    }

    /// a = λ with a proxy "min Wkh" of 1 − a.
    struct Thinning;

    impl BranchSystem for Thinning {
        fn unknowns(&self) -> usize {
            2
        }
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
            if 1.0 - x[1] <= 1e-4 {
                return Err(Error::StagnantConfiguration { min_wkh: 1.0 - x[1] });
            }
            Ok(vec![x[1] - x[0]])
        }
        fn monitor(&self, x: &[f64]) -> Result<Monitor> {
            Ok(Monitor { min_wkh: 1.0 - x[1], norm: x[1].abs(), state_sup: x[1].abs() })
        }
    }

    fn start(system: &dyn BranchSystem, x: Vec<f64>) -> TracedPoint {
        TracedPoint {
            monitor: system.monitor(&x).unwrap(),
            validation: 0.0,
            x,
            arclength: 0.0,
            iterations: 0,
            residual: 0.0,
        }
    }

    #[test]
    fn newton_solves_circle_with_fixed_parameter() {
        let c = LinearConstraint::fix(2, 0, 0.6);
        let sol = newton_correct(&Circle, &[0.5, 0.9], &c, &NewtonSettings::default()).unwrap();
        assert!((sol.x[1] - 0.8).abs() < 1e-12);
        assert!(sol.iterations <= 6);
    }

    #[test]
    fn newton_reports_best_iterate() {
        // no real solution with λ = 2
        let c = LinearConstraint::fix(2, 0, 2.0);
        let err = newton_correct(&Circle, &[2.0, 0.5], &c, &NewtonSettings::default()).unwrap_err();
        match err {
            Error::NoConvergence(f) => {
                assert_eq!(f.iterations, 25);
                assert!(f.residual.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn circle_closes_loop() {
        let settings = ContinuationSettings { max_points: 10_000, ..Default::default() };
        let curve = trace(&Circle, start(&Circle, vec![1.0, 0.0]), &[0.0, 1.0], &settings);
        assert_eq!(curve.verdict, Verdict::LoopClosure);
        let total = curve.points.last().unwrap().arclength;
        assert!((total - 2.0 * core::f64::consts::PI).abs() < 0.2, "{total}");
        for w in curve.points.windows(2) {
            assert!(w[1].arclength > w[0].arclength);
        }
    }

    #[test]
    fn line_blows_up() {
        let settings = ContinuationSettings { max_points: 100_000, ..Default::default() };
        let curve = trace(&Line, start(&Line, vec![0.0, 0.0]), &[1.0, 1.0], &settings);
        assert_eq!(curve.verdict, Verdict::NormBlowup);
        let last = curve.points.last().unwrap();
        assert!(1.0 / (1.0 + last.monitor.norm) < 1e-3);
    }

    #[test]
    fn stagnation_verdict_precedes_domain_fault() {
        let settings = ContinuationSettings::default();
        let curve = trace(&Thinning, start(&Thinning, vec![0.0, 0.0]), &[1.0, 1.0], &settings);
        assert_eq!(curve.verdict, Verdict::StagnationApproach);
        let last = curve.points.last().unwrap();
        assert!(last.monitor.min_wkh < 5e-2 && last.monitor.min_wkh > 1e-4);
    }

    #[test]
    fn step_limit_and_growth() {
        let settings = ContinuationSettings { max_points: 10, ..Default::default() };
        let curve = trace(&Line, start(&Line, vec![0.0, 0.0]), &[1.0, 1.0], &settings);
        assert_eq!(curve.verdict, Verdict::StepLimit);
        assert_eq!(curve.points.len(), 10);
        let steps: Vec<f64> = curve.points.windows(2).map(|w| w[1].arclength - w[0].arclength).collect();
        assert!(steps.last().unwrap() > &steps[0]);
        assert!(steps.iter().all(|&s| s <= 0.1 + 1e-12));
    }

    #[test]
    fn verdict_names_round_trip() {
        for v in [
            Verdict::NormBlowup,
            Verdict::StagnationApproach,
            Verdict::LoopClosure,
            Verdict::TrivialReconnection,
            Verdict::StepLimit,
            Verdict::StepSizeUnderflow,
            Verdict::ResolutionLimit,
        ] {
            assert_eq!(Verdict::from_name(v.name()), Some(v));
        }
    }
}
