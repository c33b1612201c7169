//! Checks that tie the two formulations of the problem together: the
//! quotient identities for `ŵ`, the mean conditions, and agreement between
//! `F = 0` and the divided Bernoulli form on solutions.

use alloc::vec::Vec;

use crate::linear;
use crate::operators::{OperatorOptions, WaveOperators};
use crate::trig::TrigSeries;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    /// Sup-norm bound for the two quotient identities.
    pub identity: f64,
    /// Bound on `|[ŵ]|` and `|[E]|`.
    pub mean: f64,
    /// `F` residual that counts as a solution (times `1 + ‖w‖∞`).
    pub solution: f64,
    /// Divided Bernoulli residual required of a solution.
    pub eqn2a: f64,
    /// Size of the `Q` and `w` perturbations.
    pub perturbation: f64,
    /// Residual both formulations must reach after perturbation.
    pub sensitivity: f64,
    /// `sup |F(λ, 0)|` allowed on the laminar line.
    pub trivial: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            identity: 1e-9,
            mean: 1e-10,
            solution: 1e-12,
            eqn2a: 1e-8,
            perturbation: 1e-3,
            sensitivity: 1e-4,
            trivial: 1e-14,
        }
    }
}

/// Even zero-mean `w` with `aₙ = amplitude·ratioⁿ·uₙ`, `uₙ ∈ [−1, 1]` taken
/// from `uniforms` (values in `[0, 1)`).
pub fn decaying_test_function(amplitude: f64, ratio: f64, uniforms: &[f64]) -> TrigSeries {
    let mut scale = amplitude;
    let cos = uniforms
        .iter()
        .map(|u| {
            scale *= ratio;
            scale * (2.0 * u - 1.0)
        })
        .collect();
    TrigSeries::even(cos)
}

/// Identity errors at one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionCheck {
    pub lambda: f64,
    /// `sup |w'' − w'·𝒞ŵ − (1 + 𝒞w')·ŵ|`.
    pub second_derivative: f64,
    /// `sup |𝒞ŵ − (𝒞w''(1 + 𝒞w') + w'w'')/Wkh|`.
    pub conjugate: f64,
    /// `|[ŵ]|` on the grid.
    pub hat_mean: f64,
    /// `|[E]|` on the grid.
    pub e_mean: f64,
    /// `[(1 + 𝒞w')/Wkh]`, which must be positive.
    pub bed_mean: f64,
}

impl FunctionCheck {
    pub fn passed(&self, tol: &VerifyTolerances) -> bool {
        self.second_derivative <= tol.identity
            && self.conjugate <= tol.identity
            && self.hat_mean <= tol.mean
            && self.e_mean <= tol.mean
            && self.bed_mean > 0.0
    }
}

/// The quotient `ŵ` is not band-limited, so the identities are evaluated on
/// the doubled grid, where its aliasing error is at rounding level.
pub fn check_function(ops: &WaveOperators, lambda: f64, w: &TrigSeries) -> Result<FunctionCheck> {
    let id = ops.doubled()?.identity_errors(w)?;
    let (e, _) = ops.e_grid(lambda, w)?;
    Ok(FunctionCheck {
        lambda,
        second_derivative: id.second_derivative,
        conjugate: id.conjugate,
        hat_mean: id.hat_mean,
        e_mean: e.mean().abs(),
        bed_mean: id.bed_mean,
    })
}

/// Agreement of the two formulations at a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCheck {
    pub function: FunctionCheck,
    /// `sup |F|` on the grid.
    pub second_residual: f64,
    /// `sup |eqn2a|` with `m` and `Q` from `λ`.
    pub eqn2a_residual: f64,
    /// `sup |eqn2a|` with `Q` offset by the perturbation.
    pub eqn2a_q_perturbed: f64,
    /// Mode receiving the `w` perturbation.
    pub probe_mode: usize,
    /// `sup |F|` and `sup |eqn2a|` after perturbing `w`.
    pub second_w_perturbed: f64,
    pub eqn2a_w_perturbed: f64,
    /// Whether `F` met the solution tolerance.
    pub is_solution: bool,
}

impl PointCheck {
    /// A solution must satisfy both forms; perturbations must be seen by both.
    pub fn passed(&self, tol: &VerifyTolerances) -> bool {
        let equivalent = !self.is_solution || self.eqn2a_residual <= tol.eqn2a;
        let sensitive = self.eqn2a_q_perturbed >= tol.sensitivity
            && self.second_w_perturbed >= tol.sensitivity
            && self.eqn2a_w_perturbed >= tol.sensitivity;
        self.function.passed(tol) && equivalent && sensitive
    }
}

/// Runs both formulations at `(λ, w)`; `stride` limits the probe mode to the
/// space the point was computed in.
pub fn check_point(
    ops: &WaveOperators,
    lambda: f64,
    w: &TrigSeries,
    stride: usize,
    tol: &VerifyTolerances,
) -> Result<PointCheck> {
    let function = check_function(ops, lambda, w)?;
    let p = ops.params();
    let m = p.m_from_lambda(lambda);
    let col = ops.collocation();
    let sup_w = col.synthesize(w).sup_norm();
    let second_residual = ops.residual_norm(lambda, w)?;
    let q = ops.q_value(lambda, w)?;
    let eqn2a_residual = ops.residual_eqn2a(m, q, w)?.sup_norm();
    let eqn2a_q_perturbed = ops.residual_eqn2a(m, q + tol.perturbation, w)?.sup_norm();
    // The mode whose linearized response is largest, so the perturbation is
    // visible to F even next to a bifurcation value.
    let probe_mode = (stride..=ops.order())
        .step_by(stride)
        .max_by(|&a, &b| {
            linear::multiplier(p, a, lambda)
                .abs()
                .total_cmp(&linear::multiplier(p, b, lambda).abs())
        })
        .unwrap_or(1);
    let perturbed = w.add_scaled(&TrigSeries::cosine_mode(w.order(), probe_mode, 1.0), tol.perturbation);
    // The kick at a high mode spills past the truncation on purpose.
    let relaxed = WaveOperators::with_options(
        *p,
        ops.discretization(),
        OperatorOptions { tail_bound: f64::INFINITY, ..*ops.options() },
    )?;
    let second_w_perturbed = relaxed.residual_norm(lambda, &perturbed)?;
    let q_p = relaxed.q_value(lambda, &perturbed)?;
    let eqn2a_w_perturbed = relaxed.residual_eqn2a(m, q_p, &perturbed)?.sup_norm();
    Ok(PointCheck {
        function,
        second_residual,
        eqn2a_residual,
        eqn2a_q_perturbed,
        probe_mode,
        second_w_perturbed,
        eqn2a_w_perturbed,
        is_solution: second_residual <= tol.solution * (1.0 + sup_w),
    })
}

/// `max |F(λ, 0)|` over the given `λ` values.
pub fn trivial_branch_residual(ops: &WaveOperators, lambdas: &[f64]) -> Result<f64> {
    let zero = TrigSeries::zero(ops.order());
    let mut worst: f64 = 0.0;
    for &lambda in lambdas {
        worst = worst.max(ops.residual_norm(lambda, &zero)?);
    }
    Ok(worst)
}

/// Outcome of the suite over test functions and solution points.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub functions: Vec<Result<FunctionCheck>>,
    pub points: Vec<Result<PointCheck>>,
    pub trivial: Result<f64>,
    pub tolerances: VerifyTolerances,
}

impl SuiteReport {
    pub fn run(
        ops: &WaveOperators,
        functions: &[(f64, TrigSeries)],
        points: &[(f64, TrigSeries, usize)],
        trivial_lambdas: &[f64],
        tolerances: VerifyTolerances,
    ) -> Self {
        Self {
            functions: functions.iter().map(|(l, w)| check_function(ops, *l, w)).collect(),
            points: points.iter().map(|(l, w, s)| check_point(ops, *l, w, *s, &tolerances)).collect(),
            trivial: trivial_branch_residual(ops, trivial_lambdas),
            tolerances,
        }
    }

    pub fn passed(&self) -> bool {
        let tol = &self.tolerances;
        self.functions.iter().all(|f| matches!(f, Ok(c) if c.passed(tol)))
            && self.points.iter().all(|p| matches!(p, Ok(c) if c.passed(tol)))
            && matches!(self.trivial, Ok(r) if r <= tol.trivial)
    }
}
