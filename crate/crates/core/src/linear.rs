//! Linearization at the laminar flows `(λ, 0)`.
//!
//! `∂_wF[λ, 0]` is diagonal in the cosine basis with entries
//!
//! ```text
//! Λₙ(λ) = 1 + (g − γλ)/(k²n²σ) − λ²·coth(nkh)/(knσ),
//! ```
//!
//! so the laminar flow at `λ` can only lose uniqueness where some `Λₙ`
//! vanishes, at the bifurcation values `λ±(n)`.

use alloc::vec::Vec;

use crate::operators::{FlowParameters, WaveOperators};
use crate::trig::{coth, TrigSeries};
use crate::{Error, Result};

/// Which root of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

/// Eigenvalue `Λₙ(λ)` of `∂_wF[λ, 0]` on `cos nt`.
pub fn multiplier(p: &FlowParameters, n: usize, lambda: f64) -> f64 {
    let nf = n as f64;
    1.0 + (p.g - p.gamma * lambda) / (p.k * p.k * nf * nf * p.sigma)
        - lambda * lambda * coth(nf * p.kh()) / (p.k * nf * p.sigma)
}

/// `−γ·tanh(nkh)/(2kn)`, the double root of the dispersion relation when its
/// discriminant vanishes.
pub fn double_root_location(p: &FlowParameters, n: usize) -> f64 {
    let nf = n as f64;
    -p.gamma * libm::tanh(nf * p.kh()) / (2.0 * p.k * nf)
}

/// Roots `(λ₋(n), λ₊(n))` of `k²n²σ + g − γλ − λ²·kn·coth(nkh) = 0`.
///
/// Written as `λ² + 2pλ − q = 0` with `p = γ·tanh(nkh)/(2kn)` and
/// `q = (k²n²σ + g)·tanh(nkh)/(kn)`; the root of larger magnitude is taken
/// from the closed form and the other from `λ₋λ₊ = −q`.
pub fn bifurcation_lambdas(p: &FlowParameters, n: usize) -> Result<(f64, f64)> {
    assert!(n >= 1, "mode index starts at 1");
    let nf = n as f64;
    let t = libm::tanh(nf * p.kh());
    let kn = p.k * nf;
    let forcing = p.k * p.k * nf * nf * p.sigma + p.g;
    if !(t > 0.0) || !kn.is_finite() {
        let linear_root = (p.gamma != 0.0).then(|| forcing / p.gamma);
        return Err(Error::DegenerateQuadratic { n, linear_root });
    }
    let half_b = p.gamma * t / (2.0 * kn);
    let q = forcing * t / kn;
    let mut disc = half_b * half_b + q;
    // A double root can come out slightly negative after rounding.
    let scale = half_b * half_b + (p.k * p.k * nf * nf * p.sigma.abs() + p.g.abs()) * t / kn;
    if disc < 0.0 && -disc <= 16.0 * f64::EPSILON * scale {
        disc = 0.0;
    }
    if disc < 0.0 {
        return Err(Error::ComplexRoots { n });
    }
    let root = libm::sqrt(disc);
    let (minus, plus) = if half_b >= 0.0 {
        let minus = -half_b - root;
        let plus = if minus != 0.0 { -q / minus } else { 0.0 };
        (minus, plus)
    } else {
        let plus = -half_b + root;
        let minus = if plus != 0.0 { -q / plus } else { 0.0 };
        (minus, plus)
    };
    Ok((minus, plus))
}

pub fn bifurcation_lambda(p: &FlowParameters, n: usize, sign: Sign) -> Result<f64> {
    let (minus, plus) = bifurcation_lambdas(p, n)?;
    Ok(match sign {
        Sign::Minus => minus,
        Sign::Plus => plus,
    })
}

/// Critical mass fluxes `(m₋(n), m₊(n)) = h·λ± + h²γ/2`.
pub fn bifurcation_ms(p: &FlowParameters, n: usize) -> Result<(f64, f64)> {
    let (minus, plus) = bifurcation_lambdas(p, n)?;
    Ok((p.m_from_lambda(minus), p.m_from_lambda(plus)))
}

/// The same critical mass fluxes evaluated term by term from the closed form
/// `h²γ/2 − hγ·tanh(nkh)/(2kn) ± h·√(γ²tanh²(nkh)/(4k²n²) + (k²n²σ + g)·tanh(nkh)/(kn))`.
pub fn bifurcation_ms_closed_form(p: &FlowParameters, n: usize) -> Result<(f64, f64)> {
    let nf = n as f64;
    let t = libm::tanh(nf * p.kh());
    let kn = p.k * nf;
    let radicand =
        p.gamma * p.gamma * t * t / (4.0 * kn * kn) + (p.k * p.k * nf * nf * p.sigma + p.g) / kn * t;
    if radicand < 0.0 {
        return Err(Error::ComplexRoots { n });
    }
    let centre = p.h * p.h * p.gamma / 2.0 - p.h * p.gamma * t / (2.0 * kn);
    let spread = p.h * libm::sqrt(radicand);
    Ok((centre - spread, centre + spread))
}

/// `σ/(gh²) > γ²h/(6g) + 1/3 + (|γ|/(6g))·√(γ²h² + 4gh)`, sufficient for a
/// one-dimensional kernel at every bifurcation value.
pub fn simple_kernel_condition(p: &FlowParameters) -> bool {
    let (g, h, gamma) = (p.g, p.h, p.gamma);
    let lhs = p.sigma / (g * h * h);
    let rhs = gamma * gamma * h / (6.0 * g)
        + 1.0 / 3.0
        + gamma.abs() / (6.0 * g) * libm::sqrt(gamma * gamma * h * h + 4.0 * g * h);
    lhs > rhs
}

/// Whether `λ` is away from the double root `−γ·tanh(nkh)/(2kn)`.
pub fn is_transversal(p: &FlowParameters, n: usize, lambda: f64) -> bool {
    let d = double_root_location(p, n);
    let scale = lambda.abs().max(d.abs());
    (lambda - d).abs() > 1e-12 * scale
}

/// Modes whose multiplier vanishes at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub lambda: f64,
    /// Singular modes in increasing order; one or two entries.
    pub modes: Vec<usize>,
    /// Admissible coefficient strides for the restricted space. A simple
    /// kernel gives `[1]`; a double kernel gives `[max(n₁, n₂)]`, plus
    /// `min(n₁, n₂)` when the larger index is not a multiple of the smaller.
    pub strides: Vec<usize>,
}

impl KernelReport {
    pub fn dim(&self) -> usize {
        self.modes.len()
    }
}

/// Finds every `n ≤ n_max` with `|Λₙ(λ)| ≤ 1e−10·(1 + |λ|)`.
pub fn kernel_analysis(p: &FlowParameters, lambda: f64, n_max: usize) -> Result<KernelReport> {
    let tol = 1e-10 * (1.0 + lambda.abs());
    let modes: Vec<usize> = (1..=n_max)
        .filter(|&n| multiplier(p, n, lambda).abs() <= tol)
        .collect();
    let strides = match modes.as_slice() {
        [] => return Err(Error::NotABifurcationValue { lambda, n_max }),
        [_] => alloc::vec![1],
        [n1, n2] => {
            let (lo, hi) = (*n1.min(n2), *n1.max(n2));
            if hi % lo == 0 {
                alloc::vec![hi]
            } else {
                alloc::vec![hi, lo]
            }
        }
        _ => return Err(Error::KernelOverflow { modes }),
    };
    Ok(KernelReport { lambda, modes, strides })
}

/// A bifurcation value `λ±(n)` with its kernel and transversality data.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub n: usize,
    pub sign: Sign,
    pub lambda: f64,
    pub m: f64,
    pub kernel_dim: usize,
    /// The other singular mode when the kernel is two-dimensional.
    pub partner: Option<usize>,
    pub transversal: bool,
    /// Coefficient stride of the space continuation works in.
    pub x_star_stride: usize,
    /// Second admissible stride when the two singular modes are not
    /// commensurate.
    pub alt_stride: Option<usize>,
    /// `n > N/4`: too few harmonics of `n` below the truncation to follow
    /// the branch.
    pub under_resolved: bool,
}

impl BifurcationPoint {
    /// Analyses `λ±(n)`; `order` is the truncation `N` used downstream and
    /// kernel coincidences are searched among `n ≤ n_max`.
    pub fn new(p: &FlowParameters, n: usize, sign: Sign, n_max: usize, order: usize) -> Result<Self> {
        let lambda = bifurcation_lambda(p, n, sign)?;
        let kernel = kernel_analysis(p, lambda, n_max.max(n))?;
        let partner = kernel.modes.iter().copied().find(|&j| j != n);
        let x_star_stride = match partner {
            None => 1,
            // The mode we branch along must lie in the restricted space.
            Some(_) => kernel.strides.iter().copied().find(|s| n.is_multiple_of(*s)).unwrap_or(kernel.strides[0]),
        };
        let alt_stride = kernel.strides.iter().copied().find(|&s| s != x_star_stride);
        Ok(Self {
            n,
            sign,
            lambda,
            m: p.m_from_lambda(lambda),
            kernel_dim: kernel.dim(),
            partner,
            transversal: is_transversal(p, n, lambda),
            x_star_stride,
            alt_stride,
            under_resolved: 4 * n > order,
        })
    }

    /// Whether `n` is a multiple of the stride, i.e. `cos nt` spans the kernel
    /// inside the restricted space.
    pub fn kernel_in_x_star(&self) -> bool {
        self.n.is_multiple_of(self.x_star_stride)
    }
}

/// Both bifurcation points of every mode `1..=n_max`.
pub fn enumerate(p: &FlowParameters, n_max: usize, order: usize) -> Result<Vec<BifurcationPoint>> {
    let mut out = Vec::with_capacity(2 * n_max);
    for n in 1..=n_max {
        for sign in [Sign::Minus, Sign::Plus] {
            out.push(BifurcationPoint::new(p, n, sign, n_max, order)?);
        }
    }
    Ok(out)
}

/// Signs of `Λₙ` just below and just above a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub below: i8,
    pub above: i8,
}

/// Evaluates `sign Λₙ(λ* ∓ δ)` with `δ = 1e−6·(1 + |λ*|)`.
pub fn crossing_sign(p: &FlowParameters, n: usize, lambda: f64) -> Result<Crossing> {
    let delta = 1e-6 * (1.0 + lambda.abs());
    let sign = |v: f64| -> i8 {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let below = sign(multiplier(p, n, lambda - delta));
    let above = sign(multiplier(p, n, lambda + delta));
    if below == above || below == 0 || above == 0 {
        return Err(Error::NoSignChange { n, lambda });
    }
    Ok(Crossing { below, above })
}

/// Finite-difference Jacobian of `F` at `(λ, 0)` compared with `diag Λₙ(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianDiagnostic {
    pub lambda: f64,
    /// `J[i][j] = ∂Fᵢ/∂aⱼ` for `i, j = 1..=N`, row-major.
    pub matrix: Vec<f64>,
    pub order: usize,
    pub max_diagonal_error: f64,
    pub max_off_diagonal: f64,
}

impl JacobianDiagnostic {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i - 1) * self.order + (j - 1)]
    }
}

/// Central differences with step `1e−6` in each cosine direction.
pub fn jacobian_check(ops: &WaveOperators, lambda: f64) -> Result<JacobianDiagnostic> {
    const STEP: f64 = 1e-6;
    let order = ops.order();
    let p = ops.params();
    let mut matrix = alloc::vec![0.0; order * order];
    for j in 1..=order {
        let plus = ops.residual_f(lambda, &TrigSeries::cosine_mode(order, j, STEP))?;
        let minus = ops.residual_f(lambda, &TrigSeries::cosine_mode(order, j, -STEP))?;
        for i in 1..=order {
            matrix[(i - 1) * order + (j - 1)] = (plus.a(i) - minus.a(i)) / (2.0 * STEP);
        }
    }
    let mut max_diagonal_error: f64 = 0.0;
    let mut max_off_diagonal: f64 = 0.0;
    for i in 1..=order {
        for j in 1..=order {
            let v = matrix[(i - 1) * order + (j - 1)];
            if i == j {
                max_diagonal_error = max_diagonal_error.max((v - multiplier(p, i, lambda)).abs());
            } else {
                max_off_diagonal = max_off_diagonal.max(v.abs());
            }
        }
    }
    Ok(JacobianDiagnostic { lambda, matrix, order, max_diagonal_error, max_off_diagonal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64, sigma: f64, h: f64) -> FlowParameters {
        FlowParameters::new(h, 1.0, 9.81, gamma, sigma).unwrap()
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn multiplier_at_zero_lambda() {
        let p = params(0.5, 0.074, 1.0);
        for n in 1..=8 {
            let expected = 1.0 + p.g / (p.k * p.k * (n * n) as f64 * p.sigma);
            assert!((multiplier(&p, n, 0.0) - expected).abs() < 1e-13 * expected);
        }
    }

    #[test]
    fn multiplier_vanishes_at_roots() {
        let p = params(0.5, 0.074, 1.0);
        for n in 1..=20 {
            let (lm, lp) = bifurcation_lambdas(&p, n).unwrap();
            assert!(multiplier(&p, n, lm).abs() <= 1e-12, "n={n} minus");
            assert!(multiplier(&p, n, lp).abs() <= 1e-12, "n={n} plus");
            assert!(lm < 0.0 && 0.0 < lp);
        }
    }

    #[test]
    fn gamma_zero_roots_are_symmetric() {
        let p = params(0.0, 0.074, 1.0);
        for n in 1..=10 {
            let nf = n as f64;
            let expected = libm::sqrt((p.k * p.k * nf * nf * p.sigma + p.g) / (p.k * nf) * libm::tanh(nf * p.kh()));
            let (lm, lp) = bifurcation_lambdas(&p, n).unwrap();
            assert!((lp - expected).abs() < 1e-14 * expected);
            assert!((lm + lp).abs() <= 4.0 * f64::EPSILON * lp);
        }
    }

    #[test]
    fn regression_root_against_bisection() {
        // g = 9.81, σ = 0.074, k = h = 1, γ = 0.5, n = 1, bisection on [−10, 10].
        let p = params(0.5, 0.074, 1.0);
        let (lm, lp) = bifurcation_lambdas(&p, 1).unwrap();
        let f = |l: f64| multiplier(&p, 1, l);
        let bp = bisect(0.0, 10.0, f);
        let bm = bisect(-10.0, 0.0, f);
        assert!((lp - bp).abs() < 1e-10);
        assert!((lm - bm).abs() < 1e-10);
        // frozen from the bisection oracle
        assert!((lp - 2.559_846_584_834_734).abs() < 1e-10, "{lp}");
        assert!((lm + 2.940_643_662_812_617).abs() < 1e-10, "{lm}");
    }

    #[test]
    fn mass_flux_forms_agree() {
        let p = params(-1.0, 0.2, 2.0);
        for n in 1..=10 {
            let (m1, m2) = bifurcation_ms(&p, n).unwrap();
            let (c1, c2) = bifurcation_ms_closed_form(&p, n).unwrap();
            assert!((m1 - c1).abs() <= 1e-12 * c1.abs());
            assert!((m2 - c2).abs() <= 1e-12 * c2.abs());
        }
        let p0 = params(0.0, 0.074, 1.0);
        let (l1, l2) = bifurcation_lambdas(&p0, 3).unwrap();
        assert_eq!(bifurcation_ms(&p0, 3).unwrap(), (l1, l2));
    }

    #[test]
    fn crossing_pattern_for_downward_quadratic() {
        // σ > 0: Λₙ opens downward and is positive between its roots.
        let p = params(0.0, 0.074, 1.0);
        for n in 1..=5 {
            let (lm, lp) = bifurcation_lambdas(&p, n).unwrap();
            assert_eq!(crossing_sign(&p, n, lp).unwrap(), Crossing { below: 1, above: -1 });
            assert_eq!(crossing_sign(&p, n, lm).unwrap(), Crossing { below: -1, above: 1 });
        }
    }

    #[test]
    fn double_root_has_no_sign_change() {
        // Zero discriminant needs σ < 0: σ = −(g + γ²·tanh(nkh)/(4kn))/(k²n²).
        let (g, gamma, h, k, n) = (9.81, 1.0, 1.0, 1.0, 2usize);
        let nf = n as f64;
        let t = libm::tanh(nf * k * h);
        let sigma = -(g + gamma * gamma * t / (4.0 * k * nf)) / (k * k * nf * nf);
        let p = FlowParameters::new(h, k, g, gamma, sigma).unwrap();
        let (lm, lp) = bifurcation_lambdas(&p, n).unwrap();
        assert!((lm - lp).abs() < 1e-7);
        let lambda = double_root_location(&p, n);
        assert!(!is_transversal(&p, n, lambda));
        assert!(matches!(crossing_sign(&p, n, lambda), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn complex_roots_reported() {
        let p = FlowParameters::new(1.0, 1.0, -50.0, 0.0, 0.074).unwrap();
        assert_eq!(bifurcation_lambdas(&p, 1), Err(Error::ComplexRoots { n: 1 }));
    }

    #[test]
    fn not_a_root_is_rejected() {
        let p = params(0.5, 0.074, 1.0);
        assert!(matches!(
            kernel_analysis(&p, 0.123, 10),
            Err(Error::NotABifurcationValue { .. })
        ));
    }

    #[test]
    fn generic_root_has_simple_kernel() {
        let p = params(0.0, 0.074, 1.0);
        let lp = bifurcation_lambdas(&p, 1).unwrap().1;
        let report = kernel_analysis(&p, lp, 16).unwrap();
        assert_eq!(report.modes, alloc::vec![1]);
        assert_eq!(report.strides, alloc::vec![1]);
        let bp = BifurcationPoint::new(&p, 1, Sign::Plus, 16, 64).unwrap();
        assert_eq!((bp.kernel_dim, bp.x_star_stride, bp.partner), (1, 1, None));
        assert!(bp.transversal && !bp.under_resolved);
        assert!(BifurcationPoint::new(&p, 17, Sign::Plus, 16, 64).unwrap().under_resolved);
    }

    #[test]
    fn remark_condition_examples() {
        // large surface tension relative to g·h² satisfies the sufficient condition
        assert!(simple_kernel_condition(&params(0.0, 9.81 * 0.34, 1.0)));
        assert!(!simple_kernel_condition(&params(0.0, 0.074, 1.0)));
    }
}
