//! Nonlinear operators of the conformal reformulation.
//!
//! The unknown is an even, zero-mean profile `w` on `[0, 2π)`; the free surface
//! is `t ↦ ((t + 𝒞ₖₕw(t))/k, w(t)/k)` above a bed at depth `h`. With
//! `λ = m/h − hγ/2` the steady problem reads `D²w = K(λ, w)`, or equivalently
//! `F(λ, w) = w − D⁻²K(λ, w) = 0`, where `Q` is eliminated as the mean
//! condition that makes the right-hand side of `K` zero-mean.
//!
//! Every evaluation samples `w` and its derivatives on the collocation grid,
//! applies the nonlinearity pointwise, and projects back. Intermediate
//! conjugations act on all modes the grid resolves; only the final `K` is
//! truncated to the working order `N`.

use alloc::format;

use crate::trig::{Collocation, ConjugateMultiplier, GridFunction, TrigSeries};
use crate::{Error, Result};

/// Physical constants of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParameters {
    /// Conformal mean depth.
    pub h: f64,
    /// Wavenumber; the physical period is `2π/k`.
    pub k: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Constant vorticity.
    pub gamma: f64,
    /// Surface tension coefficient.
    pub sigma: f64,
}

impl FlowParameters {
    pub fn new(h: f64, k: f64, g: f64, gamma: f64, sigma: f64) -> Result<Self> {
        let p = Self { h, k, g, gamma, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.h, self.k, self.g, self.gamma, self.sigma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(format!("non-finite parameter in {self:?}")));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidParameters(format!("depth h must be positive, got {}", self.h)));
        }
        if !(self.k > 0.0) {
            return Err(Error::InvalidParameters(format!("wavenumber k must be positive, got {}", self.k)));
        }
        if self.sigma == 0.0 {
            return Err(Error::InvalidParameters("surface tension sigma must be nonzero".into()));
        }
        Ok(())
    }

    pub fn kh(&self) -> f64 {
        self.k * self.h
    }

    /// Relative mass flux `m = hλ + h²γ/2`.
    pub fn m_from_lambda(&self, lambda: f64) -> f64 {
        self.h * lambda + 0.5 * self.h * self.h * self.gamma
    }

    /// `λ = m/h − hγ/2`.
    pub fn lambda_from_m(&self, m: f64) -> f64 {
        m / self.h - 0.5 * self.h * self.gamma
    }
}

/// Truncation order `N` and collocation size `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discretization {
    pub order: usize,
    pub grid: usize,
}

impl Discretization {
    /// `M = 4N`.
    pub fn new(order: usize) -> Result<Self> {
        Self::with_grid(order, 4 * order)
    }

    pub fn with_grid(order: usize, grid: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameters("truncation order must be positive".into()));
        }
        if grid < 4 * order {
            return Err(Error::InvalidParameters(format!(
                "grid size {grid} is below the dealiasing margin 4N = {}",
                4 * order
            )));
        }
        Ok(Self { order, grid })
    }

    pub fn doubled(&self) -> Self {
        Self { order: self.order, grid: 2 * self.grid }
    }
}

/// Constant in the bracket used when eliminating `Q`.
///
/// The equation for `w` uses `m/h − γh/2`; one printed form of the mean
/// condition carries `m/h − γh/k` instead. Only the verification suite selects
/// the latter, to show that it is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BracketConvention {
    #[default]
    HalfDepth,
    PerWavenumber,
}

/// Multiplier used for `𝒞ₖₕ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConjugateKind {
    /// `coth(n·kh)`.
    #[default]
    Strip,
    /// `tanh(n·kh)`; wrong on purpose, used by mutation checks.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOptions {
    /// Evaluation is refused when `minₜ Wkh` falls below this value.
    pub stagnation_floor: f64,
    /// Bound on `max_{n>N} |Kₙ|/n²`, the part of `f = −D⁻²K` dropped by the
    /// truncation.
    pub tail_bound: f64,
    pub bracket: BracketConvention,
    pub conjugate: ConjugateKind,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            stagnation_floor: 1e-4,
            tail_bound: 1e-6,
            bracket: BracketConvention::HalfDepth,
            conjugate: ConjugateKind::Strip,
        }
    }
}

/// Grid samples of `w` and the derivative quantities every operator shares.
#[derive(Debug, Clone)]
pub struct SurfaceGrids {
    pub w: GridFunction,
    /// `w'`
    pub dw: GridFunction,
    /// `w''`
    pub d2w: GridFunction,
    /// `𝒞ₖₕw'`
    pub cdw: GridFunction,
    /// `𝒞ₖₕw''`
    pub cd2w: GridFunction,
    /// `w'² + (1 + 𝒞ₖₕw')²`
    pub wkh: GridFunction,
    /// `[w²]`
    pub mean_square: f64,
}

/// Everything produced by one evaluation of `K(λ, w)`.
#[derive(Debug, Clone)]
pub struct KEvaluation {
    /// Even, zero-mean projection of `K` at order `N`.
    pub series: TrigSeries,
    /// `K` sampled on the grid before projection.
    pub grid: GridFunction,
    /// Largest coefficient magnitude of `K` in orders `N+1..=M/2`.
    pub alias_tail: f64,
    /// `max_{n>N} |Kₙ|/n²`.
    pub f_tail: f64,
    /// Grid mean of `K`, dropped by the projection.
    pub k_mean: f64,
    /// Grid mean of `E = bracket²·Wkh^{−1/2} − (Q − 2gw/k)·Wkh^{1/2}`.
    pub e_mean: f64,
    pub q: f64,
    pub min_wkh: f64,
}

/// `ŵ = ((1 + 𝒞ₖₕw')w'' − w'𝒞ₖₕw'')/Wkh` and its diagnostics.
#[derive(Debug, Clone)]
pub struct HatW {
    /// Projection of the grid values at the full grid order, mean removed.
    pub series: TrigSeries,
    pub grid: GridFunction,
    /// Grid mean before it was removed; vanishes for the exact conjugate.
    pub grid_mean: f64,
}

/// Sup-norm errors of the holomorphic-quotient identities at one `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityErrors {
    /// `|[ŵ]|`
    pub hat_mean: f64,
    /// `‖w'' − w'𝒞ₖₕŵ − (1 + 𝒞ₖₕw')ŵ‖∞`
    pub second_derivative: f64,
    /// `‖𝒞ₖₕŵ − (𝒞ₖₕw''(1 + 𝒞ₖₕw') + w'w'')/Wkh‖∞`
    pub conjugate: f64,
    /// `[(1 + 𝒞ₖₕw')/Wkh]`, positive on the admissible set.
    pub bed_mean: f64,
}

/// The problem-specific operators at fixed parameters and discretization.
#[derive(Debug, Clone)]
pub struct WaveOperators {
    params: FlowParameters,
    disc: Discretization,
    options: OperatorOptions,
    collocation: Collocation,
    conjugate: ConjugateMultiplier,
}

impl WaveOperators {
    pub fn new(params: FlowParameters, disc: Discretization) -> Result<Self> {
        Self::with_options(params, disc, OperatorOptions::default())
    }

    pub fn with_options(
        params: FlowParameters,
        disc: Discretization,
        options: OperatorOptions,
    ) -> Result<Self> {
        params.validate()?;
        let collocation = Collocation::new(disc.grid);
        let full = collocation.max_order();
        let conjugate = match options.conjugate {
            ConjugateKind::Strip => ConjugateMultiplier::strip(params.kh(), full)?,
            ConjugateKind::Neumann => ConjugateMultiplier::neumann(params.kh(), full)?,
        };
        Ok(Self { params, disc, options, collocation, conjugate })
    }

    /// Same operators on a grid of `2M` nodes.
    pub fn doubled(&self) -> Result<Self> {
        Self::with_options(self.params, self.disc.doubled(), self.options)
    }

    pub fn params(&self) -> &FlowParameters {
        &self.params
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn options(&self) -> &OperatorOptions {
        &self.options
    }

    pub fn order(&self) -> usize {
        self.disc.order
    }

    pub fn collocation(&self) -> &Collocation {
        &self.collocation
    }

    pub fn conjugate(&self) -> &ConjugateMultiplier {
        &self.conjugate
    }

    /// Highest order the grid resolves.
    pub fn full_order(&self) -> usize {
        self.collocation.max_order()
    }

    /// `𝒞ₖₕ` with this operator set's multiplier.
    pub fn conj(&self, w: &TrigSeries) -> Result<TrigSeries> {
        self.conjugate.apply(w)
    }

    /// Projects a grid function at the full grid order, removes its mean,
    /// applies `𝒞ₖₕ` and samples the result.
    fn conj_grid(&self, g: &GridFunction) -> (GridFunction, f64) {
        let mut s = self.collocation.project(g, self.full_order()).series;
        let mean = s.mean();
        s.set_mean(0.0);
        let c = self.conjugate.apply(&s).expect("mean removed above");
        (self.collocation.synthesize(&c), mean)
    }

    pub fn surface(&self, w: &TrigSeries) -> Result<SurfaceGrids> {
        w.require_zero_mean()?;
        assert!(
            w.order() <= self.full_order(),
            "series of order {} exceeds the grid resolution {}",
            w.order(),
            self.full_order()
        );
        let dw_s = w.differentiate();
        let d2w_s = dw_s.differentiate();
        let col = &self.collocation;
        let cdw = col.synthesize(&self.conj(&dw_s)?);
        let cd2w = col.synthesize(&self.conj(&d2w_s)?);
        let dw = col.synthesize(&dw_s);
        let wkh = dw.zip_map(&cdw, |d, c| d * d + (1.0 + c) * (1.0 + c));
        Ok(SurfaceGrids {
            w: col.synthesize(w),
            dw,
            d2w: col.synthesize(&d2w_s),
            cdw,
            cd2w,
            wkh,
            mean_square: w.mean_of_square(),
        })
    }

    /// `Wkh(w) = w'² + (1 + 𝒞ₖₕw')²` on the grid.
    pub fn wkh(&self, w: &TrigSeries) -> Result<GridFunction> {
        Ok(self.surface(w)?.wkh)
    }

    fn bracket_from(&self, lambda: f64, s: &SurfaceGrids) -> GridFunction {
        let p = &self.params;
        // w w' = (w²/2)' has zero mean; its grid mean is rounding noise.
        let wdw = s.w.zip_map(&s.dw, |a, b| a * b);
        let (c_wdw, _) = self.conj_grid(&wdw);
        let constant = s.mean_square / (2.0 * p.kh());
        let scale = p.gamma / p.k;
        let vals = (0..s.w.len())
            .map(|j| {
                let w = s.w.values()[j];
                lambda
                    + scale * (constant + c_wdw.values()[j] - w - w * s.cdw.values()[j])
            })
            .collect();
        GridFunction::new(vals)
    }

    /// `λ + (γ/k)([w²]/2kh + 𝒞ₖₕ(ww') − w − w𝒞ₖₕw')` on the grid.
    pub fn bracket(&self, lambda: f64, w: &TrigSeries) -> Result<GridFunction> {
        let s = self.surface(w)?;
        Ok(self.bracket_from(lambda, &s))
    }

    fn check_floor(&self, wkh: &GridFunction) -> Result<f64> {
        let min = wkh.min();
        if !(min > self.options.stagnation_floor) {
            return Err(Error::StagnantConfiguration { min_wkh: min });
        }
        Ok(min)
    }

    /// `Q` from the mean condition: `[Wkh^{1/2}]⁻¹·[bracket²·Wkh^{−1/2} + (2gw/k)·Wkh^{1/2}]`.
    fn q_from(&self, s: &SurfaceGrids, bracket: &GridFunction, sqrt_w: &GridFunction) -> f64 {
        let p = &self.params;
        let shift = match self.options.bracket {
            BracketConvention::HalfDepth => 0.0,
            BracketConvention::PerWavenumber => 0.5 * p.gamma * p.h - p.gamma * p.h / p.k,
        };
        let m = s.w.len() as f64;
        let (mut kinetic, mut potential, mut norm) = (0.0, 0.0, 0.0);
        for j in 0..s.w.len() {
            let r = sqrt_w.values()[j];
            let b = bracket.values()[j] + shift;
            kinetic += b * b / r;
            potential += 2.0 * p.g * s.w.values()[j] / p.k * r;
            norm += r;
        }
        (kinetic / m + potential / m) / (norm / m)
    }

    /// Hydraulic head `Q(λ, w)`.
    pub fn q_value(&self, lambda: f64, w: &TrigSeries) -> Result<f64> {
        let s = self.surface(w)?;
        self.check_floor(&s.wkh)?;
        let bracket = self.bracket_from(lambda, &s);
        let sqrt_w = s.wkh.map(libm::sqrt);
        Ok(self.q_from(&s, &bracket, &sqrt_w))
    }

    /// `E = bracket²·Wkh^{−1/2} − (Q − 2gw/k)·Wkh^{1/2}` on the grid, with `Q`.
    fn e_from(&self, lambda: f64, s: &SurfaceGrids) -> Result<(GridFunction, f64)> {
        self.check_floor(&s.wkh)?;
        let p = &self.params;
        let bracket = self.bracket_from(lambda, s);
        let sqrt_w = s.wkh.map(libm::sqrt);
        let q = self.q_from(s, &bracket, &sqrt_w);
        let vals = (0..s.w.len())
            .map(|j| {
                let r = sqrt_w.values()[j];
                let b = bracket.values()[j];
                b * b / r - (q - 2.0 * p.g * s.w.values()[j] / p.k) * r
            })
            .collect();
        Ok((GridFunction::new(vals), q))
    }

    /// `E` on the grid together with `Q`.
    pub fn e_grid(&self, lambda: f64, w: &TrigSeries) -> Result<(GridFunction, f64)> {
        let s = self.surface(w)?;
        self.e_from(lambda, &s)
    }

    /// `K(λ, w)`, the right-hand side of `D²w = K`.
    pub fn k_eval(&self, lambda: f64, w: &TrigSeries) -> Result<KEvaluation> {
        let s = self.surface(w)?;
        self.k_from(lambda, &s)
    }

    fn k_from(&self, lambda: f64, s: &SurfaceGrids) -> Result<KEvaluation> {
        let p = &self.params;
        let (e, q) = self.e_from(lambda, s)?;
        let (ce, e_mean) = self.conj_grid(&e);
        let inv = 1.0 / (2.0 * p.sigma * p.k);
        let vals = (0..e.len())
            .map(|j| {
                inv * (s.dw.values()[j] * ce.values()[j]
                    + (1.0 + s.cdw.values()[j]) * e.values()[j])
            })
            .collect();
        let grid = GridFunction::new(vals);
        let full = self.collocation.project(&grid, self.full_order());
        let order = self.order();
        let mut alias_tail = full.alias_tail;
        let mut f_tail: f64 = 0.0;
        for n in order + 1..=self.full_order() {
            let (a, b) = (full.series.a(n), full.series.b(n));
            alias_tail = alias_tail.max(libm::hypot(a, b));
            f_tail = f_tail.max(libm::hypot(a, b) / (n * n) as f64);
        }
        let k_mean = full.series.mean();
        let series = TrigSeries::even(full.series.cos_coeffs()[..order].to_vec());
        let eval = KEvaluation {
            series,
            grid,
            alias_tail,
            f_tail,
            k_mean,
            e_mean,
            q,
            min_wkh: s.wkh.min(),
        };
        if f_tail > self.options.tail_bound {
            return Err(Error::AliasOverflow { tail: f_tail, bound: self.options.tail_bound });
        }
        Ok(eval)
    }

    /// `F(λ, w) = w − D⁻²K(λ, w)`: modewise `aₙ + Kₙ/n²`.
    pub fn residual_f(&self, lambda: f64, w: &TrigSeries) -> Result<TrigSeries> {
        Ok(self.residual_f_full(lambda, w)?.0)
    }

    /// `F` together with the `K` evaluation it came from.
    pub fn residual_f_full(&self, lambda: f64, w: &TrigSeries) -> Result<(TrigSeries, KEvaluation)> {
        let k = self.k_eval(lambda, w)?;
        let order = self.order();
        let cos = (1..=order)
            .map(|n| w.a(n) + k.series.a(n) / (n * n) as f64)
            .collect();
        Ok((TrigSeries::even(cos), k))
    }

    /// `f = −D⁻²K`.
    pub fn f_eval(&self, lambda: f64, w: &TrigSeries) -> Result<TrigSeries> {
        let k = self.k_eval(lambda, w)?;
        k.series.scaled(-1.0).antidifferentiate(crate::trig::AntiderivativeOrder::Second)
    }

    /// Sup-norm of `F` sampled on the grid.
    pub fn residual_norm(&self, lambda: f64, w: &TrigSeries) -> Result<f64> {
        let f = self.residual_f(lambda, w)?;
        Ok(self.collocation.synthesize(&f).sup_norm())
    }

    /// `ŵ` on the grid and its projection at the full grid order.
    pub fn hat_w(&self, w: &TrigSeries) -> Result<HatW> {
        let s = self.surface(w)?;
        self.hat_from(&s)
    }

    fn hat_from(&self, s: &SurfaceGrids) -> Result<HatW> {
        self.check_floor(&s.wkh)?;
        let vals = (0..s.w.len())
            .map(|j| {
                let (dw, d2w) = (s.dw.values()[j], s.d2w.values()[j]);
                let (cdw, cd2w) = (s.cdw.values()[j], s.cd2w.values()[j]);
                ((1.0 + cdw) * d2w - dw * cd2w) / s.wkh.values()[j]
            })
            .collect();
        let grid = GridFunction::new(vals);
        let mut series = self.collocation.project(&grid, self.full_order()).series;
        let grid_mean = series.mean();
        series.set_mean(0.0);
        Ok(HatW { series, grid, grid_mean })
    }

    /// Pointwise difference of the two sides of the divided Bernoulli form
    /// `bracket²·Wkh^{−1/2} = (Q − 2gw/k)·Wkh^{1/2} + 2σk·ŵ`, with the
    /// bracket constant `m/h − γh/2`.
    pub fn residual_eqn2a(&self, m: f64, q: f64, w: &TrigSeries) -> Result<GridFunction> {
        let s = self.surface(w)?;
        let hat = self.hat_from(&s)?;
        let p = &self.params;
        let lambda = p.lambda_from_m(m);
        let bracket = self.bracket_from(lambda, &s);
        let vals = (0..s.w.len())
            .map(|j| {
                let r = libm::sqrt(s.wkh.values()[j]);
                let b = bracket.values()[j];
                b * b / r
                    - (q - 2.0 * p.g * s.w.values()[j] / p.k) * r
                    - 2.0 * p.sigma * p.k * hat.grid.values()[j]
            })
            .collect();
        Ok(GridFunction::new(vals))
    }

    /// Checks the quotient identities for `ŵ` at one `w`.
    pub fn identity_errors(&self, w: &TrigSeries) -> Result<IdentityErrors> {
        let s = self.surface(w)?;
        let hat = self.hat_from(&s)?;
        let c_hat = self.collocation.synthesize(&self.conj(&hat.series)?);
        let mut second_derivative: f64 = 0.0;
        let mut conjugate: f64 = 0.0;
        let mut bed = 0.0;
        for j in 0..s.w.len() {
            let (dw, d2w) = (s.dw.values()[j], s.d2w.values()[j]);
            let (cdw, cd2w) = (s.cdw.values()[j], s.cd2w.values()[j]);
            let wk = s.wkh.values()[j];
            let h = hat.grid.values()[j];
            let ch = c_hat.values()[j];
            second_derivative = second_derivative.max((d2w - dw * ch - (1.0 + cdw) * h).abs());
            conjugate = conjugate.max((ch - (cd2w * (1.0 + cdw) + dw * d2w) / wk).abs());
            bed += (1.0 + cdw) / wk;
        }
        Ok(IdentityErrors {
            hat_mean: hat.grid_mean.abs(),
            second_derivative,
            conjugate,
            bed_mean: bed / s.w.len() as f64,
        })
    }
}
