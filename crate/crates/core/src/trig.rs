//! Truncated 2π-periodic trigonometric series and their collocation grids.
//!
//! A [`TrigSeries`] stores `mean + Σ aₙ cos nt + Σ bₙ sin nt` for `n = 1..=N`.
//! Linear operators (differentiation, its inverse on zero-mean functions, and
//! the periodic Hilbert transform for a strip) act modewise on the stored
//! coefficients. Nonlinear maps are applied pointwise on an equispaced grid of
//! `M` nodes `tⱼ = 2πj/M` through [`Collocation`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::fft::Fft;
use crate::{Error, Result};

/// Truncated real trigonometric polynomial with period 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

/// Order of the inverse of [`TrigSeries::differentiate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntiderivativeOrder {
    First,
    Second,
}

impl TrigSeries {
    /// Builds a series from its coefficient arrays. `cos[i]` and `sin[i]`
    /// multiply `cos((i+1)t)` and `sin((i+1)t)`.
    ///
    /// Panics if the two arrays have different lengths.
    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        assert_eq!(cos.len(), sin.len(), "cosine and sine arrays must share the truncation order");
        Self { mean, cos, sin }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(0.0, vec![0.0; order], vec![0.0; order])
    }

    /// Even, zero-mean series `Σ aₙ cos nt`.
    pub fn even(cos: Vec<f64>) -> Self {
        let order = cos.len();
        Self::new(0.0, cos, vec![0.0; order])
    }

    /// `amplitude · cos(mode·t)` truncated at `order`.
    pub fn cosine_mode(order: usize, mode: usize, amplitude: f64) -> Self {
        assert!(mode >= 1 && mode <= order, "mode {mode} outside 1..={order}");
        let mut s = Self::zero(order);
        s.cos[mode - 1] = amplitude;
        s
    }

    /// `amplitude · sin(mode·t)` truncated at `order`.
    pub fn sine_mode(order: usize, mode: usize, amplitude: f64) -> Self {
        assert!(mode >= 1 && mode <= order, "mode {mode} outside 1..={order}");
        let mut s = Self::zero(order);
        s.sin[mode - 1] = amplitude;
        s
    }

    pub fn order(&self) -> usize {
        self.cos.len()
    }

    /// The stored constant mode `[w]`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn set_mean(&mut self, mean: f64) {
        self.mean = mean;
    }

    /// Cosine coefficient of mode `n ≥ 1`; zero beyond the truncation.
    pub fn a(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.cos.get(n - 1).copied().unwrap_or(0.0)
    }

    /// Sine coefficient of mode `n ≥ 1`; zero beyond the truncation.
    pub fn b(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.sin.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos_coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.cos
    }

    pub fn sin_coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.sin
    }

    pub fn is_even(&self) -> bool {
        self.sin.iter().all(|&b| b == 0.0)
    }

    pub fn is_odd(&self) -> bool {
        self.mean == 0.0 && self.cos.iter().all(|&a| a == 0.0)
    }

    /// Drops the sine part.
    pub fn even_part(&self) -> Self {
        Self::new(self.mean, self.cos.clone(), vec![0.0; self.order()])
    }

    /// Truncates or zero-pads to `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        cos.resize(order, 0.0);
        sin.resize(order, 0.0);
        Self::new(self.mean, cos, sin)
    }

    /// Point evaluation by direct summation.
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut acc = self.mean;
        for n in 1..=self.order() {
            let (s, c) = libm::sincos(n as f64 * t);
            acc += self.cos[n - 1] * c + self.sin[n - 1] * s;
        }
        acc
    }

    /// `D`: modewise `(aₙ, bₙ) ↦ (n·bₙ, −n·aₙ)`; the mean is annihilated.
    pub fn differentiate(&self) -> Self {
        let mut out = Self::zero(self.order());
        for n in 1..=self.order() {
            let nf = n as f64;
            out.cos[n - 1] = nf * self.sin[n - 1];
            out.sin[n - 1] = -nf * self.cos[n - 1];
        }
        out
    }

    /// `D⁻¹` or `D⁻²` on the zero-mean subspace.
    pub fn antidifferentiate(&self, order: AntiderivativeOrder) -> Result<Self> {
        self.require_zero_mean()?;
        let mut out = Self::zero(self.order());
        for n in 1..=self.order() {
            let nf = n as f64;
            let (a, b) = (self.cos[n - 1], self.sin[n - 1]);
            match order {
                // cos nt ↦ sin nt / n, sin nt ↦ −cos nt / n
                AntiderivativeOrder::First => {
                    out.cos[n - 1] = -b / nf;
                    out.sin[n - 1] = a / nf;
                }
                AntiderivativeOrder::Second => {
                    let n2 = nf * nf;
                    out.cos[n - 1] = -a / n2;
                    out.sin[n - 1] = -b / n2;
                }
            }
        }
        Ok(out)
    }

    /// Periodic Hilbert transform for the strip of depth `kh`.
    pub fn ckh_apply(&self, kh: f64) -> Result<Self> {
        ConjugateMultiplier::strip(kh, self.order())?.apply(self)
    }

    /// `[w²]` by Parseval: `mean² + ½ Σ (aₙ² + bₙ²)`.
    pub fn mean_of_square(&self) -> f64 {
        let tail: f64 = self
            .cos
            .iter()
            .zip(&self.sin)
            .map(|(a, b)| a * a + b * b)
            .sum();
        self.mean * self.mean + 0.5 * tail
    }

    /// Maximum absolute coefficient (mean included).
    pub fn max_coeff(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(self.mean.abs(), |m, c| m.max(c.abs()))
    }

    /// Sum of absolute coefficients, an upper bound for the sup-norm.
    pub fn l1_coeffs(&self) -> f64 {
        self.mean.abs() + self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum::<f64>()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.mean * factor,
            self.cos.iter().map(|c| c * factor).collect(),
            self.sin.iter().map(|c| c * factor).collect(),
        )
    }

    /// `self + factor·other`, at the larger of the two truncation orders.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        let order = self.order().max(other.order());
        let mut out = self.with_order(order);
        out.mean += factor * other.mean;
        for n in 1..=other.order() {
            out.cos[n - 1] += factor * other.cos[n - 1];
            out.sin[n - 1] += factor * other.sin[n - 1];
        }
        out
    }

    pub(crate) fn require_zero_mean(&self) -> Result<()> {
        if self.mean != 0.0 {
            return Err(Error::NonZeroMean { mean: self.mean });
        }
        Ok(())
    }
}

/// `coth x` for `x > 0`, written with `expm1` so small arguments keep their digits.
pub fn coth(x: f64) -> f64 {
    let e = libm::exp(-2.0 * x);
    (1.0 + e) / -libm::expm1(-2.0 * x)
}

/// Modewise multiplier table for a conjugation operator on zero-mean series:
/// `(aₙ, bₙ) ↦ (−μₙ bₙ, μₙ aₙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateMultiplier {
    values: Vec<f64>,
}

impl ConjugateMultiplier {
    /// `μₙ = coth(n·kh)`, the Hilbert transform for the strip `−kh < y < 0`.
    pub fn strip(kh: f64, order: usize) -> Result<Self> {
        if !(kh > 0.0) || !kh.is_finite() {
            return Err(Error::InvalidDepth { kh });
        }
        Ok(Self {
            values: (1..=order).map(|n| coth(n as f64 * kh)).collect(),
        })
    }

    /// `μₙ = tanh(n·kh)`. This is the conjugation for harmonic functions with a
    /// Neumann bottom condition; only the verification suite uses it, as a
    /// deliberately wrong operator.
    pub fn neumann(kh: f64, order: usize) -> Result<Self> {
        if !(kh > 0.0) || !kh.is_finite() {
            return Err(Error::InvalidDepth { kh });
        }
        Ok(Self {
            values: (1..=order).map(|n| libm::tanh(n as f64 * kh)).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// Multiplier of mode `n ≥ 1`.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, w: &TrigSeries) -> Result<TrigSeries> {
        w.require_zero_mean()?;
        assert!(
            w.order() <= self.order(),
            "multiplier table of order {} cannot act on a series of order {}",
            self.order(),
            w.order()
        );
        let mut out = TrigSeries::zero(w.order());
        for n in 1..=w.order() {
            let mu = self.values[n - 1];
            out.cos[n - 1] = -mu * w.sin[n - 1];
            out.sin[n - 1] = mu * w.cos[n - 1];
        }
        Ok(out)
    }
}

/// Samples of a periodic function at `tⱼ = 2πj/M`, `j = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trapezoidal quadrature of the period mean, exact for trigonometric
    /// polynomials of degree below `M`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the smallest sample.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (j, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len());
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

/// Discrete interpolant of a [`GridFunction`] truncated to a requested order.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub series: TrigSeries,
    /// Largest coefficient magnitude `√(aₙ² + bₙ²)` among the discarded
    /// orders `N+1..=M/2`.
    pub alias_tail: f64,
}

/// Transform pair between [`TrigSeries`] and [`GridFunction`] on `M` nodes.
#[derive(Debug, Clone)]
pub struct Collocation {
    fft: Fft,
}

impl Collocation {
    /// Panics unless `size ≥ 4`.
    pub fn new(size: usize) -> Self {
        assert!(size >= 4, "collocation grid needs at least 4 nodes");
        Self { fft: Fft::new(size) }
    }

    pub fn size(&self) -> usize {
        self.fft.len()
    }

    /// Highest order that round-trips with both sine and cosine parts.
    pub fn max_order(&self) -> usize {
        (self.size() - 1) / 2
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.size() as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size()).map(|j| self.node(j)).collect()
    }

    /// Samples `w` on the grid. Panics if `w.order() > M/2`; at exactly `M/2`
    /// only the cosine part of the top mode is representable.
    pub fn synthesize(&self, w: &TrigSeries) -> GridFunction {
        let m = self.size();
        assert!(
            2 * w.order() <= m,
            "series of order {} does not fit a grid of {} nodes",
            w.order(),
            m
        );
        let mut buf = vec![(0.0, 0.0); m];
        buf[0] = (w.mean, 0.0);
        for n in 1..=w.order() {
            let (a, b) = (w.cos[n - 1], w.sin[n - 1]);
            if 2 * n == m {
                buf[n].0 += a;
            } else {
                // a cos nt + b sin nt = Re[(a − ib) e^{int}]
                buf[n] = (0.5 * a, -0.5 * b);
                buf[m - n] = (0.5 * a, 0.5 * b);
            }
        }
        self.fft.inverse_unnormalized(&mut buf);
        GridFunction::new(buf.into_iter().map(|(re, _)| re).collect())
    }

    /// Discrete trigonometric interpolant of `g`, truncated to `order`.
    pub fn project(&self, g: &GridFunction, order: usize) -> Projection {
        let m = self.size();
        assert_eq!(g.len(), m, "grid function sampled on a different grid");
        let mut buf: Vec<(f64, f64)> = g.values.iter().map(|&v| (v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let scale = 1.0 / m as f64;
        let half = m / 2;
        let coeff = |n: usize| -> (f64, f64) {
            if 2 * n == m {
                (buf[n].0 * scale, 0.0)
            } else {
                (2.0 * buf[n].0 * scale, -2.0 * buf[n].1 * scale)
            }
        };
        let kept = order.min(half);
        let mut series = TrigSeries::zero(order);
        series.mean = buf[0].0 * scale;
        for n in 1..=kept {
            let (a, b) = coeff(n);
            series.cos[n - 1] = a;
            series.sin[n - 1] = b;
        }
        let alias_tail = (kept + 1..=half)
            .map(|n| {
                let (a, b) = coeff(n);
                libm::hypot(a, b)
            })
            .fold(0.0, f64::max);
        Projection { series, alias_tail }
    }

    /// Applies `f` to the tuple `(w₁(tⱼ), …, w_r(tⱼ))` at every node. A
    /// non-finite result is reported as [`Error::DomainFault`] at that node.
    pub fn pointwise_eval(
        &self,
        ws: &[&TrigSeries],
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<GridFunction> {
        let grids: Vec<GridFunction> = ws.iter().map(|w| self.synthesize(w)).collect();
        let mut tuple = vec![0.0; ws.len()];
        let mut out = Vec::with_capacity(self.size());
        for j in 0..self.size() {
            for (slot, g) in tuple.iter_mut().zip(&grids) {
                *slot = g.values[j];
            }
            let v = f(&tuple);
            if !v.is_finite() {
                return Err(Error::DomainFault { index: j });
            }
            out.push(v);
        }
        Ok(GridFunction::new(out))
    }
}
