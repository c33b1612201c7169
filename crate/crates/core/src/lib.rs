//! Bifurcation and continuation of steady periodic capillary-gravity waves with
//! constant vorticity over a flat bed, in a conformal formulation that allows
//! overhanging profiles.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom-up:
//!
//! * [`trig`]: truncated trigonometric series, the strip Hilbert transform
//!   and collocation grids.
//! * [`operators`]: the nonlinear operators `Wkh`, `Q`, `ŵ`, `K` and the
//!   residual `F(λ, w) = w − D⁻²K(λ, w)`.
//! * [`linear`]: linearization at the laminar flows, bifurcation values and
//!   kernel analysis.
//! * [`continuation`]: Newton corrector, branch switching and pseudo-arclength
//!   continuation with termination verdicts.
//! * [`reconstruction`]: the physical free-boundary solution and its checks.
//! * [`verify`]: identity and equivalence checks used by the CLI.

#![no_std]
// `!(a <= b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod fft;

pub mod continuation;
pub mod linear;
pub mod operators;
pub mod reconstruction;
pub mod trig;
pub mod verify;

pub use error::{Error, NewtonFailure, Result};
pub use operators::{Discretization, FlowParameters, OperatorOptions, WaveOperators};
pub use trig::{Collocation, GridFunction, TrigSeries};
