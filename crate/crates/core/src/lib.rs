//! Conservative pair-exchange market models on the half-line.
//!
//! Two faithful pictures of one dynamics:
//!
//! - a particle gas ([`gas`]) in which random agent pairs pool their stock and
//!   re-split it at a uniform fraction, conserving the total exactly;
//! - density-space exchange operators ([`operators`]) acting on grid densities,
//!   with damped, hard-capped, and kernel-perturbed variants, all built from
//!   one trapezoid self-convolution ([`convolve`]) that runs data-parallel by
//!   default (`parallel` feature) with a bitwise-identical sequential path.
//!
//! Unconfined dynamics relax to the exponential density with the conserved
//! mean; capped dynamics to a truncated exponential. [`analysis`] provides
//! orbit traces, entropy-ordering reports, middle-class statistics of the
//! confined equilibria, and the histogram bridge comparing gas runs against
//! operator fixed points. [`io`] pins the CSV formats shared with the CLI.

pub mod analysis;
pub mod convolve;
pub mod error;
pub mod family;
pub mod gas;
pub mod grid;
pub mod io;
pub mod operators;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use family::{make_pdf, Family, SampledPdf};
pub use grid::{Grid, GridPdf};
pub use operators::{
    exchange, exchange_capped, exchange_damped, exchange_kernel, KernelCoefficients,
    OperatorOutput, OperatorParams, TailLoss,
};
