//! Skip-connection ReLU network calculus, explicit approximation
//! constructions, averaged Taylor patches and Sobolev-norm estimators.
//!
//! The crate is `no_std` + `alloc`; the `std` feature only unlocks the
//! `parallel` backend.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod approximator;
pub mod constructions;
pub mod error;
pub mod eval;
pub mod functions;
mod exec;
pub mod jet;
pub mod lb_probe;
pub mod metrics;
pub mod multiindex;
pub mod network;
pub mod quadrature;
pub mod taylor;

pub use error::{Error, Result};
pub use multiindex::{MultiIndex, grid_indices, multi_indices};
pub use network::{Architecture, Layer, Network};
