//! Adaptive generalized multiscale finite elements for the heterogeneous
//! H(curl)-elliptic problem `curl(a curl u) + b u = f` on the unit square.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod assembly;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod grid;
pub mod linsolve;
pub mod offline;
pub mod registry;
pub mod snapshot;

pub use error::{Error, Result};
