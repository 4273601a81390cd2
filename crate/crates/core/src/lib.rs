//! Simulation of passive TiO2-x memristor crossbars: a stochastic device
//! model, the experimental protocols run on single devices, statistics
//! extraction, a nodal crossbar solver with wire parasitics and analogue
//! vector-matrix multiplication.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod device;
pub mod error;
pub mod protocols;
pub mod seed;
pub mod vmm;
pub mod xbar;

pub use error::{Error, Result};
