//! Crossbar (Xbar) non-ideality simulation for compute-in-memory binary
//! neural networks, together with the BinSparX static weight / dynamic
//! activation sparsification transforms.
//!
//! The crate is organised bottom-up:
//!
//! * [`bnn`] – signed/mapped binary tensors, the NAND-Net dot-product identity,
//!   tiling onto Xbar-sized sub-matrices and multi-bit bit-plane profiling.
//! * [`sparsify`] – column and activation flips plus sign-correcting
//!   post-processing.
//! * [`devices`] – bitcell I–V models (parametric or LUT) and wire presets.
//! * [`solver`] – per-column output current with IR drop: fast damped
//!   fixed-point solver and a dense Newton nodal oracle.
//! * [`readout`] – dummy-column compensation and ADC quantization.
//! * [`pipeline`] – the end-to-end VMM engine and desk-scale BNN inference.
//! * [`analysis`] – partial-sum histograms, deviation sweeps, cost ledger.
//! * [`config`] – the sectioned run configuration shared with the CLI.

pub mod analysis;
pub mod bnn;
pub mod config;
pub mod dataset;
pub mod devices;
pub mod error;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod readout;
pub mod rng;
pub mod solver;
pub mod sparsify;

pub use error::{Error, Result};
pub use par::Parallelism;
