//! Teacher-student uncertainty autoencoder (TSUAE) and quality-relevant
//! fault detection.
//!
//! The crate is organised bottom-up:
//!
//! * [`numcore`]: matrices, affine/tanh layers, Adam, gradient checks
//! * [`tsuae`]: the teacher/student model, its losses and trainer
//! * [`baselines`]: PCA, PLS, ridge, SAE, TSSAE and the negative-feedback variant
//! * [`monitor`]: error statistics, KDE control limits, FAR/FDR
//! * [`data`]: benchmark generator, fault injection, scaling, CSV I/O
//! * [`experiment`]: config-driven runs, model files and report writers

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiment;
pub mod monitor;
pub mod numcore;
pub mod tsuae;

pub use error::{Error, Result};
