//! Gold-matrix ghost imaging toolkit.
//!
//! * [`seqgen`]: m-sequences from LFSRs and primitivity checks
//! * [`patterns`]: Gold, Hadamard and random measurement matrices
//! * [`gi`]: bucket acquisition, noise, correlation reconstruction and
//!   characteristic matrices
//! * [`metrics`]: MSE and PSNR
//! * [`imageio`]: PGM / CSV / JSON persistence
//! * [`harness`]: experiment configuration and the CLI commands

pub mod error;
pub mod gi;
pub mod harness;
pub mod image;
pub mod imageio;
pub mod metrics;
pub mod objects;
pub mod patterns;
pub mod rng;
pub mod seqgen;

pub use error::{Error, Result};
pub use image::{Geometry, Image};
