//! Depth-video action recognition with hierarchical depth motion maps.
//!
//! The pipeline runs: depth frames → point clouds → optional camera rotation
//! about the subject → front/side/top projections → motion-energy
//! accumulation at several temporal scales → pseudo-RGB images → one
//! classifier per plane → late fusion of class scores.
//!
//! Parallel loops go through rayon when the `parallel` feature (default) is
//! enabled and fall back to sequential iteration otherwise.

pub mod classify;
pub mod config;
pub mod depth_io;
pub mod diagnostics;
pub mod encode;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod hdmm;
pub mod par;
pub mod projection;
pub mod synthetic;

pub use config::PipelineConfig;
pub use diagnostics::Diagnostic;
pub use error::{Error, Result};
