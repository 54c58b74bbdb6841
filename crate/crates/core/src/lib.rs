//! Radiance-hint rendering and relighting-corpus synthesis.
//!
//! The crate turns a depth map and foreground mask into a smoothed proxy
//! mesh, path traces it under a target lighting with a small set of
//! homogeneous proxy materials (the *radiance hints*), and packs the hints
//! into channel stacks consumed by a conditioning network. The [`dataset`]
//! module implements the synthetic training-corpus protocol on top of the
//! same renderer.

pub mod brdf;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod image;
pub mod lighting;
pub mod math;
pub mod packing;
pub mod render;
pub mod rng;

pub use error::{Error, Result};
