//! Core kernels for Demon diffusion-based non-rigid registration, the
//! time-limited Demon affinity measure, affinity spaces over semantic image
//! patches, and prior-based patch enhancement.
//!
//! Everything in this crate is pure computation over in-memory images: no
//! file formats, no IO. The companion `demonpatch` crate carries PNG/JSON/CSV
//! formats and the command-line surface.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! enables `std::error::Error` impls and the optional `parallel` feature adds
//! rayon-backed data parallelism over independent work items.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod affinity;
pub mod color;
pub mod demon;
pub mod enhance;
mod error;
pub mod field;
pub mod filter;
pub mod histogram;
pub mod image;
mod math;
mod par;
pub mod pyramid;
pub mod space;
pub mod synth;
pub mod warp;

pub use error::Error;
pub use image::{BlendMask, ColorImage, HsvImage, ScalarImage};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
