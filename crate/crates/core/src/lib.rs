//! Fast and provably accurate bilateral filtering.
//!
//! The Gaussian range kernel of the bilateral filter is split into a bivariate
//! Gaussian and a monotone exponential; truncating the Taylor series of the
//! exponential after `N` terms turns the filter into `N + 1` linear spatial
//! filterings ([`engine`]). The order `N` can be chosen automatically so that
//! every output pixel is within `±δ` of the exact filter ([`order`]), and the
//! exact brute-force filter ([`reference`]) together with the metrics in
//! [`analysis`] is used to check that guarantee.
//!
//! ```
//! use gpa_core::{engine, Image, RangeSpec, SpatialKernel};
//!
//! let img = Image::from_fn(32, 32, |x, y| ((x * 7 + y * 13) % 256) as f64);
//! let kernel = SpatialKernel::gaussian(3.0).unwrap();
//! let (out, order) = engine::gpa_filter_auto(&img, &kernel, 50.0, 0.5, RangeSpec::EIGHT_BIT).unwrap();
//! assert_eq!(out.width(), 32);
//! assert!(order.n0 >= 1);
//! ```

pub mod analysis;
pub mod engine;
mod error;
pub mod image;
pub mod kernels;
pub mod order;
pub mod reference;
pub mod spatial;

pub use crate::analysis::{linf_error, mse_db, Decibels, ErrorReport};
pub use crate::engine::{gpa_filter, gpa_filter_auto, FilterParams, GpaEngine, Order};
pub use crate::error::{Error, Result};
pub use crate::image::{Image, RangeSpec};
pub use crate::kernels::{KernelKind, SpatialKernel};
pub use crate::order::{estimate_order, OrderEstimate, OrderMethod};
pub use crate::reference::bilateral_exact;
