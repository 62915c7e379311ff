//! Scale-dependent complexity measures for scalar time series.
//!
//! The crate estimates block correlation entropies over a logarithmic grid of
//! resolutions, derives conditional entropies, dimension and excess-entropy
//! curves from them, estimates predictive information with the
//! Kraskov–Stögbauer–Grassberger nearest-neighbour estimator, and splits the
//! excess entropy into a state part, a memory part and a resolution-dependent
//! middle term.
//!
//! Everything here is pure computation on in-memory data and builds without
//! `std` (an allocator is required). File formats and the command-line tool
//! live in the companion `excess` crate.
//!
//! All information quantities are in nats.
//!
//! ```
//! use excess_core::series::{delay_embed, EmbeddingSpec, ScalarSeries};
//!
//! let series = ScalarSeries::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], 1.0, "demo").unwrap();
//! let cloud = delay_embed(&series, EmbeddingSpec::new(2, 1).unwrap()).unwrap();
//! assert_eq!(cloud.point(0), &[2.0, 1.0]);
//! ```
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod corrsum;
pub mod decomp;
mod error;
pub mod ksg;
pub mod math;
pub mod models;
pub mod scalefit;
pub mod series;
pub mod tree;

pub use error::{Error, Result};
