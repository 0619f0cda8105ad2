//! Algorithmic core for augmentation search on synthetic-image detectors.
//!
//! The crate is `no_std` (it needs `alloc`): image operators, the procedural
//! corpus, the small classifier and its trainer, ranking metrics, evaluation
//! scenarios and the subset search strategies. File formats, configuration
//! and the command-line front end live in the `robustaug` crate.
#![cfg_attr(not(test), no_std)]
// `!(x >= lo)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod augment;
pub mod corpus;
pub mod error;
pub mod image;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod search;

pub use error::{Error, Result};
pub use image::Image;
pub use rng::Rng;
