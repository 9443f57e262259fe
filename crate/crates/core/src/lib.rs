// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod grid;
pub mod initial;
pub mod measure;
pub mod montecarlo;
pub mod pipeline;
pub mod quadrature;
pub mod renewal;
pub mod resolvent;
pub mod stability;

pub use error::{Error, ErrorCode, Result};
pub use grid::{Grid, GridTrace, Jump};
pub use measure::{apply_functional, total_variation, Segment, SignedMeasure};
