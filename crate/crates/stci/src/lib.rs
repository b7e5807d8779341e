//! Construction of composite country indices from indicator panels.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`dataset`] — load a country × indicator panel from CSV, apply an
//!    exclusion list, and filter countries by indicator coverage.
//! 2. [`normalize`] — convert raw columns to a common scale, either by
//!    z-scores or by bounded min–max rescaling.
//! 3. [`diagnostics`] — internal-consistency checks on the converted panel:
//!    summary statistics, pairwise correlations, range and skewness flags.
//! 4. [`aggregate`] — weighted composite scores per country, with an explicit
//!    policy for missing cells.
//! 5. [`classify`] — rank countries and bucket them into mean ± 1 sd bands.
//! 6. [`sensitivity`] — rerun the pipeline under perturbations (drop a
//!    country, drop an indicator, swap weight schemes) and compare rankings.
//!
//! [`reference`] carries the built-in eight-indicator configuration and its
//! published summary tables; [`io`] reads and writes the file formats.
//!
//! All statistics are population-form by default (divide by n); every
//! operation is deterministic, so repeated runs over the same inputs produce
//! byte-identical artifacts.

pub mod aggregate;
pub mod classify;
pub mod dataset;
pub mod diagnostics;
mod error;
pub mod io;
pub mod normalize;
pub mod reference;
pub mod sensitivity;

pub use error::{Error, ErrorCategory, Result};
