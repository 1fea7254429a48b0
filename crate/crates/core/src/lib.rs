//! Sampling and verification toolkit for critical Boltzmann bipartite planar maps.
//!
//! The pipeline runs through the modules in order:
//!
//! * [`weights`] calibrates a Boltzmann weight sequence, decides criticality and
//!   produces the offspring law of the associated Galton-Watson tree;
//! * [`trees`] samples size-conditioned plane trees and exposes their
//!   Łukasiewicz and height encodings;
//! * [`labels`] attaches uniform bridge labels;
//! * [`bijection`] turns a labelled tree into a pointed bipartite map and back;
//! * [`metrics`] measures distances, profiles and scaling exponents;
//! * [`continuum`] samples the continuum reference processes.

pub mod bijection;
pub mod continuum;
pub mod error;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod seed;
pub mod stats;
pub mod trees;
pub mod weights;

pub use error::{Error, Result};
