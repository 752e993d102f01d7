//! Group evolution discovery for temporal social networks.
//!
//! The pipeline slices a timestamped interaction stream into (possibly
//! overlapping) frames, extracts groups per frame, measures how much of each
//! group is carried into the groups of the next frame (the inclusion
//! measure, weighted by within-group social position) and classifies every
//! transition as one of seven events. A simpler overlap-based baseline and
//! per-group lifecycle chains are provided alongside.

pub mod baseline_asur;
pub mod centrality;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod ged;
pub mod grouping;
pub mod synthetic;
pub mod temporal_network;

pub use error::{Diagnostic, Error, Result};
