//! Temporal-spatial processing of event-camera video.
//!
//! The crate splits an event recording into a spatial component (a few
//! sparsely sampled frames) and a temporal component (k-means centroid
//! trajectories), measures how much label information each carries with a
//! neural mutual-information estimator, and classifies recordings with a
//! delay-loop reservoir whose input is low-pass filtered and spatially
//! subsampled.
//!
//! Module map:
//!
//! * [`events`]: event streams, file formats, framing
//! * [`decompose`]: spatial/temporal components, downsampling
//! * [`mine`]: statistics network and Donsker-Varadhan estimation
//! * [`reservoir`]: delay-loop reservoir featurizer
//! * [`readout`]: ridge-regression classifier
//! * [`synth`]: synthetic labelled gesture streams
//! * [`experiment`]: config, reports and the commands behind the CLI

pub mod codec;
pub mod decompose;
pub mod error;
pub mod events;
pub mod experiment;
pub mod mine;
pub mod readout;
pub mod reservoir;




pub mod seed;
pub mod synth;


pub use error::{Error, Result};
