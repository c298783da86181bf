//! Topological statistics of 3×3 optical-flow patches.
//!
//! The crate covers the whole path from raw flow fields to topological
//! verdicts:
//!
//! * [`flow_io`]: `.flo` files and random patch extraction,
//! * [`patch_pipeline`]: contrast normalization, the DCT flow basis and
//!   predominant-direction binning,
//! * [`geometry`]: distance matrices, k-NN density cores, maxmin landmarks,
//! * [`model_synth`]: the horizontal flow circle, the flow torus `f(α, θ)` and
//!   synthetic samplers,
//! * [`persistence`]: Vietoris–Rips / lazy witness filtrations and barcodes over Z/p,
//! * [`tables`]: CSV and JSON exchange of patches, coefficients and clouds,
//! * [`zigzag`]: interval decompositions of angle-bin zigzag diagrams,
//! * [`experiments`]: the end-to-end protocols used by the CLI and the
//!   acceptance suite.

pub mod experiments;
pub mod field;
pub mod flow_io;
pub mod geometry;
pub mod model_synth;
pub mod patch_pipeline;
pub mod persistence;
pub mod tables;
pub mod zigzag;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
