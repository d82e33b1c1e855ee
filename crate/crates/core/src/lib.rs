//! Link-level simulator and analytical evaluator for a massive-MIMO uplink
//! with an underlaid device-to-device (D2D) layer.
//!
//! * [`geom`]: hexagonal layout, UE drops, PPP D2D drops, nearest-interferer
//!   ordering.
//! * [`channel`]: link budget, pathloss, shadowing and Rayleigh fading.
//! * [`pzf`]: partial zero-forcing receivers and perfect-CSI SINR.
//! * [`csi`]: pilot training, MMSE estimation and contaminated SINR.
//! * [`analytic`]: closed-form bounds, residual interference and the
//!   Laplace-transform SE integral.
//! * [`harness`]: seeded parallel experiments, presets and CSV output.

pub mod analytic;
pub mod channel;
pub mod csi;
pub mod error;
pub mod geom;
pub mod harness;
pub mod pzf;
pub mod rng;
pub mod selftest;
pub mod stats;

pub use analytic::{
    asymptotic_se_bound, cellular_se_lower_bound, contaminated_se_conditioned,
    contaminated_se_unconditioned, d2d_se_lower_bound, gamma_ratio, rho, stirling_gamma_ratio,
    InterferenceField, ShotNoise, StirlingRatio,
};
pub use channel::{ChannelSet, DetectionTarget, LinkBudget, LinkSet};
pub use csi::{ContaminatedTerms, EstimatedCsi, TrainingMode};
pub use error::{Error, Result};
pub use geom::{build_hex_layout, CellLayout, DropSpec, NetworkDrop, Point2};
pub use harness::{
    emit_csv, optimize_pzf, preset, run_bounds, run_experiment, ExperimentConfig, PzfChoice,
    PzfObjective, SeResult,
};
pub use pzf::{pzf_filter, FadingMode, PzfParams, SeEstimate, SinrBreakdown};
pub use selftest::{run_selftest, SelfCheck};
