//! Crowd flow estimation from the short-term variance of received signal power.
//!
//! A receiver sampling RSRP at 100 Hz sees pedestrian-induced multipath
//! fluctuations; the variance of the signal over sub-second windows tracks
//! how many people are moving through the monitored street. This crate
//! implements the full estimation pipeline:
//!
//! - [`data`]: typed ingestion of RSRP traces and pedestrian-count labels,
//!   with packet-loss gap handling,
//! - [`features`]: windowed variance features (`var_dt{Δt}_lb{k}`) aligned
//!   to 2-second count windows on a 1-second shift,
//! - [`stats`]: Spearman rank correlation, RMSE, ECDFs and boxplot summaries,
//! - [`trees`]: a deterministic gradient-boosted regression-tree model with
//!   exact TreeSHAP attribution and a brute-force Shapley oracle,
//! - [`synth`]: a seeded scenario generator that produces measurement days
//!   with a known pedestrian→variance mechanism,
//! - [`harness`]: leave-one-day-out experiment drivers emitting figure-ready
//!   CSV reports.
//!
//! All operations are deterministic: identical inputs (including seeds)
//! produce byte-identical outputs.

pub mod data;
pub mod features;
pub mod harness;
pub mod stats;
pub mod synth;
pub mod trees;

pub use data::{AreaId, AreaSpec, CountSeries, GapInterval, RsrpTrace};
pub use features::{FeatureSpec, FeatureTable, LookbackAnchor};
pub use harness::{ClassSchedule, EvalReport, SplitPlan};
pub use stats::{BoxplotStats, CorrelationResult};
pub use synth::{CrossingEvent, DayData, ScenarioConfig};
pub use trees::{GbdtModel, GbdtParams, ShapAttribution, TreeNode};
