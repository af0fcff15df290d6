//! Household electricity load profiles clustered with Fuzzy C Means.
//!
//! - [`ingest`]: hourly readings to normalized 24-hour segment profiles.
//! - [`fcm`]: Fuzzy C Means, a K-means baseline and partition hardening.
//! - [`tariff`]: membership-weighted blends of per-cluster price vectors.
//! - [`drift`]: membership trajectories against a frozen model.

pub mod agreement;
pub mod drift;
pub mod fcm;
pub mod formats;
pub mod ingest;
pub mod matrix;
pub mod synthetic;
pub mod tariff;

/// Hours in a daily profile.
pub const HOURS: usize = 24;

pub use matrix::Matrix;
