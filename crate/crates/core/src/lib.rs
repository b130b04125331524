//! Trajectory PHD filtering for coexisting point and extended targets.
//!
//! The posterior is a Poisson intensity over the disjoint union of point-target
//! trajectories (Gaussian components) and extended-target trajectories
//! (Gamma-Gaussian-Inverse-Wishart components). One filter cycle is
//!
//! 1. [`predict`] with survival, trajectory append, rate/extent forgetting and birth,
//! 2. [`partitioner::dbscan_sweep`] to propose partitions of the scan,
//! 3. [`update`] with the general pseudolikelihood over those partitions,
//! 4. [`reduce`] (pruning, absorption, L-scan window),
//! 5. [`estimate::extract`] of trajectory estimates.
//!
//! [`filter::TphdFilter`] strings these together. The [`combinatorics`] and
//! [`oracle`] modules hold exhaustive reference computations used to check the
//! update against the exact Poisson-projection posterior on small scans.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod combinatorics;
pub mod error;
pub mod estimate;
pub mod filter;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod partitioner;
pub mod predict;
pub mod reduce;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod update;

pub use error::{Error, Result};
pub use model::{
    ClutterIntensity, GgiwComponent, MeasurementModel, MotionModel, PhdMixture, TargetClass,
    TrajectoryGaussian,
};
pub use predict::{predict, BirthModel};
pub use update::{update, UpdateDiagnostics, UpdateOptions};
