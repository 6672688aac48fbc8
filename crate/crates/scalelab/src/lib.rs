//! Scaling-law estimation for multimodal pretraining runs.
//!
//! The crate fits the parametric loss surface L = E + A/N^alpha + B/D^beta to
//! experiment logs with a Huber-over-log-sum-exp objective and a from-scratch
//! L-BFGS, derives compute-optimal allocation laws (closed form and by
//! regression), fits loss-vs-compute frontiers through the convex hull of the
//! run envelope, quantifies fit uncertainty by seeded bootstrap, extends the
//! surface with sparsity terms for mixture-of-experts runs, and scores expert
//! modality specialization from routing logs.

// `!(v > 0.0)` guards reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitloss;
pub mod fixtures;
pub mod flops;
pub mod frontier;
pub mod hull;
pub mod ingest;
pub mod lbfgs;
pub mod metrics;
pub mod moespec;
pub mod numeric;
pub mod resample;
pub mod sparse;
pub mod types;

pub use error::{Error, Result};
pub use fitloss::{fit, objective, predict_loss, FitConfig, FitPoint};
pub use frontier::{
    closed_form_frontier, fit_vision_linear, late_budget_relation, regress_frontier,
    BudgetRelation, TokenGrid,
};
pub use hull::{fit_compute_law, frontier_points, series_from_records, HullConfig, HullSeries};
pub use ingest::{FitDocument, FitKind, RunFormat, FIT_SCHEMA};
pub use metrics::{evaluate, EvalMetrics};
pub use moespec::{entropy_specialization, expert_distribution, uniform_deviation_specialization};
pub use resample::{bootstrap, BootstrapSummary, CoeffStats};
pub use sparse::{
    fit_sparse, predict_sparse, DeltaSpec, ExponentSpec, SparseFitOptions, SparsePoint,
};
pub use types::{
    validate_dataset, Arch, AssignmentTable, Dataset, EvalSet, FrontierLaws, FrontierSource,
    LossSurfaceFit, PowerLawFit, RunRecord, RunSpec, SparseLossSurfaceFit, TokenCounts,
};
