//! Core library for learning base-stock replenishment policies under
//! piecewise-stationary demand: physical inventory dynamics, demand models,
//! the counterfactual feedback engine, confidence machinery, the three
//! online learners, and the Monte-Carlo oracle with regret metrics.

// validation code rejects NaN parameters through negated comparisons
// (`!(x >= 0.0)` is true for NaN); the positive spelling would accept them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod benchmark;
pub mod counterfactual;
pub mod demand;
pub mod estimation;
pub mod inventory;
pub mod rng;
pub mod simcheck;

pub use agent::{AlgoConfig, AlgoKind, LearningAgent, NsicAgent};
pub use counterfactual::{CounterfactualBank, PolicyGrid};
pub use demand::{DemandFamily, DemandSchedule, FamilyKind, ParamRanges};
pub use estimation::{ConfidenceParams, IntervalStats, Window};
pub use inventory::{CostParams, InventoryModel, InventoryState, SystemConfig};
pub use rng::{stream_rng, StreamRng};
