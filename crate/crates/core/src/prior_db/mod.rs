//! Database of optimised scenarios and warm-started online planning.
//!
//! Every record keeps the scenario, its normalised feature vector, the best
//! control points, the final surrogate hyperparameters and the full
//! evaluation history. At run time the nearest records (L1 distance over
//! features) supply averaged hyperparameters and the initial design for a
//! short optimisation on the new scenario. Stored objective values are never
//! copied into the new surrogate; only sample locations are re-evaluated.

mod database;
mod reuse;
mod scenario;

pub use database::{
    knn_query, knn_query_where, load, save, Database, Neighbor, PriorRecord, RecordMeta, FORMAT_VERSION,
};
pub use reuse::{
    average_priors, average_priors_mapped, build_database, build_database_with, neighbors_for, plan_online, prior_for, OnlineSettings,
    PlanOutcome, PlanningContext, PriorInit, SeedTransfer, transfer_point, DEFAULT_K, DEFAULT_MAX_SEED_POINTS, DEFAULT_ONLINE_BUDGET,
};
pub use scenario::{FeatureVector, PlanningScenario, ScenarioGenerator, FEATURE_DIM, MAX_OBSTACLES};
