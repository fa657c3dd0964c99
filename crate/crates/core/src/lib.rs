//! Infer missing attribute values in ABAC object models.
//!
//! Given an object model with some cells unknown and the set of entitlements
//! `⟨user, resource, action⟩` that the system grants, the pipeline
//!
//! 1. groups users and resources by their active attributes and refines the
//!    groups with a weighted Jaccard similarity ([`cluster`]);
//! 2. for every (user group, resource group, action) triple an unknown cell is
//!    involved in, fits a linear model from atomic-condition/constraint
//!    features to permit labels and ranks the features ([`features`]);
//! 3. reads candidate values off the top-ranked features that mention the
//!    unknown attribute, tagging each High, Medium or NEI ([`predict`]).
//!
//! [`generate`] synthesizes complete university and project-management
//! policies, and [`eval`] measures coverage and accuracy by removing known
//! values and predicting them back.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cluster;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod model;
pub mod policy;
pub mod predict;
pub mod regression;

pub use cluster::{cluster, Clustering, ClusteringConfig, Group};
pub use config::RunConfig;
pub use error::{
    ClusterError, ConfigError, EvalError, FormatError, LearnError, ModelError, PolicyError,
};
pub use eval::{evaluate, EvalReport, EvalSettings};
pub use features::{Feature, LearningData, RankedFeatures};
pub use generate::{generate, GenSpec, Template};
pub use model::{AttrKind, AttrSchema, AttrValue, Class, Object, ObjectModel, Schema};
pub use policy::{AtomicCondition, AtomicConstraint, Entitlement, Policy, Rule, Tri};
pub use predict::{predict_all, Confidence, Prediction, PredictionConfig};
