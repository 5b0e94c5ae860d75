//! Minimax-regret offline policy learning from several heterogeneous
//! observational bandit-feedback sources.
//!
//! The pipeline is:
//!
//! 1. [`nuisance`] fits cross-fitted outcome and inverse-propensity models per source.
//! 2. [`aipw`] turns them into doubly robust score matrices.
//! 3. [`egopo`] runs exponentiated-gradient dynamics over a finite cover of the
//!    mixture-weight set ([`cover`]) against best responses computed by the
//!    exact tree search in [`oracle`].
//!
//! [`simulator`], [`metrics`] and [`harness`] reproduce the synthetic
//! experiments and evaluate policies against simulator ground truth.

pub mod aipw;
pub mod cover;
pub mod data;
pub mod egopo;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nuisance;
pub mod oracle;
pub mod par;
pub mod plot;
pub mod rng;
pub mod simulator;

pub use aipw::{compute_aipw_scores, compute_oracle_scores, ScoreMatrix, ScoreProvenance};
pub use cover::{build_cover, certify_radius, CoverSet, WeightSetKind, WeightSetSpec};
pub use data::{MixtureWeights, ObservationalDataset, SourceData, TreeNode, TreePolicy};
pub use egopo::{run_egopo, EgopoConfig, EgopoResult, IterateMode};
pub use error::{Error, Result};
pub use oracle::{solve_opo, OracleSolution, WeightedExamples};
