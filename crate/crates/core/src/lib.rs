//! Structural factorization machines.
//!
//! A predictive model over multi-view, multi-way sparse data. Every view is a
//! set of modes (entity types) whose full-order feature interactions are
//! weighted by a CP-factorized tensor; the mode factor matrices are shared by
//! all views containing the mode, and a view factor matrix weights each view's
//! contribution. Data are stored as relational blocks so that repeated
//! entities are projected once per prediction pass.
//!
//! * [`schema`] and [`data`]: modes, views, sparse vectors and relational blocks.
//! * [`model`]: parameters, mode caches and the two prediction paths.
//! * [`training`]: risk, gradients, Adam and the early-stopping loop.
//! * [`oracle`]: dense reference implementations for testing.
//! * [`io`]: file formats, synthetic data and storage statistics.

pub mod data;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod schema;
pub mod training;

pub use data::{RelationalBlock, RelationalDataset, SparseSlice, SparseVector};
pub use error::{Error, Result};
pub use model::{
    compute_mode_caches, leave_one_out_product, predict_batch, predict_naive, predict_one, view_product, FactorSet,
    ModeCaches, ModelParams, ParamGroup,
};
pub use schema::{build_schema, Schema};
pub use training::{
    adam_step, empirical_risk, gradients, mean_squared_error, train, AdamState, EpochRecord, GradientSet, TrainConfig,
    TrainLog,
};
