//! Variational MI estimators (DV, MINE, NWJ, InfoNCE) with a small trained critic.

mod bounds;
mod critic;
mod train;

pub use bounds::{batch_bound, bound_value, gradient, log_mean_exp, Batch, Bound};
pub use critic::{Architecture, CriticParams};
pub use train::{
    critic_pmi_grid, diagnose, train_critic, train_estimate, EvalRecord, TrainConfig, TrainedCritic, TrainingHistory,
};
