//! Regression and evaluation: OLS, AIC-guided stepwise selection, Pearson
//! correlation, RMSE and k-fold cross-validation.

mod correlation;
mod cv;
mod matrix;
mod ols;
mod stepwise;

pub use correlation::{
    pearson, significant_topic_summary, student_t_two_tailed_p, Correlation, TopicSummary,
};
pub use cv::{fold_assignment, kfold_cv, rmse, CVResult};
pub use matrix::FeatureMatrix;
pub use ols::{aic, ols_fit, ols_fit_with, FitStats, LinearModel, RankPolicy};
pub use stepwise::{stepwise_path, stepwise_select, Direction, Move, StepwiseOptions};
