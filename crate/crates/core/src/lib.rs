//! Psycholinguistic feature extraction and score prediction for per-user
//! microblog text.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] cleans microblog noise, segments text into tokens and folds
//!   every user's messages into one document.
//! * [`lexicon`] parses LIWC-style `.dic` dictionaries and turns documents
//!   into normalised category frequencies.
//! * [`lda`] trains LDA topic models by collapsed Gibbs sampling and infers
//!   topic proportions for unseen documents against a frozen model.
//! * [`stats`] fits OLS models with AIC-guided stepwise selection, computes
//!   Pearson correlations with exact t-distribution p-values and runs k-fold
//!   cross-validation.
//! * [`pipeline`] wires the above into the experiment grid
//!   (feature set x number of topics) and writes report CSVs.

pub mod corpus;
pub mod error;
pub mod lda;
pub mod lexicon;
pub mod pipeline;
pub mod stats;

mod csvutil;

pub use error::{Error, Result};
