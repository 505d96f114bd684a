//! Two-stage curriculum training for neural machine translation.
//!
//! A base model is warmed up on all general-domain data, then fine-tuned on
//! subsets of in-domain data chosen either once by an external bitext scorer
//! (CSLS over sentence embeddings, dual conditional cross-entropy, modified
//! Moore-Lewis) or every epoch from the emerging model's own prediction
//! scores through a data-selection window.

mod binio;
pub mod corpus;
pub mod curriculum;
pub mod error;
pub mod eval;
pub mod lm;
pub mod nmt;
pub mod scorers;
pub mod seed;

pub use error::{Error, ErrorKind, Result};
