//! Nonnative essay scoring.

pub mod corpus;
pub mod error;
pub mod grammar;
pub mod linalg;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod semantics;
pub mod spelling;
pub mod stylometrics;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
