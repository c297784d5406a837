pub mod corpus;
pub mod document;
pub mod ehrhart;
pub mod equidecomp;
pub mod equivalence;
pub mod error;
pub mod hull;
pub mod linalg;
pub mod polytope;
pub mod sample;
pub mod search;

pub use error::{Error, Result};
