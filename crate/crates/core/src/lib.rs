pub mod clustering;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod hawkes;
pub mod pipeline;
pub mod policy;
pub mod synthetic;
pub mod trainer;

pub use error::{DcplError, Result};
