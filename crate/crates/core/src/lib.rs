//! Exact joint pricing, activation and placement for edge resources.

pub mod analytic;
pub mod error;
pub mod follower;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod par;
pub mod price_grid;
pub mod reform_dual;
pub mod reform_kkt;
pub mod scenario;
pub mod single_level;

pub use error::{CoreError, Result};
