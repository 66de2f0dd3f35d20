//! HTTP API and command-line front end for the compatibility recommender.

pub mod api;
pub mod cli;
pub mod error;
pub mod state;

pub use api::router;
pub use error::{ApiError, ErrorCode};
pub use state::{AppState, Snapshot};
