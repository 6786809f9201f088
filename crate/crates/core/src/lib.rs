pub mod config;
pub mod error;
pub mod fbl;
pub mod harq;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod noma;
pub mod numeric;
pub mod report;
pub mod scheduler;
pub mod sim;
pub mod sweep;
pub mod targets;

pub use error::{Error, Result};
