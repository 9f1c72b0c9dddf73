pub mod direction;
pub mod error;
pub mod exec;
pub mod ladder;
pub mod lhv;
pub mod optimize;
pub mod qubit;
pub mod spin;
pub mod state;
pub mod triads;

pub use direction::Direction3;
pub use error::{Error, Result};
pub use exec::Execution;
