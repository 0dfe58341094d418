pub mod belief;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod io;
pub mod normal_math;
pub mod policies;
pub mod types;
pub mod user_model;

pub use belief::{Belief, UpdateOutcome, UpdateSource};
pub use error::{Error, Result};
pub use policies::{PolicyKind, PolicySpec, SignalRealization};
pub use types::{Arm, Message};
