pub mod baselines;
pub mod bodies;
pub mod error;
pub mod fingerprint;
pub mod flatsearch;
pub mod harmonics;
pub mod inequalities;
pub mod levy;
pub mod norms;
pub mod rng;
pub mod subspace;

pub use error::{Error, Result};

/// Library version embedded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
