pub mod error;
pub mod exact;
pub mod experiment;
pub mod lemmas;
pub mod linalg;
pub mod norm;
pub mod params;
pub mod seed;
pub mod subspace;

pub use error::{Error, Result};
pub use linalg::{Frame, ProjectionPair, Vector};
pub use seed::Seed;
