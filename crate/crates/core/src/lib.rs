pub mod dirty_paper;
pub mod error;
pub mod gp_finite;
pub mod harness;
pub mod info;
pub mod rng;
pub mod stats;
pub mod sw;
pub mod wz_finite;
pub mod wz_gaussian;

pub use error::{CodecError, Error, Result};
