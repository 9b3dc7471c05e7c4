//! Exact simulator and security analyzer for conjugate-coding quantum
//! public-key encryption.

pub mod analysis;
pub mod attacks;
pub mod bits;
pub mod boolfn;
pub mod error;
pub mod qmat;
pub mod qsym;
pub mod schemes;

pub use bits::Bits;
pub use error::{QpkeError, Result};
