pub mod convbody;
pub mod error;
pub mod fermi;
pub mod gaussian;
mod linalg;
mod lp;
pub mod quasistate;
pub mod symplin;

pub use error::{Error, Result};
