pub mod arithmetic;
pub mod numeric;
pub mod real;
pub mod cocycle;
pub mod determinant;
pub mod spectral;
pub mod config;
pub mod harness;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
