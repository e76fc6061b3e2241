pub mod bessel;
pub mod cli;
pub mod control;
pub mod cost;
pub mod dd;
pub mod error;
pub mod integrals;
pub mod linalg;
pub mod moment;
pub mod profile;
pub mod quadrature;
pub mod simulate;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
