pub mod acceptance;
pub mod airy;
pub mod cheb;
pub mod discretization;
pub mod error;
pub mod expansion1d;
pub mod expansion2d;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod resolvent;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
