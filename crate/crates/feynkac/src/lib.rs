pub mod bspline;
#[cfg(feature = "cli")]
pub mod cli;
pub mod fracassembly;
pub mod fracweights;
pub mod linalg;
pub mod problem;
pub mod quadrature;
pub mod special;
pub mod stepper;

pub use num_complex::Complex64 as C64;
