//! Numerical building blocks shared by the operator modules.

pub mod bessel;
pub mod fft;
pub mod profile;
pub mod quadrature;
