//! Desk-scale numerical laboratory for rough singular integrals and their
//! Lorentz-space behaviour.
//!
//! Functions on the line or the plane are proxied by samples on a periodic
//! grid ([`grid::GridFunction`]). On top of that substrate the crate builds
//! Lorentz quasi-norms, compactly supported Littlewood-Paley families,
//! dyadic geometry with Calderon-Zygmund decompositions, the abstract
//! stopping-time construction on doubly ordered sets, rough homogeneous
//! singular integrals with lacunary angular parts, and operators along the
//! curve `(t, |t|^m)`.

pub mod curve_ops;
pub mod dyadic;
pub mod error;
pub mod grid;
pub mod littlewood_paley;
pub mod lorentz;
pub mod numerics;
pub mod rng;
pub mod rough_ops;
pub mod stopping_time;

pub use error::{LabError, Result};
pub use grid::{GridFunction, MultiIndexGamma};
pub use lorentz::{LorentzExponents, Rearrangement};

pub use num_complex::Complex64;

/// Library version string recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
