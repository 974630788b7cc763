//! Pseudospectral solver for the weighted two-point boundary value problem of
//! the 1-D variable-coefficient Schrödinger equation
//! `∂_t u = i(∂_x(a ∂_x u) + W u)`, together with numerical monitors for the
//! energy, smoothing and commutator inequalities that control it.

pub mod coefficients;
pub mod commutator;
pub mod error;
pub mod estimates;
pub mod free_bvp;
pub mod picard;
pub mod random;
pub mod scenario;
pub mod spacetime;
pub mod spectral;
pub mod stepper;
pub mod weights;

pub use error::{Error, Result};
pub use spectral::{Grid1D, Multiplier, Sign, SpectralField};
