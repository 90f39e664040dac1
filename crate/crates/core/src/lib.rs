//! Exponential wave integrator Fourier pseudospectral solvers for the cubic
//! Klein-Gordon equation `u_tt - u_xx + u + eps^2 u^3 = 0` in the weak
//! nonlinearity and oscillatory scalings, with a splitting reference solver and
//! convergence study drivers.

pub mod data;
pub mod error;
pub mod ewi;
pub mod experiments;
pub mod oscillatory;
pub mod reference;
pub mod spectral;
pub mod stability;
pub mod trajectory;

pub use data::{InitialData, InitialDataTag};
pub use error::{Error, Result};
pub use spectral::{Grid, NodalField, SpectralField};
