//! Scattering of TM-polarized plane waves by 2π-periodic, anisotropic and
//! possibly sign-changing diffraction gratings.
//!
//! The scattered field solves the quasi-periodic Lippmann–Schwinger equation
//! `u − div V_k(Q∇u) = div V_k(Q∇u^i)` on a rectangular period cell. The volume
//! potential is applied as a Fourier multiplier whose coefficients are known in
//! closed form ([`kernel`]), the linear system is solved with restarted GMRES
//! ([`solver`]), and the Rayleigh coefficients and efficiencies are extracted
//! from the solved density ([`postprocess`]). The [`analysis`] module evaluates
//! the coercivity (Gårding) conditions that certify Fredholm solvability, and
//! [`oracle`] collects independent reference computations.

pub mod analysis;
pub mod config;
pub mod error;
pub mod io;
pub mod kernel;
pub mod operator;
pub mod oracle;
pub mod postprocess;
pub mod problem;
pub mod solver;
pub mod spectral;
pub mod tensor;

mod gmres;

pub use error::{Error, Result};
pub use kernel::{KernelParams, KernelTable};
pub use problem::{ContrastField, Grid, IncidentWave, Problem};
pub use solver::{SolveOptions, Solution};
pub use spectral::{SpectralField, VectorSpectralField};
pub use tensor::Sym2;

pub use num_complex::Complex64;
