//! Integral solutions of the quantum Knizhnik-Zamolodchikov equations for
//! tensor products of U_q(sl2^) evaluation modules, and numerical checks of
//! the finite identities behind them.
//!
//! Module map:
//! - [`params`]: global parameters, truncation policy, config files.
//! - [`qspecial`]: q-numbers and infinite products (Pochhammer, theta, rho, xi).
//! - [`repr`]: evaluation modules, coproducts, tensor vectors, leg operators.
//! - [`rmatrix`]: R-matrices by null-space solve and by closed form; Yang-Baxter.
//! - [`weight`]: weight functions, phase function, closed-form integrands.
//! - [`oracles`]: brute-force checks of the combinatorial identities.
//! - [`contour`]: circle quadrature with residue corrections.
//! - [`solution`]: elliptic factors, solution vectors and qKZ residuals.

pub mod contour;
pub mod error;
pub mod oracles;
pub mod params;
pub mod qspecial;
pub mod repr;
pub mod rmatrix;
pub mod solution;
pub mod weight;

pub type C64 = num_complex::Complex64;

pub use contour::{ContourSpec, QuadratureGrid, RadiusPolicy};
pub use error::{Error, Result};
pub use oracles::IdentityReport;
pub use params::{Config, ModelParams, TruncationPolicy};
pub use qspecial::Truncated;
pub use repr::{CMatrix, Generator, TensorVector, TwoSiteOperator};
pub use rmatrix::RMatrix;
pub use rmatrix::Convention;
pub use solution::EllipticW;
pub use weight::WeightIndex;
