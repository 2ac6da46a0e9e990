//! Classical statevector simulation of a quantum numerical scheme for
//! multidimensional transport equations `∂t f + c(x, t)·∇f = 0` on the
//! periodic unit cube.
//!
//! The pipeline has three stages, mirrored by the modules below:
//!
//! * **preparation** ([`prep`]): load the initial condition into a
//!   real-space amplitude encoding ([`grid`]),
//! * **evolution** ([`evolution`]): first-order product formulas where each
//!   axis factor is diagonalized by a per-register Fourier transform
//!   ([`circuit`], [`fd`]), optionally with Walsh-truncated diagonals
//!   ([`walsh`]),
//! * **measurement** ([`measure`]): observables and the Hadamard, SWAP,
//!   overlap and amplitude-estimation protocols.
//!
//! [`reference`] holds the independent oracles (characteristics, periodic
//! shift, RK4, a Chebyshev propagator for the semi-discrete system) and the
//! computable error bounds used by the sweep experiments.

pub mod circuit;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod fd;
pub mod grid;
pub mod measure;
pub mod prep;
pub mod problem;
pub mod reference;
pub mod rng;
pub mod walsh;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
