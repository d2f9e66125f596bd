//! Weyl para-differential calculus on the torus and a Picard solver for
//! quasilinear Hamiltonian Schrödinger equations
//! `i u_t - Δu + P(u) = 0`.

pub mod diag;
pub mod error;
pub mod evolve;
pub mod nls;
pub mod quant;
pub mod runner;
pub mod symbol;
pub mod torus;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use torus::{Field, Grid, PairField};
