//! Quadratic Dirichlet L-functions of the hyperelliptic ensemble over
//! F_q[x].
//!
//! The crate computes the L-polynomial of `chi_D` exactly, locates its zeros
//! on the critical circle `|u| = q^{-1/2}`, and evaluates the truncated
//! Euler products `P_K`, the zero-side tails `Z_K`, the argument functions
//! `S` and `S_K`, and the model `F_K` built from `P_K` together with its
//! zeros.

pub mod argument;
pub mod characters;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod ff;
pub mod fmodel;
pub mod hybrid;
pub mod lfunction;
pub mod poly;
pub mod primes;
pub mod report;
pub mod roots;
pub mod trace;

pub use error::{Error, Result};
