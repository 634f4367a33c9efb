//! Random points in the centered simplex and in lp-balls: seeded samplers,
//! exact constants, the scaled norm statistics of their limit theorems, and
//! exact reference oracles.
//!
//! The crate is `no_std` and only needs `alloc`. IO, experiment orchestration
//! and the command line live in the `simplex-lab` crate.

#![no_std]

extern crate alloc;

pub mod constants;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod statistics;
pub mod summation;

pub use error::{Error, Result};
pub use sampling::{Construction, LpBallPoint, RandomStream, SimplexPoint};
