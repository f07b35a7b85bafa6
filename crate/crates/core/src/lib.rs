//! Diegetic open games.
//!
//! Games are assembled from play functions: each play function is lifted to a
//! parametric lens whose backward pass carries whole payoff functions, players
//! are attached as selection lenses, and Nash equilibria are read off as the
//! fixpoints of the closed system.
//!
//! - [`fincore`]: finite sets and tables
//! - [`lens`]: simple lenses with symbolic backward kernels
//! - [`para`]: parametric lenses, reparameterisation, closing by a context
//! - [`diegetic`]: payoff lifting, Nashators, costates, selection lenses, arenas
//! - [`analysis`]: closed games, fixpoints, the brute-force oracle, dynamics
//! - [`cli`]: game files and the `analyze` command

pub mod analysis;
pub mod cli;
pub mod diegetic;
pub mod error;
pub mod fincore;
mod json;
pub mod lens;
pub mod para;

pub use error::{Error, Result};
