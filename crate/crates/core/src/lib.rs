//! Long-range percolation on the hierarchical lattice of order `N`.
//!
//! Vertices are finite base-`N` digit sequences with the ultrametric
//! distance given by the highest differing digit. An edge between two
//! vertices at distance `k` is present independently with probability
//! `p_k = 1 - exp(-alpha / beta^k)`.
//!
//! The crate provides:
//! - [`lattice`]: address arithmetic, balls, shells, and an exact
//!   indexing of vertex pairs by distance class;
//! - [`sampler`]: two distributionally identical configuration samplers
//!   (dense and geometric-skip) plus the mixed site-bond variant;
//! - [`clusters`]: union-find component extraction and cluster statistics;
//! - [`analytic`]: closed forms, binomial renormalization recursions,
//!   fixed points, and the Poisson coupling for mixed percolation;
//! - [`embedding`]: the base-`N` odometer and the stationary embedding
//!   of the lattice into consecutive integers;
//! - [`experiments`]: seeded, parallel Monte Carlo experiment drivers
//!   with CSV/JSON reports.

pub mod analytic;
pub mod clusters;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod rng;
pub mod sampler;

pub use clusters::{ClusterStats, DisjointSetForest};
pub use error::{Error, Result};
pub use experiments::ExperimentReport;
pub use lattice::{Address, Ball};
pub use sampler::{Configuration, PercolationParams};
