//! First passage percolation on sparse and dense Erdős–Rényi random graphs.
//!
//! The crate is organised around the objects the simulations manipulate:
//!
//! * [`randomness`]: keyed, splittable random streams and exact samplers.
//! * [`graph`]: `G(n, p)` generation, components and the 2-core.
//! * [`fpp`]: shortest-weight trees, pair statistics, two-sided flow collision
//!   and extremal path search.
//! * [`bp`]: branching-process machinery (tree FPP, marked continuous-time
//!   branching processes with thinning, connection times).
//! * [`theory`]: limit constants, the Laplace transform of the martingale limit
//!   and samplers for the limit laws.
//! * [`stats`]: empirical distributions, KS statistics and transport distance.
//! * [`experiments`]: orchestration of the scaled-down experiments and their
//!   JSON/CSV reports.

pub mod bp;
pub mod error;
pub mod experiments;
pub mod fpp;
pub mod graph;
pub mod randomness;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use randomness::{make_stream, RngStream};
