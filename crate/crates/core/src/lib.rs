//! Generalized PageRank (GPR) diffusion over undirected graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the immutable CSR graph, file ingestion, preprocessing
//!   (largest connected component, BFS sub-networks) and the single
//!   random-walk step `x -> A D^-1 x`.
//! * [`randgraph`] samples edge-independent random graphs (two-block SBM and
//!   Erdős–Rényi) and computes exact mean-field block quantities.
//! * [`diffusion`] computes landing probabilities (LPs), degree-normalized
//!   landing probabilities (DNLPs), GPR scores, the mean-field LP recursion
//!   and a deflated power-iteration estimate of the sub-dominant spectrum.
//! * [`weights`] builds the weight sequences: personalized PageRank, heat
//!   kernel PageRank, both Inverse PageRank flavours and pseudo-Fisher weights.
//! * [`detect`] runs seed-expansion community detection and measures recall.
//! * [`analysis`] hosts the Monte Carlo laboratories for variance decay,
//!   bound expressions and the ℓ₁ non-convergence demonstration.
//!
//! ```
//! use gprank::graph::Graph;
//! use gprank::diffusion::{landing_probabilities, Features};
//!
//! let triangle = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
//! let lps = landing_probabilities(&triangle, &[1.0, 0.0, 0.0], 1, Features::Normalized).unwrap();
//! let x1 = lps.x(1);
//! let z1 = lps.z(1);
//! assert!((x1[1] - 0.5).abs() < 1e-15 && x1[0].abs() < 1e-15);
//! assert!((z1[2] - 1.5).abs() < 1e-15);
//! ```

pub mod analysis;
pub mod detect;
pub mod diffusion;
mod error;
pub mod graph;
pub mod randgraph;
pub mod rng;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
