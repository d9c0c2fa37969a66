//! Simulation and verification toolkit for clique partitions of random
//! graphs and the product representations they induce.
//!
//! The pipeline: [`schedule`] fixes per-round densities and clique
//! sizes, [`nibble`] runs the randomized partition rounds, [`audit`]
//! compares the evolving graph against its target statistics,
//! [`hypergraph`] and [`coloring`] drive the random greedy edge
//! coloring with its trajectory diagnostics, and [`prague`] assembles
//! partition plus coloring into a certified product representation.

pub mod audit;
pub mod coloring;
pub mod graph;
pub mod hypergraph;
pub mod nibble;
pub mod prague;
pub mod rng;
pub mod schedule;

pub use graph::{sample_gnp, Graph, VertexSet};
pub use nibble::{run_partition, trivial_partition, verify_partition, CliquePartition};
pub use prague::{lower_bounds, prague_upper, verify_embedding};
pub use rng::StreamRng;
pub use schedule::{build_schedule, NibbleParams, Schedule};
