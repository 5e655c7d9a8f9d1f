//! Hybrid jump-diffusion simulation of chemical reaction networks.
//!
//! Species are either continuous (abundant, tracked as reals) or discrete
//! (rare, tracked as integers). Reactions that only touch continuous
//! species in bulk are integrated as a diffusion; everything else fires as
//! discrete jumps obtained by thinning a reference Poisson process. An exact
//! simulator and a master-equation solver serve as references.

#![allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

pub mod exact;
pub mod harness;
pub mod hybrid;
pub mod network;
pub mod output;
pub mod rng;
pub mod trajectory;

pub use network::{parse_network, NetworkError, Partition, ReactionNetwork, SpeciesKind, State};
pub use rng::StreamSeed;
pub use trajectory::{Diagnostics, SampleGrid, SimError, Trajectory};

/// Two-state gene switch with bursty protein production.
pub const GENE_BURST: &str = include_str!("../../../networks/gene_burst.rxn");
