//! Exact spectra of scaling quantum graphs.
//!
//! The spectral determinant of a graph with k-independent vertex scattering is
//! a finite exponential sum. Its derivatives form a hierarchy whose roots
//! interlace; starting from a level whose roots sit one per periodic cell, the
//! physical spectrum is recovered by bracketing roots level by level.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exp_sum;
pub mod graph;
pub mod numeric;
pub mod orbits;
pub mod secular;
pub mod spectrum;
pub mod stats;

pub use error::{Error, Result};
pub use exp_sum::{ArithmeticOp, ExponentialSum, FrequencyVector, LogExpansion, LogOptions, PhaseRecord};
pub use graph::{neumann_scattering, parse_graph, transition_matrix, Bond, DirectedBondBasis, QuantumGraph, TransitionMatrix};
pub use secular::{determinant, determinant_sum, trace_powers, LevelDensity, SecularFunction};
pub use orbits::{enumerate_orbits, expansion_terms, trace_identity_check, ExpansionTerm, PeriodicOrbit};
pub use spectrum::{bootstrap, find_regular_level, weyl_eigenvalue, OrbitSeries, RegularLevel, SpectralHierarchy};
pub use stats::{
    Binning, DistributionHistogram, LevelDistribution, PropagationCoefficients, TorusMode, TorusSampler,
};
