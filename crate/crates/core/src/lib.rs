//! Placement of service-chain VNFs and their replicas in a network, driven by
//! a piecewise-linear total link-cost objective.
//!
//! The crate is organized around a two-stage pipeline: a traffic-engineering
//! stage routes background demands, then a resource-allocation stage picks
//! chain paths, VNF placements, and replicas on top of the fixed background
//! load. Three solvers share the same solution representation and validator:
//!
//! * [`exact`] — branch-and-bound searches that prove optimality at desk scale,
//! * [`ga`] — a three-stage genetic algorithm (background routing, placement,
//!   incremental replication),
//! * [`rfpa`] — a random-fit placement baseline.
//!
//! [`harness`] wires everything into reproducible experiments and CSV reports;
//! [`topology`] parses SNDLib-native files and enumerates candidate paths.

pub mod costmodel;
pub mod exact;
pub mod ga;
pub mod harness;
pub mod rfpa;
pub mod solution;
pub mod topology;
pub mod traffic;

pub use costmodel::{CostFunctionSet, LinearCostFunction};
pub use solution::{LoadLedger, RaSolution, TeSolution, ValidationReport};
pub use topology::{Link, LinkId, Network, NodeId, Path};
pub use traffic::{Demand, ServiceChain, TrafficProfile};
