//! Stochastic artificial-chemistry simulation for membrane systems, with a
//! Boolean logic-gate library, a netlist-to-membranes compiler, and fault
//! -injection harnesses.
//!
//! The crate is organized around the pipeline:
//!
//! - [`multiset`], [`rule`], [`system`]: value types for objects, counted
//!   multisets, targeted rewrite rules, and labelled region structures.
//! - [`engine`]: the asynchronous stochastic reactor with seeded,
//!   reproducible traces.
//! - [`dsl`]: textual formats for systems (`.psys`) and netlists (`.net`).
//! - [`gates`]: concentration holders, cooperative gates, mobile-catalyst
//!   gates, redundant threshold gates, and concentration readout.
//! - [`compiler`]: netlist-to-membrane-system backends (nested tree and
//!   linked cell network) plus oracle verification.
//! - [`harness`]: molecule-loss sweeps and the distributed particle fabric.

pub mod compiler;
pub mod dsl;
pub mod engine;
pub mod gates;
pub mod harness;
pub mod multiset;
pub mod rule;
pub mod system;

pub use multiset::{Multiset, Object, Symbol};
pub use rule::{Rule, RuleClass, Target};
pub use system::{MembraneSystem, Region, RegionId, SystemKind, Violation};
