//! Lattice mirror models: the Lorentz mirror model and the Manhattan model on
//! the plane and on cylinders.
//!
//! The crate is organised around a deterministic light tracer over quenched
//! mirror configurations:
//!
//! * [`lattice`] — points, directions, directed edges, regions, and the two
//!   geometries (plane / cylinder).
//! * [`mirrors`] — mirror configurations: seeded sampling, exhaustive weighted
//!   enumeration, mutation, vertical reflection, and a text file format.
//! * [`tracer`] — the successor map on directed edges and maximal trajectory
//!   tracing with closure/exit detection.
//! * [`events`] — detectors for crossing, containment, annulus-escape,
//!   winding, strip-classification, and section-bound events.
//! * [`surgery`] — the two-vertex configuration modification that converts a
//!   pair of through-trajectories plus a winding loop into bounce-back
//!   trajectories, with full postcondition verification.
//! * [`oracle`] — exact probabilities by brute-force weighted enumeration on
//!   small regions; the trust anchor for every statistical test.
//! * [`montecarlo`] — seeded, parallel, bit-reproducible estimation of event
//!   probabilities and localization profiles.
//!
//! Probability arithmetic is generic over the [`weight::Weight`] scalar so the
//! same enumeration code runs with exact rationals or with floats.

pub mod events;
pub mod lattice;
pub mod mirrors;
pub mod montecarlo;
pub mod oracle;
pub mod seeding;
pub mod surgery;
pub mod tracer;
pub mod unionfind;
pub mod weight;

/// Exact probability scalar used by the oracle when `p` is rational.
pub type Rational = num_rational::BigRational;

/// Version tag stamped into estimate and experiment records.
pub const ENGINE_VERSION: &str = concat!("mirror-model/", env!("CARGO_PKG_VERSION"));

pub use lattice::{step, DirectedEdge, Direction, Geometry, LatticePoint, Region};
pub use mirrors::{Configuration, MirrorState, ModelKind, Provenance};
pub use tracer::{trace, trace_full, TraceStatus, Trajectory};
