//! Symbolic differential algebra for symmetry determining systems.
//!
//! The pipeline: [`symgen`] builds classical and nonclassical determining
//! systems from a PDE in solved form, [`diffalg`] provides ranks, certified
//! pseudo-reduction and Wu's chain construction, [`bridge`] connects the two
//! systems through the map `xi_i' = tau' xi_i, eta' = tau' eta`, and
//! [`harness`] checks candidate infinitesimals against the results.

pub mod bridge;
pub mod diffalg;
pub mod doc;
pub mod error;
pub mod expr;
pub mod harness;
pub mod properties;
pub mod symgen;
pub mod text;

pub use bridge::{BridgeResult, Cln1Image, TrivialityVerdict, Verdict};
pub use diffalg::{Chain, Rank, ReductionCertificate};
pub use error::Error;
pub use expr::{Atom, Closed, Frac, Poly, Space, Q};
pub use symgen::{DeterminingSystem, GeneratorKind, PdeSystem};
pub use text::{Candidate, Problem};
