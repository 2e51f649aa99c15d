//! Growth of subgroups and coset spaces in groups with constricting elements,
//! instantiated on free groups and free products of finite cyclic groups
//! acting on their Cayley graphs.
//!
//! Module map:
//!
//! * [`group`]: marked groups, normal forms, balls, growth estimates.
//! * [`subgroup`]: Stallings core graphs, relative and coset growth,
//!   Poincaré series.
//! * [`geometry`]: axes, nearest-point projections and audits of the
//!   constriction axioms.
//! * [`buffering`]: buffering sequences and chain separation.
//! * [`closure`]: elementary closures and geometric separation.
//! * [`lab`]: end-to-end theorem checks and experiment reports.

pub mod buffering;
pub mod closure;
pub mod error;
pub mod geometry;
pub mod group;
pub mod lab;
pub mod spectral;
pub mod subgroup;

pub use error::{Error, Result};
pub use group::{Ball, BallCounts, GrowthEstimate, MarkedGroup, Method, Step, Word};
