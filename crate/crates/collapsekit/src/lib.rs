//! Toolkit for combinatorial collapses, retraction systems, and
//! inverse-limit compactifications.
//!
//! The crate is organized in layers:
//!
//! * [`complex`]: simplicial and cubical complexes, free faces, collapse
//!   schedules, and collapsibility search.
//! * [`geometry`]: point charts, evaluable retraction maps, and
//!   track-faithfulness checking for deformation retractions.
//! * [`system`]: metric model spaces, inverse systems of retractions,
//!   and stationary/insulated open-set analysis.
//! * [`limitkit`]: inverse-limit threads, the limit metric, remainder
//!   sampling, and infinite-composite homotopies.
//! * [`gallery`]: ready-made example systems exercising the rest of the
//!   crate.

pub mod complex;
pub mod gallery;
pub mod geometry;
pub mod limitkit;
pub mod system;
