//! Design curves on S³ built from design curves on S² through the Hopf
//! fibration, explicit design curves on S³ and on tori, and numerical
//! certification of the design property.
//!
//! The pipeline for a base curve `α` on S² is
//! [`lift::horizontal_lift`] → [`lift::holonomy`] → [`stitch::stitch`],
//! and the result is checked with [`verify::certify`].

pub mod catalog;
pub mod curve;
pub mod error;
pub mod hopf;
pub mod lemmas;
pub mod lift;
pub mod poly;
pub mod quadrature;
pub mod stitch;
pub mod verify;

pub use curve::{PiecewiseCurve, Segment};
pub use error::{Error, Result};
pub use hopf::{SpherePoint2, SpherePoint3};
