//! Construction, certification and cross-checking of self-similar blow-up
//! profiles for the CKY model of 3D axisymmetric Euler flow near a cylinder
//! boundary.
//!
//! The crate is organized around one pipeline:
//!
//! * [`series`] builds the near-field power-series solution together with
//!   rigorous coefficient bounds and truncation-error bounds,
//! * [`odes`] extends the profiles over the three coordinate charts with
//!   fast RK4 integration, evaluates the decay functional `G(c_l)` and
//!   locates its root by bisection,
//! * [`certify`] re-runs the far-field integration in interval arithmetic
//!   (forward Euler with explicit remainder) and issues sign certificates
//!   for `G(c_l)`,
//! * [`simulate`] solves the time-dependent model with a particle method up
//!   to blow-up, and
//! * [`analysis`] extracts scaling exponents, Hölder exponents and rescaled
//!   profiles that tie the two routes together.
//!
//! All certified quantities flow through [`interval::Interval`].

pub mod analysis;
pub mod certify;
pub mod interval;
pub mod odes;
pub mod series;
pub mod simulate;

mod util;

pub use interval::Interval;
