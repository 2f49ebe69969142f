//! Lower bounds on `sup_{|y|=1} |<x_1,y> <x_2,y> ... <x_n,y>|` for unit vectors
//! `x_1, ..., x_n` in `R^n`, and an explicit unit vector attaining the
//! geometric-mean eigenvalue bound.
//!
//! * [`spectrum`]: instances, Gram spectra, closed-form bounds.
//! * [`geometry`]: ellipsoids, slicing, volume factors.
//! * [`witness`]: recursive slicing descent producing the certifying vector.
//! * [`oracle`]: numerical estimates of the supremum itself.
//! * [`explorer`]: search for systems with a small supremum.
//! * [`cli`]: file formats and the command-line front end.

pub mod cli;
pub mod error;
pub mod explorer;
pub mod geometry;
pub mod logspace;
pub mod oracle;
pub mod sampling;
pub mod spectrum;
pub mod witness;

pub use error::{Error, Result};
pub use geometry::Ellipsoid;
pub use logspace::{LogValue, Quantity};
pub use spectrum::{BoundsReport, GramSpectrum, VectorSystem};
