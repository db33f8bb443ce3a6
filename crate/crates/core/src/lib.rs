//! Coloured random geometric graphs in the near-intermediate regime.
//!
//! `n` points are dropped uniformly in `[0,1]^d` (torus or cube), each gets an
//! i.i.d. colour from a finite alphabet, and two points of colours `a`, `b` are
//! joined when they lie within `r_n(a,b) = (C(a,b)/n)^{1/d}` of each other.
//! Expected degrees stay bounded as `n` grows.
//!
//! The crate is split by concern:
//!
//! - [`measures`]: model parameters, finite measures on colours, colour pairs
//!   and (colour, neighbour-profile) atoms, empirical measures of a sample,
//!   relative entropy, the pair-measure entropy functional and the
//!   product-Poisson measure `Q[ϖ, μ₁]`.
//! - [`graphgen`]: samplers for the null law and the exponentially tilted law,
//!   with cell-grid edge detection.
//! - [`rates`]: every large-deviation rate function (`J`, `I`, `η₁`, `ξ₁`, `ζ`)
//!   together with the root-finding and simplex optimisation they need.
//! - [`mc`]: replica harness, typical-behaviour statistics, (importance
//!   sampled) tail estimates and the Euler / tightness checks.
//! - [`verify`]: named verification suites shared by the CLI and the
//!   acceptance tests.

pub mod graphgen;
pub mod mc;
pub mod measures;
pub mod optim;
pub mod rates;
pub mod verify;

mod error;
mod extreal;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use graphgen::{EdgeLaw, GraphSample, TiltingPotentials};
pub use measures::{
    ColourMeasure, DegreeDistribution, FiniteMeasure, Geometry, ModelParameters,
    NeighbourhoodMeasure, PairMeasure, Profile, ProfileAtom,
};
pub use rates::{RateResult, ball_volume};
