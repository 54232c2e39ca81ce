//! Numerics for rough paths on Wiener space and for the based loop group:
//! dyadic approximations and level-2 lifts, Besov/Hölder norms, Lie-group
//! flows and their correction flows, Wiener-space neighbourhoods and the
//! retraction onto pinned paths, a finite-dimensional Poincaré-lemma toolkit,
//! and the zeroth-order terms of the Weitzenböck formula on loops.

pub mod derham;
pub mod error;
pub mod experiments;
pub mod flows;
pub mod geometry;
pub mod lie;
pub mod lift;
pub mod loops;
pub mod paths;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
