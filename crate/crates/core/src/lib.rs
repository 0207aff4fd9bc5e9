//! Two-phase incompressible flow in heterogeneous porous media with capillary
//! pressure, discretized by lowest-order Raviart–Thomas mixed elements with
//! upwinded saturation transport and IMPES-type time stepping.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod io;
pub mod linsolve;
pub mod mesh;
pub mod physics;
pub mod rt0;
pub mod scenario;
pub mod schemes;
pub mod units;
pub mod upwind;

pub use error::{Error, Result};
