#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN
pub mod bifurcation;
pub mod blowup;
pub mod charts;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod pws;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
pub use model::{BlendedPws, GammaVector, ModelParams, PlanarState, Sigmoid};
