//! Fixtures shared by the benchmarks.

use sdo::model::{GammaVector, ModelParams, Sigmoid};

/// α = 0.5, β = 2, arctan, at the given (η, μ, ε).
pub fn full(eta: f64, mu: f64, eps: f64) -> (ModelParams, Sigmoid) {
    (ModelParams::new(0.5, 2.0, eta, mu, eps).unwrap(), Sigmoid::arctan())
}

pub fn gamma_k1() -> GammaVector {
    GammaVector::new(1, 0.5, 1.0, std::f64::consts::FRAC_1_PI, std::f64::consts::FRAC_1_PI).unwrap()
}
