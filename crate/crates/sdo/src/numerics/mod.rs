//! Integration, root finding, equilibria and periodic orbits shared by every
//! dynamics module.

pub mod curves;
pub mod cycles;
pub mod equilibria;
pub mod linalg;
pub mod ode;
pub mod roots;

pub use curves::{hausdorff, polyline_distance, resample};
pub use cycles::{find_limit_cycle, poincare_return, CycleConfig, CycleStability, LimitCycle, Section};
pub use equilibria::{detect_hopf, find_equilibria, EqType, EquilibriumInfo, HopfPoint};
pub use ode::{integrate, Crossing, Event, Hit, IntegratorConfig, Record, Solver, Stop, Trajectory};
