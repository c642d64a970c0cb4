//! Collateral allocation as a binary optimisation problem: instance model,
//! QUBO/Ising encodings, a simulated-annealing sampler with exact oracles, an
//! LP reference solver and an experiment harness.

pub mod anneal;
pub mod encode;
pub mod harness;
pub mod lpref;
pub mod model;
pub mod scalar;

pub use scalar::Scalar;

pub type Qubo = encode::QuboModel<f64>;
pub type Qubo32 = encode::QuboModel<f32>;
pub type Ising = encode::IsingModel<f64>;
pub type Ising32 = encode::IsingModel<f32>;
pub type Samples = anneal::SampleSet;
