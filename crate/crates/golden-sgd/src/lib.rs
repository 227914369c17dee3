//! An optimizer laboratory around SGD with theoretically derived
//! hyperparameters (learning rate η ≈ 0.016, momentum α ≈ 0.874).
//!
//! The crate bundles the closed-form derivation of the constants, a minimal
//! f64 tensor/backprop engine for a small MNIST-style CNN, SGD-with-momentum
//! and Adam optimizers, dataset plumbing with two noise-injection
//! procedures, the statistics used to compare optimizers, and a grid-search
//! harness that drives everything from a CLI.

pub mod bayes;
pub mod data;
pub mod harness;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod stats;
