//! Terahertz UAV mesh network simulator with an embedded graph-aided
//! deterministic policy gradient agent (GLOVE) that jointly allocates
//! transmit power and antenna sub-arrays.
//!
//! The physical simulation (`channel`, `network`, `traffic`, `env`) runs in
//! `f64`. The learning stack (`nn`, `agent`) is generic over [`Scalar`];
//! the aliases below pin the double-precision instantiation used for
//! training.

pub mod agent;
pub mod channel;
pub mod env;
pub mod error;
pub mod harness;
pub mod network;
pub mod nn;
pub mod rng;
pub mod scalar;
pub mod traffic;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense matrix in training precision.
pub type Tensor = nn::Tensor<f64>;
/// Parameter collection in training precision.
pub type ParamSet = nn::ParamSet<f64>;
/// Reverse-mode tape in training precision.
pub type Tape = nn::Tape<f64>;
/// Adam optimizer state in training precision.
pub type Adam = nn::Adam<f64>;
/// GLOVE actor in training precision.
pub type Actor = agent::Actor<f64>;
/// GLOVE critic in training precision.
pub type Critic = agent::Critic<f64>;
/// Full actor/critic agent in training precision.
pub type Agent = agent::Glove<f64>;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
