//! Conceptor-controlled leaky recurrent networks.
//!
//! A leaky-integration echo state network stores a family of temporal
//! patterns through a shared linear readout. Per pattern, the cloud of
//! reservoir states visited while driven is summarized by a conceptor: a
//! positive semidefinite matrix with spectrum in [0, 1) that acts as a soft
//! projector. Inserting the conceptor into the state update ties the
//! autonomous dynamics to the stored pattern, and linear combinations of
//! conceptors morph between patterns.
//!
//! On top of the batch construction this crate provides the online pieces:
//! gradient autoconceptors, an adaptive control loop that pulls the running
//! conceptor toward a fixed target while tracking the actual state cloud,
//! and a diagonal variant for random-feature networks that stacks into
//! layered hierarchies for signal denoising.
//!
//! The crate is deterministic end to end: all randomness flows through
//! seeded ChaCha streams with a pinned draw order.

pub mod conceptor;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod reservoir;
pub mod rfc;
pub mod rng;
pub mod signals;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use rng::SeedRng;
