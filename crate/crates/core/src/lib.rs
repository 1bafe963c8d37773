//! Extensive-form game solving with continual resolving.
//!
//! The crate is organised bottom-up: [`game`] defines the domain interface,
//! [`tree`], [`public`] and [`eval`] provide exact evaluation over fully
//! expanded trees, [`solver`] holds CFR and outcome-sampling MCCFR,
//! [`gadget`] builds resolving games, [`resolving`] runs continual resolving
//! online, and [`baselines`] plus [`harness`] drive experiments.

pub mod agent;
pub mod baselines;
pub mod domains;
pub mod error;
pub mod eval;
pub mod gadget;
pub mod harness;
pub mod game;
pub mod public;
pub mod resolving;
pub mod solver;
pub mod strategy;
pub mod tree;

pub use error::{Error, Result};
pub use game::{Game, NodeKind, Player};
