//! Equilibrium analysis of a spectrum market run by a virtual operator that
//! can both sense idle spectrum (cheap, uncertain yield) and lease spectrum
//! (dear, certain), then resells bandwidth to price-taking secondary users.
//!
//! The game is solved backward: users' demand ([`demand`]), the operator's
//! price, lease and sensing choices ([`equilibrium`]). [`oracle`] re-derives
//! every stage by brute force, and [`simulator`] replays the market over many
//! slots against a no-sensing baseline.

pub mod config;
pub mod demand;
pub mod equilibrium;
pub mod error;
pub mod format;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{AlphaDistribution, AlphaLaw, CostParams, Scenario, SnrModel, UserProfile};
