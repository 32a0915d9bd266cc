//! Simulators for Parrondo's capital game: the classical coin game, the
//! four-register quantum walk version, its momentum-space counterpart, the
//! mixed (CP-map) game and measurement-collapsed variants.

pub mod classical;
pub mod cli;
pub mod coin_walk;
pub mod cpmap;
pub mod error;
pub mod kspace;
pub mod math;
pub mod measurement;
pub mod par;
pub mod quantum_walk;
pub mod series;

pub use classical::{ClassicalGameParams, Strategy, StrategySchedule};
pub use error::{Error, Result};
pub use math::{default_coins, CoinSet, Su2Params, Unitary2};
pub use par::Exec;
pub use series::{CapitalRow, CapitalSeries, TrajectoryPath};
