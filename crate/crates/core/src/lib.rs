//! Exact and stochastic analysis of classical control strategies that build
//! linear cluster chains from EPR pairs with probabilistic fusion gates, plus
//! the analytic bounds and the 2D weaving model.

pub mod bounds;
pub mod config;
pub mod error;
pub mod exact;
pub mod lemmas;
pub mod montecarlo;
pub mod strategy;
pub mod twodim;
pub mod value;

pub use config::{Action, Configuration, Event, IdentityConfiguration, IndexAction, Outcome};
pub use error::{Error, Result, Violation};
pub use exact::{Evaluation, QualityTable};
pub use strategy::{static_strategy, Anonymous, Greed, LookupStrategy, Modesty, StatefulStrategy, Strategy, TwoStage};
pub use value::{ExactValue, Probability, Scalar};
