//! Space-time facility planning driven by deck-of-cards preference fitting.
//!
//! A [`PlanningInstance`] describes facilities, candidate locations, costs,
//! per-criterion evaluations and the planning horizon. The space-time MILP
//! ([`spacetime`]) generates plans; decision makers rank them with the deck
//! of cards ([`deck`]); ordinal regression ([`fit`]) turns the ranking into
//! a value function that drives the next round of plans ([`session`]).

pub mod capacity;
pub mod deck;
pub mod fit;
pub mod instance;
pub mod money;
pub mod objective;
pub mod plan;
pub mod session;
pub mod spacetime;

pub use capacity::{Capacity2Additive, CapacityError};
pub use deck::{CardRanking, DeckError, ScoreTable};
pub use fit::{fit, Family, FitError, FitItem, FitRequest, RegressionResult, ScalingMode};
pub use instance::{InstanceError, Placement, PlanningInstance};
pub use money::Cents;
pub use objective::{Normalization, ObjectiveError, ObjectiveSpec};
pub use plan::{contribution, Assignment, Contributions, ModelError, Plan};
