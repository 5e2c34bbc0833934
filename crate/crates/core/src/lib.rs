//! Simulation and dual analysis of the max-weight (QLA) controller for
//! queueing networks driven by a finite Markov network state.

pub mod cli;
pub mod controller;
pub mod corpus;
pub mod drift;
pub mod dual;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod markov;
pub mod model;
pub mod queues;
pub mod rng;

pub use controller::{qla_decide, simulate, simulate_with, Policy, SimOptions, Trace};
pub use dual::{g, g_si, maximize_dual, solve_convexified_lp, verify_strong_duality};
pub use error::{Error, Result};
pub use markov::{return_and_hitting_moments, stationary_distribution, MarkovChainSpec};
pub use model::{Action, NetworkSpec, SlacknessCertificate};
pub use queues::QueueVector;
