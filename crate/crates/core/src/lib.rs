//! Model selection for stochastic linear bandits.
//!
//! Learners are told the true parameter (or feature map) lies in one of M
//! candidate models. The crate provides biased ridge experts, a square-loss
//! online aggregator over their predictions, the parameter-selection
//! learner ([`PsOful`]), the feature-selection learner ([`FsScb`]), a
//! regret-balancing baseline and the seeded synthetic environments.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod aggregator;
pub mod balancing;
pub mod bandit;
pub mod env;
pub mod error;
pub mod fs_scb;
pub mod linalg;
pub mod oful;
pub mod policy;
pub mod ps_oful;
pub mod regressor;

pub use aggregator::AggregatorState;
pub use balancing::{reference_u, RegretBalancer};
pub use bandit::{Action, ActionFeature, ActionSet, AssumptionConstants, RegretRecord, RegretTable};
pub use error::{Error, Result};
pub use fs_scb::{FeatureMapModel, FsScb};
pub use oful::Oful;
pub use policy::LinearBandit;
pub use ps_oful::{BallModel, PsOful};
pub use regressor::RegressorState;
