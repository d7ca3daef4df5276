//! Utility-maximizing decision policies under causal fairness constraints.
//!
//! The crate is organized bottom-up:
//!
//! * [`scm`] samples factual worlds and path-specific counterfactuals from a
//!   structural causal model.
//! * [`dist`] turns samples or explicit tables into a finite joint
//!   distribution over covariates, potential outcomes and counterfactual
//!   covariates.
//! * [`linprog`] is a dense bounded-variable simplex solver.
//! * [`fairness`] compiles fairness definitions into linear rows and solves
//!   the constrained utility maximization.
//! * [`pareto`] builds multiple-threshold policies, the diversity/graduation
//!   frontier and strong-dominance gaps.
//! * [`markov`] analyzes the averaged counterfactual transition chain.
//! * [`betafair`] computes beta conditional tail means.

pub mod betafair;
pub mod dist;
pub mod error;
pub mod fairness;
pub mod linprog;
pub mod markov;
pub mod pareto;
pub mod scm;

pub use error::{Error, Result};
