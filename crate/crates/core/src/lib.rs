//! Markov decision process models of price-responsive smart loads.
//!
//! A device (optional, deferrable, control or storage load) is a small
//! machine whose state evolves under its own actions, while the electricity
//! price follows an exogenous Markov chain. [`devices`] crosses the two into a
//! tabular [`mdp::MdpModel`], [`mdp`] finds the discounted-optimal policy, and
//! [`analysis`] reports how the device then behaves in the long run: where it
//! spends its time, how much it pays and how its demand depends on price.
//!
//! ```
//! use gridmdp::devices::{build_control_load, ControlLoad};
//! use gridmdp::markov::Distribution;
//! use gridmdp::price::PriceChain;
//! use gridmdp::{analysis, mdp};
//!
//! let chain = PriceChain::birth_death(PriceChain::equidistant_levels(1.0, 2.0, 5), 0.5, 0.3)?;
//! let thermostat = ControlLoad { num_temperature_levels: 10, e_cool: 0.1, e_keep: 1.0, e_heat: 2.1 };
//! let model = build_control_load(&thermostat, &chain)?;
//! let solution = mdp::policy_iteration(&model, 0.999)?;
//! let uniform = Distribution::uniform(model.num_states())?;
//! let report = analysis::analyze(&model, &solution.policy, &uniform)?;
//! assert!((report.average_reward + 1.6722).abs() < 1e-3);
//! # Ok::<(), gridmdp::Error>(())
//! ```

pub mod analysis;
pub mod config;
pub mod devices;
pub mod error;
pub mod experiment;
pub mod markov;
pub mod mdp;
pub mod price;

pub use error::{Error, Result};
