//! The four smart-load device models.
//!
//! Each device is described by its machine dynamics alone: per machine state,
//! the available actions, the energy each consumes and the random machine
//! successor with a comfort term. [`FactoredKernel::compose`] crosses these
//! with the price chain, so that
//!
//! ```text
//! P_a((x,c),(x',c')) = T(c'|c) · D_a(x,x')
//! R_a((x,c),(x',c')) = comfort_a(x,x') − price · E_a(x)
//! ```
//!
//! Full states are indexed machine-major: `s = x · N_P + c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Choice, MdpModel, StateLabel, Transition};
use crate::price::PriceChain;

/// Which price level is charged for the energy of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardPrice {
    /// Price of the state the transition leaves.
    #[default]
    Current,
    /// Price of the state the transition enters.
    Next,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    Optional,
    Deferrable,
    Control,
    Storage,
}

/// A load that runs at full or shed capacity while switched on (dimmable lights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionalLoad {
    pub rho_on: f64,
    pub rho_off: f64,
    pub e_full: f64,
    pub e_shed: f64,
    pub c_full: f64,
    pub c_shed: f64,
}

/// A job that may be postponed at a comfort cost (dishwasher).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeferrableLoad {
    pub rho_on: f64,
    pub e_work: f64,
    pub c_delay: f64,
}

/// A heater holding a temperature between bounds (thermostat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlLoad {
    pub num_temperature_levels: usize,
    pub e_cool: f64,
    pub e_keep: f64,
    pub e_heat: f64,
}

/// A battery that can be unplugged at random (plug-in vehicle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageLoad {
    pub rho_on: f64,
    pub rho_off: f64,
    /// Holding energy when partially charged.
    pub e_keep_partial: f64,
    /// Holding energy when fully charged.
    pub e_keep_full: f64,
    pub e_charge: f64,
    /// Negative: discharging feeds energy back.
    pub e_discharge: f64,
    pub c_unplug: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceSpec {
    Optional(OptionalLoad),
    Deferrable(DeferrableLoad),
    Control(ControlLoad),
    Storage(StorageLoad),
}

/// A failed parameter constraint, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::InvalidDevice(format!("{}: {}", v.field, v.reason))
    }
}

type Check = std::result::Result<(), Violation>;

fn violation(field: &'static str, reason: String) -> Check {
    Err(Violation { field, reason })
}

fn probability(field: &'static str, p: f64) -> Check {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        violation(field, format!("{p} is not a probability"))
    }
}

fn finite(field: &'static str, x: f64) -> Check {
    if x.is_finite() {
        Ok(())
    } else {
        violation(field, format!("{x} is not finite"))
    }
}

fn greater(field: &'static str, x: f64, other: &str, y: f64) -> Check {
    if x > y {
        Ok(())
    } else {
        violation(field, format!("must exceed {other} ({y}), got {x}"))
    }
}

impl OptionalLoad {
    pub const ACTIONS: [&'static str; 3] = ["pass", "full", "shed"];
    pub const MACHINE_STATES: [&'static str; 2] = ["idle", "active"];

    pub fn check(&self) -> Check {
        probability("rho_on", self.rho_on)?;
        probability("rho_off", self.rho_off)?;
        for (f, x) in [
            ("e_full", self.e_full),
            ("e_shed", self.e_shed),
            ("c_full", self.c_full),
            ("c_shed", self.c_shed),
        ] {
            finite(f, x)?;
        }
        greater("e_shed", self.e_shed, "0", 0.0)?;
        greater("e_full", self.e_full, "e_shed", self.e_shed)?;
        greater("c_full", self.c_full, "c_shed", self.c_shed)
    }

    pub fn kernel(&self) -> FactoredKernel {
        let (on, off) = (self.rho_on, self.rho_off);
        let switch_off = |energy, comfort, action| MachineChoice {
            action,
            energy,
            outcomes: vec![
                MachineOutcome::new(0, off, comfort),
                MachineOutcome::new(1, 1.0 - off, comfort),
            ],
        };
        FactoredKernel::new(
            &Self::ACTIONS,
            &Self::MACHINE_STATES,
            vec![
                vec![pass(on)],
                vec![
                    switch_off(self.e_full, self.c_full, 1),
                    switch_off(self.e_shed, self.c_shed, 2),
                ],
            ],
        )
    }
}

/// Idle-state action shared by optional, deferrable and storage devices:
/// an external request arrives with probability `rho_on`.
fn pass(rho_on: f64) -> MachineChoice {
    MachineChoice {
        action: 0,
        energy: 0.0,
        outcomes: vec![
            MachineOutcome::new(1, rho_on, 0.0),
            MachineOutcome::new(0, 1.0 - rho_on, 0.0),
        ],
    }
}

impl DeferrableLoad {
    pub const ACTIONS: [&'static str; 3] = ["pass", "wait", "work"];
    pub const MACHINE_STATES: [&'static str; 2] = ["idle", "waiting"];

    pub fn check(&self) -> Check {
        probability("rho_on", self.rho_on)?;
        finite("e_work", self.e_work)?;
        finite("c_delay", self.c_delay)?;
        greater("e_work", self.e_work, "0", 0.0)?;
        if self.c_delay < 0.0 {
            Ok(())
        } else {
            violation("c_delay", format!("must be negative, got {}", self.c_delay))
        }
    }

    pub fn kernel(&self) -> FactoredKernel {
        FactoredKernel::new(
            &Self::ACTIONS,
            &Self::MACHINE_STATES,
            vec![
                vec![pass(self.rho_on)],
                vec![
                    MachineChoice {
                        action: 1,
                        energy: 0.0,
                        outcomes: vec![MachineOutcome::new(1, 1.0, self.c_delay)],
                    },
                    MachineChoice {
                        action: 2,
                        energy: self.e_work,
                        outcomes: vec![MachineOutcome::new(0, 1.0, 0.0)],
                    },
                ],
            ],
        )
    }
}

impl ControlLoad {
    pub const ACTIONS: [&'static str; 3] = ["cool", "keep", "heat"];

    pub fn check(&self) -> Check {
        if self.num_temperature_levels < 2 {
            return violation(
                "num_temperature_levels",
                format!(
                    "need at least 2 levels, got {}",
                    self.num_temperature_levels
                ),
            );
        }
        for (f, x) in [
            ("e_cool", self.e_cool),
            ("e_keep", self.e_keep),
            ("e_heat", self.e_heat),
        ] {
            finite(f, x)?;
        }
        if self.e_cool < 0.0 {
            return violation(
                "e_cool",
                format!("must be non-negative, got {}", self.e_cool),
            );
        }
        greater("e_keep", self.e_keep, "e_cool", self.e_cool)?;
        greater("e_heat", self.e_heat, "e_keep", self.e_keep)
    }

    /// Deterministic temperature moves; heating is unavailable at the top
    /// level and cooling at the bottom.
    pub fn kernel(&self) -> FactoredKernel {
        let n = self.num_temperature_levels;
        let names: Vec<String> = (0..n).map(|x| format!("t{x}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let step = |action, energy, next| MachineChoice {
            action,
            energy,
            outcomes: vec![MachineOutcome::new(next, 1.0, 0.0)],
        };
        let choices = (0..n)
            .map(|x| {
                let mut available = Vec::with_capacity(3);
                if x > 0 {
                    available.push(step(0, self.e_cool, x - 1));
                }
                available.push(step(1, self.e_keep, x));
                if x + 1 < n {
                    available.push(step(2, self.e_heat, x + 1));
                }
                available
            })
            .collect();
        FactoredKernel::new(&Self::ACTIONS, &names, choices)
    }
}

impl StorageLoad {
    pub const ACTIONS: [&'static str; 4] = ["pass", "keep", "charge", "discharge"];
    pub const MACHINE_STATES: [&'static str; 3] = ["unplugged", "partial", "full"];

    pub fn check(&self) -> Check {
        probability("rho_on", self.rho_on)?;
        probability("rho_off", self.rho_off)?;
        for (f, x) in [
            ("e_keep_partial", self.e_keep_partial),
            ("e_keep_full", self.e_keep_full),
            ("e_charge", self.e_charge),
            ("e_discharge", self.e_discharge),
            ("c_unplug", self.c_unplug),
        ] {
            finite(f, x)?;
        }
        greater("e_keep_partial", self.e_keep_partial, "0", 0.0)?;
        greater(
            "e_keep_full",
            self.e_keep_full,
            "e_keep_partial",
            self.e_keep_partial,
        )?;
        greater("e_charge", self.e_charge, "0", 0.0)?;
        if self.e_discharge >= 0.0 {
            return violation(
                "e_discharge",
                format!("must be negative, got {}", self.e_discharge),
            );
        }
        if self.c_unplug >= 0.0 {
            return violation(
                "c_unplug",
                format!("must be negative, got {}", self.c_unplug),
            );
        }
        Ok(())
    }

    /// Every plugged-in action may end unplugged with probability `rho_off`.
    /// The unplug discomfort applies to keep only when leaving the partial
    /// state, and to discharge always; charge carries none.
    pub fn kernel(&self) -> FactoredKernel {
        let off = self.rho_off;
        let plugged = |action, energy, target, unplug_comfort| MachineChoice {
            action,
            energy,
            outcomes: vec![
                MachineOutcome::new(0, off, unplug_comfort),
                MachineOutcome::new(target, 1.0 - off, 0.0),
            ],
        };
        FactoredKernel::new(
            &Self::ACTIONS,
            &Self::MACHINE_STATES,
            vec![
                vec![pass(self.rho_on)],
                vec![
                    plugged(1, self.e_keep_partial, 1, self.c_unplug),
                    plugged(2, self.e_charge, 2, 0.0),
                ],
                vec![
                    plugged(1, self.e_keep_full, 2, 0.0),
                    plugged(3, self.e_discharge, 1, self.c_unplug),
                ],
            ],
        )
    }
}

impl DeviceSpec {
    pub fn kind(&self) -> DeviceKind {
        match self {
            DeviceSpec::Optional(_) => DeviceKind::Optional,
            DeviceSpec::Deferrable(_) => DeviceKind::Deferrable,
            DeviceSpec::Control(_) => DeviceKind::Control,
            DeviceSpec::Storage(_) => DeviceKind::Storage,
        }
    }

    pub fn check(&self) -> Check {
        match self {
            DeviceSpec::Optional(d) => d.check(),
            DeviceSpec::Deferrable(d) => d.check(),
            DeviceSpec::Control(d) => d.check(),
            DeviceSpec::Storage(d) => d.check(),
        }
    }

    pub fn kernel(&self) -> FactoredKernel {
        match self {
            DeviceSpec::Optional(d) => d.kernel(),
            DeviceSpec::Deferrable(d) => d.kernel(),
            DeviceSpec::Control(d) => d.kernel(),
            DeviceSpec::Storage(d) => d.kernel(),
        }
    }

    /// The price-ignoring action used as a baseline for comparisons.
    pub fn naive_action(&self) -> &'static str {
        match self {
            DeviceSpec::Optional(_) => "full",
            DeviceSpec::Deferrable(_) => "work",
            DeviceSpec::Control(_) | DeviceSpec::Storage(_) => "keep",
        }
    }

    pub fn build(&self, chain: &PriceChain, pricing: RewardPrice) -> Result<MdpModel> {
        self.check()?;
        self.kernel().compose(chain, pricing)
    }
}

pub fn build_optional_load(spec: &OptionalLoad, chain: &PriceChain) -> Result<MdpModel> {
    spec.check()?;
    spec.kernel().compose(chain, RewardPrice::Current)
}

pub fn build_deferrable_load(spec: &DeferrableLoad, chain: &PriceChain) -> Result<MdpModel> {
    spec.check()?;
    spec.kernel().compose(chain, RewardPrice::Current)
}

pub fn build_control_load(spec: &ControlLoad, chain: &PriceChain) -> Result<MdpModel> {
    spec.check()?;
    spec.kernel().compose(chain, RewardPrice::Current)
}

pub fn build_storage_load(spec: &StorageLoad, chain: &PriceChain) -> Result<MdpModel> {
    spec.check()?;
    spec.kernel().compose(chain, RewardPrice::Current)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineOutcome {
    pub next: usize,
    pub probability: f64,
    /// Comfort reward collected on this outcome, independent of price.
    pub comfort: f64,
}

impl MachineOutcome {
    pub fn new(next: usize, probability: f64, comfort: f64) -> Self {
        MachineOutcome {
            next,
            probability,
            comfort,
        }
    }
}

/// An action available in a machine state, before crossing with prices.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineChoice {
    pub action: usize,
    pub energy: f64,
    pub outcomes: Vec<MachineOutcome>,
}

/// Machine-only dynamics D_a(x,x') of a device.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredKernel {
    pub action_names: Vec<String>,
    pub machine_states: Vec<String>,
    /// Available actions per machine state.
    pub choices: Vec<Vec<MachineChoice>>,
}

impl FactoredKernel {
    pub fn new(
        actions: &[&str],
        machine_states: &[&str],
        choices: Vec<Vec<MachineChoice>>,
    ) -> Self {
        FactoredKernel {
            action_names: actions.iter().map(|a| a.to_string()).collect(),
            machine_states: machine_states.iter().map(|x| x.to_string()).collect(),
            choices,
        }
    }

    pub fn num_machine_states(&self) -> usize {
        self.choices.len()
    }

    /// Dense machine row D_a(x,·), or `None` if `action` is unavailable in `x`.
    pub fn machine_row(&self, x: usize, action: usize) -> Option<Vec<f64>> {
        let choice = self.choices.get(x)?.iter().find(|c| c.action == action)?;
        let mut row = vec![0.0; self.num_machine_states()];
        for o in &choice.outcomes {
            row[o.next] += o.probability;
        }
        Some(row)
    }

    /// Crosses the machine dynamics with the price chain into a full model.
    pub fn compose(&self, chain: &PriceChain, pricing: RewardPrice) -> Result<MdpModel> {
        let machines = self.num_machine_states();
        let prices = chain.len();
        if self.machine_states.len() != machines {
            return Err(Error::InvalidModel(format!(
                "{} machine state names for {machines} machine states",
                self.machine_states.len()
            )));
        }
        for (x, state_choices) in self.choices.iter().enumerate() {
            for choice in state_choices {
                if choice.action >= self.action_names.len() {
                    return Err(Error::InvalidModel(format!(
                        "machine state {x} uses unknown action {}",
                        choice.action
                    )));
                }
                if let Some(o) = choice.outcomes.iter().find(|o| o.next >= machines) {
                    return Err(Error::InvalidModel(format!(
                        "machine state {x}, action {}: successor {} outside 0..{machines}",
                        choice.action, o.next
                    )));
                }
            }
        }

        let levels = chain.levels();
        let mut labels = Vec::with_capacity(machines * prices);
        let mut choices = Vec::with_capacity(machines * prices);
        for (x, state_choices) in self.choices.iter().enumerate() {
            for c in 0..prices {
                labels.push(StateLabel {
                    machine: x,
                    price: c,
                });
                let full = state_choices
                    .iter()
                    .map(|mc| {
                        let mut transitions = Vec::new();
                        for o in &mc.outcomes {
                            if o.probability == 0.0 {
                                continue;
                            }
                            for (c_next, &t) in chain.transition()[c].iter().enumerate() {
                                if t == 0.0 {
                                    continue;
                                }
                                let price = match pricing {
                                    RewardPrice::Current => levels[c],
                                    RewardPrice::Next => levels[c_next],
                                };
                                transitions.push(Transition {
                                    next: o.next * prices + c_next,
                                    probability: t * o.probability,
                                    reward: o.comfort - price * mc.energy,
                                });
                            }
                        }
                        Choice {
                            action: mc.action,
                            energy: mc.energy,
                            transitions,
                        }
                    })
                    .collect();
                choices.push(full);
            }
        }
        MdpModel::new(self.action_names.clone(), labels, choices)
    }
}

/// Index of `(machine, price)` in machine-major order.
pub fn state_index(machine: usize, price: usize, num_prices: usize) -> usize {
    machine * num_prices + price
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> PriceChain {
        PriceChain::birth_death(PriceChain::equidistant_levels(1.0, 2.0, 5), 0.5, 0.3).unwrap()
    }

    fn thermostat() -> ControlLoad {
        ControlLoad {
            num_temperature_levels: 10,
            e_cool: 0.1,
            e_keep: 1.0,
            e_heat: 2.1,
        }
    }

    fn optional() -> OptionalLoad {
        OptionalLoad {
            rho_on: 0.3,
            rho_off: 0.2,
            e_full: 2.0,
            e_shed: 0.3,
            c_full: 1.0,
            c_shed: 0.5,
        }
    }

    fn storage() -> StorageLoad {
        StorageLoad {
            rho_on: 0.3,
            rho_off: 0.2,
            e_keep_partial: 0.05,
            e_keep_full: 0.1,
            e_charge: 1.0,
            e_discharge: -1.0,
            c_unplug: -0.5,
        }
    }

    #[test]
    fn optional_pass_transition() {
        let chain = chain();
        let model = build_optional_load(&optional(), &chain).unwrap();
        let c = 2;
        let row = model.kernel_row(state_index(0, c, 5), 0).unwrap();
        for c2 in 0..5 {
            let t = chain.probability(c, c2);
            assert!((row[state_index(1, c2, 5)] - 0.3 * t).abs() < 1e-15);
            assert!((row[state_index(0, c2, 5)] - 0.7 * t).abs() < 1e-15);
        }
        assert_eq!(
            model.available(state_index(0, c, 5)).collect::<Vec<_>>(),
            vec![0]
        );
        assert_eq!(
            model.available(state_index(1, c, 5)).collect::<Vec<_>>(),
            vec![1, 2]
        );
    }

    #[test]
    fn optional_full_reward() {
        let model = build_optional_load(&optional(), &chain()).unwrap();
        // c = 1.5 is level 2
        for t in &model.choice(state_index(1, 2, 5), 1).unwrap().transitions {
            assert!((t.reward - (-2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn optional_without_requests_stays_idle() {
        let spec = OptionalLoad {
            rho_on: 0.0,
            ..optional()
        };
        let model = build_optional_load(&spec, &chain()).unwrap();
        for c in 0..5 {
            let choice = model.choice(state_index(0, c, 5), 0).unwrap();
            assert!(choice
                .transitions
                .iter()
                .all(|t| model.label(t.next).machine == 0));
        }
    }

    #[test]
    fn deferrable_transitions_and_rewards() {
        let spec = DeferrableLoad {
            rho_on: 0.3,
            e_work: 1.0,
            c_delay: -0.1,
        };
        let chain = chain();
        let model = build_deferrable_load(&spec, &chain).unwrap();
        let waiting = state_index(1, 3, 5);
        let wait = model.choice(waiting, 1).unwrap();
        for t in &wait.transitions {
            assert_eq!(model.label(t.next).machine, 1);
            assert_eq!(t.reward, -0.1);
            assert_eq!(
                t.probability,
                chain.probability(3, model.label(t.next).price)
            );
        }
        let work = model.choice(waiting, 2).unwrap();
        assert!(work
            .transitions
            .iter()
            .all(|t| model.label(t.next).machine == 0));
        assert_eq!(
            model.expected_reward(state_index(1, 0, 5), 2).unwrap(),
            -1.0
        );
        assert!(DeferrableLoad {
            c_delay: 0.0,
            ..spec
        }
        .check()
        .is_err());
    }

    #[test]
    fn control_model_shape() {
        let chain = chain();
        let model = build_control_load(&thermostat(), &chain).unwrap();
        assert_eq!(model.num_states(), 50);
        for c in 0..5 {
            assert_eq!(
                model.available(state_index(0, c, 5)).collect::<Vec<_>>(),
                vec![1, 2]
            );
            assert_eq!(
                model.available(state_index(9, c, 5)).collect::<Vec<_>>(),
                vec![0, 1]
            );
            assert_eq!(model.available(state_index(4, c, 5)).count(), 3);
        }
        let s = state_index(3, 1, 5);
        let keep = model.choice(s, 1).unwrap();
        for t in &keep.transitions {
            assert_eq!(model.label(t.next).machine, 3);
            assert_eq!(
                t.probability,
                chain.probability(1, model.label(t.next).price)
            );
            assert!((t.reward - (-1.25)).abs() < 1e-15);
        }
        let heat = model.expected_reward(state_index(3, 4, 5), 2).unwrap();
        assert!((heat - (-4.2)).abs() < 1e-12);
    }

    #[test]
    fn control_rejects_bad_parameters() {
        let one_level = ControlLoad {
            num_temperature_levels: 1,
            ..thermostat()
        };
        assert!(build_control_load(&one_level, &chain()).is_err());
        let inverted = ControlLoad {
            e_heat: 1.0,
            ..thermostat()
        };
        let err = inverted.check().unwrap_err();
        assert_eq!(err.field, "e_heat");
    }

    #[test]
    fn storage_keep_from_full() {
        let chain = chain();
        let model = build_storage_load(&storage(), &chain).unwrap();
        let s = state_index(2, 1, 5);
        let row = model.kernel_row(s, 1).unwrap();
        for c2 in 0..5 {
            let t = chain.probability(1, c2);
            assert!((row[state_index(0, c2, 5)] - 0.2 * t).abs() < 1e-15);
            assert!((row[state_index(2, c2, 5)] - 0.8 * t).abs() < 1e-15);
            assert_eq!(row[state_index(1, c2, 5)], 0.0);
        }
        // no unplug discomfort when keeping from full
        for t in &model.choice(s, 1).unwrap().transitions {
            assert!((t.reward - (-1.25 * 0.1)).abs() < 1e-15);
        }
        // from partial the discomfort applies on unplugging
        let partial = model.choice(state_index(1, 0, 5), 1).unwrap();
        for t in &partial.transitions {
            let want = if model.label(t.next).machine == 0 {
                -0.5 - 0.05
            } else {
                -0.05
            };
            assert!((t.reward - want).abs() < 1e-15);
        }
    }

    #[test]
    fn storage_discharge_reward() {
        let model = build_storage_load(&storage(), &chain()).unwrap();
        let discharge = model.choice(state_index(2, 4, 5), 3).unwrap();
        for t in &discharge.transitions {
            let want = if model.label(t.next).machine == 1 {
                2.0
            } else {
                1.5
            };
            assert!((t.reward - want).abs() < 1e-15);
        }
        let tight = StorageLoad {
            rho_off: 0.0,
            ..storage()
        };
        let model = build_storage_load(&tight, &chain()).unwrap();
        for t in &model.choice(state_index(2, 4, 5), 1).unwrap().transitions {
            assert_eq!(model.label(t.next).machine, 2);
            assert!((t.reward - (-0.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn storage_rejects_non_negative_discharge() {
        let bad = StorageLoad {
            e_discharge: 0.5,
            ..storage()
        };
        assert_eq!(bad.check().unwrap_err().field, "e_discharge");
    }

    #[test]
    fn compose_matches_kronecker_product() {
        let chain = PriceChain::birth_death(vec![1.0, 2.0], 0.5, 0.5).unwrap();
        let stay = |action| MachineChoice {
            action,
            energy: 0.0,
            outcomes: vec![MachineOutcome::new(action, 1.0, 0.0)],
        };
        // the identity machine kernel; action index doubles as the state it pins
        let kernel = FactoredKernel::new(
            &["a", "b"],
            &["x0", "x1"],
            vec![vec![stay(0)], vec![stay(1)]],
        );
        let model = kernel.compose(&chain, RewardPrice::Current).unwrap();
        let identity = [[1.0, 0.0], [0.0, 1.0]];
        for x in 0..2 {
            for c in 0..2 {
                let row = model.kernel_row(state_index(x, c, 2), x).unwrap();
                for x2 in 0..2 {
                    for c2 in 0..2 {
                        let kron = identity[x][x2] * chain.transition()[c][c2];
                        assert_eq!(row[state_index(x2, c2, 2)], kron);
                    }
                }
            }
        }
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let kernel = FactoredKernel::new(
            &["a"],
            &["x0"],
            vec![vec![MachineChoice {
                action: 0,
                energy: 0.0,
                outcomes: vec![MachineOutcome::new(3, 1.0, 0.0)],
            }]],
        );
        assert!(kernel.compose(&chain(), RewardPrice::Current).is_err());
    }

    #[test]
    fn next_price_rewards() {
        let chain = chain();
        let model = thermostat()
            .kernel()
            .compose(&chain, RewardPrice::Next)
            .unwrap();
        for t in &model.choice(state_index(3, 2, 5), 1).unwrap().transitions {
            let c2 = model.label(t.next).price;
            assert!((t.reward + chain.levels()[c2]).abs() < 1e-15);
        }
    }
}
