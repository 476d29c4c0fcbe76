#![allow(dead_code)]

use gridmdp::devices::{ControlLoad, DeferrableLoad, DeviceSpec, OptionalLoad, StorageLoad};
use gridmdp::mdp::{Choice, MdpModel, StateLabel, Transition};
use gridmdp::price::PriceChain;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LEVELS: [f64; 5] = [1.0, 1.25, 1.5, 1.75, 2.0];

pub fn reference_chain() -> PriceChain {
    PriceChain::birth_death(LEVELS.to_vec(), 0.5, 0.3).unwrap()
}

pub fn thermostat() -> ControlLoad {
    ControlLoad {
        num_temperature_levels: 10,
        e_cool: 0.1,
        e_keep: 1.0,
        e_heat: 2.1,
    }
}

/// The four device kinds with the parameters shipped in `configs/`.
pub fn default_devices() -> Vec<DeviceSpec> {
    vec![
        DeviceSpec::Optional(OptionalLoad {
            rho_on: 0.3,
            rho_off: 0.2,
            e_full: 1.0,
            e_shed: 0.3,
            c_full: 1.0,
            c_shed: 0.5,
        }),
        DeviceSpec::Deferrable(DeferrableLoad {
            rho_on: 0.3,
            e_work: 1.0,
            c_delay: -0.1,
        }),
        DeviceSpec::Control(thermostat()),
        DeviceSpec::Storage(StorageLoad {
            rho_on: 0.3,
            rho_off: 0.2,
            e_keep_partial: 0.05,
            e_keep_full: 0.1,
            e_charge: 1.0,
            e_discharge: -0.9,
            c_unplug: -0.5,
        }),
    ]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability row over `n` states with roughly half the entries zero.
pub fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    let k = rng.random_range(0..n);
    row[k] += 0.1;
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    row
}

/// Random MDP with up to `max_states` states, `max_actions` actions and
/// rewards uniform in [-1, 1].
pub fn random_mdp(seed: u64, max_states: usize, max_actions: usize) -> MdpModel {
    let mut rng = rng(seed);
    let n = rng.random_range(1..=max_states);
    let actions = rng.random_range(1..=max_actions);
    let choices = (0..n)
        .map(|_| {
            let mut available: Vec<usize> = (0..actions).filter(|_| rng.random_bool(0.7)).collect();
            if available.is_empty() {
                available.push(rng.random_range(0..actions));
            }
            available
                .into_iter()
                .map(|a| {
                    let row = random_row(&mut rng, n);
                    Choice {
                        action: a,
                        energy: rng.random::<f64>(),
                        transitions: row
                            .into_iter()
                            .enumerate()
                            .filter(|(_, p)| *p > 0.0)
                            .map(|(j, p)| Transition {
                                next: j,
                                probability: p,
                                reward: rng.random_range(-1.0..=1.0),
                            })
                            .collect(),
                    }
                })
                .collect()
        })
        .collect();
    MdpModel::new(
        (0..actions).map(|a| format!("a{a}")).collect(),
        (0..n)
            .map(|s| StateLabel {
                machine: s,
                price: 0,
            })
            .collect(),
        choices,
    )
    .unwrap()
}

/// Copy of `model` with every transition reward passed through `f`.
pub fn map_rewards(model: &MdpModel, f: impl Fn(f64) -> f64) -> MdpModel {
    let choices = (0..model.num_states())
        .map(|s| {
            model
                .choices(s)
                .iter()
                .map(|c| Choice {
                    transitions: c
                        .transitions
                        .iter()
                        .map(|t| Transition {
                            reward: f(t.reward),
                            ..*t
                        })
                        .collect(),
                    ..c.clone()
                })
                .collect()
        })
        .collect();
    MdpModel::new(
        model.action_names().to_vec(),
        model.labels().to_vec(),
        choices,
    )
    .unwrap()
}

/// Stationary distribution by solving p(M − I) = 0, Σp = 1 directly.
pub fn stationary_by_linear_solve(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = m[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    a.lu()
        .solve(&b)
        .expect("irreducible chain")
        .iter()
        .copied()
        .collect()
}

/// Random irreducible chain: random rows plus a guaranteed cycle 0→1→…→0.
pub fn random_irreducible(seed: u64, n: usize) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..n)
        .map(|i| {
            let mut row = random_row(&mut rng, n);
            row.iter_mut().for_each(|p| *p *= 0.9);
            row[(i + 1) % n] += 0.1;
            row
        })
        .collect()
}

/// Thermostat induced chain enumerated directly from the device rules:
/// heat/keep/cool move the temperature by +1/0/−1 and prices follow the
/// reference birth-death chain. Independent of the model builder.
pub fn thermostat_induced_dense(actions: &[&str]) -> Vec<Vec<f64>> {
    let (nt, np) = (10, 5);
    let mut t = [[0.0; 5]; 5];
    for c in 0..np {
        if c + 1 < np {
            t[c][c + 1] = 0.5;
        }
        if c > 0 {
            t[c][c - 1] = 0.3;
        }
        t[c][c] = 1.0 - t[c].iter().sum::<f64>();
    }
    let mut m = vec![vec![0.0; nt * np]; nt * np];
    for x in 0..nt {
        for c in 0..np {
            let s = x * np + c;
            let x2 = match actions[s] {
                "heat" => x + 1,
                "keep" => x,
                "cool" => x - 1,
                other => panic!("unknown thermostat action {other}"),
            };
            for c2 in 0..np {
                m[s][x2 * np + c2] = t[c][c2];
            }
        }
    }
    m
}

pub fn thermostat_energy(action: &str) -> f64 {
    match action {
        "heat" => 2.1,
        "keep" => 1.0,
        "cool" => 0.1,
        other => panic!("unknown thermostat action {other}"),
    }
}
