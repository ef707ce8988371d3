//! Signal generation by running the `τ` (and `ρ`) automata in dilated time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conditions::{AatParams, AdtParams};
use super::signal::{ModePartition, Piece, SwitchingSignal};
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};
use crate::hybrid::clock::ClockSpec;
use crate::hybrid::sim::{JumpSchedule, ScheduledJump};
use crate::hybrid::system::JUMP_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    /// Next feasible mode in increasing order, wrapping around.
    #[default]
    Cyclic,
    /// Uniform among feasible successors.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchTrigger {
    /// Switch as soon as `τ` reaches 1.
    #[default]
    AtDwellThreshold,
    /// Wait a uniform extra `[0, 2τ_d)` past the threshold.
    Randomized,
    /// Fixed dilated dwell per piece; cycles if shorter than needed.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneratorPolicy {
    pub seed: u64,
    pub selection: ModeSelection,
    pub trigger: SwitchTrigger,
}

/// A generated signal with its jump schedule and the clock that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSignal {
    pub signal: SwitchingSignal,
    pub schedule: JumpSchedule,
    pub clock: ClockSpec,
}

/// Runs the automata from `τ = 0` (and `ρ = T0`) up to the original-time `horizon`.
pub fn generate_signal(
    params: &BlowUpParams,
    adt: &AdtParams,
    aat: Option<&AatParams>,
    partition: &ModePartition,
    initial_mode: usize,
    policy: &GeneratorPolicy,
    horizon: f64,
) -> Result<GeneratedSignal> {
    partition.validate()?;
    if !partition.contains(initial_mode) {
        return Err(Error::InvalidParams(format!(
            "initial mode {initial_mode} is not in the mode set"
        )));
    }
    if aat.is_none() && !partition.unstable.is_empty() {
        return Err(Error::InvalidParams(
            "unstable modes need activation parameters".into(),
        ));
    }
    let s_end = params.dilate(horizon)?;
    let mut clock = ClockSpec::dwell(adt.tau_d, adt.n0);
    if let Some(a) = aat {
        clock = clock.with_activation(a.tau_a, a.t0, partition.unstable.clone());
    }
    clock.validate()?;
    let unstable_rate = aat.map_or(0.0, |a| 1.0 - 1.0 / a.tau_a);
    // dilated dwell needed before τ reaches 1
    let min_dwell = |tau: f64| (1.0 - tau).max(0.0) * adt.tau_d;

    let modes = partition.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut pieces = vec![Piece {
        start: 0.0,
        mode: initial_mode,
    }];
    let mut jumps = Vec::new();
    let (mut s, mut tau, mut rho, mut q) = (0.0, clock.tau0, clock.initial_rho(), initial_mode);
    let mut piece_idx = 0usize;

    if partition.is_unstable(q) && rho.unwrap_or(0.0) < min_dwell(tau) * unstable_rate - JUMP_TOL {
        return Err(Error::InfeasiblePolicy(format!(
            "initial unstable mode {q} cannot reach its first switch"
        )));
    }

    loop {
        let d_min = min_dwell(tau);
        let d_max = clock.max_dwell(rho, q);
        let d = match &policy.trigger {
            SwitchTrigger::AtDwellThreshold => d_min.min(d_max),
            SwitchTrigger::Randomized => (d_min + rng.random::<f64>() * 2.0 * adt.tau_d).min(d_max),
            SwitchTrigger::Explicit(ds) => {
                if ds.is_empty() {
                    return Err(Error::InfeasiblePolicy(
                        "explicit dwell list is empty".into(),
                    ));
                }
                let d = ds[piece_idx % ds.len()];
                if d < d_min * (1.0 - JUMP_TOL) {
                    return Err(Error::InfeasiblePolicy(format!(
                        "dwell {d} leaves tau below 1 (needs {d_min}) at piece {piece_idx}"
                    )));
                }
                if d > d_max * (1.0 + JUMP_TOL) {
                    return Err(Error::InfeasiblePolicy(format!(
                        "dwell {d} in unstable mode {q} exceeds the activation budget {d_max}"
                    )));
                }
                d
            }
        };
        if !(d > 0.0) {
            return Err(Error::InfeasiblePolicy(format!(
                "zero dwell requested at piece {piece_idx}"
            )));
        }
        let s_next = s + d;
        if s_next >= s_end {
            break;
        }
        let tau_j = clock.tau_after(tau, d);
        if tau_j < 1.0 - JUMP_TOL {
            return Err(Error::InfeasiblePolicy(format!(
                "switch with tau = {tau_j} < 1"
            )));
        }
        let rho_j = clock.rho_after(rho, q, d).map(|r| r.max(0.0));
        let tau_plus = (tau_j - 1.0).max(0.0);
        let feasible: Vec<usize> = modes
            .iter()
            .copied()
            .filter(|&m| m != q)
            .filter(|&m| {
                !partition.is_unstable(m)
                    || rho_j.unwrap_or(0.0) >= min_dwell(tau_plus) * unstable_rate - JUMP_TOL
            })
            .collect();
        let next = match policy.selection {
            ModeSelection::Cyclic => feasible
                .iter()
                .copied()
                .find(|&m| m > q)
                .or_else(|| feasible.first().copied()),
            ModeSelection::Uniform => {
                (!feasible.is_empty()).then(|| feasible[rng.random_range(0..feasible.len())])
            }
        }
        .ok_or_else(|| Error::InfeasiblePolicy(format!("no admissible successor of mode {q}")))?;

        let t_next = params.contract(s_next)?;
        if t_next <= pieces.last().expect("nonempty").start {
            // contraction saturates in floating point; stop before a degenerate piece
            break;
        }
        pieces.push(Piece {
            start: t_next,
            mode: next,
        });
        jumps.push(ScheduledJump {
            t: t_next,
            s: s_next,
            mode: next,
        });
        s = s_next;
        tau = tau_plus;
        rho = rho_j;
        q = next;
        piece_idx += 1;
    }

    let signal = SwitchingSignal::new(pieces, horizon, partition.clone())?;
    Ok(GeneratedSignal {
        signal,
        schedule: JumpSchedule {
            initial_mode,
            jumps,
        },
        clock,
    })
}
