use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when testing `τ ≥ 1` on the jump set.
pub const JUMP_TOL: f64 = 1e-9;

/// Everything a flow map may read besides `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowContext {
    /// Original time.
    pub t: f64,
    /// Dilated time.
    pub s: f64,
    pub mu: f64,
    pub tau: f64,
    pub rho: Option<f64>,
    pub mode: usize,
}

/// Full hybrid state in the canonical order `(x, τ, ρ, q, μ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub x: Vec<f64>,
    pub tau: f64,
    pub rho: Option<f64>,
    pub mode: usize,
    pub mu: f64,
}

/// Data of a switched plant with resets.
///
/// `flow` is the normalized flow map `f_q(x, u, τ)`: the derivative of `x`
/// with respect to dilated time. In original time the simulator multiplies
/// it by the gain `μ`.
pub trait HybridSystem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn input_dim(&self) -> usize {
        0
    }

    /// Input realized along solutions (zero-length when the plant has none).
    fn input(&self, _ctx: &FlowContext, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn flow(&self, ctx: &FlowContext, x: &[f64], u: &[f64], dx: &mut [f64]);

    /// Reset `R` applied to `x` when switching `from → to`.
    fn reset(&self, _from: usize, _to: usize, _tau: f64, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn in_flow_set(&self, _state: &HybridState) -> bool {
        true
    }

    fn in_jump_set(&self, state: &HybridState) -> bool {
        state.tau >= 1.0 - JUMP_TOL
    }
}

/// Applies the jump map: `x⁺ = R(x)`, `τ⁺ = τ − 1`, `ρ⁺ = ρ`, `q⁺ = to`.
pub fn apply_jump(
    system: &dyn HybridSystem,
    state: &HybridState,
    to_mode: usize,
) -> Result<HybridState> {
    if !system.in_jump_set(state) {
        return Err(Error::GuardViolation(format!(
            "{}: tau = {} below 1 at mode {}",
            system.name(),
            state.tau,
            state.mode
        )));
    }
    let x = system.reset(state.mode, to_mode, state.tau, &state.x);
    if x.len() != state.x.len() {
        return Err(Error::InvalidParams(
            "reset changed the state dimension".into(),
        ));
    }
    Ok(HybridState {
        x,
        tau: (state.tau - 1.0).max(0.0),
        rho: state.rho,
        mode: to_mode,
        mu: state.mu,
    })
}
