//! The dwell-time automaton `τ` and the activation monitor `ρ`.
//!
//! Both flow with their maximal selections in dilated time: `τ̇ = 1/τ_d`
//! until it saturates at `N0`; `ρ̇ = 1/τ_a` (saturating at `T0`) in stable
//! modes and `ρ̇ = 1/τ_a − 1` in unstable ones. Their values are piecewise
//! linear in `s`, so they are evaluated in closed form rather than integrated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the lower bound `ρ ≥ 0`.
pub const RHO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationClock {
    pub tau_a: f64,
    pub t0: f64,
    pub rho0: f64,
    pub unstable: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub tau_d: f64,
    pub n0: f64,
    pub tau0: f64,
    pub activation: Option<ActivationClock>,
}

impl ClockSpec {
    pub fn dwell(tau_d: f64, n0: f64) -> Self {
        Self {
            tau_d,
            n0,
            tau0: 0.0,
            activation: None,
        }
    }

    pub fn with_activation(mut self, tau_a: f64, t0: f64, unstable: Vec<usize>) -> Self {
        self.activation = Some(ActivationClock {
            tau_a,
            t0,
            rho0: t0,
            unstable,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_d > 0.0 && self.n0 >= 1.0 && self.tau0 >= 0.0 && self.tau0 <= self.n0) {
            return Err(Error::InvalidParams(format!(
                "clock needs tau_d > 0, N0 >= 1 and tau0 in [0, N0] (tau_d={}, N0={}, tau0={})",
                self.tau_d, self.n0, self.tau0
            )));
        }
        if let Some(a) = &self.activation {
            if !(a.tau_a > 1.0 && a.t0 >= 0.0 && a.rho0 >= 0.0 && a.rho0 <= a.t0) {
                return Err(Error::InvalidParams(
                    "activation clock needs tau_a > 1 and rho0 in [0, T0]".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn initial_rho(&self) -> Option<f64> {
        self.activation.as_ref().map(|a| a.rho0)
    }

    pub fn is_unstable(&self, mode: usize) -> bool {
        self.activation
            .as_ref()
            .is_some_and(|a| a.unstable.contains(&mode))
    }

    /// `τ` after flowing for dilated duration `ds`.
    pub fn tau_after(&self, tau: f64, ds: f64) -> f64 {
        (tau + ds / self.tau_d).min(self.n0)
    }

    /// `ρ` after flowing for `ds` in `mode`; may go negative, see [`ClockSpec::check_flow`].
    pub fn rho_after(&self, rho: Option<f64>, mode: usize, ds: f64) -> Option<f64> {
        let a = self.activation.as_ref()?;
        let r = rho?;
        Some(if a.unstable.contains(&mode) {
            r - ds * (1.0 - 1.0 / a.tau_a)
        } else {
            (r + ds / a.tau_a).min(a.t0)
        })
    }

    /// Longest dilated dwell in `mode` that keeps `ρ ≥ 0`.
    pub fn max_dwell(&self, rho: Option<f64>, mode: usize) -> f64 {
        match (&self.activation, rho) {
            (Some(a), Some(r)) if a.unstable.contains(&mode) => r / (1.0 - 1.0 / a.tau_a),
            _ => f64::INFINITY,
        }
    }

    /// Errors if flowing `ds` in `mode` would leave the flow set `ρ ≥ 0`.
    pub fn check_flow(&self, rho: Option<f64>, mode: usize, ds: f64) -> Result<()> {
        if let Some(r) = self.rho_after(rho, mode, ds) {
            if r < -RHO_TOL {
                return Err(Error::FlowSet(format!(
                    "activation budget exhausted in unstable mode {mode} (rho would reach {r})"
                )));
            }
        }
        Ok(())
    }
}
