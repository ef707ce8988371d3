//! Blow-up gains and the time dilation/contraction pair.
//!
//! The gain `μ_k(t) = T^k / (Υ − t)^k` solves `μ̇ = (k/T) μ^{1+1/k}` from
//! `μ(0) = μ0` and escapes at the terminal time `Υ = T μ0^{-1/k}`.
//! The dilation `s = T_k(t) = ∫₀ᵗ μ_k` maps `[0, Υ)` onto `[0, ∞)`.
//!
//! Everything is written in terms of the log-horizon
//! `L(t) = ln(Υ / (Υ − t))`, so that `μ = μ0 e^{kL}` and
//! `T_k(t) = T μ0^ρ (e^{(k−1)L} − 1)/(k−1)` with `ρ = (k−1)/k`.
//! The `expm1`/`ln_1p` forms keep the `k → 1` limit and short horizons exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orders below `1 + K_LOG_BRANCH` use the exact `k = 1` log/exp forms.
pub const K_LOG_BRANCH: f64 = 1e-9;

/// Default terminal clipping fraction `ε_term`.
pub const DEFAULT_EPS_TERM: f64 = 1e-6;

/// The triple `(T, k, μ0)` plus the terminal clipping fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpParams {
    #[serde(rename = "T")]
    pub t_scale: f64,
    pub k: f64,
    pub mu0: f64,
    #[serde(default = "default_eps")]
    pub eps_term: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS_TERM
}

impl BlowUpParams {
    pub fn new(t_scale: f64, k: f64, mu0: f64) -> Result<Self> {
        let p = Self {
            t_scale,
            k,
            mu0,
            eps_term: DEFAULT_EPS_TERM,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eps_term(mut self, eps: f64) -> Result<Self> {
        self.eps_term = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_scale.is_finite() && self.t_scale > 0.0) {
            return Err(Error::InvalidParams(format!(
                "T must be positive, got {}",
                self.t_scale
            )));
        }
        if !(self.k.is_finite() && self.k >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "k must be >= 1, got {}",
                self.k
            )));
        }
        if !(self.mu0.is_finite() && self.mu0 >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "mu0 must be >= 1, got {}",
                self.mu0
            )));
        }
        if !(self.eps_term > 0.0 && self.eps_term < 1.0) {
            return Err(Error::InvalidParams(format!(
                "eps_term must lie in (0, 1), got {}",
                self.eps_term
            )));
        }
        Ok(())
    }

    /// `Υ = T μ0^{-1/k}`.
    pub fn terminal_time(&self) -> f64 {
        self.t_scale * self.mu0.powf(-1.0 / self.k)
    }

    /// Largest admissible original time, `(1 − ε_term) Υ`.
    pub fn t_max(&self) -> f64 {
        (1.0 - self.eps_term) * self.terminal_time()
    }

    /// `ρ(k) = (k − 1)/k`.
    pub fn rho(&self) -> f64 {
        (self.k - 1.0) / self.k
    }

    pub fn is_log_branch(&self) -> bool {
        self.k < 1.0 + K_LOG_BRANCH
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_max()) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, (1-eps)Y] = [0, {}]",
                self.t_max()
            )));
        }
        Ok(())
    }

    /// `L(t) = ln(Υ/(Υ − t))`, valid for `0 ≤ t < Υ`.
    fn log_horizon(&self, t: f64) -> f64 {
        -(-t / self.terminal_time()).ln_1p()
    }

    /// Inverse of `s ↦ T_k` expressed through the log-horizon.
    fn log_horizon_of_s(&self, s: f64) -> f64 {
        if self.is_log_branch() {
            s / self.t_scale
        } else {
            let km1 = self.k - 1.0;
            (km1 * s / (self.t_scale * self.mu0.powf(self.rho()))).ln_1p() / km1
        }
    }

    fn s_of_log_horizon(&self, l: f64) -> f64 {
        if self.is_log_branch() {
            self.t_scale * l
        } else {
            let km1 = self.k - 1.0;
            self.t_scale * self.mu0.powf(self.rho()) * (km1 * l).exp_m1() / km1
        }
    }

    /// Blow-up gain `μ_k(t)`.
    pub fn gain(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok((self.t_scale / (self.terminal_time() - t)).powf(self.k))
    }

    /// Normalized gain `μ̂_k(s) = μ_k(T_k⁻¹(s))`.
    pub fn normalized_gain(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("s = {s} must be finite and >= 0")));
        }
        Ok(self.mu0 * (self.k * self.log_horizon_of_s(s)).exp())
    }

    /// `ω_k(b, a)`, the dilated length between gain levels `a ≤ b`.
    pub fn omega(&self, b: f64, a: f64) -> Result<f64> {
        if !(a >= 1.0 && b >= a && b.is_finite()) {
            return Err(Error::Domain(format!(
                "omega needs 1 <= a <= b, got a={a}, b={b}"
            )));
        }
        let lr = (b / a).ln();
        if self.is_log_branch() {
            Ok(self.t_scale * lr)
        } else {
            let rho = self.rho();
            Ok(self.t_scale / (self.k - 1.0) * a.powf(rho) * (rho * lr).exp_m1())
        }
    }

    /// Dilation `s = T_k(t)`.
    pub fn dilate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.s_of_log_horizon(self.log_horizon(t)))
    }

    /// Contraction `t = T_k⁻¹(s)`.
    pub fn contract(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("s = {s} must be finite and >= 0")));
        }
        let l = self.log_horizon_of_s(s);
        Ok(-self.terminal_time() * (-l).exp_m1())
    }

    /// Dilation without the `ε_term` cap; only `t < Υ` is required.
    pub(crate) fn dilate_uncapped(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.terminal_time()) {
            return Err(Error::Domain(format!("t = {t} outside [0, Y)")));
        }
        Ok(self.s_of_log_horizon(self.log_horizon(t)))
    }

    /// Right-hand side of the gain ODE in original time.
    pub fn gain_rate(&self, mu: f64) -> f64 {
        self.k / self.t_scale * mu.powf(1.0 + 1.0 / self.k)
    }

    /// Right-hand side of the normalized gain ODE in dilated time.
    pub fn normalized_gain_rate(&self, mu: f64) -> f64 {
        self.k / self.t_scale * mu.powf(1.0 / self.k)
    }
}
