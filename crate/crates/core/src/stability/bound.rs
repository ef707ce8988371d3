//! Trajectory-level check of the prescribed-time bound.
//!
//! With `s = T_k(t)` the bound is evaluated in dilated time:
//!
//! * `Δ = 0`: `κ1·e^(−κ2(s+j))·|x0|_A`
//! * `Δ = 1`: the same plus `κ3·sup|u|`
//! * `Δ = μ^(−ℓ)`: restarting the estimate at `s/2` gives
//!   `κ1²·e^(−κ2(s+j))·|x0|_A + κ1κ3·μ0^(−ℓ/p)·e^(−κ2 s/2)·sup|u| + κ3·μ̂(s/2)^(−ℓ/p)·sup|u|`,
//!   whose input terms vanish as `s → ∞`.
//!
//! `sup|u|` is the running supremum of the realized input along the arc.

use serde::{Deserialize, Serialize};

use super::certificate::InputChannel;
use super::constants::{ConstantsSummary, TheoremConstants};
use crate::error::{Error, Result};
use crate::hybrid::arc::HybridArc;
use crate::hybrid::system::{FlowContext, HybridSystem};
use crate::util::{dist, norm};

/// Ratio slack allowed for integration error.
pub const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundWitness {
    pub t: f64,
    pub s: f64,
    pub j: usize,
    pub distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub pass: bool,
    pub max_ratio: f64,
    /// Sample attaining `max_ratio`.
    pub witness: Option<BoundWitness>,
    pub samples: usize,
    /// False when `κ2 ≤ 0`: the bound then holds but certifies nothing.
    pub contractive: bool,
    pub constants: ConstantsSummary,
}

/// Evaluates the bound at every sample of `arc` (either scale) and reports
/// the largest `|x − target| / bound`.
pub fn check_pt_bound(
    arc: &HybridArc,
    consts: &TheoremConstants,
    channel: InputChannel,
    target: &[f64],
    system: &dyn HybridSystem,
) -> Result<BoundReport> {
    channel.validate()?;
    if target.len() != arc.dim {
        return Err(Error::InvalidParams(format!(
            "target has length {}, arc dimension is {}",
            target.len(),
            arc.dim
        )));
    }
    let params = arc.params;
    let (k1, k2, k3) = (consts.kappa1, consts.kappa2, consts.kappa3);
    let e0 = dist(&arc.first_sample().x, target);
    let mut sup_u = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut witness = None;
    let mut samples = 0;
    for (j, q, smp) in arc.iter() {
        let t = arc.original_time(smp.time)?;
        let s = arc.dilated_time(smp.time)?;
        if channel != InputChannel::Zero {
            let ctx = FlowContext {
                t,
                s,
                mu: smp.mu,
                tau: smp.tau,
                rho: smp.rho,
                mode: q,
            };
            sup_u = sup_u.max(norm(&system.input(&ctx, &smp.x)));
        }
        let decay = (-k2 * (s + j as f64)).exp();
        let bound = match channel {
            InputChannel::Zero => k1 * decay * e0,
            InputChannel::One => k1 * decay * e0 + k3 * sup_u,
            InputChannel::MuPow { ell } => {
                let e = ell / consts.p;
                let mu_half = params.normalized_gain(0.5 * s)?;
                k1 * k1 * decay * e0
                    + k1 * k3 * params.mu0.powf(-e) * (-0.5 * k2 * s).exp() * sup_u
                    + k3 * mu_half.powf(-e) * sup_u
            }
        };
        let d = dist(&smp.x, target);
        let ratio = if d == 0.0 { 0.0 } else { d / bound };
        if ratio > max_ratio || witness.is_none() {
            max_ratio = max_ratio.max(ratio);
            witness = Some(BoundWitness {
                t,
                s,
                j,
                distance: d,
                bound,
            });
        }
        samples += 1;
    }
    Ok(BoundReport {
        pass: max_ratio <= 1.0 + BOUND_TOL,
        max_ratio,
        witness,
        samples,
        contractive: consts.is_contractive(),
        constants: consts.summary(),
    })
}
