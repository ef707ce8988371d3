//! Decay and gain constants of the exponential bounds in dilated time.

use serde::{Deserialize, Serialize};

use super::certificate::LyapunovCertificate;
use crate::error::{Error, Result};
use crate::switching::{AatParams, AdtParams};

/// Constants of `|x(s,j)|_A ≤ κ1·e^(−κ2(s+j))·|x(0,0)|_A + κ3·sup|v|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub r: f64,
    pub lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub p: f64,
    /// Dwell and activation penalty subtracted from `c̲3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// The subset written into JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub r: f64,
    pub lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

impl TheoremConstants {
    pub fn summary(&self) -> ConstantsSummary {
        ConstantsSummary {
            r: self.r,
            lambda: self.lambda,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            kappa3: self.kappa3,
        }
    }

    /// Whether the bound actually decays.
    pub fn is_contractive(&self) -> bool {
        self.lambda > 0.0 && self.kappa2 > 0.0
    }
}

const KAPPA3_NOTE: &str = "kappa3 carries the r^N0 factor of the Lyapunov upper bound; the bare (2 c4 / (lambda c1))^(1/p) form omits it";

/// `r = max c2 / min c1`.
pub fn ratio_r(cert: &LyapunovCertificate) -> f64 {
    cert.c2_max() / cert.c1_min()
}

/// `ln(r) / min c3`; zero when `r = 1`.
pub fn min_dwell_time(cert: &LyapunovCertificate) -> f64 {
    ratio_r(cert).ln().max(0.0) / cert.c3_min()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationCondition {
    pub holds: bool,
    pub margin: f64,
    pub rhs: f64,
}

/// `1 > ln(r)/(c̲3 τ_d) + (1 + c̄5/c̲3)/τ_a`.
pub fn activation_condition(
    cert: &LyapunovCertificate,
    tau_d: f64,
    tau_a: f64,
) -> ActivationCondition {
    let c3 = cert.c3_min();
    let rhs = ratio_r(cert).ln() / (c3 * tau_d) + (1.0 + cert.c5_max() / c3) / tau_a;
    ActivationCondition {
        holds: rhs < 1.0,
        margin: 1.0 - rhs,
        rhs,
    }
}

fn assemble(
    cert: &LyapunovCertificate,
    adt: &AdtParams,
    lambda: f64,
    upper: f64,
    kappa3_base: f64,
    delta: Option<f64>,
) -> Result<TheoremConstants> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidDwell { lambda });
    }
    let p = cert.p;
    let c_lo = cert.c1_min();
    let chatter = (lambda / (2.0 * p)) * (adt.tau_d / (1.0 + adt.tau_d)) * adt.n0;
    Ok(TheoremConstants {
        r: ratio_r(cert),
        lambda,
        kappa1: (upper / c_lo).powf(1.0 / p) * chatter.exp(),
        kappa2: lambda * adt.tau_d / (2.0 * p * (1.0 + adt.tau_d)),
        kappa3: (2.0 * kappa3_base / (lambda * c_lo)).powf(1.0 / p),
        p,
        delta,
        notes: vec![KAPPA3_NOTE.into()],
    })
}

/// Constants for certificates without unstable modes.
pub fn dwell_constants(cert: &LyapunovCertificate, adt: &AdtParams) -> Result<TheoremConstants> {
    cert.validate()?;
    if cert.has_unstable() {
        return Err(Error::InvalidParams(
            "unstable modes need the activation-time constants".into(),
        ));
    }
    let r = ratio_r(cert);
    let lambda = cert.c3_min() - r.ln() / adt.tau_d;
    let r_n0 = r.powf(adt.n0);
    assemble(
        cert,
        adt,
        lambda,
        r_n0 * cert.c2_max(),
        cert.c4_max() * r_n0,
        None,
    )
}

/// Constants with the activation clock: `λ = c̲3 − δ`,
/// `δ = ln(r)/τ_d + (c̲3 + c̄5)/τ_a`.
pub fn activation_constants(
    cert: &LyapunovCertificate,
    adt: &AdtParams,
    aat: &AatParams,
) -> Result<TheoremConstants> {
    cert.validate()?;
    let r = ratio_r(cert);
    let c3 = cert.c3_min();
    let c5 = cert.c5_max();
    let delta = r.ln() / adt.tau_d + (c3 + c5) / aat.tau_a;
    let lambda = c3 - delta;
    let c2 = cert.c2_max();
    let phi_hi = c2 * (r.ln() * adt.n0 + (c3 + c5) * aat.t0).exp();
    assemble(
        cert,
        adt,
        lambda,
        phi_hi,
        cert.c4_max() * phi_hi / c2,
        Some(delta),
    )
}
