//! Scalar plant with matched drift `d_q(x) = q·tanh(x)` that is controlled
//! only in the stable modes. The drift is treated as the input `u`, which
//! enters the normalized flow as `u/μ`.
//!
//! Stable modes: `x' = −(η_q + δ_q·d̄_q(x)²)x + u/μ` with `d̄_q(x) = q|x|`.
//! Unstable modes: `x' = u/μ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BuiltScenario, InitialCondition};
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};
use crate::hybrid::system::{FlowContext, HybridSystem};
use crate::stability::{
    activation_condition, activation_constants, InputChannel, LyapunovCertificate,
    LyapunovFunction, ModeCertificate, QuadraticForm,
};
use crate::switching::{AatParams, AdtParams, ModePartition};

/// Share of `|x|²` spent absorbing the cross term `x·u/μ` in stable modes.
pub const YOUNG_SPLIT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermittentSpec {
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
    /// `η_q` per stable mode, in the order of `stable`.
    pub eta: Vec<f64>,
    /// `δ_q` per stable mode.
    pub delta: Vec<f64>,
    pub blowup: BlowUpParams,
    pub adt: AdtParams,
    pub aat: AatParams,
}

impl IntermittentSpec {
    pub fn reference() -> Self {
        Self {
            stable: vec![1, 2],
            unstable: vec![3],
            eta: vec![1.0, 1.0],
            // δ_q·(q|x|)² = q|x|²
            delta: vec![1.0, 0.5],
            blowup: BlowUpParams::new(10.0, 1.0, 1.0).expect("valid"),
            adt: AdtParams {
                tau_d: 1.0,
                n0: 1.5,
            },
            aat: AatParams {
                tau_a: 2.0,
                t0: 2.0,
            },
        }
    }
}

pub struct IntermittentSystem {
    /// `(mode, η_q, δ_q)` of the stable modes.
    gains: Vec<(usize, f64, f64)>,
}

impl IntermittentSystem {
    fn gains(&self, q: usize) -> Option<(f64, f64)> {
        self.gains.iter().find(|g| g.0 == q).map(|g| (g.1, g.2))
    }
}

impl HybridSystem for IntermittentSystem {
    fn name(&self) -> &str {
        "intermittent"
    }

    fn dim(&self) -> usize {
        1
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn input(&self, ctx: &FlowContext, x: &[f64]) -> Vec<f64> {
        vec![ctx.mode as f64 * x[0].tanh()]
    }

    fn flow(&self, ctx: &FlowContext, x: &[f64], u: &[f64], dx: &mut [f64]) {
        let drift = u[0] / ctx.mu;
        dx[0] = match self.gains(ctx.mode) {
            Some((eta, delta)) => {
                let bound = ctx.mode as f64 * x[0].abs();
                -(eta + delta * bound * bound) * x[0] + drift
            }
            None => drift,
        };
    }
}

pub fn build_intermittent(spec: &IntermittentSpec) -> Result<BuiltScenario> {
    spec.blowup.validate()?;
    let adt =
        AdtParams::new(spec.adt.tau_d, spec.adt.n0).map_err(|e| Error::Build(e.to_string()))?;
    let aat =
        AatParams::new(spec.aat.tau_a, spec.aat.t0).map_err(|e| Error::Build(e.to_string()))?;
    if spec.unstable.is_empty() {
        return Err(Error::Build(
            "intermittent scenario needs at least one unstable mode".into(),
        ));
    }
    if spec.eta.len() != spec.stable.len() || spec.delta.len() != spec.stable.len() {
        return Err(Error::Build(
            "need one eta and one delta per stable mode".into(),
        ));
    }
    if spec
        .eta
        .iter()
        .chain(&spec.delta)
        .any(|&v| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::Build("eta and delta must be positive".into()));
    }
    let partition = ModePartition {
        stable: spec.stable.clone(),
        unstable: spec.unstable.clone(),
    };
    partition
        .validate()
        .map_err(|e| Error::Build(e.to_string()))?;
    if partition.modes().contains(&0) {
        return Err(Error::Build("modes are numbered from 1".into()));
    }

    let v: Arc<dyn LyapunovFunction> = Arc::new(QuadraticForm::scaled_identity(0.5, vec![0.0]));
    let theta = YOUNG_SPLIT;
    let mut modes: Vec<ModeCertificate> = spec
        .stable
        .iter()
        .zip(&spec.eta)
        .map(|(&q, &eta)| {
            // x·u/μ ≤ θη|x|² + |u|²/(4θη μ²)
            ModeCertificate::stable(
                q,
                v.clone(),
                0.5,
                0.5,
                2.0 * eta * (1.0 - theta),
                1.0 / (4.0 * theta * eta),
            )
        })
        .collect();
    // x·u/μ ≤ |x|²/2 + |u|²/(2μ²)
    modes.extend(
        spec.unstable
            .iter()
            .map(|&q| ModeCertificate::unstable(q, v.clone(), 0.5, 0.5, 1.0, 0.5)),
    );
    let certificate = LyapunovCertificate {
        modes,
        p: 2.0,
        chi: 1.0,
        channel: InputChannel::MuPow { ell: 2.0 },
        target: vec![0.0],
    };
    let cond = activation_condition(&certificate, adt.tau_d, aat.tau_a);
    if !cond.holds {
        return Err(Error::Build(format!(
            "activation/dwell condition fails: rhs = {} >= 1 for tau_d = {}, tau_a = {}",
            cond.rhs, adt.tau_d, aat.tau_a
        )));
    }
    let constants = activation_constants(&certificate, &adt, &aat)?;
    let gains = spec
        .stable
        .iter()
        .zip(spec.eta.iter().zip(&spec.delta))
        .map(|(&q, (&e, &d))| (q, e, d))
        .collect();
    Ok(BuiltScenario {
        name: "intermittent".into(),
        system: Arc::new(IntermittentSystem { gains }),
        certificate,
        constants,
        target: vec![0.0],
        params: spec.blowup,
        adt,
        aat: Some(aat),
        initial_mode: spec.stable[0],
        partition,
        initial: InitialCondition {
            half_width: 3.0,
            copies: 1,
            base_dim: 1,
        },
        diagnostics: vec![format!("activation/dwell condition margin {}", cond.margin)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{verify_certificate, SampleSpec};

    #[test]
    fn default_condition_and_rates() {
        let b = build_intermittent(&IntermittentSpec::reference()).unwrap();
        assert_eq!(b.certificate.c3_min(), 1.5);
        let cond = activation_condition(&b.certificate, 1.0, 2.0);
        assert!((cond.rhs - (1.0 + 1.0 / 1.5) / 2.0).abs() < 1e-15);
        assert!(b.constants.lambda > 0.0);
    }

    #[test]
    fn violated_condition_is_a_build_error() {
        let mut spec = IntermittentSpec::reference();
        spec.aat.tau_a = 1.5;
        assert!(matches!(build_intermittent(&spec), Err(Error::Build(_))));
        let mut spec = IntermittentSpec::reference();
        spec.unstable.clear();
        assert!(build_intermittent(&spec).is_err());
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let b = build_intermittent(&IntermittentSpec::reference()).unwrap();
        for q in 1..=3 {
            let ctx = FlowContext {
                t: 0.0,
                s: 0.0,
                mu: 2.0,
                tau: 0.0,
                rho: Some(1.0),
                mode: q,
            };
            let u = b.system.input(&ctx, &[0.0]);
            let mut dx = [1.0];
            b.system.flow(&ctx, &[0.0], &u, &mut dx);
            assert_eq!(dx, [0.0]);
        }
    }

    #[test]
    fn certificate_passes_sampling() {
        let b = build_intermittent(&IntermittentSpec::reference()).unwrap();
        let r = verify_certificate(
            &b.certificate,
            b.system.as_ref(),
            &SampleSpec::new(10_000, 3.0, 1.0, 1.5),
        )
        .unwrap();
        assert!(r.pass, "{:?}", r.witness);
    }
}
