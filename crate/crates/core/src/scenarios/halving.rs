//! Scalar worked example: `x' = −x` in dilated time, halving reset at every
//! integer `s`, with a single mode that switches to itself.

use std::sync::Arc;

use super::{BuiltScenario, InitialCondition};
use crate::blowup::BlowUpParams;
use crate::error::Result;
use crate::hybrid::sim::JumpSchedule;
use crate::hybrid::system::{FlowContext, HybridSystem};
use crate::stability::{
    dwell_constants, InputChannel, LyapunovCertificate, LyapunovFunction, ModeCertificate,
    QuadraticForm,
};
use crate::switching::{AdtParams, ModePartition};

pub struct HalvingSystem;

impl HybridSystem for HalvingSystem {
    fn name(&self) -> &str {
        "halving"
    }

    fn dim(&self) -> usize {
        1
    }

    fn flow(&self, _ctx: &FlowContext, x: &[f64], _u: &[f64], dx: &mut [f64]) {
        dx[0] = -x[0];
    }

    fn reset(&self, _from: usize, _to: usize, _tau: f64, x: &[f64]) -> Vec<f64> {
        vec![0.5 * x[0]]
    }
}

/// `T = 1`, `k = 1`, `μ0 = 1`, `τ_d = 1`, `N0 = 1`, `V = x²`, `χ = 1/4`.
pub fn build_halving() -> Result<BuiltScenario> {
    let params = BlowUpParams::new(1.0, 1.0, 1.0)?;
    let adt = AdtParams::new(1.0, 1.0)?;
    let v: Arc<dyn LyapunovFunction> = Arc::new(QuadraticForm::scaled_identity(1.0, vec![0.0]));
    let certificate = LyapunovCertificate {
        modes: vec![ModeCertificate::stable(1, v, 1.0, 1.0, 2.0, 0.0)],
        p: 2.0,
        chi: 0.25,
        channel: InputChannel::Zero,
        target: vec![0.0],
    };
    let constants = dwell_constants(&certificate, &adt)?;
    Ok(BuiltScenario {
        name: "halving".into(),
        system: Arc::new(HalvingSystem),
        certificate,
        constants,
        target: vec![0.0],
        params,
        adt,
        aat: None,
        partition: ModePartition::all_stable([1]),
        initial_mode: 1,
        initial: InitialCondition {
            half_width: 3.0,
            copies: 1,
            base_dim: 1,
        },
        diagnostics: Vec::new(),
    })
}

/// Self-jumps at `s = 1, 2, …` strictly below `s_end`.
pub fn halving_schedule(params: &BlowUpParams, s_end: f64) -> Result<JumpSchedule> {
    let events: Vec<(f64, usize)> = (1..)
        .map(f64::from)
        .take_while(|&s| s < s_end)
        .map(|s| (s, 1))
        .collect();
    JumpSchedule::from_dilated(params, 1, &events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let b = build_halving().unwrap();
        assert_eq!(b.constants.lambda, 2.0);
        assert!((b.constants.kappa1 - 0.25f64.exp()).abs() < 1e-14);
        assert!((b.constants.kappa2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_integer_dilated_times() {
        let b = build_halving().unwrap();
        let s = halving_schedule(&b.params, 4.5).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.jumps[3].s, 4.0);
        assert!((s.jumps[0].t - b.params.contract(1.0).unwrap()).abs() < 1e-15);
    }
}
