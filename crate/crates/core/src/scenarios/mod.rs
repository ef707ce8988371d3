//! The worked applications: each spec expands into a plant, a certificate,
//! the bound constants and recommended signal parameters.

pub mod consensus;
pub mod game;
pub mod halving;
pub mod intermittent;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use consensus::{build_consensus, CertificateChoice, ConsensusSpec};
pub use game::{
    build_nesmr, build_ptpsg, matrix_inequality_check, momentum_constants,
    momentum_dwell_threshold, nu_m, GameSpec, MatrixInequalityReport, MomentumConstants,
};
pub use halving::{build_halving, halving_schedule};
pub use intermittent::{build_intermittent, IntermittentSpec};

use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};
use crate::hybrid::arc::{HybridArc, TimeScale};
use crate::hybrid::clock::ClockSpec;
use crate::hybrid::sim::{simulate, JumpSchedule, SimSetup};
use crate::hybrid::solver::SolverConfig;
use crate::hybrid::system::HybridSystem;
use crate::stability::{check_pt_bound, BoundReport, LyapunovCertificate, TheoremConstants};
use crate::switching::{
    generate_signal, AatParams, AdtParams, GeneratedSignal, GeneratorPolicy, ModePartition,
};

pub const SCENARIO_NAMES: [&str; 4] = ["consensus", "intermittent", "nesmr", "ptpsg"];

/// Uniform box `[−w, w]^base_dim`, repeated `copies` times
/// (the momentum state starts at `x2 = x1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub half_width: f64,
    pub copies: usize,
    pub base_dim: usize,
}

pub struct BuiltScenario {
    pub name: String,
    pub system: Arc<dyn HybridSystem>,
    pub certificate: LyapunovCertificate,
    pub constants: TheoremConstants,
    pub target: Vec<f64>,
    pub params: BlowUpParams,
    pub adt: AdtParams,
    pub aat: Option<AatParams>,
    pub partition: ModePartition,
    pub initial_mode: usize,
    pub initial: InitialCondition,
    /// Hypotheses that are reported rather than enforced.
    pub diagnostics: Vec<String>,
}

impl BuiltScenario {
    pub fn clock(&self) -> ClockSpec {
        let c = ClockSpec::dwell(self.adt.tau_d, self.adt.n0);
        match &self.aat {
            Some(a) => c.with_activation(a.tau_a, a.t0, self.partition.unstable.clone()),
            None => c,
        }
    }

    pub fn initial_state(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = self.initial.half_width;
        let base: Vec<f64> = (0..self.initial.base_dim)
            .map(|_| rng.random_range(-w..=w))
            .collect();
        base.repeat(self.initial.copies)
    }

    pub fn generate(&self, policy: &GeneratorPolicy, horizon: f64) -> Result<GeneratedSignal> {
        generate_signal(
            &self.params,
            &self.adt,
            self.aat.as_ref(),
            &self.partition,
            self.initial_mode,
            policy,
            horizon,
        )
    }

    pub fn setup(&self, schedule: &JumpSchedule, config: SolverConfig) -> SimSetup<'_> {
        SimSetup::new(
            self.system.as_ref(),
            self.params,
            self.clock(),
            schedule.clone(),
            config,
        )
    }

    pub fn simulate(
        &self,
        schedule: &JumpSchedule,
        x0: &[f64],
        horizon: f64,
        scale: TimeScale,
        config: SolverConfig,
    ) -> Result<HybridArc> {
        simulate(&self.setup(schedule, config), x0, horizon, scale)
    }

    pub fn check_bound(&self, arc: &HybridArc) -> Result<BoundReport> {
        check_pt_bound(
            arc,
            &self.constants,
            self.certificate.channel,
            &self.target,
            self.system.as_ref(),
        )
    }
}

/// A scenario document; `"scenario"` selects the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Consensus(ConsensusSpec),
    Intermittent(IntermittentSpec),
    Nesmr(GameSpec),
    Ptpsg(GameSpec),
}

/// Parameter overrides from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub t_scale: Option<f64>,
    pub k: Option<f64>,
    pub mu0: Option<f64>,
    pub tau_d: Option<f64>,
    pub tau_a: Option<f64>,
    pub n0: Option<f64>,
    pub t0: Option<f64>,
}

impl ScenarioSpec {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "consensus" => Ok(Self::Consensus(ConsensusSpec::reference())),
            "intermittent" => Ok(Self::Intermittent(IntermittentSpec::reference())),
            "nesmr" => Ok(Self::Nesmr(GameSpec::reference())),
            "ptpsg" => Ok(Self::Ptpsg(GameSpec::reference())),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Consensus(_) => "consensus",
            Self::Intermittent(_) => "intermittent",
            Self::Nesmr(_) => "nesmr",
            Self::Ptpsg(_) => "ptpsg",
        }
    }

    pub fn blowup(&self) -> BlowUpParams {
        match self {
            Self::Consensus(s) => s.blowup,
            Self::Intermittent(s) => s.blowup,
            Self::Nesmr(s) | Self::Ptpsg(s) => s.blowup,
        }
    }

    pub fn build(&self) -> Result<BuiltScenario> {
        match self {
            Self::Consensus(s) => build_consensus(s),
            Self::Intermittent(s) => build_intermittent(s),
            Self::Nesmr(s) => build_nesmr(s),
            Self::Ptpsg(s) => build_ptpsg(s),
        }
    }

    /// Activation parameters are ignored by scenarios without unstable modes.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        let (blowup, adt, aat) = match self {
            Self::Consensus(s) => (&mut s.blowup, &mut s.adt, None),
            Self::Intermittent(s) => (&mut s.blowup, &mut s.adt, Some(&mut s.aat)),
            Self::Nesmr(s) | Self::Ptpsg(s) => (&mut s.blowup, &mut s.adt, None),
        };
        let b = BlowUpParams::new(
            o.t_scale.unwrap_or(blowup.t_scale),
            o.k.unwrap_or(blowup.k),
            o.mu0.unwrap_or(blowup.mu0),
        )?;
        *blowup = b.with_eps_term(blowup.eps_term)?;
        *adt = AdtParams::new(o.tau_d.unwrap_or(adt.tau_d), o.n0.unwrap_or(adt.n0))?;
        if let Some(a) = aat {
            *a = AatParams::new(o.tau_a.unwrap_or(a.tau_a), o.t0.unwrap_or(a.t0))?;
        }
        Ok(())
    }
}
