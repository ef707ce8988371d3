//! Leader-free consensus to a common point `x*` over switching digraphs.
//!
//! Agent `i` measures `B_i(x_i − x*)` and exchanges states along the mode's
//! digraph. The feedback cancels the drift `q·tanh(x)` so the closed loop in
//! dilated time is `e' = A_q e` with `e = x − 1⊗x*` and
//! `A_q = −(k_r·B + k_c·L_q⊗I_n)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BuiltScenario, InitialCondition};
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};
use crate::hybrid::system::{FlowContext, HybridSystem};
use crate::linalg::{lambda_max_sym, lambda_min_sym, lyapunov, spectral_abscissa, symmetric_part};
use crate::stability::{
    dwell_constants, min_dwell_time, InputChannel, LyapunovCertificate, LyapunovFunction,
    ModeCertificate, QuadraticForm,
};
use crate::switching::{AdtParams, ModePartition};

/// Which quadratic certificate to ship.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateChoice {
    /// Per-mode Lyapunov equations when their dwell requirement is met, else the common form.
    #[default]
    Auto,
    /// `P_q A_q + A_qᵀ P_q = −I` per mode.
    LyapunovEquation,
    /// `V = |e|²`, valid when every `sym(A_q)` is negative definite.
    CommonQuadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusSpec {
    pub agents: usize,
    pub agent_dim: usize,
    pub target: Vec<f64>,
    /// Row-major `B_i`, one per agent.
    pub measurements: Vec<Vec<f64>>,
    /// Directed cycle (agent order) per mode; mode `q` is `index + 1`.
    pub cycles: Vec<Vec<usize>>,
    pub k_r: f64,
    pub k_c: f64,
    pub blowup: BlowUpParams,
    pub adt: AdtParams,
    #[serde(default)]
    pub certificate: CertificateChoice,
}

impl ConsensusSpec {
    pub fn reference() -> Self {
        let bx = vec![1.0, 0.0, 0.0, 0.0];
        let by = vec![0.0, 0.0, 0.0, 1.0];
        Self {
            agents: 4,
            agent_dim: 2,
            target: vec![-1.0, 1.0],
            measurements: vec![bx.clone(), bx, by.clone(), by],
            cycles: vec![vec![0, 1, 2, 3], vec![0, 2, 1, 3], vec![0, 1, 3, 2]],
            k_r: 1.0,
            k_c: 1.0,
            blowup: BlowUpParams::new(10.0, 1.0, 1.0).expect("valid"),
            adt: AdtParams {
                tau_d: 0.3129,
                n0: 3.0,
            },
            certificate: CertificateChoice::Auto,
        }
    }
}

/// `L = D_out − A` of the cycle `c[0] → c[1] → … → c[0]`.
pub fn cycle_laplacian(agents: usize, cycle: &[usize]) -> Result<DMatrix<f64>> {
    let mut seen = vec![false; agents];
    for &i in cycle {
        if i >= agents || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Build(format!(
                "cycle {cycle:?} is not a list of distinct agents below {agents}"
            )));
        }
    }
    let mut l = DMatrix::zeros(agents, agents);
    if cycle.len() < 2 {
        return Ok(l);
    }
    for (a, b) in cycle.iter().zip(cycle.iter().cycle().skip(1)) {
        l[(*a, *b)] -= 1.0;
        l[(*a, *a)] += 1.0;
    }
    Ok(l)
}

/// `A_q` for every mode after checking `sym(k_r B + k_c L_q⊗I) ≻ 0` and Hurwitz.
pub fn mode_matrices(spec: &ConsensusSpec) -> Result<Vec<DMatrix<f64>>> {
    let (na, n) = (spec.agents, spec.agent_dim);
    if na == 0 || n == 0 || spec.target.len() != n {
        return Err(Error::Build(format!(
            "target must have length {n} and the group must be nonempty"
        )));
    }
    if spec.measurements.len() != na || spec.measurements.iter().any(|b| b.len() != n * n) {
        return Err(Error::Build(format!(
            "need {na} measurement matrices of size {n}x{n}"
        )));
    }
    if spec.cycles.is_empty() {
        return Err(Error::Build("no digraphs given".into()));
    }
    let mut b = DMatrix::zeros(na * n, na * n);
    for (i, bi) in spec.measurements.iter().enumerate() {
        let bi = DMatrix::from_row_slice(n, n, bi);
        if lambda_min_sym(&bi) < -1e-12 {
            return Err(Error::Build(format!(
                "measurement matrix of agent {i} is not PSD"
            )));
        }
        b.view_mut((i * n, i * n), (n, n)).copy_from(&bi);
    }
    let eye = DMatrix::identity(n, n);
    spec.cycles
        .iter()
        .enumerate()
        .map(|(q, c)| {
            let l = cycle_laplacian(na, c)?.kronecker(&eye);
            let m = &b * spec.k_r + l * spec.k_c;
            let lo = lambda_min_sym(&m);
            if !(lo > 0.0) {
                return Err(Error::Build(format!(
                    "B + L_{} is not positive definite (lambda_min = {lo})",
                    q + 1
                )));
            }
            let a = -m;
            let abscissa = spectral_abscissa(&a);
            if !(abscissa < 0.0) {
                return Err(Error::Build(format!(
                    "A_{} is not Hurwitz (abscissa {abscissa})",
                    q + 1
                )));
            }
            Ok(a)
        })
        .collect()
}

pub struct ConsensusSystem {
    modes: Vec<DMatrix<f64>>,
    stacked_target: DVector<f64>,
}

impl HybridSystem for ConsensusSystem {
    fn name(&self) -> &str {
        "consensus"
    }

    fn dim(&self) -> usize {
        self.stacked_target.len()
    }

    fn flow(&self, ctx: &FlowContext, x: &[f64], _u: &[f64], dx: &mut [f64]) {
        let e = DVector::from_column_slice(x) - &self.stacked_target;
        dx.copy_from_slice((&self.modes[ctx.mode - 1] * e).as_slice());
    }
}

fn per_mode_certificates(a: &[DMatrix<f64>], target: &[f64]) -> Result<Vec<ModeCertificate>> {
    let n = target.len();
    a.iter()
        .enumerate()
        .map(|(i, aq)| {
            let p = lyapunov(aq, &DMatrix::identity(n, n))?;
            let (lo, hi) = (lambda_min_sym(&p), lambda_max_sym(&p));
            let v: Arc<dyn LyapunovFunction> = Arc::new(QuadraticForm::new(p, target.to_vec())?);
            // eᵀ(PA + AᵀP)e = −|e|² ≤ −V/λ_max(P)
            Ok(ModeCertificate::stable(i + 1, v, lo, hi, 1.0 / hi, 0.0))
        })
        .collect()
}

fn common_certificates(a: &[DMatrix<f64>], target: &[f64]) -> Result<Vec<ModeCertificate>> {
    let v: Arc<dyn LyapunovFunction> =
        Arc::new(QuadraticForm::scaled_identity(1.0, target.to_vec()));
    a.iter()
        .enumerate()
        .map(|(i, aq)| {
            let c3 = lambda_min_sym(&(-symmetric_part(aq) * 2.0));
            if !(c3 > 0.0) {
                return Err(Error::Build(format!(
                    "sym(A_{}) is not negative definite",
                    i + 1
                )));
            }
            Ok(ModeCertificate::stable(i + 1, v.clone(), 1.0, 1.0, c3, 0.0))
        })
        .collect()
}

fn certificate(modes: Vec<ModeCertificate>, target: Vec<f64>) -> LyapunovCertificate {
    LyapunovCertificate {
        modes,
        p: 2.0,
        chi: 1.0,
        channel: InputChannel::Zero,
        target,
    }
}

pub fn build_consensus(spec: &ConsensusSpec) -> Result<BuiltScenario> {
    spec.blowup.validate()?;
    AdtParams::new(spec.adt.tau_d, spec.adt.n0).map_err(|e| Error::Build(e.to_string()))?;
    let a = mode_matrices(spec)?;
    let target: Vec<f64> = spec
        .target
        .iter()
        .copied()
        .cycle()
        .take(spec.agents * spec.agent_dim)
        .collect();
    let mut diagnostics = Vec::new();
    let cert = match spec.certificate {
        CertificateChoice::LyapunovEquation => {
            certificate(per_mode_certificates(&a, &target)?, target.clone())
        }
        CertificateChoice::CommonQuadratic => {
            certificate(common_certificates(&a, &target)?, target.clone())
        }
        CertificateChoice::Auto => {
            let own = certificate(per_mode_certificates(&a, &target)?, target.clone());
            let need = min_dwell_time(&own);
            if need < spec.adt.tau_d {
                own
            } else {
                diagnostics.push(format!(
                    "per-mode Lyapunov-equation certificate needs tau_d > {need}; using the common quadratic certificate"
                ));
                certificate(common_certificates(&a, &target)?, target.clone())
            }
        }
    };
    let constants = dwell_constants(&cert, &spec.adt).map_err(|e| Error::Build(e.to_string()))?;
    let stacked_target = DVector::from_column_slice(&target);
    Ok(BuiltScenario {
        name: "consensus".into(),
        partition: ModePartition::all_stable(1..=a.len()),
        initial: InitialCondition {
            half_width: 3.0,
            copies: 1,
            base_dim: target.len(),
        },
        system: Arc::new(ConsensusSystem {
            modes: a,
            stacked_target,
        }),
        certificate: cert,
        constants,
        target,
        params: spec.blowup,
        adt: spec.adt,
        aat: None,
        initial_mode: 1,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{verify_certificate, SampleSpec};

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let l = cycle_laplacian(4, &[0, 2, 1, 3]).unwrap();
        for i in 0..4 {
            assert_eq!(l.row(i).sum(), 0.0);
            assert_eq!(l[(i, i)], 1.0);
        }
        assert_eq!(l[(0, 2)], -1.0);
        assert_eq!(l[(3, 0)], -1.0);
        assert!(cycle_laplacian(4, &[0, 0]).is_err());
    }

    #[test]
    fn default_falls_back_to_common_form() {
        let spec = ConsensusSpec::reference();
        let b = build_consensus(&spec).unwrap();
        assert_eq!(b.diagnostics.len(), 1);
        assert_eq!(b.certificate.c1_min(), 1.0);
        assert!(b.constants.lambda > 0.0);
        let mut own = spec.clone();
        own.certificate = CertificateChoice::LyapunovEquation;
        assert!(matches!(build_consensus(&own), Err(Error::Build(_))));
        own.adt.tau_d = 50.0;
        build_consensus(&own).unwrap();
    }

    #[test]
    fn missing_anchor_is_rejected() {
        let mut spec = ConsensusSpec::reference();
        spec.measurements = vec![vec![1.0, 0.0, 0.0, 0.0]; 4];
        assert!(matches!(build_consensus(&spec), Err(Error::Build(_))));
    }

    #[test]
    fn certificates_pass_sampling() {
        for choice in [
            CertificateChoice::CommonQuadratic,
            CertificateChoice::LyapunovEquation,
        ] {
            let mut spec = ConsensusSpec::reference();
            spec.certificate = choice;
            spec.adt.tau_d = 50.0;
            let b = build_consensus(&spec).unwrap();
            let r = verify_certificate(
                &b.certificate,
                b.system.as_ref(),
                &SampleSpec::new(10_000, 3.0, 50.0, 3.0),
            )
            .unwrap();
            assert!(r.pass, "{choice:?}: {:?}", r.witness);
        }
    }

    #[test]
    fn single_agent_is_scalar_decay() {
        let spec = ConsensusSpec {
            agents: 1,
            agent_dim: 1,
            target: vec![2.0],
            measurements: vec![vec![1.0]],
            cycles: vec![vec![0]],
            k_r: 1.0,
            k_c: 1.0,
            ..ConsensusSpec::reference()
        };
        let b = build_consensus(&spec).unwrap();
        let ctx = FlowContext {
            t: 0.0,
            s: 0.0,
            mu: 1.0,
            tau: 0.0,
            rho: None,
            mode: 1,
        };
        let mut dx = [0.0];
        b.system.flow(&ctx, &[5.0], &[], &mut dx);
        assert_eq!(dx, [-3.0]);
    }
}
