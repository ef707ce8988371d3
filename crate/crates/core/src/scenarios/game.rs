//! Switching strongly monotone games with affine pseudo-gradients
//! `G_q(x1) = ϑ·A_q·(x1 − x̃1)`.
//!
//! * `nesmr`: momentum state `x2`, reset `x2⁺ = x1` at every switch, and a
//!   step size `η(τ)` that grows with the dwell clock.
//! * `ptpsg`: the pseudo-gradient descent baseline `ẋ1 = −μ·G_q(x1)`. With a plus
//!   sign it would diverge for monotone games.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BuiltScenario, InitialCondition};
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};
use crate::hybrid::system::{FlowContext, HybridSystem};
use crate::linalg::{lambda_min_sym, sigma_max};
use crate::stability::{
    dwell_constants, InputChannel, LyapunovCertificate, LyapunovFunction, ModeCertificate,
    QuadraticForm, TheoremConstants,
};
use crate::switching::{AdtParams, ModePartition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    /// `A_q` row-major, mode `q` is `index + 1`.
    pub matrices: Vec<Vec<f64>>,
    pub theta: f64,
    pub equilibrium: Vec<f64>,
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub delta_eta: f64,
    pub delta_d: f64,
    pub blowup: BlowUpParams,
    pub adt: AdtParams,
    /// Turn violated tuning guidelines into build errors.
    #[serde(default)]
    pub strict: bool,
}

impl GameSpec {
    pub fn reference() -> Self {
        Self {
            matrices: vec![
                vec![6.0, -1.5, -1.5, 6.0],
                vec![8.0, -2.0, 2.0, 8.0],
                vec![4.0, 0.0, 0.0, 8.0],
            ],
            theta: 0.05,
            equilibrium: vec![1.0, 1.0],
            eta_lo: 0.6,
            eta_hi: 0.9,
            delta_eta: 0.45,
            delta_d: 0.45,
            blowup: BlowUpParams::new(10.0, 1.0, 1.0).expect("valid"),
            adt: AdtParams {
                tau_d: 1.14,
                n0: 1.75,
            },
            strict: false,
        }
    }
}

/// Matrix quantities of one mode, with `J = ϑA_q` the pseudo-gradient Jacobian.
#[derive(Debug, Clone)]
pub struct ModeGame {
    pub mode: usize,
    pub jac: DMatrix<f64>,
    /// Strong monotonicity `λ_min(sym J)`.
    pub kappa: f64,
    /// Lipschitz constant `σ_max(J)`.
    pub ell: f64,
    /// `κ/ℓ²`.
    pub zeta: f64,
    /// `σ_max(I − J)`.
    pub sigma: f64,
}

/// Derived game data shared by both dynamics.
#[derive(Debug, Clone)]
pub struct GameData {
    pub n: usize,
    pub modes: Vec<ModeGame>,
    pub equilibrium: Vec<f64>,
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub n0: f64,
}

impl GameData {
    pub fn new(spec: &GameSpec) -> Result<Self> {
        let n = spec.equilibrium.len();
        if n == 0 || spec.matrices.is_empty() {
            return Err(Error::Build(
                "game needs at least one mode and one player".into(),
            ));
        }
        if !(spec.theta > 0.0 && spec.theta.is_finite()) {
            return Err(Error::Build(format!(
                "scale must be positive, got {}",
                spec.theta
            )));
        }
        if !(spec.eta_hi > spec.eta_lo && spec.eta_lo > 0.0) {
            return Err(Error::Build(format!(
                "need eta_hi > eta_lo > 0, got {} and {}",
                spec.eta_hi, spec.eta_lo
            )));
        }
        let modes = spec
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if m.len() != n * n {
                    return Err(Error::Build(format!(
                        "matrix of mode {} has {} entries, expected {}",
                        i + 1,
                        m.len(),
                        n * n
                    )));
                }
                let jac = DMatrix::from_row_slice(n, n, m) * spec.theta;
                let kappa = lambda_min_sym(&jac);
                if !(kappa > 0.0) {
                    return Err(Error::Build(format!(
                        "pseudo-gradient of mode {} is not strongly monotone (kappa = {kappa})",
                        i + 1
                    )));
                }
                let ell = sigma_max(&jac);
                let sigma = sigma_max(&(DMatrix::identity(n, n) - &jac));
                Ok(ModeGame {
                    mode: i + 1,
                    kappa,
                    ell,
                    zeta: kappa / (ell * ell),
                    sigma,
                    jac,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            modes,
            equilibrium: spec.equilibrium.clone(),
            eta_lo: spec.eta_lo,
            eta_hi: spec.eta_hi,
            n0: spec.adt.n0,
        })
    }

    /// Affine step size, clamped to `[0, N0]`.
    pub fn eta(&self, tau: f64) -> f64 {
        self.eta_lo + tau.clamp(0.0, self.n0) * self.eta_slope()
    }

    /// Unclamped extension, used by the certificate so that `∂V/∂τ` is smooth at the ends.
    pub fn eta_affine(&self, tau: f64) -> f64 {
        self.eta_lo + tau * self.eta_slope()
    }

    pub fn eta_slope(&self) -> f64 {
        (self.eta_hi - self.eta_lo) / self.n0
    }

    pub fn mode(&self, q: usize) -> &ModeGame {
        &self.modes[q - 1]
    }

    pub fn kappa_min(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.kappa)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn ell_max(&self) -> f64 {
        self.modes.iter().map(|m| m.ell).fold(0.0, f64::max)
    }

    pub fn zeta_min(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.zeta)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sigma_max(&self) -> f64 {
        self.modes.iter().map(|m| m.sigma).fold(0.0, f64::max)
    }

    /// `G_q(x1)`.
    pub fn pseudo_gradient(&self, q: usize, x1: &[f64]) -> DVector<f64> {
        let e =
            DVector::from_iterator(self.n, x1.iter().zip(&self.equilibrium).map(|(a, b)| a - b));
        &self.mode(q).jac * e
    }

    pub fn partition(&self) -> ModePartition {
        ModePartition::all_stable(self.modes.iter().map(|m| m.mode))
    }
}

/// `(1 − δ_d − δ_η)σ̄² / (δ_η(1 − δ_d)ζ̲ + σ̄²)`.
pub fn nu_m_formula(delta_eta: f64, delta_d: f64, zeta_min: f64, sigma_max: f64) -> f64 {
    let s2 = sigma_max * sigma_max;
    (1.0 - delta_d - delta_eta) * s2 / (delta_eta * (1.0 - delta_d) * zeta_min + s2)
}

pub fn nu_m(spec: &GameSpec) -> Result<f64> {
    let g = GameData::new(spec)?;
    Ok(nu_m_formula(
        spec.delta_eta,
        spec.delta_d,
        g.zeta_min(),
        g.sigma_max(),
    ))
}

/// Worst-case reset factor `(ℓ̄²/κ̲²)(η(N0−1)/η(1))² + 1/(2κ̲²η(1)²)`.
pub fn gamma_bar(data: &GameData) -> f64 {
    let k2 = data.kappa_min().powi(2);
    let e1 = data.eta(1.0);
    let ratio = data.eta(data.n0 - 1.0) / e1;
    data.ell_max().powi(2) / k2 * ratio * ratio + 1.0 / (2.0 * k2 * e1 * e1)
}

/// Tuning guidelines that do not hold for `spec`, as messages.
pub fn tuning_violations(spec: &GameSpec, data: &GameData) -> Vec<String> {
    let mut out = Vec::new();
    let delta = spec.delta_eta + spec.delta_d;
    if !(spec.delta_eta > 0.0
        && spec.delta_eta < 1.0
        && spec.delta_d > 0.0
        && delta > 0.0
        && delta < 1.0)
    {
        out.push(format!(
            "delta_eta + delta_d = {delta} must lie in (0, 1) with both positive"
        ));
    }
    let (zeta, sigma) = (data.zeta_min(), data.sigma_max());
    let eta_cap = spec.delta_eta * zeta / (sigma * sigma);
    if spec.eta_hi * spec.eta_hi > eta_cap {
        out.push(format!(
            "eta_hi^2 = {} exceeds delta_eta*zeta/sigma^2 = {eta_cap}",
            spec.eta_hi.powi(2)
        ));
    }
    let rate_cap = spec.delta_d * spec.adt.n0 * zeta / (spec.eta_hi - spec.eta_lo);
    if 1.0 / spec.adt.tau_d > rate_cap {
        out.push(format!(
            "1/tau_d = {} exceeds delta_d*N0*zeta/(eta_hi-eta_lo) = {rate_cap}",
            1.0 / spec.adt.tau_d
        ));
    }
    let g = gamma_bar(data);
    if !(g > 0.0 && g <= 1.0) {
        out.push(format!("gamma_bar = {g} is outside (0, 1]"));
    }
    out
}

/// `M = [[I/η², Σᵀ], [Σ, (ζ_q − ρη')I]]` with `Σ = I − J_q`.
pub fn inequality_matrix(data: &GameData, q: usize, tau: f64, rho: f64) -> DMatrix<f64> {
    let n = data.n;
    let m = data.mode(q);
    let sig = DMatrix::identity(n, n) - &m.jac;
    let eta = data.eta(tau);
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n))
        .copy_from(&(DMatrix::identity(n, n) / (eta * eta)));
    out.view_mut((0, n), (n, n)).copy_from(&sig.transpose());
    out.view_mut((n, 0), (n, n)).copy_from(&sig);
    out.view_mut((n, n), (n, n))
        .copy_from(&(DMatrix::identity(n, n) * (m.zeta - rho * data.eta_slope())));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixInequalityWitness {
    pub mode: usize,
    pub tau: f64,
    pub rho: f64,
    pub lambda_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixInequalityReport {
    pub pass: bool,
    pub nu_m: f64,
    pub min_eigenvalue: f64,
    pub witness: MatrixInequalityWitness,
    pub evaluations: usize,
}

/// `λ_min(M) ≥ ν_M` on a `grid × grid` sweep of `τ ∈ [0, N0]`,
/// `ρ ∈ [0, 1/τ_d]` per mode. `M` does not depend on `x1` for affine games.
pub fn matrix_inequality_check(spec: &GameSpec, grid: usize) -> Result<MatrixInequalityReport> {
    let data = GameData::new(spec)?;
    let nu = nu_m_formula(
        spec.delta_eta,
        spec.delta_d,
        data.zeta_min(),
        data.sigma_max(),
    );
    let grid = grid.max(2);
    let node = |i: usize, hi: f64| hi * i as f64 / (grid - 1) as f64;
    let mut worst: Option<MatrixInequalityWitness> = None;
    let mut evaluations = 0;
    for m in &data.modes {
        for i in 0..grid {
            for k in 0..grid {
                let (tau, rho) = (node(i, data.n0), node(k, 1.0 / spec.adt.tau_d));
                let lam = lambda_min_sym(&inequality_matrix(&data, m.mode, tau, rho));
                evaluations += 1;
                if worst.as_ref().is_none_or(|w| lam < w.lambda_min) {
                    worst = Some(MatrixInequalityWitness {
                        mode: m.mode,
                        tau,
                        rho,
                        lambda_min: lam,
                    });
                }
            }
        }
    }
    let witness = worst.expect("grid is nonempty");
    Ok(MatrixInequalityReport {
        pass: witness.lambda_min >= nu - 1e-12,
        nu_m: nu,
        min_eigenvalue: witness.lambda_min,
        witness,
        evaluations,
    })
}

fn v_bounds(data: &GameData, m: &ModeGame) -> (f64, f64) {
    let v1 = 0.25 * f64::min(1.0, 2.0 * m.kappa.powi(2) * data.eta_lo.powi(2));
    let v2 = 0.25 * f64::max(3.0, 2.0 + 2.0 * m.ell.powi(2) * data.eta_hi.powi(2));
    (v1, v2)
}

/// `4η̲ν / max{3, 2(1/κ² + η̄²)}`.
fn decay_rate(data: &GameData, nu: f64, kappa: f64) -> f64 {
    4.0 * data.eta_lo * nu / f64::max(3.0, 2.0 * (1.0 / kappa.powi(2) + data.eta_hi.powi(2)))
}

/// `ln(max{3, 2 + 2ℓ̄²η̄²} / min{1, 2η̲κ̲²})`, the chatter penalty of the momentum certificate.
fn log_ratio(data: &GameData) -> f64 {
    let num = f64::max(
        3.0,
        2.0 + 2.0 * data.ell_max().powi(2) * data.eta_hi.powi(2),
    );
    let den = f64::min(1.0, 2.0 * data.eta_lo * data.kappa_min().powi(2));
    (num / den).ln()
}

/// Dwell-time threshold above which the momentum dynamics are certified.
pub fn momentum_dwell_threshold(spec: &GameSpec) -> Result<f64> {
    let data = GameData::new(spec)?;
    let nu = nu_m_formula(
        spec.delta_eta,
        spec.delta_d,
        data.zeta_min(),
        data.sigma_max(),
    );
    Ok(log_ratio(&data) / decay_rate(&data, nu, data.kappa_min()))
}

/// Constants of the momentum dynamics' bound, taken literally from the
/// certificate's closing estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumConstants {
    pub nu_m: f64,
    pub gamma_bar: f64,
    pub c3: f64,
    pub v1_min: f64,
    pub v2_max: f64,
    pub lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub dwell_threshold: f64,
    pub tau_d: f64,
    /// `γ̄ ≤ 1`, `τ_d` above the threshold and `κ2 > 0`.
    pub valid: bool,
}

pub fn momentum_constants(spec: &GameSpec) -> Result<MomentumConstants> {
    let data = GameData::new(spec)?;
    let nu = nu_m_formula(
        spec.delta_eta,
        spec.delta_d,
        data.zeta_min(),
        data.sigma_max(),
    );
    let gb = gamma_bar(&data);
    let c3 = decay_rate(&data, nu, data.kappa_min());
    let (tau_d, n0) = (spec.adt.tau_d, spec.adt.n0);
    let lambda = c3 - log_ratio(&data) / tau_d;
    let (v1_min, v2_max) = data
        .modes
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| {
            let (a, b) = v_bounds(&data, m);
            (lo.min(a), hi.max(b))
        });
    let share = tau_d / (1.0 + tau_d);
    let kappa1 =
        v2_max.powf((n0 + 1.0) / 2.0) / v1_min.powf(n0 / 2.0) * (0.5 * lambda * share * n0).exp();
    let kappa2 = share / 4.0 * f64::min(1.0 - gb, lambda);
    let threshold = log_ratio(&data) / c3;
    Ok(MomentumConstants {
        nu_m: nu,
        gamma_bar: gb,
        c3,
        v1_min,
        v2_max,
        lambda,
        kappa1,
        kappa2,
        dwell_threshold: threshold,
        tau_d,
        valid: gb <= 1.0 && tau_d > threshold && kappa2 > 0.0,
    })
}

impl MomentumConstants {
    pub fn theorem_constants(&self) -> TheoremConstants {
        let mut notes = vec![format!(
            "momentum-game constants: gamma_bar = {}, dwell threshold = {} vs tau_d = {}",
            self.gamma_bar, self.dwell_threshold, self.tau_d
        )];
        if !self.valid {
            notes.push("hypotheses of the momentum-game bound are violated; kappa2 <= 0 makes the bound non-contractive".into());
        }
        TheoremConstants {
            r: self.v2_max / self.v1_min,
            lambda: self.lambda,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            kappa3: 0.0,
            p: 2.0,
            delta: None,
            notes,
        }
    }
}

/// Momentum dynamics on `x = (x1, x2)`.
pub struct NesmrSystem {
    data: GameData,
}

impl HybridSystem for NesmrSystem {
    fn name(&self) -> &str {
        "nesmr"
    }

    fn dim(&self) -> usize {
        2 * self.data.n
    }

    fn flow(&self, ctx: &FlowContext, x: &[f64], _u: &[f64], dx: &mut [f64]) {
        let n = self.data.n;
        let eta = self.data.eta(ctx.tau);
        let (x1, x2) = x.split_at(n);
        let g = self.data.pseudo_gradient(ctx.mode, x1);
        for i in 0..n {
            dx[i] = 2.0 / eta * (x2[i] - x1[i]);
            dx[n + i] = -2.0 * eta * g[i];
        }
    }

    fn reset(&self, _from: usize, _to: usize, _tau: f64, x: &[f64]) -> Vec<f64> {
        let n = self.data.n;
        let mut out = x[..n].to_vec();
        out.extend_from_slice(&x[..n]);
        out
    }
}

/// `¼|x2 − x̃|² + ¼|x2 − x1|² + (η(τ)²/2)|G_q(x1)|²`.
struct MomentumLyapunov {
    data: Arc<GameData>,
    mode: usize,
}

impl LyapunovFunction for MomentumLyapunov {
    fn value(&self, x: &[f64], tau: f64) -> f64 {
        let n = self.data.n;
        let (x1, x2) = x.split_at(n);
        let g = self.data.pseudo_gradient(self.mode, x1);
        let eta = self.data.eta_affine(tau);
        let a: f64 = x2
            .iter()
            .zip(&self.data.equilibrium)
            .map(|(p, e)| (p - e).powi(2))
            .sum();
        let b: f64 = x2.iter().zip(x1).map(|(p, q)| (p - q).powi(2)).sum();
        0.25 * a + 0.25 * b + 0.5 * eta * eta * g.norm_squared()
    }

    fn gradient(&self, x: &[f64], tau: f64, gx: &mut [f64]) -> f64 {
        let n = self.data.n;
        let (x1, x2) = x.split_at(n);
        let g = self.data.pseudo_gradient(self.mode, x1);
        let eta = self.data.eta_affine(tau);
        let jt_g = self.data.mode(self.mode).jac.transpose() * &g;
        for i in 0..n {
            let d21 = x2[i] - x1[i];
            gx[i] = -0.5 * d21 + eta * eta * jt_g[i];
            gx[n + i] = 0.5 * (x2[i] - self.data.equilibrium[i]) + 0.5 * d21;
        }
        eta * self.data.eta_slope() * g.norm_squared()
    }
}

/// Reset factor of the momentum certificate within one mode:
/// `V_q((x1, x1), τ − 1) ≤ 2·V_q(x, τ)`.
pub const NESMR_SAME_MODE_CHI: f64 = 2.0;

fn check_spec(spec: &GameSpec, data: &GameData) -> Result<Vec<String>> {
    spec.blowup.validate()?;
    AdtParams::new(spec.adt.tau_d, spec.adt.n0).map_err(|e| Error::Build(e.to_string()))?;
    let violations = tuning_violations(spec, data);
    if spec.strict && !violations.is_empty() {
        return Err(Error::Build(violations.join("; ")));
    }
    Ok(violations)
}

fn game_initial(data: &GameData, copies: usize) -> InitialCondition {
    InitialCondition {
        half_width: 3.0,
        copies,
        base_dim: data.n,
    }
}

pub fn build_nesmr(spec: &GameSpec) -> Result<BuiltScenario> {
    let data = GameData::new(spec)?;
    let mut diagnostics = check_spec(spec, &data)?;
    let consts = momentum_constants(spec)?;
    if spec.adt.tau_d <= consts.dwell_threshold {
        diagnostics.push(format!(
            "tau_d = {} is below the momentum-game dwell threshold {}",
            spec.adt.tau_d, consts.dwell_threshold
        ));
    }
    let shared = Arc::new(data.clone());
    let nu = consts.nu_m;
    let modes = data
        .modes
        .iter()
        .map(|m| {
            let (v1, v2) = v_bounds(&data, m);
            let v: Arc<dyn LyapunovFunction> = Arc::new(MomentumLyapunov {
                data: shared.clone(),
                mode: m.mode,
            });
            ModeCertificate::stable(m.mode, v, v1, v2, decay_rate(&data, nu, m.kappa), 0.0)
        })
        .collect();
    let mut target = data.equilibrium.clone();
    target.extend_from_slice(&data.equilibrium);
    let certificate = LyapunovCertificate {
        modes,
        p: 2.0,
        chi: NESMR_SAME_MODE_CHI,
        channel: InputChannel::Zero,
        target: target.clone(),
    };
    Ok(BuiltScenario {
        name: "nesmr".into(),
        partition: data.partition(),
        initial: game_initial(&data, 2),
        system: Arc::new(NesmrSystem { data }),
        certificate,
        constants: consts.theorem_constants(),
        target,
        params: spec.blowup,
        adt: spec.adt,
        aat: None,
        initial_mode: 1,
        diagnostics,
    })
}

/// Pseudo-gradient descent `x1' = −G_q(x1)` in dilated time.
pub struct PtpsgSystem {
    data: GameData,
}

impl HybridSystem for PtpsgSystem {
    fn name(&self) -> &str {
        "ptpsg"
    }

    fn dim(&self) -> usize {
        self.data.n
    }

    fn flow(&self, ctx: &FlowContext, x: &[f64], _u: &[f64], dx: &mut [f64]) {
        let g = self.data.pseudo_gradient(ctx.mode, x);
        for (d, gi) in dx.iter_mut().zip(g.iter()) {
            *d = -gi;
        }
    }
}

/// `V = |x1 − x̃|²` with `c3 = 2κ_q`.
pub fn build_ptpsg(spec: &GameSpec) -> Result<BuiltScenario> {
    let data = GameData::new(spec)?;
    let diagnostics = check_spec(spec, &data)?;
    let target = data.equilibrium.clone();
    let v: Arc<dyn LyapunovFunction> =
        Arc::new(QuadraticForm::scaled_identity(1.0, target.clone()));
    let modes = data
        .modes
        .iter()
        .map(|m| ModeCertificate::stable(m.mode, v.clone(), 1.0, 1.0, 2.0 * m.kappa, 0.0))
        .collect();
    let certificate = LyapunovCertificate {
        modes,
        p: 2.0,
        chi: 1.0,
        channel: InputChannel::Zero,
        target: target.clone(),
    };
    let constants = dwell_constants(&certificate, &spec.adt)?;
    Ok(BuiltScenario {
        name: "ptpsg".into(),
        partition: data.partition(),
        initial: game_initial(&data, 1),
        system: Arc::new(PtpsgSystem { data }),
        certificate,
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
    fn default_mode_constants() {
        let d = GameData::new(&GameSpec::reference()).unwrap();
        assert!((d.mode(1).kappa - 0.225).abs() < 1e-12);
        assert!((d.mode(1).ell - 0.375).abs() < 1e-12);
        assert!((d.mode(2).kappa - 0.4).abs() < 1e-12);
        assert!((d.mode(3).kappa - 0.2).abs() < 1e-12);
        assert!((d.mode(3).sigma - 0.8).abs() < 1e-12);
        assert!((d.zeta_min() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn nu_m_examples() {
        assert!((nu_m_formula(0.25, 0.25, 1.0, 1.0) - 0.5 / 1.1875).abs() < 1e-15);
        assert!(nu_m_formula(0.5, 0.5 - 1e-12, 1.0, 1.0) < 1e-11);
        let nu = nu_m(&GameSpec::reference()).unwrap();
        let expected = 0.1 * 0.64 / (0.45 * 0.55 * 1.25 + 0.64);
        assert!((nu - expected).abs() < 1e-12);
    }

    #[test]
    fn default_tuning_reports_gamma_bar_only() {
        let spec = GameSpec::reference();
        let d = GameData::new(&spec).unwrap();
        let v = tuning_violations(&spec, &d);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("gamma_bar"));
        let mut strict = spec;
        strict.strict = true;
        assert!(matches!(build_nesmr(&strict), Err(Error::Build(_))));
    }

    #[test]
    fn matrix_inequality_default_and_counterexample() {
        let r = matrix_inequality_check(&GameSpec::reference(), 50).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.evaluations, 3 * 2500);
        let mut bad = GameSpec::reference();
        bad.eta_hi = 30.0;
        assert!(!matrix_inequality_check(&bad, 50).unwrap().pass);
    }

    #[test]
    fn identity_jacobian_matrix_is_block_diagonal() {
        let mut spec = GameSpec::reference();
        spec.matrices = vec![vec![20.0, 0.0, 0.0, 20.0]];
        let d = GameData::new(&spec).unwrap();
        assert!(d.mode(1).sigma < 1e-15);
        let m = inequality_matrix(&d, 1, 0.3, 0.5);
        let expected = f64::min(
            1.0 / d.eta(0.3).powi(2),
            d.mode(1).zeta - 0.5 * d.eta_slope(),
        );
        assert!((lambda_min_sym(&m) - expected).abs() < 1e-12);
    }

    #[test]
    fn threshold_decreases_in_nu() {
        let spec = GameSpec::reference();
        let d = GameData::new(&spec).unwrap();
        let t = |nu: f64| log_ratio(&d) / decay_rate(&d, nu, d.kappa_min());
        assert!(t(0.1) > t(0.2) && t(0.2) > t(1.0));
        let p5 = momentum_constants(&spec).unwrap();
        assert!((p5.dwell_threshold - momentum_dwell_threshold(&spec).unwrap()).abs() < 1e-9);
        assert!(p5.dwell_threshold > spec.adt.tau_d);
        assert!(!p5.valid);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let b = build_nesmr(&GameSpec::reference()).unwrap();
        let x = [1.0, 1.0, 1.0, 1.0];
        let mut dx = [9.0; 4];
        let ctx = FlowContext {
            t: 0.0,
            s: 0.0,
            mu: 1.0,
            tau: 0.4,
            rho: None,
            mode: 2,
        };
        b.system.flow(&ctx, &x, &[], &mut dx);
        assert_eq!(dx, [0.0; 4]);
        assert_eq!(b.system.reset(2, 3, 1.2, &x), x.to_vec());
        let p = build_ptpsg(&GameSpec::reference()).unwrap();
        let mut dx = [9.0; 2];
        p.system.flow(&ctx, &x[..2], &[], &mut dx);
        assert_eq!(dx, [0.0; 2]);
    }

    #[test]
    fn certificates_pass_sampling() {
        let spec = GameSpec::reference();
        let s = SampleSpec::new(4000, 3.0, spec.adt.tau_d, spec.adt.n0);
        for b in [build_nesmr(&spec).unwrap(), build_ptpsg(&spec).unwrap()] {
            let r = verify_certificate(&b.certificate, b.system.as_ref(), &s).unwrap();
            assert!(r.pass, "{}: {:?}", b.name, r.witness);
        }
    }

    #[test]
    fn cross_mode_reset_within_gamma_bar() {
        use rand::{Rng, SeedableRng};
        let spec = GameSpec::reference();
        let b = build_nesmr(&spec).unwrap();
        let d = GameData::new(&spec).unwrap();
        let gb = gamma_bar(&d);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let tau = rng.random_range(1.0..=spec.adt.n0);
            let p = rng.random_range(1..=3usize);
            let q = rng.random_range(1..=3usize);
            let before = b.certificate.mode(p).unwrap().v.value(&x, tau);
            let after = b
                .certificate
                .mode(q)
                .unwrap()
                .v
                .value(&b.system.reset(p, q, tau, &x), tau - 1.0);
            assert!(
                after <= gb * before * (1.0 + 1e-12),
                "{after} > {gb} * {before}"
            );
        }
    }
}
