//! Sample-based spot checks of a certificate against a plant.
//!
//! A failing sample is a counterexample; passing is evidence only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certificate::{LyapunovCertificate, ModeCertificate};
use super::constants::ConstantsSummary;
use crate::error::{Error, Result};
use crate::hybrid::system::{FlowContext, HybridSystem};
use crate::util::{dist, dot};

/// Normalized slack below zero still accepted as rounding.
pub const MARGIN_TOL: f64 = 1e-9;
/// Relative agreement required between the analytic and central-difference gradients.
pub const GRADIENT_RTOL: f64 = 1e-4;
/// Points this close to the target are skipped by the sandwich check.
pub const SET_EXCLUSION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    /// Half-width of the box around the target that `x` is drawn from.
    pub radius: f64,
    pub seed: u64,
    pub tau_d: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    /// `μ` is drawn log-uniformly from `[1, mu_max]`.
    pub mu_max: f64,
    /// Half-width of the input box.
    pub u_radius: f64,
}

impl SampleSpec {
    pub fn new(count: usize, radius: f64, tau_d: f64, n0: f64) -> Self {
        Self {
            count,
            radius,
            seed: 0,
            tau_d,
            n0,
            mu_max: 1e4,
            u_radius: radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.radius > 0.0
            && self.tau_d > 0.0
            && self.n0 >= 0.0
            && self.mu_max >= 1.0
            && self.u_radius >= 0.0
            && [self.radius, self.tau_d, self.n0, self.mu_max, self.u_radius]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("bad sample spec {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Sandwich,
    Flow,
    Reset,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub check: CheckKind,
    pub mode: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_mode: Option<usize>,
    pub x: Vec<f64>,
    pub tau: f64,
    pub eta: f64,
    pub mu: f64,
    pub u: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: CheckKind,
    pub pass: bool,
    pub evaluations: usize,
    pub worst_margin: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub pass: bool,
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub checks: Vec<CheckSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSummary>,
}

struct Sample {
    x: Vec<f64>,
    tau: f64,
    eta: f64,
    mu: f64,
    u: Vec<f64>,
}

fn draw_samples(spec: &SampleSpec, target: &[f64], input_dim: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = target.len();
    let eta_max = 1.0 / spec.tau_d;
    let mut out = Vec::with_capacity(spec.count + 2 * n);
    // faces of the box, at the extreme clock values
    for i in 0..n {
        for sign in [-1.0, 1.0] {
            let mut x = target.to_vec();
            x[i] += sign * spec.radius;
            out.push(Sample {
                x,
                tau: if sign > 0.0 { spec.n0 } else { 0.0 },
                eta: if sign > 0.0 { eta_max } else { 0.0 },
                mu: 1.0,
                u: vec![spec.u_radius; input_dim],
            });
        }
    }
    for _ in 0..spec.count {
        let x = target
            .iter()
            .map(|c| c + rng.random_range(-spec.radius..=spec.radius))
            .collect();
        let tau = rng.random::<f64>() * spec.n0;
        let eta = rng.random::<f64>() * eta_max;
        let mu = (rng.random::<f64>() * spec.mu_max.ln()).exp();
        let u = (0..input_dim)
            .map(|_| rng.random_range(-spec.u_radius..=spec.u_radius))
            .collect();
        out.push(Sample { x, tau, eta, mu, u });
    }
    out
}

/// Worst (smallest) normalized margin per check for one sample.
#[derive(Default)]
struct Partial {
    worst: [Option<Witness>; 4],
    counts: [usize; 4],
}

impl Partial {
    fn record(&mut self, w: Witness) {
        let i = w.check as usize;
        self.counts[i] += 1;
        if self.worst[i]
            .as_ref()
            .is_none_or(|cur| w.margin < cur.margin)
        {
            self.worst[i] = Some(w);
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        for i in 0..4 {
            self.counts[i] += other.counts[i];
            if let Some(w) = other.worst[i].clone() {
                if self.worst[i]
                    .as_ref()
                    .is_none_or(|cur| w.margin < cur.margin)
                {
                    self.worst[i] = Some(w);
                }
            }
        }
        self
    }
}

fn central_gradient(m: &ModeCertificate, x: &[f64], tau: f64) -> (Vec<f64>, f64) {
    let h = 1e-6 * (1.0 + crate::util::norm(x));
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = m.v.value(&xp, tau);
        xp[i] = x[i] - h;
        let dn = m.v.value(&xp, tau);
        xp[i] = x[i];
        g[i] = (up - dn) / (2.0 * h);
    }
    let ht = 1e-6 * (1.0 + tau.abs());
    let gt = (m.v.value(x, tau + ht) - m.v.value(x, tau - ht)) / (2.0 * ht);
    (g, gt)
}

fn check_sample(
    cert: &LyapunovCertificate,
    system: &dyn HybridSystem,
    spec: &SampleSpec,
    s: &Sample,
) -> Partial {
    let mut out = Partial::default();
    let p = cert.p;
    let ex = dist(&s.x, &cert.target);
    let xp = ex.powf(p);
    let witness = |check, mode, to_mode, tau, margin| Witness {
        check,
        mode,
        to_mode,
        x: s.x.clone(),
        tau,
        eta: s.eta,
        mu: s.mu,
        u: s.u.clone(),
        margin,
    };
    let n = s.x.len();
    let mut gx = vec![0.0; n];
    let mut dx = vec![0.0; n];
    for m in &cert.modes {
        let v = m.v.value(&s.x, s.tau);

        if ex > SET_EXCLUSION {
            let lo = v / xp - m.c1;
            let hi = m.c2 - v / xp;
            out.record(witness(
                CheckKind::Sandwich,
                m.mode,
                None,
                s.tau,
                lo.min(hi),
            ));
        }

        let v_tau = m.v.gradient(&s.x, s.tau, &mut gx);
        let (fd, fd_tau) = central_gradient(m, &s.x, s.tau);
        let an: Vec<f64> = gx.iter().copied().chain([v_tau]).collect();
        let num: Vec<f64> = fd.into_iter().chain([fd_tau]).collect();
        let an_norm = an.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let err = an
            .iter()
            .zip(&num)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let scale = an_norm.max(1e-8 * (1.0 + v.abs()));
        out.record(witness(
            CheckKind::Gradient,
            m.mode,
            None,
            s.tau,
            GRADIENT_RTOL - err / scale,
        ));

        let ctx = FlowContext {
            t: 0.0,
            s: 0.0,
            mu: s.mu,
            tau: s.tau,
            rho: None,
            mode: m.mode,
        };
        system.flow(&ctx, &s.x, &s.u, &mut dx);
        let lie = dot(&gx, &dx) + v_tau * s.eta;
        let input = m.c4 * cert.channel.delta(s.mu) * crate::util::norm(&s.u).powf(p);
        let rate = match (m.c3, m.c5) {
            (Some(c3), _) => -c3 * v,
            (None, Some(c5)) => c5 * v,
            (None, None) => unreachable!("validated certificate"),
        };
        let norm = xp + input + f64::MIN_POSITIVE;
        out.record(witness(
            CheckKind::Flow,
            m.mode,
            None,
            s.tau,
            (rate + input - lie) / norm,
        ));

        if spec.n0 >= 1.0 && ex > SET_EXCLUSION {
            // jumps need τ ∈ [1, N0]
            let tau_j = 1.0 + (s.tau / spec.n0.max(f64::MIN_POSITIVE)) * (spec.n0 - 1.0);
            let before = m.v.value(&s.x, tau_j);
            let others: Vec<usize> = cert
                .modes
                .iter()
                .map(|o| o.mode)
                .filter(|&q| q != m.mode)
                .collect();
            let targets = if others.is_empty() {
                vec![m.mode]
            } else {
                others
            };
            for q in targets {
                let xr = system.reset(m.mode, q, tau_j, &s.x);
                let after = m.v.value(&xr, tau_j - 1.0);
                out.record(witness(
                    CheckKind::Reset,
                    m.mode,
                    Some(q),
                    tau_j,
                    (cert.chi * before - after) / xp,
                ));
            }
        }
    }
    out
}

/// Spot-checks the sandwich bounds, the flow decrease (stable) or growth
/// (unstable) inequality with `η ∈ [0, 1/τ_d]`, the reset inequality
/// `V_o(R(x), τ − 1) ≤ χ·V_o(x, τ)` on `τ ∈ [1, N0]`, and the analytic
/// gradient against central differences.
pub fn verify_certificate(
    cert: &LyapunovCertificate,
    system: &dyn HybridSystem,
    spec: &SampleSpec,
) -> Result<CertificateReport> {
    cert.validate_structure()?;
    spec.validate()?;
    if cert.target.len() != system.dim() {
        return Err(Error::InvalidParams(format!(
            "certificate target has length {}, plant dimension is {}",
            cert.target.len(),
            system.dim()
        )));
    }
    let samples = draw_samples(spec, &cert.target, system.input_dim());
    let partials: Vec<Partial> = samples
        .par_iter()
        .map(|s| check_sample(cert, system, spec, s))
        .collect();
    let total = partials
        .into_iter()
        .fold(Partial::default(), Partial::merge);

    let kinds = [
        CheckKind::Sandwich,
        CheckKind::Flow,
        CheckKind::Reset,
        CheckKind::Gradient,
    ];
    let checks: Vec<CheckSummary> = kinds
        .iter()
        .map(|&k| {
            let w = total.worst[k as usize].clone();
            let worst = w.as_ref().map_or(f64::INFINITY, |w| w.margin);
            CheckSummary {
                check: k,
                pass: worst >= -MARGIN_TOL,
                evaluations: total.counts[k as usize],
                worst_margin: worst,
                witness: w,
            }
        })
        .collect();
    let worst = checks
        .iter()
        .filter(|c| c.witness.is_some())
        .min_by(|a, b| a.worst_margin.total_cmp(&b.worst_margin));
    let failing = checks.iter().find(|c| !c.pass);
    Ok(CertificateReport {
        pass: failing.is_none(),
        worst_margin: worst.map_or(f64::INFINITY, |c| c.worst_margin),
        witness: failing.or(worst).and_then(|c| c.witness.clone()),
        checks,
        constants: None,
    })
}
