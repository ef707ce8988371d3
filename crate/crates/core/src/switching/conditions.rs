//! Blow-up average dwell-time (BU-ADT) and activation-time (BU-AAT) conditions.
//!
//! Both conditions compare a left side that is piecewise constant (switch
//! count) or piecewise monotone (unstable activation) against a right side
//! that is an increment of the dilation `T_k`. Writing everything in dilated
//! time turns each check into a maximum of `g(t₂) − g(t₁)` over boundary
//! pairs, which a running minimum finds in one pass.

use serde::{Deserialize, Serialize};

use super::signal::SwitchingSignal;
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};

/// Slack below zero tolerated as rounding (switch times pass through `T_k⁻¹`).
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdtParams {
    pub tau_d: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
}

impl AdtParams {
    pub fn new(tau_d: f64, n0: f64) -> Result<Self> {
        if !(tau_d > 0.0 && tau_d.is_finite() && n0 >= 1.0 && n0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need tau_d > 0 and N0 >= 1, got {tau_d}, {n0}"
            )));
        }
        Ok(Self { tau_d, n0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AatParams {
    pub tau_a: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
}

impl AatParams {
    pub fn new(tau_a: f64, t0: f64) -> Result<Self> {
        if !(tau_a > 1.0 && t0 >= 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need tau_a > 1 and T0 >= 0, got {tau_a}, {t0}"
            )));
        }
        Ok(Self { tau_a, t0 })
    }
}

/// Outcome of a signal-class check.
///
/// `min_slack` is the infimum of `bound − left side` over all windows.
/// The witness is the worst window `(t₁, t₂]`; for the dwell-time check
/// `t₁` is approached from the left. It is `None` when the worst case is an
/// empty window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub min_slack: f64,
    pub witness_t1: Option<f64>,
    pub witness_t2: Option<f64>,
}

fn check_window(params: &BlowUpParams, t1: f64, t2: f64) -> Result<()> {
    if !(0.0 <= t1 && t1 <= t2 && t2 < params.terminal_time()) {
        return Err(Error::Domain(format!(
            "window [{t1}, {t2}] must satisfy 0 <= t1 <= t2 < Y = {}",
            params.terminal_time()
        )));
    }
    Ok(())
}

/// Right side of the BU-ADT condition, `ω_k(μ(t₂), μ(t₁))/τ_d + N0`.
pub fn bu_adt_bound(params: &BlowUpParams, adt: &AdtParams, t1: f64, t2: f64) -> Result<f64> {
    check_window(params, t1, t2)?;
    let ds = params.dilate_uncapped(t2)? - params.dilate_uncapped(t1)?;
    Ok(ds / adt.tau_d + adt.n0)
}

/// Classical average dwell-time bound `(t₂ − t₁)/τ_d + N0`.
pub fn adt_bound(adt: &AdtParams, t1: f64, t2: f64) -> f64 {
    (t2 - t1) / adt.tau_d + adt.n0
}

/// The equivalent closed forms of the BU-ADT bound; `None` where a form does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub log_form: Option<f64>,
    pub binomial_form: Option<f64>,
    pub omega_form: f64,
}

fn binomial(n: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

pub fn bu_adt_closed_forms(
    params: &BlowUpParams,
    adt: &AdtParams,
    t1: f64,
    t2: f64,
) -> Result<ClosedForms> {
    check_window(params, t1, t2)?;
    let ups = params.terminal_time();
    let t = params.t_scale;
    let gain = |x: f64| (t / (ups - x)).powf(params.k);
    let omega_form = params.omega(gain(t2), gain(t1))? / adt.tau_d + adt.n0;

    let log_form = params
        .is_log_branch()
        .then(|| t / adt.tau_d * ((ups - t1) / (ups - t2)).ln() + adt.n0);

    let k_int = params.k.round();
    let binomial_form = (params.k > 1.5 && (params.k - k_int).abs() < 1e-12).then(|| {
        let k = k_int as u32;
        let gamma = params.mu0.powf((2.0 - params.k) / params.k) / adt.tau_d
            * (t * t / ((ups - t2) * (ups - t1))).powi(k as i32 - 1);
        let mut acc = t2 - t1;
        for l in 2..k {
            let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
            let c = sign * binomial(k - 1, l) / f64::from(k - 1) * ups.powi(1 - l as i32);
            acc += c * (t2.powi(l as i32) - t1.powi(l as i32));
        }
        gamma * acc + adt.n0
    });

    Ok(ClosedForms {
        log_form,
        binomial_form,
        omega_form,
    })
}

/// `∫_{t₁}^{t₂} μ_k(t)·1[σ(t) ∈ Q_u] dt`, summed exactly as dilation increments.
pub fn unstable_activation(
    signal: &SwitchingSignal,
    params: &BlowUpParams,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    if !(0.0 <= t1 && t1 <= t2 && t2 <= signal.end_time) {
        return Err(Error::Domain(format!(
            "window [{t1}, {t2}] outside [0, {}]",
            signal.end_time
        )));
    }
    check_window(params, t1, t2)?;
    let mut total = 0.0;
    for (a, b, q) in signal.intervals() {
        if !signal.partition.is_unstable(q) {
            continue;
        }
        let (lo, hi) = (a.max(t1), b.min(t2));
        if hi > lo {
            total += params.dilate_uncapped(hi)? - params.dilate_uncapped(lo)?;
        }
    }
    Ok(total)
}

fn dilated_boundaries(signal: &SwitchingSignal, params: &BlowUpParams) -> Result<Vec<f64>> {
    if signal.end_time >= params.terminal_time() {
        return Err(Error::Domain(format!(
            "signal end time {} must precede Y = {}",
            signal.end_time,
            params.terminal_time()
        )));
    }
    signal
        .boundaries()
        .iter()
        .map(|&t| params.dilate_uncapped(t))
        .collect()
}

/// Checks `N(t₂, t₁) ≤ ω_k(μ(t₂), μ(t₁))/τ_d + N0` for every `t₁ ≤ t₂`.
///
/// The worst window ending in `(τ_m, τ_{m+1})` is `(τ_i⁻, τ_m]`: it holds
/// `m − i + 1` switches and its bound is smallest when `t₂ = τ_m`.
pub fn validate_bu_adt(
    signal: &SwitchingSignal,
    params: &BlowUpParams,
    adt: &AdtParams,
) -> Result<ValidationReport> {
    let s = dilated_boundaries(signal, params)?;
    let times = signal.boundaries();
    let m = signal.switch_count();
    let mut best = (adt.n0, None, None);
    // running minimum over i of (i − S_i/τ_d), switches indexed 1..=m
    let mut run: Option<(f64, usize)> = None;
    for idx in 1..=m {
        let cand = idx as f64 - s[idx] / adt.tau_d;
        if run.is_none_or(|(v, _)| cand < v) {
            run = Some((cand, idx));
        }
        let (v, i) = run.expect("set above");
        // slack = (S_m − S_i)/τ_d + N0 − (m − i + 1)
        let slack = s[idx] / adt.tau_d - idx as f64 - 1.0 + adt.n0 + v;
        if slack < best.0 {
            best = (slack, Some(times[i]), Some(times[idx]));
        }
    }
    Ok(ValidationReport {
        pass: best.0 >= -SLACK_TOL,
        min_slack: best.0,
        witness_t1: best.1,
        witness_t2: best.2,
    })
}

/// Checks the activation budget `A(t₂) − A(t₁) ≤ ω_k(μ(t₂), μ(t₁))/τ_a + T0`.
pub fn validate_bu_aat(
    signal: &SwitchingSignal,
    params: &BlowUpParams,
    aat: &AatParams,
) -> Result<ValidationReport> {
    let s = dilated_boundaries(signal, params)?;
    let times = signal.boundaries();
    // g(b) = A(b) − S(b)/τ_a at every piece boundary
    let mut g = Vec::with_capacity(s.len());
    let mut a = 0.0;
    g.push(0.0);
    for (idx, (_, _, q)) in signal.intervals().enumerate() {
        if signal.partition.is_unstable(q) {
            a += s[idx + 1] - s[idx];
        }
        g.push(a - s[idx + 1] / aat.tau_a);
    }
    let mut best = (aat.t0, None, None);
    let mut run = (g[0], 0usize);
    for (idx, &gm) in g.iter().enumerate().skip(1) {
        if g[idx - 1] < run.0 {
            run = (g[idx - 1], idx - 1);
        }
        let slack = aat.t0 - (gm - run.0);
        if slack < best.0 {
            best = (slack, Some(times[run.1]), Some(times[idx]));
        }
    }
    Ok(ValidationReport {
        pass: best.0 >= -SLACK_TOL,
        min_slack: best.0,
        witness_t1: best.1,
        witness_t2: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::switching::signal::{ModePartition, Piece};

    fn p(t: f64, k: f64, mu0: f64) -> BlowUpParams {
        BlowUpParams::new(t, k, mu0).unwrap()
    }

    fn signal(switches: &[f64], end: f64) -> SwitchingSignal {
        let mut pieces = vec![Piece {
            start: 0.0,
            mode: 1,
        }];
        for (i, &t) in switches.iter().enumerate() {
            pieces.push(Piece {
                start: t,
                mode: 1 + (i + 1) % 2,
            });
        }
        SwitchingSignal::new(pieces, end, ModePartition::all_stable([1, 2])).unwrap()
    }

    // brute force over a fine grid of windows, t₁ taken just left of each grid point
    fn brute_adt(sig: &SwitchingSignal, params: &BlowUpParams, adt: &AdtParams) -> f64 {
        let mut pts = sig.boundaries();
        pts.extend((0..200).map(|i| sig.end_time * i as f64 / 200.0));
        pts.sort_by(f64::total_cmp);
        let mut worst = f64::INFINITY;
        for &a in &pts {
            for &b in &pts {
                if b < a {
                    continue;
                }
                let t1 = (a - 1e-12).max(0.0);
                let n = sig.count_switches(t1, b).unwrap() as f64;
                worst = worst.min(bu_adt_bound(params, adt, t1, b).unwrap() - n);
            }
        }
        worst
    }

    #[test]
    fn bound_examples() {
        let adt = AdtParams::new(1.0, 3.0).unwrap();
        let q = p(10.0, 1.0, 1.0);
        assert_eq!(bu_adt_bound(&q, &adt, 2.0, 2.0).unwrap(), 3.0);
        let b = bu_adt_bound(&q, &adt, 0.0, 5.0).unwrap();
        assert!((b - (10.0 * 2f64.ln() + 3.0)).abs() < 1e-12);
        let big = p(1e6, 1.0, 1.0);
        let b = bu_adt_bound(&big, &AdtParams::new(1.0, 1.0).unwrap(), 0.0, 5.0).unwrap();
        assert!((b - 6.0).abs() < 1e-3);
        assert!(bu_adt_bound(&q, &adt, 0.0, 10.0).is_err());
    }

    #[test]
    fn closed_forms_agree() {
        let adt = AdtParams::new(0.7, 2.0).unwrap();
        for (k, mu0) in [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0), (4.0, 1.5)] {
            let q = p(10.0, k, mu0);
            let ups = q.terminal_time();
            for (a, b) in [(0.0, 0.5), (0.1, 0.8), (0.3, 0.9), (0.45, 0.45)] {
                let cf = bu_adt_closed_forms(&q, &adt, a * ups, b * ups).unwrap();
                let other = if k == 1.0 {
                    cf.log_form.unwrap()
                } else {
                    cf.binomial_form.unwrap()
                };
                assert!(
                    (other - cf.omega_form).abs() <= 1e-10 * cf.omega_form,
                    "k={k}: {cf:?}"
                );
                let direct = bu_adt_bound(&q, &adt, a * ups, b * ups).unwrap();
                assert!((direct - cf.omega_form).abs() <= 1e-10 * direct);
            }
        }
        let cf = bu_adt_closed_forms(&p(10.0, 2.5, 1.0), &adt, 0.0, 1.0).unwrap();
        assert!(cf.binomial_form.is_none() && cf.log_form.is_none());
    }

    #[test]
    fn empty_signal_passes_with_n0() {
        let q = p(10.0, 1.0, 1.0);
        let r = validate_bu_adt(&signal(&[], 5.0), &q, &AdtParams::new(1.0, 3.0).unwrap()).unwrap();
        assert!(r.pass);
        assert_eq!(r.min_slack, 3.0);
        assert_eq!(r.witness_t1, None);
    }

    #[test]
    fn even_and_clustered() {
        let q = p(10.0, 1.0, 1.0);
        let adt = AdtParams::new(1.0, 3.0).unwrap();
        let even: Vec<f64> = (1..=9).map(|i| 5.0 * i as f64 / 9.0).collect();
        let sig = signal(&even, 5.001);
        let r = validate_bu_adt(&sig, &q, &adt).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.min_slack - brute_adt(&sig, &q, &adt)).abs() < 1e-6);

        let cluster: Vec<f64> = (1..=10).map(|i| 4.9 + 0.01 * i as f64).collect();
        let sig = signal(&cluster, 5.001);
        let r = validate_bu_adt(&sig, &q, &adt).unwrap();
        assert!(!r.pass);
        let (a, b) = (r.witness_t1.unwrap(), r.witness_t2.unwrap());
        assert!(a > 4.9 && b <= 5.0 && a < b);
        let n = sig.count_switches(a - 1e-12, b).unwrap() as f64;
        assert!((bu_adt_bound(&q, &adt, a, b).unwrap() - n - r.min_slack).abs() < 1e-9);
        assert!((r.min_slack - brute_adt(&sig, &q, &adt)).abs() < 1e-6);
    }

    #[test]
    fn activation_exact() {
        let q = p(10.0, 1.0, 1.0);
        let part = ModePartition {
            stable: vec![1],
            unstable: vec![2],
        };
        let one = SwitchingSignal::constant(2, 5.0, part.clone()).unwrap();
        let a = unstable_activation(&one, &q, 0.0, 5.0).unwrap();
        assert!((a - 10.0 * 2f64.ln()).abs() < 1e-12);
        let two = SwitchingSignal::new(
            vec![
                Piece {
                    start: 0.0,
                    mode: 2,
                },
                Piece {
                    start: 1.0,
                    mode: 1,
                },
                Piece {
                    start: 2.0,
                    mode: 2,
                },
                Piece {
                    start: 3.0,
                    mode: 1,
                },
            ],
            4.0,
            part.clone(),
        )
        .unwrap();
        let d = |t| q.dilate(t).unwrap();
        let a = unstable_activation(&two, &q, 0.0, 4.0).unwrap();
        assert!((a - (d(1.0) + d(3.0) - d(2.0))).abs() < 1e-12);
        let stable = SwitchingSignal::constant(1, 4.0, part).unwrap();
        assert_eq!(unstable_activation(&stable, &q, 0.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn activation_budget() {
        let q = p(10.0, 1.0, 1.0);
        let aat = AatParams::new(2.0, 2.0).unwrap();
        let part = ModePartition {
            stable: vec![1],
            unstable: vec![2],
        };
        let edge = 10.0 * (1.0 - (-0.4f64).exp());
        let ok = SwitchingSignal::constant(2, edge - 1e-9, part.clone()).unwrap();
        let r = validate_bu_aat(&ok, &q, &aat).unwrap();
        assert!(r.pass && r.min_slack < 1e-6, "{r:?}");
        let bad = SwitchingSignal::constant(2, 5.0, part.clone()).unwrap();
        let r = validate_bu_aat(&bad, &q, &aat).unwrap();
        assert!(!r.pass);
        assert_eq!((r.witness_t1, r.witness_t2), (Some(0.0), Some(5.0)));
        let stable = SwitchingSignal::constant(1, 5.0, part).unwrap();
        let r = validate_bu_aat(&stable, &q, &aat).unwrap();
        assert!(r.pass && r.min_slack >= 2.0);
    }
}
