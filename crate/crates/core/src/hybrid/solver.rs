//! Fixed-step RK4 and Dormand-Prince 5(4) integrators for the flow segments.

use serde::{Deserialize, Serialize};

use crate::blowup::DEFAULT_EPS_TERM;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Step of the fixed-step method.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub eps_term: f64,
    /// Largest dilated horizon accepted by the simulator.
    pub s_max: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            step: 1e-2,
            rtol: 1e-9,
            atol: 1e-9,
            eps_term: DEFAULT_EPS_TERM,
            s_max: 1e5,
            max_steps: 5_000_000,
        }
    }
}

impl SolverConfig {
    pub fn rk45(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4,
            step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.rtol > 0.0
            && self.atol > 0.0
            && self.eps_term > 0.0
            && self.eps_term < 1.0
            && self.s_max > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(
                "solver steps and tolerances must be positive".into(),
            ))
        }
    }
}

/// Dense samples of one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSegment {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl FlowSegment {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("segment has its initial sample")
    }
}

/// Integrates `ẋ = f(t, x)` on `[a, b]`.
///
/// Every accepted step is kept as a sample; `checkpoints` inside `(a, b)`
/// are hit exactly.
pub fn integrate_flow<F>(
    mut f: F,
    x0: &[f64],
    a: f64,
    b: f64,
    config: &SolverConfig,
    checkpoints: &[f64],
) -> Result<FlowSegment>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    config.validate()?;
    if !(b > a) {
        return Err(Error::Domain(format!(
            "integration interval [{a}, {b}] is empty"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: a });
    }
    let mut stops: Vec<f64> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c > a && c < b)
        .collect();
    stops.sort_by(|x, y| x.total_cmp(y));
    stops.dedup();
    stops.push(b);
    match config.method {
        Method::Rk4 => rk4(&mut f, x0, a, &stops, config),
        Method::Rk45 => dopri5(&mut f, x0, a, &stops, config),
    }
}

fn rk4<F>(
    f: &mut F,
    x0: &[f64],
    a: f64,
    stops: &[f64],
    config: &SolverConfig,
) -> Result<FlowSegment>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x0.len();
    let mut seg = FlowSegment {
        times: vec![a],
        states: vec![x0.to_vec()],
    };
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut t = a;
    let mut x = x0.to_vec();
    let mut steps = 0usize;
    for &stop in stops {
        while t < stop {
            let h = config.step.min(stop - t);
            let t_next = if stop - t <= config.step { stop } else { t + h };
            f(t, &x, &mut k1);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            f(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            f(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = x[i] + h * k3[i];
            }
            f(t + h, &tmp, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t = t_next;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { time: t });
            }
            seg.times.push(t);
            seg.states.push(x.clone());
            steps += 1;
            if steps > config.max_steps {
                return Err(Error::StepFailure { time: t });
            }
        }
    }
    Ok(seg)
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn err_norm(err: &[f64], x: &[f64], y: &[f64], config: &SolverConfig) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(x.iter().zip(y))
        .map(|(e, (a, b))| {
            let sc = config.atol + config.rtol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    x: &[f64],
    f0: &[f64],
    span: f64,
    config: &SolverConfig,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let zeros = vec![0.0; x.len()];
    let d0 = err_norm(x, x, &zeros, config);
    let d1 = err_norm(f0, x, &zeros, config);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let x1: Vec<f64> = x.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; x.len()];
    f(t + h0, &x1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = err_norm(&diff, x, &zeros, config) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

fn dopri5<F>(
    f: &mut F,
    x0: &[f64],
    a: f64,
    stops: &[f64],
    config: &SolverConfig,
) -> Result<FlowSegment>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x0.len();
    let mut seg = FlowSegment {
        times: vec![a],
        states: vec![x0.to_vec()],
    };
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut t = a;
    let mut x = x0.to_vec();
    f(t, &x, &mut k[0]);
    let b = *stops.last().expect("stops include the right end");
    let mut h = initial_step(f, t, &x, &k[0].clone(), b - a, config);
    let mut steps = 0usize;
    for &stop in stops {
        while t < stop {
            let remaining = stop - t;
            let (h_try, hits_stop) = if h >= remaining {
                (remaining, true)
            } else {
                (h, false)
            };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = x[i];
                    for (m, km) in k.iter().enumerate().take(s) {
                        acc += h_try * A[s][m] * km[i];
                    }
                    tmp[i] = acc;
                }
                f(t + C[s] * h_try, &tmp, &mut k[s]);
            }
            // tmp now holds the fifth-order solution (FSAL stage input)
            for i in 0..n {
                let mut e = 0.0;
                for (m, km) in k.iter().enumerate() {
                    e += E[m] * km[i];
                }
                err[i] = h_try * e;
            }
            let en = err_norm(&err, &x, &tmp, config);
            if !en.is_finite() {
                if h_try < 1e-12 * t.abs().max(1.0) {
                    return Err(Error::NonFinite { time: t });
                }
                h = h_try * 0.2;
                continue;
            }
            steps += 1;
            if steps > config.max_steps {
                return Err(Error::StepFailure { time: t });
            }
            if en <= 1.0 {
                t = if hits_stop { stop } else { t + h_try };
                x.copy_from_slice(&tmp);
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
                seg.times.push(t);
                seg.states.push(x.clone());
                let fac = if en == 0.0 {
                    5.0
                } else {
                    (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                };
                let proposed = h_try * fac;
                // keep the pre-truncation step when a stop shortened it
                h = if hits_stop { proposed.max(h) } else { proposed };
            } else {
                h = h_try * (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            }
            if h < 16.0 * f64::EPSILON * t.abs().max(1e-300) {
                return Err(Error::StepFailure { time: t });
            }
        }
    }
    Ok(seg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_constant() {
        for cfg in [SolverConfig::default(), SolverConfig::rk4(0.1)] {
            let seg =
                integrate_flow(|_, _, dx| dx.fill(0.0), &[3.0, -1.0], 0.0, 2.0, &cfg, &[]).unwrap();
            assert!(seg.states.iter().all(|s| s == &vec![3.0, -1.0]));
            assert_eq!(*seg.times.last().unwrap(), 2.0);
        }
    }

    #[test]
    fn exponential_decay() {
        let want = (-1f64).exp();
        let cfg = SolverConfig::rk45(1e-12);
        let seg = integrate_flow(|_, x, dx| dx[0] = -x[0], &[1.0], 0.0, 1.0, &cfg, &[]).unwrap();
        assert!((seg.last()[0] - want).abs() < 1e-8);
        let seg = integrate_flow(
            |_, x, dx| dx[0] = -x[0],
            &[1.0],
            0.0,
            1.0,
            &SolverConfig::rk4(1e-3),
            &[],
        )
        .unwrap();
        assert!((seg.last()[0] - want).abs() < 1e-8);
    }

    #[test]
    fn gain_ode_reaches_two() {
        let cfg = SolverConfig::rk45(1e-12);
        let seg = integrate_flow(
            |_, x, dx| dx[0] = x[0] * x[0] / 10.0,
            &[1.0],
            0.0,
            5.0,
            &cfg,
            &[],
        )
        .unwrap();
        assert!((seg.last()[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn checkpoints_are_hit() {
        let cps = [0.25, 0.5, 0.75];
        for cfg in [SolverConfig::default(), SolverConfig::rk4(0.3)] {
            let seg =
                integrate_flow(|_, x, dx| dx[0] = -x[0], &[1.0], 0.0, 1.0, &cfg, &cps).unwrap();
            for c in cps {
                assert!(seg.times.contains(&c));
            }
            assert!(seg.times.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn overflow_is_reported() {
        let cfg = SolverConfig::rk4(0.1);
        let r = integrate_flow(|_, x, dx| dx[0] = x[0] * x[0], &[1.0], 0.0, 2.0, &cfg, &[]);
        assert!(matches!(
            r,
            Err(Error::NonFinite { .. }) | Err(Error::StepFailure { .. })
        ));
        let r = integrate_flow(
            |_, x, dx| dx[0] = x[0] * x[0],
            &[1.0],
            0.0,
            2.0,
            &SolverConfig::default(),
            &[],
        );
        assert!(r.is_err());
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(integrate_flow(
            |_, _, dx| dx.fill(0.0),
            &[1.0],
            1.0,
            1.0,
            &SolverConfig::default(),
            &[]
        )
        .is_err());
    }
}
