//! Schedule-driven simulation in either time scale.
//!
//! The integrated vector is `(x, μ)`. In dilated time it follows
//! `dx/ds = f_q(x, u, τ)`, `dμ/ds = (k/T) μ^{1/k}`; in original time both
//! right-hand sides carry the extra factor `μ`. `τ` and `ρ` come from the
//! closed-form clock.

use serde::{Deserialize, Serialize};

use super::arc::{map_time_scale, ArcInterval, Direction, HybridArc, Sample, TimeScale};
use super::clock::ClockSpec;
use super::solver::{integrate_flow, SolverConfig};
use super::system::{apply_jump, FlowContext, HybridState, HybridSystem};
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};

/// A jump at original time `t` (dilated `s`) into `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledJump {
    pub t: f64,
    pub s: f64,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSchedule {
    pub initial_mode: usize,
    pub jumps: Vec<ScheduledJump>,
}

impl JumpSchedule {
    pub fn empty(initial_mode: usize) -> Self {
        Self {
            initial_mode,
            jumps: Vec::new(),
        }
    }

    pub fn from_dilated(
        params: &BlowUpParams,
        initial_mode: usize,
        events: &[(f64, usize)],
    ) -> Result<Self> {
        let jumps = events
            .iter()
            .map(|&(s, mode)| {
                Ok(ScheduledJump {
                    t: params.contract(s)?,
                    s,
                    mode,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out = Self {
            initial_mode,
            jumps,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn from_original(
        params: &BlowUpParams,
        initial_mode: usize,
        events: &[(f64, usize)],
    ) -> Result<Self> {
        let jumps = events
            .iter()
            .map(|&(t, mode)| {
                Ok(ScheduledJump {
                    t,
                    s: params.dilate(t)?,
                    mode,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out = Self {
            initial_mode,
            jumps,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = (0.0, 0.0);
        for (i, jmp) in self.jumps.iter().enumerate() {
            if !(jmp.t > prev.0 && jmp.s > prev.1) {
                return Err(Error::Schedule(format!(
                    "event {i} at t = {} is not strictly increasing",
                    jmp.t
                )));
            }
            prev = (jmp.t, jmp.s);
        }
        Ok(())
    }

    fn time(&self, i: usize, scale: TimeScale) -> f64 {
        match scale {
            TimeScale::Original => self.jumps[i].t,
            TimeScale::Dilated => self.jumps[i].s,
        }
    }
}

/// Everything except the initial condition and the horizon.
pub struct SimSetup<'a> {
    pub system: &'a dyn HybridSystem,
    pub params: BlowUpParams,
    pub clock: ClockSpec,
    pub schedule: JumpSchedule,
    pub config: SolverConfig,
    /// Original times at which samples are forced.
    pub checkpoints: Vec<f64>,
}

impl<'a> SimSetup<'a> {
    pub fn new(
        system: &'a dyn HybridSystem,
        params: BlowUpParams,
        clock: ClockSpec,
        schedule: JumpSchedule,
        config: SolverConfig,
    ) -> Self {
        Self {
            system,
            params,
            clock,
            schedule,
            config,
            checkpoints: Vec::new(),
        }
    }
}

/// Simulates up to `horizon`, measured in `scale`.
pub fn simulate(
    setup: &SimSetup<'_>,
    x0: &[f64],
    horizon: f64,
    scale: TimeScale,
) -> Result<HybridArc> {
    let system = setup.system;
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::InvalidParams(format!(
            "initial state has length {}, expected {n}",
            x0.len()
        )));
    }
    setup.config.validate()?;
    setup.clock.validate()?;
    let params = setup.params.with_eps_term(setup.config.eps_term)?;
    let schedule = &setup.schedule;
    schedule.validate()?;

    let s_horizon = match scale {
        TimeScale::Original => {
            if !(horizon > 0.0 && horizon <= params.t_max()) {
                return Err(Error::Schedule(format!(
                    "original horizon {horizon} outside (0, (1-eps)Y = {}]",
                    params.t_max()
                )));
            }
            params.dilate(horizon)?
        }
        TimeScale::Dilated => {
            if !(horizon > 0.0 && horizon <= setup.config.s_max) {
                return Err(Error::Schedule(format!(
                    "dilated horizon {horizon} outside (0, s_max]"
                )));
            }
            horizon
        }
    };
    if let Some(last) = schedule.jumps.last() {
        if schedule.time(schedule.len() - 1, scale) >= horizon || last.s >= s_horizon {
            return Err(Error::Schedule(format!(
                "event at t = {} lies beyond the horizon",
                last.t
            )));
        }
    }
    let checkpoints: Vec<f64> = setup
        .checkpoints
        .iter()
        .filter_map(|&t| match scale {
            TimeScale::Original => Some(t),
            TimeScale::Dilated => params.dilate(t).ok(),
        })
        .collect();

    let mut state = HybridState {
        x: x0.to_vec(),
        tau: setup.clock.tau0,
        rho: setup.clock.initial_rho(),
        mode: schedule.initial_mode,
        mu: params.mu0,
    };
    let mut start = 0.0;
    let mut s_start = 0.0;
    let mut intervals = Vec::with_capacity(schedule.len() + 1);

    for idx in 0..=schedule.len() {
        let (end, s_end) = if idx < schedule.len() {
            (schedule.time(idx, scale), schedule.jumps[idx].s)
        } else {
            (horizon, s_horizon)
        };
        let clock = &setup.clock;
        clock.check_flow(state.rho, state.mode, s_end - s_start)?;
        if !system.in_flow_set(&state) {
            return Err(Error::FlowSet(format!(
                "{}: state outside the flow set at interval {idx}",
                system.name()
            )));
        }
        let (tau0, rho0, mode) = (state.tau, state.rho, state.mode);
        let clock_at = |s: f64| {
            let ds = (s - s_start).max(0.0);
            (
                clock.tau_after(tau0, ds),
                clock.rho_after(rho0, mode, ds).map(|r| r.max(0.0)),
            )
        };
        let to_times = |time: f64| -> (f64, f64) {
            match scale {
                TimeScale::Dilated => (params.contract(time).unwrap_or(f64::NAN), time),
                TimeScale::Original => (time, params.dilate(time).unwrap_or(f64::NAN)),
            }
        };
        let rhs = |time: f64, y: &[f64], dy: &mut [f64]| {
            let (t, s) = to_times(time);
            let (tau, rho) = clock_at(s);
            let mu = y[n];
            let ctx = FlowContext {
                t,
                s,
                mu,
                tau,
                rho,
                mode,
            };
            let u = system.input(&ctx, &y[..n]);
            system.flow(&ctx, &y[..n], &u, &mut dy[..n]);
            match scale {
                TimeScale::Dilated => dy[n] = params.normalized_gain_rate(mu),
                TimeScale::Original => {
                    for d in dy[..n].iter_mut() {
                        *d *= mu;
                    }
                    dy[n] = params.gain_rate(mu);
                }
            }
        };
        let mut y0 = state.x.clone();
        y0.push(state.mu);
        let seg = integrate_flow(rhs, &y0, start, end, &setup.config, &checkpoints)?;
        let samples: Vec<Sample> = seg
            .times
            .iter()
            .zip(&seg.states)
            .map(|(&time, y)| {
                let s = if time == end { s_end } else { to_times(time).1 };
                let (tau, rho) = clock_at(s);
                Sample {
                    time,
                    x: y[..n].to_vec(),
                    tau,
                    rho,
                    mu: y[n],
                }
            })
            .collect();
        let last = samples.last().expect("segment keeps its endpoints");
        state = HybridState {
            x: last.x.clone(),
            tau: last.tau,
            rho: last.rho,
            mode,
            mu: last.mu,
        };
        intervals.push(ArcInterval {
            j: idx,
            mode,
            samples,
        });
        if idx < schedule.len() {
            state = apply_jump(system, &state, schedule.jumps[idx].mode)?;
            start = end;
            s_start = s_end;
        }
    }
    Ok(HybridArc {
        scale,
        params,
        dim: n,
        intervals,
    })
}

/// Result of comparing two arcs at common hybrid times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// Largest `|Δx_i| / (atol + rtol·max|x_i|)` over matched samples.
    pub max_scaled_diff: f64,
    pub matched: usize,
    pub jumps_a: usize,
    pub jumps_b: usize,
}

/// Compares a dilated-scale arc with an original-scale arc after contracting the former.
pub fn compare_scales(
    dilated: &HybridArc,
    original: &HybridArc,
    atol: f64,
    rtol: f64,
) -> Result<MatchReport> {
    let mapped = map_time_scale(dilated, Direction::Contract)?;
    if original.scale != TimeScale::Original {
        return Err(Error::Domain(
            "second arc must be in the original scale".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    let tol = 1e-10 * original.params.terminal_time();
    for (iv_a, iv_b) in mapped.intervals.iter().zip(&original.intervals) {
        let mut k = 0;
        for sb in &iv_b.samples {
            while k < iv_a.samples.len() && iv_a.samples[k].time < sb.time - tol {
                k += 1;
            }
            if k < iv_a.samples.len() && (iv_a.samples[k].time - sb.time).abs() <= tol {
                let sa = &iv_a.samples[k];
                for (a, b) in sa.x.iter().zip(&sb.x) {
                    let sc = atol + rtol * a.abs().max(b.abs());
                    worst = worst.max((a - b).abs() / sc);
                }
                matched += 1;
            }
        }
    }
    Ok(MatchReport {
        max_scaled_diff: worst,
        matched,
        jumps_a: dilated.jump_count(),
        jumps_b: original.jump_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl HybridSystem for Decay {
        fn name(&self) -> &str {
            "decay"
        }
        fn dim(&self) -> usize {
            1
        }
        fn flow(&self, _: &FlowContext, x: &[f64], _: &[f64], dx: &mut [f64]) {
            dx[0] = -x[0];
        }
        fn reset(&self, _: usize, _: usize, _: f64, x: &[f64]) -> Vec<f64> {
            vec![0.5 * x[0]]
        }
    }

    struct Still;
    impl HybridSystem for Still {
        fn name(&self) -> &str {
            "still"
        }
        fn dim(&self) -> usize {
            2
        }
        fn flow(&self, _: &FlowContext, _: &[f64], _: &[f64], dx: &mut [f64]) {
            dx.fill(0.0);
        }
    }

    fn halving_setup(scale_sched: &[(f64, usize)]) -> (BlowUpParams, JumpSchedule) {
        let p = BlowUpParams::new(1.0, 1.0, 1.0).unwrap();
        let sched = JumpSchedule::from_dilated(&p, 1, scale_sched).unwrap();
        (p, sched)
    }

    #[test]
    fn zero_field_single_interval() {
        let p = BlowUpParams::new(10.0, 2.0, 1.0).unwrap();
        let setup = SimSetup::new(
            &Still,
            p,
            ClockSpec::dwell(1.0, 1.0),
            JumpSchedule::empty(1),
            SolverConfig::default(),
        );
        let arc = simulate(&setup, &[1.0, -3.0], 5.0, TimeScale::Original).unwrap();
        assert_eq!(arc.intervals.len(), 1);
        assert!(arc.iter().all(|(_, _, s)| s.x == vec![1.0, -3.0]));
        let last = arc.final_sample();
        assert!((last.mu - 4.0).abs() < 1e-7);
    }

    #[test]
    fn halving_resets_in_dilated_time() {
        let (p, sched) = halving_setup(&[(1.0, 1), (2.0, 1), (3.0, 1)]);
        let setup = SimSetup::new(
            &Decay,
            p,
            ClockSpec::dwell(1.0, 1.0),
            sched,
            SolverConfig::rk45(1e-11),
        );
        let arc = simulate(&setup, &[1.0], 3.5, TimeScale::Dilated).unwrap();
        assert_eq!(arc.jump_count(), 3);
        let x = arc.final_sample().x[0];
        assert!((x - (-3.5f64).exp() / 8.0).abs() < 1e-10);
        assert!((arc.final_sample().tau - 0.5).abs() < 1e-12);
        let mu = arc.final_sample().mu;
        assert!((mu - p.normalized_gain(3.5).unwrap()).abs() < 1e-8 * mu);
    }

    #[test]
    fn scales_agree() {
        let (p, sched) = halving_setup(&[(1.0, 1), (2.0, 1)]);
        let mut setup = SimSetup::new(
            &Decay,
            p,
            ClockSpec::dwell(1.0, 1.0),
            sched,
            SolverConfig::rk45(1e-10),
        );
        setup.checkpoints = vec![0.3, 0.7, 0.9];
        let d = simulate(&setup, &[2.0], p.dilate(0.95).unwrap(), TimeScale::Dilated).unwrap();
        let o = simulate(&setup, &[2.0], 0.95, TimeScale::Original).unwrap();
        let rep = compare_scales(&d, &o, 1e-10, 1e-10).unwrap();
        assert_eq!(rep.jumps_a, rep.jumps_b);
        assert!(rep.matched >= 7, "{rep:?}");
        assert!(rep.max_scaled_diff <= 10.0, "{rep:?}");
    }

    #[test]
    fn early_jump_is_a_guard_violation() {
        let (p, sched) = halving_setup(&[(0.5, 1)]);
        let setup = SimSetup::new(
            &Decay,
            p,
            ClockSpec::dwell(1.0, 1.0),
            sched,
            SolverConfig::default(),
        );
        let r = simulate(&setup, &[1.0], 2.0, TimeScale::Dilated);
        assert!(matches!(r, Err(Error::GuardViolation(_))));
    }

    #[test]
    fn schedule_outside_horizon() {
        let (p, sched) = halving_setup(&[(1.0, 1), (5.0, 1)]);
        let setup = SimSetup::new(
            &Decay,
            p,
            ClockSpec::dwell(1.0, 1.0),
            sched,
            SolverConfig::default(),
        );
        assert!(matches!(
            simulate(&setup, &[1.0], 4.0, TimeScale::Dilated),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            simulate(&setup, &[1.0], 1.0, TimeScale::Original),
            Err(Error::Schedule(_))
        ));
    }

    #[test]
    fn deterministic() {
        let (p, sched) = halving_setup(&[(1.0, 1), (2.0, 1)]);
        let setup = SimSetup::new(
            &Decay,
            p,
            ClockSpec::dwell(1.0, 1.0),
            sched,
            SolverConfig::default(),
        );
        let a = simulate(&setup, &[1.0], 3.0, TimeScale::Dilated).unwrap();
        let b = simulate(&setup, &[1.0], 3.0, TimeScale::Dilated).unwrap();
        assert_eq!(a, b);
    }
}
