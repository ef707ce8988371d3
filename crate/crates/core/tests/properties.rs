use std::sync::Arc;

use proptest::prelude::*;
use pt_hybrid::hybrid::{SolverConfig, TimeScale};
use pt_hybrid::scenarios::{build_halving, halving_schedule};
use pt_hybrid::stability::{
    dwell_constants, ratio_r, InputChannel, LyapunovCertificate, LyapunovFunction, ModeCertificate,
    QuadraticForm,
};
use pt_hybrid::switching::{
    bu_adt_bound, generate_signal, validate_bu_adt, AdtParams, GeneratorPolicy, ModePartition,
    ModeSelection, Piece, SwitchTrigger, SwitchingSignal,
};
use pt_hybrid::BlowUpParams;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn params() -> impl Strategy<Value = BlowUpParams> {
    (0.5f64..20.0, 1.0f64..4.0, 1.0f64..5.0)
        .prop_map(|(t, k, mu0)| BlowUpParams::new(t, k, mu0).unwrap())
}

/// Every window `(t₁, t₂]` with `t₁` just before a switch and `t₂` at a switch.
fn brute_force_pass(sig: &SwitchingSignal, p: &BlowUpParams, adt: &AdtParams) -> bool {
    let st = sig.switch_times();
    for i in 0..st.len() {
        for m in i..st.len() {
            let n = (m - i + 1) as f64;
            let bound = bu_adt_bound(p, adt, st[i], st[m]).unwrap();
            if n > bound + 1e-9 {
                return false;
            }
        }
    }
    true
}

fn quadratic_cert(c1: &[f64], c2: &[f64], c3: &[f64]) -> LyapunovCertificate {
    let modes = (0..c1.len())
        .map(|i| {
            let v: Arc<dyn LyapunovFunction> =
                Arc::new(QuadraticForm::scaled_identity(1.0, vec![0.0]));
            ModeCertificate::stable(i + 1, v, c1[i], c2[i], c3[i], 0.0)
        })
        .collect();
    LyapunovCertificate {
        modes,
        p: 2.0,
        chi: 1.0,
        channel: InputChannel::Zero,
        target: vec![0.0],
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn dilate_contract_round_trip(p in params(), frac in 0.0f64..0.999) {
        let t = frac * p.terminal_time();
        let s = p.dilate(t).unwrap();
        let back = p.contract(s).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * p.terminal_time().max(1.0));
        prop_assert!(s >= 0.0);
        if t > 0.0 {
            // s is increasing and faster than t once the gain exceeds one
            prop_assert!(p.dilate(0.5 * t).unwrap() <= s);
            prop_assert!(s >= t * p.mu0.min(1.0) - 1e-12);
        }
    }

    #[test]
    fn gain_matches_closed_form(p in params(), frac in 0.0f64..0.99) {
        let t = frac * p.terminal_time();
        let mu = p.gain(t).unwrap();
        let oracle = (p.t_scale / (p.terminal_time() - t)).powf(p.k);
        prop_assert!((mu - oracle).abs() <= 1e-10 * oracle);
        prop_assert!(mu >= p.mu0 * (1.0 - 1e-12));
    }

    #[test]
    fn generated_signals_are_in_class(
        p in params(),
        tau_d in 0.05f64..2.0,
        n0 in 1.0f64..3.0,
        seed in any::<u64>(),
        uniform in any::<bool>(),
    ) {
        let adt = AdtParams::new(tau_d, n0).unwrap();
        let part = ModePartition::all_stable([1, 2, 3]);
        let policy = GeneratorPolicy {
            seed,
            selection: if uniform { ModeSelection::Uniform } else { ModeSelection::Cyclic },
            trigger: SwitchTrigger::Randomized,
        };
        let horizon = 0.95 * p.terminal_time();
        let g = generate_signal(&p, &adt, None, &part, 1, &policy, horizon).unwrap();
        let rep = validate_bu_adt(&g.signal, &p, &adt).unwrap();
        prop_assert!(rep.pass, "slack {}", rep.min_slack);
    }

    #[test]
    fn validator_agrees_with_brute_force(
        p in params(),
        tau_d in 0.1f64..2.0,
        n0 in 1.0f64..2.5,
        fracs in prop::collection::vec(0.0f64..0.95, 0..25),
    ) {
        let ups = p.terminal_time();
        let mut times: Vec<f64> = fracs.iter().map(|f| f * ups).filter(|&t| t > 0.0).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut pieces = vec![Piece { start: 0.0, mode: 1 }];
        for (i, &t) in times.iter().enumerate() {
            pieces.push(Piece { start: t, mode: 1 + (i + 1) % 2 });
        }
        let sig = SwitchingSignal::new(pieces, 0.96 * ups, ModePartition::all_stable([1, 2])).unwrap();
        let adt = AdtParams::new(tau_d, n0).unwrap();
        let fast = validate_bu_adt(&sig, &p, &adt).unwrap();
        prop_assert_eq!(fast.pass, brute_force_pass(&sig, &p, &adt));
        if let (Some(t1), Some(t2)) = (fast.witness_t1, fast.witness_t2) {
            prop_assert!(!fast.pass || fast.min_slack >= -1e-9);
            prop_assert!(t1 <= t2);
        }
    }

    #[test]
    fn decay_constants_ignore_common_scaling(
        c1 in prop::collection::vec(0.1f64..2.0, 3),
        spread in prop::collection::vec(1.0f64..3.0, 3),
        c3 in prop::collection::vec(0.5f64..4.0, 3),
        scale in 0.01f64..100.0,
    ) {
        let c2: Vec<f64> = c1.iter().zip(&spread).map(|(a, b)| a * b).collect();
        let base = quadratic_cert(&c1, &c2, &c3);
        let up: Vec<f64> = c1.iter().map(|c| c * scale).collect();
        let up2: Vec<f64> = c2.iter().map(|c| c * scale).collect();
        let scaled = quadratic_cert(&up, &up2, &c3);
        let r = ratio_r(&base);
        prop_assert!((r - ratio_r(&scaled)).abs() <= 1e-12 * r);
        let adt = AdtParams::new(2.0 * r.ln() / c3.iter().cloned().fold(f64::INFINITY, f64::min) + 0.1, 1.0).unwrap();
        let a = dwell_constants(&base, &adt).unwrap();
        let b = dwell_constants(&scaled, &adt).unwrap();
        prop_assert!((a.lambda - b.lambda).abs() <= 1e-12 * a.lambda.abs().max(1.0));
        prop_assert!((a.kappa2 - b.kappa2).abs() <= 1e-12 * a.kappa2.abs().max(1.0));
        prop_assert!((a.kappa1 - b.kappa1).abs() <= 1e-10 * a.kappa1);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn halving_example_respects_bound(x0 in -5.0f64..5.0, s_end in 1.5f64..6.0) {
        let ex = build_halving().unwrap();
        let sched = halving_schedule(&ex.params, s_end).unwrap();
        let arc = ex
            .simulate(&sched, &[x0], s_end, TimeScale::Dilated, SolverConfig::rk45(1e-10))
            .unwrap();
        let r = ex.check_bound(&arc).unwrap();
        prop_assert!(r.pass, "ratio {}", r.max_ratio);
    }
}
