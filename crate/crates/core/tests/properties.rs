mod common;

use common::random_three_mode_json;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::collections::BTreeSet;
use timesym::hilbert::{check_unitary, Adjoint};
use timesym::pilot::{PilotWave, Quantile, ReflectionOrder};
use timesym::pointer::{measure_backward, measure_forward, MeasurementSetup, POSITION_TOL};
use timesym::twotime::{
    abl_distribution, spin_network, spin_observable, spin_state, two_state_at_cut, ProjectorSet,
    SpinDirection, TwoTimeError,
};
use timesym::{preset_double_mz, BasisLabel, Bra, Cut, Ket, LinearOp, Network};

fn amp() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn state3() -> impl Strategy<Value = [C; 3]> {
    [amp(), amp(), amp()].prop_filter("nonzero", |v| v.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3)
}

fn ket(labels: &[&str], v: &[C]) -> Ket {
    Ket::from_entries(labels.iter().copied().zip(v.iter().copied())).normalized().unwrap()
}

fn bra(labels: &[&str], v: &[C]) -> Bra {
    ket(labels, v).adjoint()
}

fn network() -> impl Strategy<Value = Network> {
    prop::collection::vec((0usize..3, any::<bool>()), 1..6)
        .prop_map(|c| Network::from_json(&random_three_mode_json(&c)).unwrap())
}

const PQR: [&str; 3] = ["p", "q", "r"];

fn labels(names: &[&str]) -> BTreeSet<BasisLabel> {
    names.iter().map(|n| BasisLabel::from(*n)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn stage_unitaries_are_unitary(net in network()) {
        for k in 0..net.num_stages() {
            prop_assert!(check_unitary(net.stage_unitary(k), 1e-12));
        }
    }

    #[test]
    fn evolution_preserves_norm(net in network(), v in state3()) {
        let k = ket(&PQR, &v);
        let out = net.evolve(&k, Cut(0), net.final_cut()).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_action_pairs_consistently(entries in prop::collection::vec(amp(), 9), b in state3(), k in state3()) {
        let triples = (0..9).map(|i| (BasisLabel::from(PQR[i / 3]), BasisLabel::from(PQR[i % 3]), entries[i]));
        let op = LinearOp::from_entries(labels(&PQR), labels(&PQR), triples).unwrap();
        let b = bra(&PQR, &b);
        let k = ket(&PQR, &k);
        let lhs = op.apply_dual(&b).unwrap().pair(&k);
        let rhs = b.pair(&op.apply(&k).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn pairing_is_cut_invariant(net in network(), pre in state3(), post in state3()) {
        let kets = net.forward_states(&ket(&PQR, &pre)).unwrap();
        let bras = net.backward_states(&bra(&PQR, &post)).unwrap();
        let first = bras[0].pair(&kets[0]);
        for (b, k) in bras.iter().zip(&kets) {
            prop_assert!((b.pair(k) - first).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_then_backward_is_identity(net in network(), v in state3(), i in 0usize..6, j in 0usize..6) {
        let last = net.final_cut().0;
        let (i, j) = (i.min(j).min(last), i.max(j).min(last));
        let k = ket(&PQR, &v);
        let there = net.evolve(&k, Cut(i), Cut(j)).unwrap().adjoint();
        let back = net.evolve(&there, Cut(j), Cut(i)).unwrap().adjoint();
        prop_assert!(back.approx_eq(&k, 1e-12));
    }

    #[test]
    fn abl_is_normalized_and_phase_invariant(
        net in network(),
        pre in state3(),
        post in state3(),
        cut in 0usize..6,
        theta in 0.0..std::f64::consts::TAU,
        phi in 0.0..std::f64::consts::TAU,
    ) {
        let cut = Cut(cut.min(net.final_cut().0));
        let set = ProjectorSet::which_path(net.live_modes(cut)).unwrap();
        let pre = ket(&PQR, &pre);
        let post = bra(&PQR, &post);
        let tsv = match two_state_at_cut(&net, &pre, &post, cut) {
            Ok(t) => t,
            Err(TwoTimeError::InconsistentSelection(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let Ok(dist) = abl_distribution(&tsv, &set) else { return Ok(()) };
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        if let Some((_, _)) = dist.iter().find(|(_, p)| *p >= 1.0 - 1e-12) {
            prop_assert!(dist.iter().filter(|(_, p)| *p >= 1e-12).count() == 1);
        }
        let rotated = two_state_at_cut(
            &net,
            &pre.scaled(C::from_polar(1.0, theta)),
            &post.scaled(C::from_polar(1.0, phi)),
            cut,
        )
        .unwrap();
        let dist2 = abl_distribution(&rotated, &set).unwrap();
        for ((_, p), (_, p2)) in dist.iter().zip(&dist2) {
            prop_assert!((p - p2).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_pre_x_certain_for_x_and_n(nx in -1.0..1.0f64, ny in -1.0..1.0f64, nz in -1.0..1.0f64) {
        let Ok(n) = SpinDirection::normalize([nx, ny, nz]) else { return Ok(()) };
        // ⟨+n|+x⟩ vanishes only for n = −x
        prop_assume!(n.components()[0] > -0.99);
        let net = spin_network();
        let tsv = two_state_at_cut(
            &net,
            &spin_state(SpinDirection::x(), true),
            &spin_state(n, true).adjoint(),
            Cut(0),
        )
        .unwrap();
        for dir in [SpinDirection::x(), n] {
            let dist = abl_distribution(&tsv, &spin_observable(dir).unwrap()).unwrap();
            prop_assert!((dist[0].1 - 1.0).abs() < 1e-12, "{:?}", dist);
        }
    }

    #[test]
    fn trajectories_never_cross(q1 in 0.0..1.0f64, q2 in 0.0..1.0f64) {
        prop_assume!((q1 - q2).abs() > 1e-9);
        let net = preset_double_mz();
        let wave = PilotWave::forward(&net, &Ket::basis("a")).unwrap();
        let t1 = wave.trajectory(Quantile::initial(q1).unwrap()).unwrap();
        let t2 = wave.trajectory(Quantile::initial(q2).unwrap()).unwrap();
        for (s1, s2) in t1.states.iter().zip(&t2.states) {
            prop_assert!(s1.mode != s2.mode || (s1.quantile.value() - s2.quantile.value()).abs() > 1e-12);
        }
    }

    #[test]
    fn reflection_order_does_not_change_detector(q in 0.0..1.0f64) {
        let net = preset_double_mz();
        let q = Quantile::initial(q).unwrap();
        let rev = PilotWave::forward(&net, &Ket::basis("a")).unwrap();
        let keep = rev.clone().with_reflection_order(ReflectionOrder::Preserve);
        prop_assert_eq!(rev.trajectory(q).unwrap().terminal, keep.trajectory(q).unwrap().terminal);
    }

    #[test]
    fn pointer_readings_decode_to_the_sampled_eigenvalue(
        vals in prop::collection::vec(-3.0..3.0f64, 2..4),
        coeffs in prop::collection::vec(amp(), 3),
        q in -10.0..10.0f64,
        seed in any::<u64>(),
    ) {
        let names = ["k0", "k1", "k2"];
        let n = vals.len();
        let setup = match MeasurementSetup::from_pairs(names[..n].iter().copied().zip(vals.iter().copied())) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let Some(system) = Ket::from_entries(names[..n].iter().copied().zip(coeffs.iter().copied())).normalized() else {
            return Ok(());
        };
        let f = measure_forward(&setup, &system, q, seed).unwrap();
        prop_assert!((f.q2() - f.q1() - f.deduced).abs() <= POSITION_TOL);
        let b = measure_backward(&setup, &system.adjoint(), q, seed).unwrap();
        prop_assert!((b.q1() - (b.q2() - b.deduced)).abs() <= POSITION_TOL);
        for r in [&f, &b] {
            let k = setup.decode(r.q1(), r.q2()).unwrap();
            prop_assert_eq!(setup.eigenvalues()[k], r.deduced);
            prop_assert_eq!(&setup.eigenbasis()[k], &r.outcome);
        }
    }
}

/// The preset's composite quantile map sends the uniform distribution to the
/// Born weights and keeps the final quantile uniform within each detector.
#[test]
fn quantile_map_preserves_measure() {
    let net = preset_double_mz();
    let wave = PilotWave::forward(&net, &Ket::basis("a")).unwrap();
    let n = 20_000;
    let mut finals: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for i in 0..n {
        let q0 = (i as f64 + 0.5) / n as f64;
        let t = wave.trajectory(Quantile::initial(q0).unwrap()).unwrap();
        finals.entry(t.terminal.clone()).or_default().push(t.final_state().quantile.value());
    }
    let born = net.evolve(&Ket::basis("a"), Cut(0), net.final_cut()).unwrap();
    for (det, mode) in [("G", "g"), ("H", "h")] {
        let qs = finals.get_mut(det).unwrap();
        let freq = qs.len() as f64 / n as f64;
        assert!((freq - born.get(mode).norm_sqr()).abs() <= 1.0 / n as f64);
        qs.sort_by(f64::total_cmp);
        let m = qs.len() as f64;
        let ks = qs
            .iter()
            .enumerate()
            .map(|(i, q)| (q - (i as f64 + 0.5) / m).abs())
            .fold(0.0, f64::max);
        assert!(ks < 2.0 / m, "{det}: {ks}");
    }
}

/// Equal-weight recombination in a random network either follows the rule
/// table or is rejected; it never produces an out-of-range quantile.
#[test]
fn quantiles_stay_in_range_on_random_networks() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = (prop::collection::vec((0usize..3, any::<bool>()), 1..5), 0.0..1.0f64);
    runner
        .run(&strat, |(choices, q)| {
            let net = Network::from_json(&random_three_mode_json(&choices)).unwrap();
            let wave = PilotWave::forward(&net, &Ket::basis("p")).unwrap();
            if let Ok(t) = wave.trajectory(Quantile::initial(q).unwrap()) {
                for s in &t.states {
                    prop_assert!((0.0..=1.0).contains(&s.quantile.value()));
                }
            }
            Ok(())
        })
        .unwrap();
}
