mod common;

use common::{normalized, orthonormal_basis, random_three_mode_json, sequential_collapse, DenseNet, Vector};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use timesym::network::PRESET_DOUBLE_MZ;
use timesym::twotime::{abl_distribution, measured_distribution, two_state_at_cut, ProjectorSet, TwoTimeError};
use timesym::{Bra, Cut, Ket, Network};

fn ket_of(net: &DenseNet, v: &Vector) -> Ket {
    Ket::from_entries(net.modes.iter().map(|m| m.as_str()).zip(v.iter().copied()))
}

fn bra_of(net: &DenseNet, v: &Vector) -> Bra {
    Bra::from_entries(net.modes.iter().map(|m| m.as_str()).zip(v.iter().copied()))
}

fn dense_of<'a>(net: &DenseNet, entries: impl Iterator<Item = (&'a timesym::BasisLabel, &'a C)>) -> Vector {
    let mut v = vec![C::new(0.0, 0.0); net.dim()];
    for (l, a) in entries {
        v[net.index(l.as_str())] = *a;
    }
    v
}

fn max_diff(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn preset_matches_dense_model_at_every_cut() {
    let net = Network::from_json(PRESET_DOUBLE_MZ).unwrap();
    let dense = DenseNet::from_json(PRESET_DOUBLE_MZ);
    let last = net.final_cut().0;
    for src in ["a", "b"] {
        let start = dense.vector(&[(src, C::new(1.0, 0.0))]);
        for (k, ket) in net.forward_states(&Ket::basis(src)).unwrap().iter().enumerate() {
            let want = dense.forward(&start, 0, k);
            assert!(max_diff(&dense_of(&dense, ket.iter()), &want) < 1e-12, "{src} cut {k}");
        }
    }
    for det in ["g", "h"] {
        let end = dense.vector(&[(det, C::new(1.0, 0.0))]);
        for (k, bra) in net.backward_states(&Bra::basis(det)).unwrap().iter().enumerate() {
            let want = dense.backward(&end, last, k);
            assert!(max_diff(&dense_of(&dense, bra.iter()), &want) < 1e-12, "{det} cut {k}");
        }
    }
}

#[test]
fn measured_which_path_agrees_with_collapse_model() {
    let net = Network::from_json(PRESET_DOUBLE_MZ).unwrap();
    let dense = DenseNet::from_json(PRESET_DOUBLE_MZ);
    let paths = ProjectorSet::which_path(net.live_modes(Cut(1))).unwrap();
    let lib = measured_distribution(&net, &Ket::basis("a"), &Bra::basis("g"), Cut(1), &paths).unwrap();
    let projectors: Vec<_> = ["c", "d"]
        .iter()
        .map(|m| common::projector(&[dense.vector(&[(m, C::new(1.0, 0.0))])]))
        .collect();
    let oracle = sequential_collapse(
        &dense,
        &dense.vector(&[("a", C::new(1.0, 0.0))]),
        &dense.vector(&[("g", C::new(1.0, 0.0))]),
        1,
        &projectors,
    )
    .unwrap();
    assert!((lib[0].1 - oracle[0]).abs() < 1e-12);
    assert!((lib[1].1 - oracle[1]).abs() < 1e-12);
    assert!((oracle[1] - 1.0).abs() < 1e-12);
}

fn raw_vec(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn stage_choices() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..3, any::<bool>()), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_networks_match_dense_model(choices in stage_choices(), raw in raw_vec(3), rawb in raw_vec(3)) {
        let text = random_three_mode_json(&choices);
        let net = Network::from_json(&text).unwrap();
        let dense = DenseNet::from_json(&text);
        let Some(v) = normalized(&raw) else { return Ok(()) };
        let Some(w) = normalized(&rawb) else { return Ok(()) };
        let last = net.final_cut().0;
        for (k, ket) in net.forward_states(&ket_of(&dense, &v)).unwrap().iter().enumerate() {
            prop_assert!(max_diff(&dense_of(&dense, ket.iter()), &dense.forward(&v, 0, k)) < 1e-12);
        }
        for (k, bra) in net.backward_states(&bra_of(&dense, &w)).unwrap().iter().enumerate() {
            prop_assert!(max_diff(&dense_of(&dense, bra.iter()), &dense.backward(&w, last, k)) < 1e-12);
        }
    }

    #[test]
    fn abl_equals_sequential_collapse_on_random_networks(
        choices in stage_choices(),
        pre in raw_vec(3),
        post in raw_vec(3),
        basis in prop::collection::vec(raw_vec(3), 3),
        grouped in any::<bool>(),
        cut_pick in 0usize..100,
    ) {
        let text = random_three_mode_json(&choices);
        let net = Network::from_json(&text).unwrap();
        let dense = DenseNet::from_json(&text);
        let (Some(pre), Some(post), Some(basis)) = (normalized(&pre), normalized(&post), orthonormal_basis(&basis)) else {
            return Ok(());
        };
        let cut = cut_pick % (net.final_cut().0 + 1);
        let groups: Vec<Vec<Vector>> = if grouped {
            vec![basis[..2].to_vec(), basis[2..].to_vec()]
        } else {
            basis.iter().map(|b| vec![b.clone()]).collect()
        };
        let spans = groups
            .iter()
            .enumerate()
            .map(|(i, g)| (format!("o{i}"), g.iter().map(|v| ket_of(&dense, v)).collect()))
            .collect();
        let set = ProjectorSet::from_spans(net.live_modes(Cut(cut)), spans).unwrap();
        let projectors: Vec<_> = groups.iter().map(|g| common::projector(g)).collect();
        let oracle = sequential_collapse(&dense, &pre, &post, cut, &projectors);
        let tsv = two_state_at_cut(&net, &ket_of(&dense, &pre), &bra_of(&dense, &post), Cut(cut));
        match (tsv, oracle) {
            (Ok(tsv), Some(oracle)) => match abl_distribution(&tsv, &set) {
                Ok(dist) => {
                    for ((_, p), o) in dist.iter().zip(&oracle) {
                        prop_assert!((p - o).abs() < 1e-10, "{p} vs {o}");
                    }
                }
                Err(TwoTimeError::UndefinedConditional) => {}
                Err(e) => prop_assert!(false, "{e}"),
            },
            (Err(TwoTimeError::InconsistentSelection(_)), _) | (_, None) => {}
            (Err(e), _) => prop_assert!(false, "{e}"),
        }
    }
}
