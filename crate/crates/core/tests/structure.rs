mod common;

use ballotcraft::domains::{gen_complete, gen_hybrid, gen_multiple_single_peaked, gen_single_peaked, is_regular, Domain};
use ballotcraft::structure::*;
use ballotcraft::{Alternative, Error};
use common::a;
use itertools::Itertools;
use proptest::prelude::*;

/// Simple paths by trying every ordered subset of intermediate vertices.
fn paths_oracle(g: &StrongConnGraph, from: Alternative, to: Alternative) -> Vec<Vec<usize>> {
    let inner: Vec<Alternative> = g.vertices().iter().copied().filter(|&v| v != from && v != to).collect();
    let mut out = Vec::new();
    for k in 0..=inner.len() {
        for mid in inner.iter().copied().permutations(k) {
            let walk: Vec<Alternative> = std::iter::once(from).chain(mid).chain(std::iter::once(to)).collect();
            if walk.windows(2).all(|w| g.has_edge(w[0], w[1])) {
                out.push(walk.iter().map(|v| v.index()).collect());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn hybrid_graph_shape() {
    for m in 4..=6 {
        for klo in 1..=m {
            for khi in klo + 1..=m {
                let g = full_graph(&gen_hybrid(m, klo, khi).unwrap());
                for x in 1..=m {
                    for y in x + 1..=m {
                        let in_middle = klo <= x && y <= khi;
                        assert_eq!(g.has_edge(a(x), a(y)), y == x + 1 || in_middle, "({m},{klo},{khi}) {x}-{y}");
                    }
                }
            }
        }
    }
}

#[test]
fn generated_domains_are_hybrid_star() {
    for m in 4..=6 {
        for klo in 1..=m {
            for khi in klo + 1..=m {
                let r = is_hybrid_star(&gen_hybrid(m, klo, khi).unwrap(), klo, khi).unwrap();
                assert!(r.holds, "({m},{klo},{khi})");
                assert!(r.uncovered.is_empty() && r.leaves.is_empty() && r.outside_hybrid.is_none());
            }
        }
    }
}

#[test]
fn single_peaked_domain_is_not_wider_hybrid_star() {
    let d = gen_single_peaked(5).unwrap();
    let r = is_hybrid_star(&d, 2, 4).unwrap();
    assert!(!r.holds);
    assert_eq!(r.leaves, vec![a(2), a(4)]);
}

#[test]
fn figure_domain_report() {
    let d = gen_multiple_single_peaked(&common::figure_orders()).unwrap();
    let r = recover_thresholds(&d).unwrap();
    assert_eq!(r.classification, Classification::Hybrid { klo: 2, khi: 5 });
    assert_eq!(r.path_count, 4);
    assert!(r.relabeling.is_none());
    assert_eq!(r.left.unwrap().hi, a(2));
    assert_eq!(r.right.unwrap().lo, a(5));
    assert!(is_hybrid_star(&d, 2, 5).unwrap().holds);
}

#[test]
fn recovery_on_relabeled_domains() {
    // a hybrid domain along a permuted axis comes back relabeled
    let axis = [2, 1, 3, 4, 5];
    let base = gen_hybrid(5, 2, 4).unwrap();
    let map: Vec<Alternative> = axis.iter().map(|&k| a(k)).collect();
    let d = Domain::new(5, base.prefs().iter().map(|p| p.relabel(&map)).collect()).unwrap();
    let r = recover_thresholds(&d).unwrap();
    assert!(r.relabeling.is_some());
    assert_eq!(r.classification, Classification::Hybrid { klo: 2, khi: 4 });
}

#[test]
fn recovery_rejects_irregular() {
    let d = Domain::from_orders(&[vec![1, 2, 3, 4], vec![4, 3, 2, 1]]).unwrap();
    assert!(matches!(recover_thresholds(&d), Err(Error::NotRegular(_))));
    assert!(matches!(
        recover_thresholds_with_cap(&gen_complete(6).unwrap(), 10),
        Err(Error::EnumerationOverflow { cap: 10 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_agree_with_oracle(mask in proptest::collection::vec(any::<bool>(), 24)) {
        let full = gen_complete(4).unwrap();
        let prefs: Vec<_> = full.prefs().iter().zip(&mask).filter(|(_, &keep)| keep).map(|(p, _)| p.clone()).collect();
        prop_assume!(!prefs.is_empty());
        let d = Domain::new(4, prefs).unwrap();
        let g = full_graph(&d);
        for (x, y) in [(1, 4), (2, 3), (1, 3)] {
            let got: Vec<Vec<usize>> = all_vertex_paths(&g, a(x), a(y), 1000)
                .unwrap()
                .iter()
                .map(|p| p.vertices().iter().map(|v| v.index()).collect())
                .sorted()
                .collect();
            prop_assert_eq!(got, paths_oracle(&g, a(x), a(y)));
        }
    }

    #[test]
    fn recovery_is_consistent(mask in proptest::collection::vec(any::<bool>(), 24)) {
        let full = gen_complete(4).unwrap();
        let prefs: Vec<_> = full.prefs().iter().zip(&mask).filter(|(_, &keep)| keep).map(|(p, _)| p.clone()).collect();
        prop_assume!(!prefs.is_empty());
        let d = Domain::new(4, prefs).unwrap();
        match recover_thresholds(&d) {
            Err(Error::NotRegular(_)) => prop_assert!(!is_regular(&d).is_regular()),
            Ok(r) => {
                prop_assert!(is_regular(&d).is_regular());
                if let (Classification::Hybrid { klo, khi }, None) = (&r.classification, &r.relabeling) {
                    prop_assert!(is_hybrid_star(&d, *klo, *khi).unwrap().holds);
                }
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
