mod common;

use ballotcraft::decompose::*;
use ballotcraft::rational::ratio;
use ballotcraft::rules::{check_per_capita, mixture_to_ballots, Coalition, DeterministicBallots, ProbabilisticBallots};
use ballotcraft::{Error, Rational};
use common::*;
use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn derived_fixture_rounds() {
    let b = decomposable();
    let result = decompose_anonymous(&b, 2, 4).unwrap();
    assert_eq!(result.trace[0].alpha, ratio(1, 12));
    assert_eq!(result.trace[1].alpha, ratio(1, 27));
    assert!(result.trace.last().unwrap().terminal);
    assert!(result.trace.iter().rev().skip(1).all(|r| !r.terminal));
    let total: Rational = result.components.iter().map(|c| c.weight.clone()).sum();
    assert!(total.is_one());
    assert_eq!(verify_decomposition(&b, &result, 2, 4).unwrap(), None);

    let json = serde_json::to_string(&result).unwrap();
    let back: DecompositionResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, result);
}

#[test]
fn refinement_identity() {
    // beta = alpha * n * gamma + (1 - alpha * n) * beta_hat, coalition by coalition
    let b = decomposable();
    let r = refine(&b, 2, 4).unwrap();
    let an = &r.alpha * ratio(3, 1);
    for s in Coalition::all(3) {
        for k in 0..5 {
            let lhs = b.get(s).probs()[k].clone();
            let rhs = &an * &r.gamma.get(s).probs()[k] + (Rational::one() - &an) * &r.beta_hat.get(s).probs()[k];
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn rejections() {
    assert!(matches!(decompose_anonymous(&three_voter(), 2, 4), Err(Error::NotPerCapitaMonotone(_))));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pairs = vec![
        (ratio(1, 4), random_dictator_fbr(&mut rng, 3, 5, 1, 2, 4)),
        (ratio(3, 4), random_dictator_fbr(&mut rng, 3, 5, 2, 2, 4)),
    ];
    assert!(matches!(decompose_anonymous(&mixture_to_ballots(&pairs).unwrap(), 2, 4), Err(Error::NotAnonymous)));

    let not_crd = ProbabilisticBallots::anonymous(
        3,
        vec![
            lot(&["1", "0", "0", "0", "0"]),
            lot(&["1/2", "0", "1/2", "0", "0"]),
            lot(&["0", "0", "1/2", "0", "1/2"]),
            lot(&["0", "0", "0", "0", "1"]),
        ],
    )
    .unwrap();
    assert!(matches!(decompose_anonymous(&not_crd, 2, 4), Err(Error::NotCrd)));
}

#[test]
fn verification_layers() {
    let b = decomposable();
    let result = decompose_anonymous(&b, 2, 4).unwrap();

    let mut reweighted = result.clone();
    let moved = ratio(1, 1000);
    reweighted.components[0].weight -= &moved;
    reweighted.components[1].weight += &moved;
    assert_eq!(verify_decomposition(&b, &reweighted, 2, 4).unwrap(), Some(Layer::Ballots));

    // the same mixture, but with a component that is not strategy-proof on
    // the hybrid domain, fails at the component layer
    let unconstrained = DeterministicBallots::from_fn(3, 5, |s| match s.len() {
        0 => a(1),
        3 => a(5),
        _ => a(3),
    })
    .unwrap();
    let weak = result.components[0].ballots.clone();
    let pairs = vec![(ratio(1, 2), weak.clone()), (ratio(1, 2), unconstrained.clone())];
    let mixed = mixture_to_ballots(&pairs).unwrap();
    let fake = DecompositionResult {
        components: pairs.into_iter().map(|(weight, ballots)| Component { weight, ballots }).collect(),
        trace: vec![],
    };
    assert_eq!(verify_decomposition(&mixed, &fake, 2, 4).unwrap(), Some(Layer::Components));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_mixtures_round_trip(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = symmetric_dictator_mixture(&mut rng, 3, 5, 2, 4, k);
        prop_assert!(check_per_capita(&b, 2, 4).unwrap().0);
        let result = decompose_anonymous(&b, 2, 4).unwrap();
        let sizes: Vec<usize> = result.trace.iter().map(|r| r.support_size).collect();
        prop_assert!(sizes.windows(2).all(|w| w[1] < w[0]));
        for c in &result.components {
            prop_assert!(c.ballots.dictator_within_any(2, 4));
        }
        prop_assert_eq!(verify_decomposition(&b, &result, 2, 4).unwrap(), None);
    }

    #[test]
    fn two_voter_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = symmetric_dictator_mixture(&mut rng, 2, 6, 2, 5, 2);
        let result = decompose_anonymous(&b, 2, 5).unwrap();
        prop_assert_eq!(mixture_to_ballots(&result.pairs()).unwrap(), b);
    }
}
