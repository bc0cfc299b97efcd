#![allow(dead_code)]

use ballotcraft::rational::{int, ratio};
use ballotcraft::rules::{Coalition, DeterministicBallots, ProbabilisticBallots};
use ballotcraft::{Alternative, Lottery, Rational, TopProfile};
use itertools::Itertools;
use num_traits::{One, Zero};
use rand::Rng;

pub fn a(k: usize) -> Alternative {
    Alternative::new(k)
}

pub fn lot(v: &[&str]) -> Lottery {
    Lottery::parse(v).unwrap()
}

pub fn two_voter() -> ProbabilisticBallots {
    ProbabilisticBallots::new(
        2,
        vec![
            lot(&["1", "0", "0", "0"]),
            lot(&["0.5", "0.2", "0.1", "0.2"]),
            lot(&["0.4", "0.3", "0.2", "0.1"]),
            lot(&["0", "0", "0", "1"]),
        ],
    )
    .unwrap()
}

pub fn three_voter() -> ProbabilisticBallots {
    ProbabilisticBallots::anonymous(
        3,
        vec![
            lot(&["1", "0", "0", "0", "0"]),
            lot(&["1/3", "1/3", "0", "0", "1/3"]),
            lot(&["1/3", "0", "0", "1/3", "1/3"]),
            lot(&["0", "0", "0", "0", "1"]),
        ],
    )
    .unwrap()
}

/// Anonymous, per-capita monotone ballots for n = 3, m = 5, thresholds (2, 4).
pub fn decomposable() -> ProbabilisticBallots {
    ProbabilisticBallots::anonymous(
        3,
        vec![
            lot(&["1", "0", "0", "0", "0"]),
            lot(&["1/6", "1/2", "0", "1/9", "2/9"]),
            lot(&["1/12", "1/4", "0", "1/6", "1/2"]),
            lot(&["0", "0", "0", "0", "1"]),
        ],
    )
    .unwrap()
}

pub fn figure_orders() -> Vec<Vec<usize>> {
    vec![vec![1, 2, 3, 4, 5, 6], vec![1, 2, 4, 3, 5, 6]]
}

pub fn top_profiles(n: usize, m: usize) -> Vec<TopProfile> {
    (0..n)
        .map(|_| 1..=m)
        .multi_cartesian_product()
        .map(|t| TopProfile::from_indices(&t).unwrap())
        .collect()
}

/// Upper masses `β([a_k, am])` for `k = 1..=m`.
fn upper(l: &Lottery) -> Vec<Rational> {
    (1..=l.m()).map(|k| l.upper_mass(a(k))).collect()
}

/// Random monotone, unanimous ballots: coalitions are filled by size, each
/// upper mass drawn between the largest value over immediate subsets and the
/// next upper mass of the same lottery.
pub fn random_monotone_ballots(rng: &mut impl Rng, n: usize, m: usize) -> ProbabilisticBallots {
    let mut uppers: Vec<Option<Vec<Rational>>> = vec![None; 1 << n];
    let full = Coalition::full(n);
    let mut order: Vec<Coalition> = Coalition::all(n).collect();
    order.sort_by_key(|s| s.len());
    for s in order {
        let u = if s.is_empty() {
            upper(&Lottery::point(m, a(1)))
        } else if s == full {
            upper(&Lottery::point(m, a(m)))
        } else {
            let lower: Vec<Rational> = (0..m)
                .map(|k| {
                    s.members()
                        .map(|i| uppers[s.index() & !(1 << (i - 1))].as_ref().unwrap()[k].clone())
                        .max()
                        .unwrap()
                })
                .collect();
            let mut u = vec![Rational::one()];
            for k in 1..m {
                let r = ratio(rng.random_range(0..=4), 4);
                let next = &lower[k] + r * (&u[k - 1] - &lower[k]);
                u.push(next);
            }
            u
        };
        uppers[s.index()] = Some(u);
    }
    let table = uppers
        .into_iter()
        .map(|u| {
            let u = u.unwrap();
            let probs = (0..m).map(|k| if k + 1 < m { &u[k] - &u[k + 1] } else { u[k].clone() }).collect();
            Lottery::new(probs).unwrap()
        })
        .collect();
    ProbabilisticBallots::new(n, table).unwrap()
}

/// Random monotone, unanimous deterministic ballots.
pub fn random_fbr(rng: &mut impl Rng, n: usize, m: usize) -> DeterministicBallots {
    let mut table = vec![a(1); 1 << n];
    let mut order: Vec<Coalition> = Coalition::all(n).collect();
    order.sort_by_key(|s| s.len());
    for s in order {
        table[s.index()] = if s.is_empty() {
            a(1)
        } else if s == Coalition::full(n) {
            a(m)
        } else {
            let lower = s.members().map(|i| table[s.index() & !(1 << (i - 1))]).max().unwrap();
            a(rng.random_range(lower.index()..=m))
        };
    }
    DeterministicBallots::new(n, m, table).unwrap()
}

/// Random positive weights summing to one.
pub fn random_weights(rng: &mut impl Rng, k: usize) -> Vec<Rational> {
    let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..=12)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|w| ratio(w, total)).collect()
}

pub fn sum(v: &[Rational]) -> Rational {
    v.iter().fold(Rational::zero(), |acc, x| acc + x)
}

pub fn is_lottery(l: &Lottery) -> bool {
    l.probs().iter().all(|p| *p >= Rational::zero()) && sum(l.probs()) == int(1)
}

/// Random monotone ballots where voter `i` picks from `[a_khi, am]` when in
/// the coalition and from `[a1, a_klo]` otherwise.
pub fn random_dictator_fbr(rng: &mut impl Rng, n: usize, m: usize, i: usize, klo: usize, khi: usize) -> DeterministicBallots {
    let mut table = vec![a(1); 1 << n];
    let mut order: Vec<Coalition> = Coalition::all(n).collect();
    order.sort_by_key(|s| s.len());
    for s in order {
        table[s.index()] = if s.is_empty() {
            a(1)
        } else if s == Coalition::full(n) {
            a(m)
        } else {
            let lower = s.members().map(|j| table[s.index() & !(1 << (j - 1))].index()).max().unwrap();
            let (lo, hi) = if s.contains(i) { (khi, m) } else { (1, klo) };
            a(rng.random_range(lo.max(lower)..=hi))
        };
    }
    DeterministicBallots::new(n, m, table).unwrap()
}

/// Relabels voters: the ballot of `S` moves to the image of `S` under `perm`.
pub fn permute_voters(b: &DeterministicBallots, perm: &[usize]) -> DeterministicBallots {
    let n = b.n();
    let mut table = vec![a(1); 1 << n];
    for s in Coalition::all(n) {
        let image = Coalition::of(&s.members().map(|i| perm[i - 1]).collect::<Vec<_>>());
        table[image.index()] = b.get(s);
    }
    DeterministicBallots::new(n, b.m(), table).unwrap()
}

/// An anonymous mixture of `k` random constrained dictatorships, each spread
/// evenly over all voter relabelings.
pub fn symmetric_dictator_mixture(rng: &mut impl Rng, n: usize, m: usize, klo: usize, khi: usize, k: usize) -> ProbabilisticBallots {
    let perms: Vec<Vec<usize>> = (1..=n).permutations(n).collect();
    let weights = random_weights(rng, k);
    let mut pairs = Vec::new();
    for w in weights {
        let base = random_dictator_fbr(rng, n, m, 1, klo, khi);
        for p in &perms {
            pairs.push((&w / int(perms.len() as i64), permute_voters(&base, p)));
        }
    }
    ballotcraft::rules::mixture_to_ballots(&pairs).unwrap()
}
