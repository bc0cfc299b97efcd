//! Decomposition of anonymous probabilistic fixed ballot rules into mixtures
//! of fixed ballot rules, gated by per-capita monotonicity.
//!
//! Each round extracts one fixed ballot rule per voter (voter `i` dictates
//! between the boundary atoms of each ballot) with weight `α`, and rescales
//! what is left. Supports shrink strictly, so the loop ends; the final round
//! splits the remainder evenly once every ballot has binary support.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::audit::{check_strategy_proofness, check_unanimity};
use crate::domains::gen_hybrid;
use crate::error::{Error, Result};
use crate::prefcore::{Alternative, Lottery, TopProfile};
use crate::rational::{self, int, ratio, Rational};
use crate::rules::{
    check_anonymous_ballots, check_ballot_unanimity, check_crd, check_monotonicity, check_per_capita,
    mixture_to_ballots, BallotsFile, Coalition, DeterministicBallots, Fbr, Pfbr, ProbabilisticBallots,
};

pub fn support(l: &Lottery) -> Vec<Alternative> {
    l.support()
}

fn total_support(b: &ProbabilisticBallots) -> usize {
    b.table().iter().map(|l| l.support().len()).sum()
}

/// `(b̂ᴸ_S, b̂ᴿ_S)`: the ≺-largest atom of `β_S` in `[a1, a_klo]` and the
/// ≺-smallest in `[a_khi, am]`.
///
/// For `S = ∅` and `S = N` the pair is `(a1, am)`, the conventions under which
/// the split ballot is `e_a1` and `e_am` respectively.
pub fn boundary_atoms(b: &ProbabilisticBallots, s: Coalition, klo: usize, khi: usize) -> Result<(Alternative, Alternative)> {
    let (n, m) = (b.n(), b.m());
    if s.is_empty() || s == Coalition::full(n) {
        return Ok((Alternative::new(1), Alternative::new(m)));
    }
    let supp = b.get(s).support();
    let left = supp.iter().copied().filter(|a| a.index() <= klo).max();
    let right = supp.iter().copied().find(|a| a.index() >= khi);
    match (left, right) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(Error::CrdViolated(format!("beta_{s} lacks mass on one side of the middle interval"))),
    }
}

/// `b^i_S = b̂ᴿ_S` if `i ∈ S`, else `b̂ᴸ_S`.
pub fn voter_fbr(b: &ProbabilisticBallots, i: usize, klo: usize, khi: usize) -> Result<DeterministicBallots> {
    let table = Coalition::all(b.n())
        .map(|s| boundary_atoms(b, s, klo, khi).map(|(l, r)| if s.contains(i) { r } else { l }))
        .collect::<Result<Vec<_>>>()?;
    let fbr = DeterministicBallots::new(b.n(), b.m(), table)?;
    if !fbr.is_monotone() {
        return Err(Error::PerCapitaRequired(format!("ballots extracted for voter {i} are not monotone")));
    }
    Ok(fbr)
}

/// `min_S min(β_S(b̂ᴿ_S)/|S|, β_S(b̂ᴸ_S)/(n−|S|))` over nonempty proper `S`.
pub fn alpha(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<Rational> {
    let n = b.n();
    let mut best = ratio(1, n as i64);
    for s in Coalition::all(n).filter(|s| !s.is_empty() && *s != Coalition::full(n)) {
        let (l, r) = boundary_atoms(b, s, klo, khi)?;
        let beta = b.get(s);
        let right = beta.prob(r) / int(s.len() as i64);
        let left = beta.prob(l) / int((n - s.len()) as i64);
        best = best.min(right).min(left);
    }
    Ok(best)
}

/// `γ_S = (|S|/n) e_{b̂ᴿ_S} + ((n−|S|)/n) e_{b̂ᴸ_S}`.
pub fn split_ballots(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<ProbabilisticBallots> {
    let (n, m) = (b.n(), b.m());
    let table = Coalition::all(n)
        .map(|s| {
            let (l, r) = boundary_atoms(b, s, klo, khi)?;
            let mut probs = vec![Rational::zero(); m];
            probs[r.index() - 1] += ratio(s.len() as i64, n as i64);
            probs[l.index() - 1] += ratio((n - s.len()) as i64, n as i64);
            Lottery::new(probs)
        })
        .collect::<Result<Vec<_>>>()?;
    ProbabilisticBallots::new(n, table)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub gamma: ProbabilisticBallots,
    pub beta_hat: ProbabilisticBallots,
    pub alpha: Rational,
}

/// `β̂_S = (β_S − αn γ_S) / (1 − αn)`; fails with `TerminalCase` when `α = 1/n`.
pub fn refine(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<Refinement> {
    let n = b.n();
    let a = alpha(b, klo, khi)?;
    let an = &a * int(n as i64);
    if an.is_one() {
        return Err(Error::TerminalCase);
    }
    let gamma = split_ballots(b, klo, khi)?;
    let scale = Rational::one() - &an;
    let table = b
        .table()
        .iter()
        .zip(gamma.table())
        .map(|(beta, g)| {
            let probs = beta.probs().iter().zip(g.probs()).map(|(x, y)| (x - &an * y) / &scale).collect();
            Lottery::new(probs).map_err(|e| Error::InternalInconsistency(format!("refined ballot invalid: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Refinement { gamma, beta_hat: ProbabilisticBallots::new(n, table)?, alpha: a })
}

/// One weighted component of a decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    #[serde(with = "rational::serde_one")]
    pub weight: Rational,
    #[serde(with = "deterministic_serde")]
    pub ballots: DeterministicBallots,
}

/// One refinement round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    #[serde(with = "rational::serde_one")]
    pub alpha: Rational,
    /// Weight given to each extracted voter rule in this round.
    #[serde(with = "rational::serde_one")]
    pub weight_each: Rational,
    pub terminal: bool,
    pub support_size: usize,
    #[serde(with = "deterministic_vec_serde")]
    pub voter_rules: Vec<DeterministicBallots>,
    /// The rescaled ballots passed to the next round.
    #[serde(with = "optional_ballots_serde")]
    pub refined: Option<ProbabilisticBallots>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub components: Vec<Component>,
    pub trace: Vec<Round>,
}

fn check_scope(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<()> {
    let m = b.m();
    if klo < 1 || khi > m || khi <= klo + 1 || khi - klo >= m - 1 {
        return Err(Error::InvalidThresholds { klo, khi, m });
    }
    Ok(())
}

/// Per-round invariants: ballot unanimity, monotonicity, equal conditional
/// coefficients `1/n`, anonymity and per-capita monotonicity.
fn round_invariants(b: &ProbabilisticBallots, klo: usize, khi: usize) -> std::result::Result<(), String> {
    let n = b.n();
    if !check_ballot_unanimity(b) {
        return Err("ballot unanimity".into());
    }
    if let (false, Some(v)) = check_monotonicity(b) {
        return Err(format!("monotonicity: {v}"));
    }
    match check_crd(b, klo, khi) {
        Ok(Some(eps)) if eps.iter().all(|e| *e == ratio(1, n as i64)) => {}
        _ => return Err("constrained random dictatorship with equal coefficients".into()),
    }
    if !check_anonymous_ballots(b) {
        return Err("anonymity".into());
    }
    match check_per_capita(b, klo, khi) {
        Ok((true, _)) => Ok(()),
        Ok((false, Some(w))) => Err(format!("per-capita monotonicity: {w}")),
        _ => Err("per-capita monotonicity".into()),
    }
}

/// Decomposes an anonymous rule satisfying the constrained random-dictatorship
/// condition, or rejects it when per-capita monotonicity fails.
pub fn decompose_anonymous(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<DecompositionResult> {
    check_scope(b, klo, khi)?;
    if !check_anonymous_ballots(b) {
        return Err(Error::NotAnonymous);
    }
    Pfbr::new(b.clone())?;
    if check_crd(b, klo, khi)?.is_none() {
        return Err(Error::NotCrd);
    }
    if let (false, witness) = check_per_capita(b, klo, khi)? {
        return Err(Error::NotPerCapitaMonotone(witness.map(|w| w.to_string()).unwrap_or_default()));
    }

    let n = b.n();
    let mut components: Vec<Component> = Vec::new();
    let mut emit = |weight: &Rational, rule: DeterministicBallots| {
        // identical ballot tables from different voters or rounds are merged
        match components.iter_mut().find(|c| c.ballots == rule) {
            Some(c) => c.weight += weight,
            None => components.push(Component { weight: weight.clone(), ballots: rule }),
        }
    };
    let mut trace = Vec::new();
    let mut residual = Rational::one();
    let mut current = b.clone();
    loop {
        round_invariants(&current, klo, khi)
            .map_err(|what| Error::InternalInconsistency(format!("round {} breaks {what}", trace.len() + 1)))?;
        let a = alpha(&current, klo, khi)?;
        let rules = (1..=n).map(|i| voter_fbr(&current, i, klo, khi)).collect::<Result<Vec<_>>>()?;
        let size = total_support(&current);
        if a == ratio(1, n as i64) {
            let each = &residual * &a;
            for r in &rules {
                emit(&each, r.clone());
            }
            trace.push(Round { alpha: a, weight_each: each, terminal: true, support_size: size, voter_rules: rules, refined: None });
            break;
        }
        let refinement = refine(&current, klo, khi)?;
        let each = &residual * &a;
        for r in &rules {
            emit(&each, r.clone());
        }
        let next = refinement.beta_hat;
        if total_support(&next) >= size {
            return Err(Error::InternalInconsistency(format!("round {} did not shrink supports", trace.len() + 1)));
        }
        residual *= Rational::one() - &a * int(n as i64);
        trace.push(Round {
            alpha: a,
            weight_each: each,
            terminal: false,
            support_size: size,
            voter_rules: rules,
            refined: Some(next.clone()),
        });
        current = next;
    }

    let result = DecompositionResult { components, trace };
    if mixture_to_ballots(&result.pairs())? != *b {
        return Err(Error::InternalInconsistency("mixture does not reproduce the ballots".into()));
    }
    Ok(result)
}

impl DecompositionResult {
    pub fn pairs(&self) -> Vec<(Rational, DeterministicBallots)> {
        self.components.iter().map(|c| (c.weight.clone(), c.ballots.clone())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Ballots,
    Outcomes,
    Components,
}

/// Checks a decomposition at three levels: ballot reconstruction, equality
/// of outcomes at every peak profile, and that each component is a unanimous,
/// strategy-proof rule on the full hybrid domain. Returns the first failing
/// layer, or `None` when all pass.
pub fn verify_decomposition(b: &ProbabilisticBallots, result: &DecompositionResult, klo: usize, khi: usize) -> Result<Option<Layer>> {
    let pairs = result.pairs();
    match mixture_to_ballots(&pairs) {
        Ok(mixed) if mixed == *b => {}
        _ => return Ok(Some(Layer::Ballots)),
    }

    let (n, m) = (b.n(), b.m());
    let rule = Pfbr::new(b.clone())?;
    let fbrs = pairs
        .iter()
        .map(|(w, d)| Fbr::new(d.clone()).map(|f| (w.clone(), f)))
        .collect::<Result<Vec<_>>>();
    let Ok(fbrs) = fbrs else {
        return Ok(Some(Layer::Components));
    };
    let profiles = (0..m.pow(n as u32)).map(|mut idx| {
        let mut tops = vec![Alternative::new(1); n];
        for slot in tops.iter_mut().rev() {
            *slot = Alternative::new(idx % m + 1);
            idx /= m;
        }
        TopProfile::new(tops).expect("n >= 2")
    });
    for tops in profiles {
        let mut mixed = vec![Rational::zero(); m];
        for (w, f) in &fbrs {
            mixed[f.eval(&tops)?.index() - 1] += w;
        }
        if rule.eval(&tops).probs() != mixed.as_slice() {
            return Ok(Some(Layer::Outcomes));
        }
    }

    let domain = gen_hybrid(m, klo, khi)?;
    for (_, f) in &fbrs {
        if !f.ballots().dictator_within_any(klo, khi)
            || !check_unanimity(f, &domain, n)?.passed()
            || !check_strategy_proofness(f, &domain, n)?.passed()
        {
            return Ok(Some(Layer::Components));
        }
    }
    Ok(None)
}

impl DeterministicBallots {
    /// Some voter is a constrained dictator for these thresholds.
    pub fn dictator_within_any(&self, klo: usize, khi: usize) -> bool {
        (1..=self.n()).any(|i| self.dictator_within(i, klo, khi))
    }
}

mod deterministic_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &DeterministicBallots, ser: S) -> std::result::Result<S::Ok, S::Error> {
        BallotsFile::from_deterministic(b).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<DeterministicBallots, D::Error> {
        let file = BallotsFile::deserialize(de)?;
        let table = (0..1usize << file.n)
            .map(|mask| {
                file.ballots
                    .get(&mask.to_string())
                    .and_then(|v| v.as_u64())
                    .filter(|&k| k >= 1)
                    .map(|k| Alternative::new(k as usize))
                    .ok_or_else(|| serde::de::Error::custom(format!("missing ballot {mask}")))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        DeterministicBallots::new(file.n, file.m, table).map_err(serde::de::Error::custom)
    }
}

mod deterministic_vec_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rules: &[DeterministicBallots], ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(rules.iter().map(BallotsFile::from_deterministic))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<DeterministicBallots>, D::Error> {
        #[derive(Deserialize)]
        struct Wrapped(#[serde(with = "deterministic_serde")] DeterministicBallots);
        Ok(Vec::<Wrapped>::deserialize(de)?.into_iter().map(|w| w.0).collect())
    }
}

mod optional_ballots_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &Option<ProbabilisticBallots>, ser: S) -> std::result::Result<S::Ok, S::Error> {
        b.as_ref().map(|b| BallotsFile::from_probabilistic(b, None)).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Option<ProbabilisticBallots>, D::Error> {
        Option::<BallotsFile>::deserialize(de)?
            .map(|f| f.to_probabilistic().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lot(v: &[&str]) -> Lottery {
        Lottery::parse(v).unwrap()
    }

    fn three_voter() -> ProbabilisticBallots {
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

    fn binary_family() -> ProbabilisticBallots {
        ProbabilisticBallots::anonymous(
            3,
            vec![
                lot(&["1", "0", "0", "0", "0"]),
                lot(&["0", "2/3", "0", "1/3", "0"]),
                lot(&["0", "1/3", "0", "2/3", "0"]),
                lot(&["0", "0", "0", "0", "1"]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn support_examples() {
        assert_eq!(support(&Lottery::point(4, Alternative::new(1))), vec![Alternative::new(1)]);
        let b = three_voter();
        assert_eq!(support(b.get(Coalition::of(&[1]))), [1, 2, 5].map(Alternative::new).to_vec());
    }

    #[test]
    fn boundary_atoms_table_two() {
        let b = three_voter();
        let a = Alternative::new;
        assert_eq!(boundary_atoms(&b, Coalition::of(&[1]), 2, 4).unwrap(), (a(2), a(5)));
        assert_eq!(boundary_atoms(&b, Coalition::of(&[1, 2]), 2, 4).unwrap(), (a(1), a(4)));
        assert_eq!(boundary_atoms(&b, Coalition::full(3), 2, 4).unwrap().1, a(5));
    }

    #[test]
    fn voter_rules() {
        assert!(matches!(voter_fbr(&three_voter(), 1, 2, 4), Err(Error::PerCapitaRequired(_))));
        let f = voter_fbr(&binary_family(), 1, 2, 4).unwrap();
        let expect = [1, 4, 2, 4, 2, 4, 2, 5].map(Alternative::new).to_vec();
        assert_eq!(f.table(), expect.as_slice());
        assert!(f.dictator_within(1, 2, 4));
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(&three_voter(), 2, 4).unwrap(), ratio(1, 6));
        assert_eq!(alpha(&binary_family(), 2, 4).unwrap(), ratio(1, 3));
        assert_eq!(refine(&binary_family(), 2, 4), Err(Error::TerminalCase));
    }

    #[test]
    fn table_two_is_rejected() {
        assert!(matches!(decompose_anonymous(&three_voter(), 2, 4), Err(Error::NotPerCapitaMonotone(_))));
    }

    #[test]
    fn binary_family_splits_evenly() {
        let b = binary_family();
        let result = decompose_anonymous(&b, 2, 4).unwrap();
        assert_eq!(result.components.len(), 3);
        assert!(result.components.iter().all(|c| c.weight == ratio(1, 3)));
        assert_eq!(result.trace.len(), 1);
        assert_eq!(verify_decomposition(&b, &result, 2, 4).unwrap(), None);

        let mut tampered = result.clone();
        tampered.components[0].weight = ratio(1, 2);
        tampered.components[1].weight = ratio(1, 6);
        assert_eq!(verify_decomposition(&b, &tampered, 2, 4).unwrap(), Some(Layer::Ballots));
    }

    #[test]
    fn rejects_out_of_scope() {
        let t1 = ProbabilisticBallots::new(
            2,
            vec![
                lot(&["1", "0", "0", "0"]),
                lot(&["0.5", "0.2", "0.1", "0.2"]),
                lot(&["0.4", "0.3", "0.2", "0.1"]),
                lot(&["0", "0", "0", "1"]),
            ],
        )
        .unwrap();
        assert!(matches!(decompose_anonymous(&t1, 1, 4), Err(Error::InvalidThresholds { .. })));
        assert!(matches!(decompose_anonymous(&three_voter(), 1, 5), Err(Error::InvalidThresholds { .. })));
    }
}
