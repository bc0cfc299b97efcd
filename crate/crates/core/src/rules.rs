//! Coalition-indexed ballots, their validity conditions, and evaluators for
//! probabilistic fixed ballot rules, fixed ballot rules and random dictatorships.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefcore::{mix, Alternative, Lottery, TopProfile, MIN_ALTERNATIVES, MIN_VOTERS};
use crate::rational::{self, int, Rational};

/// Ballot tables hold `2^n` entries.
pub const MAX_VOTERS: usize = 16;

/// A set of voters as a bitmask; voter `i` (1-based) is bit `i - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coalition(u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub const fn from_mask(mask: u32) -> Self {
        Coalition(mask)
    }

    pub fn full(n: usize) -> Self {
        Coalition(((1u64 << n) - 1) as u32)
    }

    /// `{1, ..., k}`.
    pub fn first(k: usize) -> Self {
        Coalition::full(k)
    }

    pub fn of(voters: &[usize]) -> Self {
        Coalition(voters.iter().fold(0, |acc, &i| acc | 1 << (i - 1)))
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> (i - 1) & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Coalition(self.0 | 1 << (i - 1))
    }

    pub fn complement(self, n: usize) -> Self {
        Coalition(!self.0 & Coalition::full(n).0)
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (1..=32).filter(move |&i| self.contains(i))
    }

    /// Every coalition over `n` voters, by mask.
    pub fn all(n: usize) -> impl Iterator<Item = Coalition> {
        (0..1u32 << n).map(Coalition)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.members().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n < MIN_VOTERS || m < MIN_ALTERNATIVES {
        return Err(Error::DegenerateSize { m, n });
    }
    if n > MAX_VOTERS {
        return Err(Error::SizeCap(format!("ballot tables allow at most {MAX_VOTERS} voters, got {n}")));
    }
    Ok(())
}

/// The family `(β_S)` of probabilistic ballots, one lottery per coalition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilisticBallots {
    n: usize,
    table: Vec<Lottery>,
}

impl ProbabilisticBallots {
    /// `table[mask]` is the ballot of the coalition with that mask.
    pub fn new(n: usize, table: Vec<Lottery>) -> Result<Self> {
        let m = table.first().map_or(0, Lottery::m);
        check_sizes(n, m)?;
        if table.len() != 1 << n {
            return Err(Error::Malformed(format!("expected {} ballots for n = {n}, got {}", 1 << n, table.len())));
        }
        if table.iter().any(|l| l.m() != m) {
            return Err(Error::Malformed("ballots over different alternative counts".into()));
        }
        Ok(ProbabilisticBallots { n, table })
    }

    /// Expands size-indexed ballots: `by_size[s]` is the ballot of every coalition of size `s`.
    pub fn anonymous(n: usize, by_size: Vec<Lottery>) -> Result<Self> {
        if by_size.len() != n + 1 {
            return Err(Error::Malformed(format!("expected {} size-indexed ballots, got {}", n + 1, by_size.len())));
        }
        check_sizes(n, by_size[0].m())?;
        let table = Coalition::all(n).map(|s| by_size[s.len()].clone()).collect();
        ProbabilisticBallots::new(n, table)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.table[0].m()
    }

    pub fn get(&self, s: Coalition) -> &Lottery {
        &self.table[s.index()]
    }

    pub fn table(&self) -> &[Lottery] {
        &self.table
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coalition, &Lottery)> {
        self.table.iter().enumerate().map(|(i, l)| (Coalition(i as u32), l))
    }

    /// `Some` when every ballot is a point mass.
    pub fn to_deterministic(&self) -> Option<DeterministicBallots> {
        let table = self.table.iter().map(Lottery::as_point).collect::<Option<Vec<_>>>()?;
        Some(DeterministicBallots { n: self.n, m: self.m(), table })
    }

    /// The ballot of size `s`, when the family is anonymous.
    pub fn by_size(&self) -> Option<Vec<Lottery>> {
        check_anonymous_ballots(self).then(|| (0..=self.n).map(|s| self.get(Coalition::first(s)).clone()).collect())
    }
}

/// Deterministic ballots `(b_S)`, one alternative per coalition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeterministicBallots {
    n: usize,
    m: usize,
    table: Vec<Alternative>,
}

impl DeterministicBallots {
    pub fn new(n: usize, m: usize, table: Vec<Alternative>) -> Result<Self> {
        check_sizes(n, m)?;
        if table.len() != 1 << n {
            return Err(Error::Malformed(format!("expected {} ballots for n = {n}, got {}", 1 << n, table.len())));
        }
        if let Some(a) = table.iter().find(|a| a.index() > m) {
            return Err(Error::Malformed(format!("ballot {a} outside 1..={m}")));
        }
        Ok(DeterministicBallots { n, m, table })
    }

    pub fn from_fn(n: usize, m: usize, f: impl Fn(Coalition) -> Alternative) -> Result<Self> {
        DeterministicBallots::new(n, m, Coalition::all(n).map(f).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, s: Coalition) -> Alternative {
        self.table[s.index()]
    }

    pub fn table(&self) -> &[Alternative] {
        &self.table
    }

    pub fn to_probabilistic(&self) -> ProbabilisticBallots {
        ProbabilisticBallots {
            n: self.n,
            table: self.table.iter().map(|&a| Lottery::point(self.m, a)).collect(),
        }
    }

    pub fn is_unanimous(&self) -> bool {
        self.get(Coalition::EMPTY) == Alternative::new(1) && self.get(Coalition::full(self.n)) == Alternative::new(self.m)
    }

    /// Monotone iff `b_S ⪯ b_T` whenever `S ⊆ T`.
    pub fn is_monotone(&self) -> bool {
        Coalition::all(self.n)
            .all(|s| (1..=self.n).filter(|&i| !s.contains(i)).all(|i| self.get(s) <= self.get(s.with(i))))
    }

    /// Voter `i` is a constrained dictator: `b_S ∈ R` iff `i ∈ S`, else `b_S ∈ L`.
    pub fn dictator_within(&self, i: usize, klo: usize, khi: usize) -> bool {
        Coalition::all(self.n).all(|s| {
            let b = self.get(s).index();
            if s.contains(i) {
                b >= khi
            } else {
                b <= klo
            }
        })
    }
}

/// `S(k, P)`: voters whose peak is `a_k` or above in the natural order.
/// `k = m + 1` yields the empty coalition.
pub fn s_upper(k: usize, tops: &TopProfile) -> Coalition {
    Coalition::of(
        &(1..=tops.n())
            .filter(|&i| tops.top(i).index() >= k)
            .collect::<Vec<_>>(),
    )
}

pub fn check_ballot_unanimity(b: &ProbabilisticBallots) -> bool {
    let m = b.m();
    *b.get(Coalition::EMPTY) == Lottery::point(m, Alternative::new(1))
        && *b.get(Coalition::full(b.n)) == Lottery::point(m, Alternative::new(m))
}

/// A cover `S ⊂ T = S ∪ {i}` where the upper mass of `[a_k, a_m]` drops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub subset: Coalition,
    pub superset: Coalition,
    pub alternative: Alternative,
    #[serde(with = "rational::serde_one")]
    pub subset_mass: Rational,
    #[serde(with = "rational::serde_one")]
    pub superset_mass: Rational,
}

impl fmt::Display for MonotonicityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "beta_{}([{}, am]) = {} > {} = beta_{}([{}, am])",
            self.subset, self.alternative, self.subset_mass, self.superset_mass, self.superset, self.alternative
        )
    }
}

fn upper_table(b: &ProbabilisticBallots) -> Vec<Vec<Rational>> {
    b.table
        .iter()
        .map(|l| {
            // upper[k-1] = mass of [a_k, a_m]; upper[m] = 0
            let mut acc = Rational::zero();
            let mut upper = vec![Rational::zero(); l.m() + 1];
            for k in (0..l.m()).rev() {
                acc += &l.probs()[k];
                upper[k] = acc.clone();
            }
            upper
        })
        .collect()
}

fn first_monotonicity_violation(b: &ProbabilisticBallots, upper: &[Vec<Rational>]) -> Option<MonotonicityViolation> {
    for s in Coalition::all(b.n) {
        for i in (1..=b.n).filter(|&i| !s.contains(i)) {
            let t = s.with(i);
            for k in 1..=b.m() {
                let (lo, hi) = (&upper[s.index()][k - 1], &upper[t.index()][k - 1]);
                if lo > hi {
                    return Some(MonotonicityViolation {
                        subset: s,
                        superset: t,
                        alternative: Alternative::new(k),
                        subset_mass: lo.clone(),
                        superset_mass: hi.clone(),
                    });
                }
            }
        }
    }
    None
}

/// Scans only covers `T = S ∪ {i}`; inclusion chains make that sufficient.
pub fn check_monotonicity(b: &ProbabilisticBallots) -> (bool, Option<MonotonicityViolation>) {
    let violation = first_monotonicity_violation(b, &upper_table(b));
    (violation.is_none(), violation)
}

/// A probabilistic fixed ballot rule with ballots validated once.
#[derive(Debug, Clone)]
pub struct Pfbr {
    ballots: ProbabilisticBallots,
    upper: Vec<Vec<Rational>>,
}

impl Pfbr {
    pub fn new(ballots: ProbabilisticBallots) -> Result<Self> {
        if !check_ballot_unanimity(&ballots) {
            return Err(Error::InvalidBallots("ballot unanimity fails: need beta_N = e_am and beta_{} = e_a1".into()));
        }
        let upper = upper_table(&ballots);
        if let Some(v) = first_monotonicity_violation(&ballots, &upper) {
            return Err(Error::InvalidBallots(format!("monotonicity fails: {v}")));
        }
        Ok(Pfbr { ballots, upper })
    }

    pub fn ballots(&self) -> &ProbabilisticBallots {
        &self.ballots
    }

    pub fn n(&self) -> usize {
        self.ballots.n
    }

    pub fn m(&self) -> usize {
        self.ballots.m()
    }

    fn check_tops(&self, tops: &TopProfile) -> Result<()> {
        if tops.n() != self.n() {
            return Err(Error::Malformed(format!("{} tops for {} voters", tops.n(), self.n())));
        }
        if let Some(a) = tops.as_slice().iter().find(|a| a.index() > self.m()) {
            return Err(Error::Malformed(format!("peak {a} outside 1..={}", self.m())));
        }
        Ok(())
    }

    /// `φ_{a_k} = β_{S(k)}([a_k, a_m]) − β_{S(k+1)}([a_{k+1}, a_m])`.
    ///
    /// # Panics
    /// If `tops` does not match the rule's voter and alternative counts.
    pub fn eval(&self, tops: &TopProfile) -> Lottery {
        self.check_tops(tops).expect("top profile matches rule");
        let m = self.m();
        let mut probs = vec![Rational::zero(); m];
        let mut above = Coalition::EMPTY;
        let mut above_mass = Rational::zero();
        for k in (1..=m).rev() {
            let s = (1..=tops.n())
                .filter(|&i| tops.top(i).index() == k)
                .fold(above, |acc, i| acc.with(i));
            let mass = &self.upper[s.index()][k - 1];
            probs[k - 1] = mass - &above_mass;
            above = s;
            above_mass = mass.clone();
        }
        Lottery::from_trusted(probs)
    }
}

/// Validates the ballots, then evaluates at `tops`.
pub fn eval_pfbr(b: &ProbabilisticBallots, tops: &TopProfile) -> Result<Lottery> {
    let rule = Pfbr::new(b.clone())?;
    rule.check_tops(tops)?;
    Ok(rule.eval(tops))
}

/// A fixed ballot rule; keeps the degenerate probabilistic form for cross-checks.
#[derive(Debug, Clone)]
pub struct Fbr {
    ballots: DeterministicBallots,
    as_pfbr: Pfbr,
}

impl Fbr {
    pub fn new(ballots: DeterministicBallots) -> Result<Self> {
        if !ballots.is_unanimous() {
            return Err(Error::InvalidBallots("ballot unanimity fails: need b_N = am and b_{} = a1".into()));
        }
        if !ballots.is_monotone() {
            return Err(Error::InvalidBallots("deterministic ballots are not monotone".into()));
        }
        let as_pfbr = Pfbr::new(ballots.to_probabilistic())?;
        Ok(Fbr { ballots, as_pfbr })
    }

    pub fn ballots(&self) -> &DeterministicBallots {
        &self.ballots
    }

    pub fn n(&self) -> usize {
        self.ballots.n
    }

    pub fn m(&self) -> usize {
        self.ballots.m
    }

    /// `max_S min({peaks of S} ∪ {b_S})`.
    pub fn max_min(&self, tops: &TopProfile) -> Alternative {
        Coalition::all(self.n())
            .map(|s| s.members().map(|i| tops.top(i)).fold(self.ballots.get(s), Alternative::min))
            .max()
            .expect("at least one coalition")
    }

    /// Max-min value, confirmed against the degenerate probabilistic evaluation.
    pub fn eval(&self, tops: &TopProfile) -> Result<Alternative> {
        self.as_pfbr.check_tops(tops)?;
        let direct = self.max_min(tops);
        let lottery = self.as_pfbr.eval(tops);
        if lottery.as_point() != Some(direct) {
            return Err(Error::InternalInconsistency(format!(
                "max-min gives {direct} but the ballot formula gives {lottery} at {tops}"
            )));
        }
        Ok(direct)
    }
}

pub fn eval_fbr(b: &DeterministicBallots, tops: &TopProfile) -> Result<Alternative> {
    Fbr::new(b.clone())?.eval(tops)
}

fn upper_mass_from(l: &Lottery, k: usize) -> Rational {
    l.upper_mass(Alternative::new(k))
}

fn lower_mass_to(l: &Lottery, k: usize) -> Rational {
    l.lower_mass(Alternative::new(k))
}

/// Validates `1 ≤ klo`, `klo + 1 < khi ≤ m`: the middle interval must hold an
/// alternative strictly between the thresholds.
pub fn check_wide_thresholds(m: usize, klo: usize, khi: usize) -> Result<()> {
    if klo < 1 || khi > m || khi <= klo + 1 {
        return Err(Error::InvalidThresholds { klo, khi, m });
    }
    Ok(())
}

/// The conditional dictatorial coefficients, when every coalition puts
/// `Σ_{i∈S} ε_i` on `[a_khi, a_m]` and `Σ_{i∉S} ε_i` on `[a_1, a_klo]`.
pub fn check_crd(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<Option<Vec<Rational>>> {
    let (n, m) = (b.n, b.m());
    check_wide_thresholds(m, klo, khi)?;
    let eps: Vec<Rational> = (1..=n).map(|i| upper_mass_from(b.get(Coalition::of(&[i])), khi)).collect();
    let total: Rational = eps.iter().sum();
    for (s, beta) in b.iter() {
        let inside: Rational = s.members().map(|i| &eps[i - 1]).sum();
        let outside = &total - &inside;
        if upper_mass_from(beta, khi) != inside || lower_mass_to(beta, klo) != outside {
            return Ok(None);
        }
    }
    if !total.is_one() {
        return Ok(None);
    }
    // both interval conditions together leave nothing strictly inside the middle
    for (s, beta) in b.iter() {
        let middle = beta.interval_mass(Alternative::new(klo + 1), Alternative::new(khi - 1))?;
        if !middle.is_zero() {
            return Err(Error::InternalInconsistency(format!("beta_{s} has middle mass {middle}")));
        }
    }
    Ok(Some(eps))
}

/// Size-invariance: coalitions of equal size carry equal ballots.
pub fn check_anonymous_ballots(b: &ProbabilisticBallots) -> bool {
    b.iter().all(|(s, beta)| beta == b.get(Coalition::first(s.len())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// A failure of per-capita monotonicity between representative coalitions
/// `S = {1..s} ⊂ S' = {1..s'}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerCapitaWitness {
    pub side: Side,
    pub subset: Coalition,
    pub superset: Coalition,
    /// `a_t` for the right side, `a_s` for the left side.
    pub alternative: Alternative,
    /// Per-capita mass for the superset (the smaller value).
    #[serde(with = "rational::serde_one")]
    pub superset_ratio: Rational,
    /// Per-capita mass for the subset (the larger value).
    #[serde(with = "rational::serde_one")]
    pub subset_ratio: Rational,
}

impl fmt::Display for PerCapitaWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (big, small) = (self.superset.len(), self.subset.len());
        match self.side {
            Side::Right => write!(
                f,
                "beta_{}([{}, am])/{big} = {} < {} = beta_{}([{}, am])/{small}",
                self.superset, self.alternative, self.superset_ratio, self.subset_ratio, self.subset, self.alternative
            ),
            Side::Left => write!(
                f,
                "beta_N\\{}([a1, {}])/{big} = {} < {} = beta_N\\{}([a1, {}])/{small}",
                self.superset, self.alternative, self.superset_ratio, self.subset_ratio, self.subset, self.alternative
            ),
        }
    }
}

/// Per-capita monotonicity for anonymous ballots; scans coalition sizes
/// `1 ≤ s < s' ≤ n − 1`, right side first.
pub fn check_per_capita(b: &ProbabilisticBallots, klo: usize, khi: usize) -> Result<(bool, Option<PerCapitaWitness>)> {
    let (n, m) = (b.n, b.m());
    if klo < 1 || klo >= khi || khi > m {
        return Err(Error::InvalidThresholds { klo, khi, m });
    }
    if !check_anonymous_ballots(b) {
        return Err(Error::RequiresAnonymity);
    }
    let full = Coalition::full(n);
    for small in 1..n {
        for big in small + 1..n {
            let (s, s2) = (Coalition::first(small), Coalition::first(big));
            for t in khi..=m {
                let lhs = upper_mass_from(b.get(s2), t) / int(big as i64);
                let rhs = upper_mass_from(b.get(s), t) / int(small as i64);
                if lhs < rhs {
                    return Ok((false, Some(witness(Side::Right, s, s2, t, lhs, rhs))));
                }
            }
            for a in 1..=klo {
                let lhs = lower_mass_to(b.get(Coalition(full.0 & !s2.0)), a) / int(big as i64);
                let rhs = lower_mass_to(b.get(Coalition(full.0 & !s.0)), a) / int(small as i64);
                if lhs < rhs {
                    return Ok((false, Some(witness(Side::Left, s, s2, a, lhs, rhs))));
                }
            }
        }
    }
    Ok((true, None))
}

fn witness(side: Side, s: Coalition, s2: Coalition, k: usize, lhs: Rational, rhs: Rational) -> PerCapitaWitness {
    PerCapitaWitness {
        side,
        subset: s,
        superset: s2,
        alternative: Alternative::new(k),
        superset_ratio: lhs,
        subset_ratio: rhs,
    }
}

/// `β_S = Σ_k w_k e_{b^k_S}`.
pub fn mixture_to_ballots(fbrs: &[(Rational, DeterministicBallots)]) -> Result<ProbabilisticBallots> {
    let (_, first) = fbrs.first().ok_or(Error::EmptyCollection("ballot mixture"))?;
    let (n, m) = (first.n, first.m);
    if fbrs.iter().any(|(_, b)| b.n != n || b.m != m) {
        return Err(Error::Malformed("mixture components differ in voters or alternatives".into()));
    }
    let total: Rational = fbrs.iter().map(|(w, _)| w).sum();
    if !total.is_one() || fbrs.iter().any(|(w, _)| !w.is_positive()) {
        return Err(Error::BadWeights(total.to_string()));
    }
    let table = Coalition::all(n)
        .map(|s| {
            let pairs: Vec<(Rational, Lottery)> =
                fbrs.iter().map(|(w, b)| (w.clone(), Lottery::point(m, b.get(s)))).collect();
            mix(&pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    ProbabilisticBallots::new(n, table)
}

fn check_coefficients(eps: &[Rational]) -> Result<()> {
    let total: Rational = eps.iter().sum();
    if !total.is_one() || eps.iter().any(|e| e.is_negative()) {
        return Err(Error::BadWeights(total.to_string()));
    }
    Ok(())
}

/// `Σ_i ε_i e_{peak_i}`.
pub fn eval_random_dictatorship(eps: &[Rational], tops: &TopProfile, m: usize) -> Result<Lottery> {
    check_coefficients(eps)?;
    if eps.len() != tops.n() {
        return Err(Error::Malformed(format!("{} coefficients for {} voters", eps.len(), tops.n())));
    }
    let mut probs = vec![Rational::zero(); m];
    for (e, a) in eps.iter().zip(tops.as_slice()) {
        if a.index() > m {
            return Err(Error::Malformed(format!("peak {a} outside 1..={m}")));
        }
        probs[a.index() - 1] += e;
    }
    Ok(Lottery::from_trusted(probs))
}

/// A random dictatorship with fixed coefficients.
#[derive(Debug, Clone)]
pub struct RandomDictatorship {
    eps: Vec<Rational>,
    m: usize,
}

impl RandomDictatorship {
    pub fn new(eps: Vec<Rational>, m: usize) -> Result<Self> {
        check_coefficients(&eps)?;
        check_sizes(eps.len(), m)?;
        Ok(RandomDictatorship { eps, m })
    }

    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        RandomDictatorship::new(vec![rational::ratio(1, n as i64); n], m)
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.eps
    }

    pub fn n(&self) -> usize {
        self.eps.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eval(&self, tops: &TopProfile) -> Lottery {
        eval_random_dictatorship(&self.eps, tops, self.m).expect("coefficients validated")
    }
}

/// JSON ballots file:
/// `{ "n": 2, "m": 4, "ballots": { "<mask or size>": ["p/q", ...] }, "thresholds": [klo, khi] }`.
///
/// Keys are coalition bitmasks (`2^n` entries) or coalition sizes (`n + 1`
/// entries, anonymous ballots); `"index": "mask" | "size"` forces the reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallotsFile {
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<KeyKind>,
    pub ballots: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    Mask,
    Size,
}

impl BallotsFile {
    fn key_kind(&self) -> Result<KeyKind> {
        if let Some(kind) = self.index {
            return Ok(kind);
        }
        let count = self.ballots.len();
        if count == 1 << self.n {
            Ok(KeyKind::Mask)
        } else if count == self.n + 1 {
            Ok(KeyKind::Size)
        } else {
            Err(Error::Malformed(format!(
                "{count} ballots: expected {} (by coalition) or {} (by size)",
                1usize << self.n,
                self.n + 1
            )))
        }
    }

    fn entries(&self, expected: usize) -> Result<Vec<&serde_json::Value>> {
        let mut slots: Vec<Option<&serde_json::Value>> = vec![None; expected];
        for (key, value) in &self.ballots {
            let idx: usize = key.trim().parse().map_err(|_| Error::Malformed(format!("ballot key {key:?}")))?;
            let slot = slots.get_mut(idx).ok_or_else(|| Error::Malformed(format!("ballot key {idx} out of range")))?;
            if slot.replace(value).is_some() {
                return Err(Error::Malformed(format!("ballot key {idx} repeated")));
            }
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::Malformed(format!("missing ballot {i}"))))
            .collect()
    }

    pub fn thresholds(&self) -> Option<(usize, usize)> {
        self.thresholds.map(|[lo, hi]| (lo, hi))
    }

    pub fn to_probabilistic(&self) -> Result<ProbabilisticBallots> {
        check_sizes(self.n, self.m)?;
        let kind = self.key_kind()?;
        let expected = match kind {
            KeyKind::Mask => 1 << self.n,
            KeyKind::Size => self.n + 1,
        };
        let lotteries = self
            .entries(expected)?
            .into_iter()
            .map(|v| {
                let lottery: Lottery =
                    serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(format!("ballot: {e}")))?;
                if lottery.m() != self.m {
                    return Err(Error::Malformed(format!("ballot over {} alternatives, m = {}", lottery.m(), self.m)));
                }
                Ok(lottery)
            })
            .collect::<Result<Vec<_>>>()?;
        match kind {
            KeyKind::Mask => ProbabilisticBallots::new(self.n, lotteries),
            KeyKind::Size => ProbabilisticBallots::anonymous(self.n, lotteries),
        }
    }

    pub fn from_probabilistic(b: &ProbabilisticBallots, thresholds: Option<(usize, usize)>) -> Self {
        let ballots = b
            .iter()
            .map(|(s, l)| (s.mask().to_string(), serde_json::to_value(l).expect("lottery serializes")))
            .collect();
        BallotsFile {
            n: b.n,
            m: b.m(),
            index: Some(KeyKind::Mask),
            ballots,
            thresholds: thresholds.map(|(lo, hi)| [lo, hi]),
        }
    }

    /// Deterministic ballots are written as alternative indices per coalition.
    pub fn from_deterministic(b: &DeterministicBallots) -> Self {
        let ballots = Coalition::all(b.n)
            .map(|s| (s.mask().to_string(), serde_json::Value::from(b.get(s).index())))
            .collect();
        BallotsFile { n: b.n, m: b.m, index: Some(KeyKind::Mask), ballots, thresholds: None }
    }
}
