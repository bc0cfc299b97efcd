//! Alternatives, strict preferences, profiles and exact lotteries.
//!
//! Alternatives are 1-based (`a1..am`) and the natural order is index order.
//! Lotteries hold arbitrary-precision rationals, so sums and dominance
//! comparisons are exact.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub const MIN_ALTERNATIVES: usize = 3;
pub const MIN_VOTERS: usize = 2;

/// An alternative `a_k`, stored by its 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alternative(usize);

impl Alternative {
    /// # Panics
    /// If `index` is zero.
    pub fn new(index: usize) -> Self {
        assert!(index >= 1, "alternatives are 1-based");
        Alternative(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    /// 0-based slot, for indexing into vectors.
    pub(crate) const fn slot(self) -> usize {
        self.0 - 1
    }

    pub(crate) const fn from_slot(slot: usize) -> Self {
        Alternative(slot + 1)
    }

    /// `a1..=am` in natural order.
    pub fn all(m: usize) -> impl DoubleEndedIterator<Item = Alternative> + Clone {
        (1..=m).map(Alternative)
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A strict linear order over `m` alternatives; position 1 is the peak.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Preference {
    order: Vec<u8>,
    // positions[slot] = 0-based rank of alternative; a function of `order`
    positions: Vec<u8>,
}

impl Preference {
    /// Builds a preference from 1-based alternative indices, best first.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        if m < MIN_ALTERNATIVES {
            return Err(Error::DegenerateSize { m, n: MIN_VOTERS });
        }
        if m > u8::MAX as usize {
            return Err(Error::SizeCap(format!("at most 255 alternatives, got {m}")));
        }
        let mut positions = vec![u8::MAX; m];
        for (pos, &a) in order.iter().enumerate() {
            if a == 0 || a > m {
                return Err(Error::InvalidPreference(format!("alternative {a} out of range 1..={m}")));
            }
            if positions[a - 1] != u8::MAX {
                return Err(Error::InvalidPreference(format!("alternative {a} repeated")));
            }
            positions[a - 1] = pos as u8;
        }
        Ok(Preference {
            order: order.iter().map(|&a| (a - 1) as u8).collect(),
            positions,
        })
    }

    fn from_slots(order: Vec<u8>) -> Self {
        let mut positions = vec![0u8; order.len()];
        for (pos, &slot) in order.iter().enumerate() {
            positions[slot as usize] = pos as u8;
        }
        Preference { order, positions }
    }

    /// `(a1 a2 ... am)`, the preference called P-underbar in the theory.
    pub fn identity(m: usize) -> Result<Self> {
        Preference::new((1..=m).collect())
    }

    /// `(am ... a2 a1)`.
    pub fn reverse_identity(m: usize) -> Result<Self> {
        Preference::new((1..=m).rev().collect())
    }

    pub fn m(&self) -> usize {
        self.order.len()
    }

    pub fn top(&self) -> Alternative {
        Alternative::from_slot(self.order[0] as usize)
    }

    /// `r_k(P)`, with `k` 1-based.
    pub fn at(&self, k: usize) -> Alternative {
        Alternative::from_slot(self.order[k - 1] as usize)
    }

    /// 1-based rank of `a`.
    pub fn rank(&self, a: Alternative) -> usize {
        self.positions[a.slot()] as usize + 1
    }

    /// `a P b`.
    pub fn prefers(&self, a: Alternative, b: Alternative) -> bool {
        self.positions[a.slot()] < self.positions[b.slot()]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Alternative> + '_ {
        self.order.iter().map(|&s| Alternative::from_slot(s as usize))
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.iter().map(Alternative::index).collect()
    }

    pub fn reversed(&self) -> Preference {
        let mut order = self.order.clone();
        order.reverse();
        Preference::from_slots(order)
    }

    /// Swaps the alternatives ranked `k` and `k+1` (1-based `k`).
    pub fn swap_ranks(&self, k: usize) -> Preference {
        let mut order = self.order.clone();
        order.swap(k - 1, k);
        Preference::from_slots(order)
    }

    /// Renames every alternative through `map` (`map[old slot] = new alternative`).
    pub fn relabel(&self, map: &[Alternative]) -> Preference {
        Preference::from_slots(self.order.iter().map(|&s| map[s as usize].slot() as u8).collect())
    }
}

impl TryFrom<Vec<usize>> for Preference {
    type Error = Error;
    fn try_from(order: Vec<usize>) -> Result<Self> {
        Preference::new(order)
    }
}

impl From<Preference> for Vec<usize> {
    fn from(p: Preference) -> Vec<usize> {
        p.to_indices()
    }
}

impl fmt::Debug for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// `rank(P, a)`: the `k` with `r_k(P) = a`.
pub fn rank(p: &Preference, a: Alternative) -> usize {
    p.rank(a)
}

/// The pair swapped between two adjacent preferences, smaller index first.
///
/// `P ~ Q` iff they differ exactly by exchanging two contiguously ranked
/// alternatives.
pub fn adjacent(p: &Preference, q: &Preference) -> Option<(Alternative, Alternative)> {
    if p.m() != q.m() {
        return None;
    }
    let mut diff = (0..p.m()).filter(|&i| p.order[i] != q.order[i]);
    let first = diff.next()?;
    let second = diff.next()?;
    if diff.next().is_some() || second != first + 1 {
        return None;
    }
    if p.order[first] != q.order[second] || p.order[second] != q.order[first] {
        return None;
    }
    let a = Alternative::from_slot(p.order[first] as usize);
    let b = Alternative::from_slot(p.order[second] as usize);
    Some((a.min(b), a.max(b)))
}

/// True iff `q` ranks every pair opposite to `p`.
pub fn completely_reversed(p: &Preference, q: &Preference) -> bool {
    p.m() == q.m() && p.order.iter().eq(q.order.iter().rev())
}

/// A preference profile: one preference per voter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    prefs: Vec<Preference>,
}

impl Profile {
    pub fn new(prefs: Vec<Preference>) -> Result<Self> {
        let n = prefs.len();
        if n < MIN_VOTERS {
            let m = prefs.first().map_or(0, Preference::m);
            return Err(Error::DegenerateSize { m, n });
        }
        let m = prefs[0].m();
        if prefs.iter().any(|p| p.m() != m) {
            return Err(Error::InvalidPreference("profile mixes alternative counts".into()));
        }
        Ok(Profile { prefs })
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn m(&self) -> usize {
        self.prefs[0].m()
    }

    /// Preference of voter `i` (1-based).
    pub fn voter(&self, i: usize) -> &Preference {
        &self.prefs[i - 1]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn tops(&self) -> TopProfile {
        TopProfile { tops: self.prefs.iter().map(Preference::top).collect() }
    }
}

/// The peaks of a profile, one per voter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopProfile {
    tops: Vec<Alternative>,
}

impl TopProfile {
    pub fn new(tops: Vec<Alternative>) -> Result<Self> {
        if tops.len() < MIN_VOTERS {
            return Err(Error::DegenerateSize { m: 0, n: tops.len() });
        }
        Ok(TopProfile { tops })
    }

    /// From 1-based indices, e.g. `[2, 4]` for `(a2, a4)`.
    pub fn from_indices(tops: &[usize]) -> Result<Self> {
        if tops.contains(&0) {
            return Err(Error::Malformed("alternatives are 1-based".into()));
        }
        TopProfile::new(tops.iter().map(|&k| Alternative::new(k)).collect())
    }

    pub fn n(&self) -> usize {
        self.tops.len()
    }

    /// Peak of voter `i` (1-based).
    pub fn top(&self, i: usize) -> Alternative {
        self.tops[i - 1]
    }

    pub fn as_slice(&self) -> &[Alternative] {
        &self.tops
    }

    pub fn with_voter(&self, i: usize, a: Alternative) -> TopProfile {
        let mut tops = self.tops.clone();
        tops[i - 1] = a;
        TopProfile { tops }
    }
}

impl fmt::Display for TopProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.tops.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// A probability distribution over `a1..am` with exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LotteryRepr", into = "LotteryRepr")]
pub struct Lottery {
    probs: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct LotteryRepr(#[serde(with = "rational::serde_vec")] Vec<Rational>);

impl TryFrom<LotteryRepr> for Lottery {
    type Error = Error;
    fn try_from(repr: LotteryRepr) -> Result<Self> {
        Lottery::new(repr.0)
    }
}

impl From<Lottery> for LotteryRepr {
    fn from(l: Lottery) -> Self {
        LotteryRepr(l.probs)
    }
}

impl Lottery {
    /// Entries must be non-negative and sum to exactly one.
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidLottery("no alternatives".into()));
        }
        if let Some(p) = probs.iter().find(|p| p.is_negative()) {
            return Err(Error::InvalidLottery(format!("negative probability {p}")));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidLottery(format!("probabilities sum to {total}")));
        }
        Ok(Lottery { probs })
    }

    /// Skips validation; callers guarantee the invariant.
    pub(crate) fn from_trusted(probs: Vec<Rational>) -> Self {
        debug_assert!(probs.iter().all(|p| !p.is_negative()));
        debug_assert!(probs.iter().sum::<Rational>().is_one());
        Lottery { probs }
    }

    /// Parses fraction or decimal strings.
    pub fn parse(entries: &[&str]) -> Result<Self> {
        Lottery::new(entries.iter().map(|s| rational::parse_rational(s)).collect::<Result<_>>()?)
    }

    /// The degenerate lottery `e_a`.
    pub fn point(m: usize, a: Alternative) -> Self {
        assert!(a.index() <= m, "{a} outside 1..={m}");
        let mut probs = vec![Rational::zero(); m];
        probs[a.slot()] = Rational::one();
        Lottery { probs }
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, a: Alternative) -> &Rational {
        &self.probs[a.slot()]
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    /// Mass of `[a, am]`.
    pub fn upper_mass(&self, a: Alternative) -> Rational {
        self.probs[a.slot()..].iter().sum()
    }

    /// Mass of `[a1, a]`.
    pub fn lower_mass(&self, a: Alternative) -> Rational {
        self.probs[..=a.slot()].iter().sum()
    }

    /// Mass of `[lo, hi]`.
    pub fn interval_mass(&self, lo: Alternative, hi: Alternative) -> Result<Rational> {
        if lo > hi || hi.index() > self.m() {
            return Err(Error::InvalidInterval { lo: lo.index(), hi: hi.index() });
        }
        Ok(self.probs[lo.slot()..=hi.slot()].iter().sum())
    }

    /// Alternatives with positive probability, in natural order.
    pub fn support(&self) -> Vec<Alternative> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_positive())
            .map(|(s, _)| Alternative::from_slot(s))
            .collect()
    }

    /// `Some(a)` when this is `e_a`.
    pub fn as_point(&self) -> Option<Alternative> {
        let pos = self.probs.iter().position(|p| p.is_one())?;
        Some(Alternative::from_slot(pos))
    }

    /// First-order stochastic dominance of `self` over `other` according to `pref`.
    pub fn stochastically_dominates(&self, other: &Lottery, pref: &Preference) -> bool {
        self.first_dominance_failure(other, pref).is_none()
    }

    /// The first (1-based) prefix length `k` at which `self`'s mass on the top-`k`
    /// set of `pref` falls below `other`'s, or `None` if `self` dominates.
    pub fn first_dominance_failure(&self, other: &Lottery, pref: &Preference) -> Option<usize> {
        let mut diff = Rational::zero();
        for (k, a) in pref.iter().enumerate() {
            diff += &self.probs[a.slot()];
            diff -= &other.probs[a.slot()];
            if diff.is_negative() {
                return Some(k + 1);
            }
        }
        None
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.probs.iter().map(rational::format_rational).collect()
    }
}

impl fmt::Display for Lottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_strings().join(", "))
    }
}

/// Free-function form of [`Lottery::stochastically_dominates`].
pub fn stochastically_dominates(lambda: &Lottery, mu: &Lottery, pref: &Preference) -> bool {
    lambda.stochastically_dominates(mu, pref)
}

/// Free-function form of [`Lottery::interval_mass`].
pub fn interval_mass(lambda: &Lottery, lo: Alternative, hi: Alternative) -> Result<Rational> {
    lambda.interval_mass(lo, hi)
}

/// Pointwise convex combination.
pub fn mix(pairs: &[(Rational, Lottery)]) -> Result<Lottery> {
    let (_, first) = pairs.first().ok_or(Error::EmptyCollection("mixture"))?;
    let m = first.m();
    if pairs.iter().any(|(_, l)| l.m() != m) {
        return Err(Error::InvalidLottery("mixture of lotteries over different alternative sets".into()));
    }
    let total: Rational = pairs.iter().map(|(w, _)| w).sum();
    if !total.is_one() || pairs.iter().any(|(w, _)| w.is_negative()) {
        return Err(Error::BadWeights(total.to_string()));
    }
    let mut probs = vec![Rational::zero(); m];
    for (w, l) in pairs {
        for (acc, p) in probs.iter_mut().zip(&l.probs) {
            *acc += w * p;
        }
    }
    Ok(Lottery::from_trusted(probs))
}
