//! Brute-force audits of unanimity, strategy-proofness, tops-onlyness,
//! anonymity and related invariants over finite domains, plus the
//! compromise comparator.
//!
//! Tops-only rules are audited over peak profiles; general rules over the
//! full product `D^n`, guarded by a dominance-check budget. Scans run in
//! parallel and keep the lexicographically smallest counterexample so reports
//! do not depend on scheduling.

use std::fmt;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::Domain;
use crate::error::{Error, Result};
use crate::prefcore::{Alternative, Lottery, Preference, TopProfile};
use crate::rational::{self, Rational};
use crate::rules::{Fbr, Pfbr, RandomDictatorship};
use crate::structure::{all_vertex_paths, full_graph, VertexPath, DEFAULT_PATH_CAP};

/// Default ceiling on dominance checks for full-profile scans.
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// A rule whose outcome depends on peaks only.
pub trait TopsOnlyRule: Sync {
    fn alternatives(&self) -> usize;

    /// Fixed electorate size, if the rule has one.
    fn voters(&self) -> Option<usize> {
        None
    }

    fn choose_tops(&self, tops: &TopProfile) -> Lottery;
}

/// A rule over full preference profiles.
pub trait Rule: Sync {
    fn alternatives(&self) -> usize;

    fn voters(&self) -> Option<usize> {
        None
    }

    fn choose(&self, profile: &[&Preference]) -> Lottery;
}

/// Lifts a tops-only rule to full profiles.
pub struct FromTops<'a, R: ?Sized>(pub &'a R);

impl<R: TopsOnlyRule + ?Sized> Rule for FromTops<'_, R> {
    fn alternatives(&self) -> usize {
        self.0.alternatives()
    }

    fn voters(&self) -> Option<usize> {
        self.0.voters()
    }

    fn choose(&self, profile: &[&Preference]) -> Lottery {
        let tops = TopProfile::new(profile.iter().map(|p| p.top()).collect()).expect("at least two voters");
        self.0.choose_tops(&tops)
    }
}

/// Closure-backed tops-only rule.
pub struct TopsFn<F> {
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&TopProfile) -> Lottery + Sync> TopsOnlyRule for TopsFn<F> {
    fn alternatives(&self) -> usize {
        self.m
    }

    fn choose_tops(&self, tops: &TopProfile) -> Lottery {
        (self.f)(tops)
    }
}

/// Closure-backed full-profile rule.
pub struct ProfileFn<F> {
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&[&Preference]) -> Lottery + Sync> Rule for ProfileFn<F> {
    fn alternatives(&self) -> usize {
        self.m
    }

    fn choose(&self, profile: &[&Preference]) -> Lottery {
        (self.f)(profile)
    }
}

impl TopsOnlyRule for Pfbr {
    fn alternatives(&self) -> usize {
        self.m()
    }

    fn voters(&self) -> Option<usize> {
        Some(self.n())
    }

    fn choose_tops(&self, tops: &TopProfile) -> Lottery {
        self.eval(tops)
    }
}

impl TopsOnlyRule for Fbr {
    fn alternatives(&self) -> usize {
        self.m()
    }

    fn voters(&self) -> Option<usize> {
        Some(self.n())
    }

    fn choose_tops(&self, tops: &TopProfile) -> Lottery {
        Lottery::point(self.m(), self.eval(tops).expect("fixed ballot evaluators agree"))
    }
}

impl TopsOnlyRule for RandomDictatorship {
    fn alternatives(&self) -> usize {
        self.m()
    }

    fn voters(&self) -> Option<usize> {
        Some(self.n())
    }

    fn choose_tops(&self, tops: &TopProfile) -> Lottery {
        self.eval(tops)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Unanimity,
    StrategyProofness,
    LocalStrategyProofness,
    TopsOnly,
    Anonymity,
    Uncompromising,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Property::Unanimity => "unanimity",
            Property::StrategyProofness => "strategy-proofness",
            Property::LocalStrategyProofness => "local strategy-proofness",
            Property::TopsOnly => "tops-only",
            Property::Anonymity => "anonymity",
            Property::Uncompromising => "uncompromising",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// `voter` gains by reporting `misreport` instead of `profile[voter - 1]`.
    Manipulation {
        profile: Vec<Preference>,
        voter: usize,
        misreport: Preference,
        truthful: Lottery,
        manipulated: Lottery,
        /// First prefix of the sincere preference where truthful mass falls short.
        prefix: usize,
    },
    NotUnanimous {
        peak: Alternative,
        outcome: Lottery,
    },
    TopsDependence {
        first: Vec<Preference>,
        second: Vec<Preference>,
        first_outcome: Lottery,
        second_outcome: Lottery,
    },
    Asymmetry {
        tops: TopProfile,
        permuted: TopProfile,
        outcome: Lottery,
        permuted_outcome: Lottery,
    },
    /// Moving `voter`'s peak along `path` shifts mass on an off-path alternative.
    Compromising {
        path: VertexPath,
        voter: usize,
        tops: TopProfile,
        alternative: Alternative,
        #[serde(with = "rational::serde_one")]
        at_start: Rational,
        #[serde(with = "rational::serde_one")]
        at_end: Rational,
    },
}

impl Counterexample {
    /// Re-evaluates the cited profiles and confirms the violation is genuine.
    pub fn replays(&self, rule: &dyn Rule) -> bool {
        fn refs(ps: &[Preference]) -> Vec<&Preference> {
            ps.iter().collect()
        }
        match self {
            Counterexample::Manipulation { profile, voter, misreport, truthful, manipulated, prefix } => {
                let mut deviated = refs(profile);
                let sincere = deviated[voter - 1];
                deviated[voter - 1] = misreport;
                let t = rule.choose(&refs(profile));
                let d = rule.choose(&deviated);
                t == *truthful && d == *manipulated && t.first_dominance_failure(&d, sincere) == Some(*prefix)
            }
            Counterexample::NotUnanimous { peak, outcome } => {
                let m = rule.alternatives();
                *outcome != Lottery::point(m, *peak)
            }
            Counterexample::TopsDependence { first, second, .. } => {
                let same_tops = first.iter().zip(second).all(|(p, q)| p.top() == q.top());
                same_tops && rule.choose(&refs(first)) != rule.choose(&refs(second))
            }
            Counterexample::Asymmetry { outcome, permuted_outcome, .. } => outcome != permuted_outcome,
            Counterexample::Compromising { at_start, at_end, .. } => at_start != at_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub property: Property,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub violations: u64,
    pub profiles_examined: u64,
    /// Excluded from serialized output so reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn new(property: Property, scan: Scan, examined: u64, started: Instant) -> Self {
        AuditReport {
            property,
            verdict: if scan.count == 0 { Verdict::Pass } else { Verdict::Fail },
            counterexample: scan.first.map(|(_, c)| c),
            violations: scan.count,
            profiles_examined: examined,
            wall_time: started.elapsed(),
        }
    }
}

/// Violation count plus the smallest-keyed counterexample seen.
struct Scan {
    count: u64,
    first: Option<(Vec<usize>, Counterexample)>,
}

impl Scan {
    fn empty() -> Self {
        Scan { count: 0, first: None }
    }

    fn hit(key: Vec<usize>, cx: Counterexample) -> Self {
        Scan { count: 1, first: Some((key, cx)) }
    }

    fn merge(self, other: Scan) -> Scan {
        let first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        Scan { count: self.count + other.count, first }
    }
}

fn check_rule_shape(m: usize, voters: Option<usize>, d: &Domain, n: usize) -> Result<()> {
    if m != d.m() {
        return Err(Error::PreconditionFailed(format!("rule over {m} alternatives, domain over {}", d.m())));
    }
    if n < 2 {
        return Err(Error::DegenerateSize { m, n });
    }
    if let Some(v) = voters.filter(|&v| v != n) {
        return Err(Error::PreconditionFailed(format!("rule has {v} voters, audit requested {n}")));
    }
    Ok(())
}

/// Peak profiles over a domain, enumerated in lexicographic order.
struct TopSpace {
    peaks: Vec<Alternative>,
    n: usize,
    size: usize,
}

impl TopSpace {
    fn new(d: &Domain, n: usize) -> Result<Self> {
        let peaks = d.peaks();
        let size = checked_pow(peaks.len(), n)?;
        Ok(TopSpace { peaks, n, size })
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let p = self.peaks.len();
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = idx % p;
            idx /= p;
        }
        out
    }

    fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.peaks.len() + d)
    }

    fn tops(&self, digits: &[usize]) -> TopProfile {
        TopProfile::new(digits.iter().map(|&d| self.peaks[d]).collect()).expect("n >= 2")
    }

    fn table(&self, rule: &dyn TopsOnlyRule) -> Vec<Lottery> {
        (0..self.size).into_par_iter().map(|i| rule.choose_tops(&self.tops(&self.digits(i)))).collect()
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut out: usize = 1;
    for _ in 0..exp {
        out = out.checked_mul(base).ok_or_else(|| Error::SizeCap(format!("{base}^{exp} profiles")))?;
    }
    Ok(out)
}

/// Full profiles `D^n`, enumerated in lexicographic order of member indices.
struct ProfileSpace<'a> {
    d: &'a Domain,
    n: usize,
    size: u128,
}

impl<'a> ProfileSpace<'a> {
    fn new(d: &'a Domain, n: usize) -> Self {
        ProfileSpace { d, n, size: (d.len() as u128).pow(n as u32) }
    }

    fn digits(&self, mut idx: u128) -> Vec<usize> {
        let len = self.d.len() as u128;
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = (idx % len) as usize;
            idx /= len;
        }
        out
    }

    fn prefs(&self, digits: &[usize]) -> Vec<&'a Preference> {
        digits.iter().map(|&i| &self.d.prefs()[i]).collect()
    }

    fn indices(&self) -> impl ParallelIterator<Item = u128> {
        // u128 ranges are not parallel iterators; budgets keep sizes within u64
        (0..self.size as u64).into_par_iter().map(u128::from)
    }
}

fn first_with_top(d: &Domain, a: Alternative) -> &Preference {
    d.with_top(a).next().expect("peak taken from the domain")
}

/// Representative full profile for a peak profile: each voter takes the
/// smallest domain member with that peak.
fn representative(d: &Domain, tops: &TopProfile) -> Vec<Preference> {
    tops.as_slice().iter().map(|&a| first_with_top(d, a).clone()).collect()
}

pub fn check_unanimity(rule: &dyn TopsOnlyRule, d: &Domain, n: usize) -> Result<AuditReport> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    let started = Instant::now();
    let peaks = d.peaks();
    let scan = peaks
        .par_iter()
        .enumerate()
        .map(|(k, &a)| {
            let tops = TopProfile::new(vec![a; n]).expect("n >= 2");
            let outcome = rule.choose_tops(&tops);
            if outcome == Lottery::point(d.m(), a) {
                Scan::empty()
            } else {
                Scan::hit(vec![k], Counterexample::NotUnanimous { peak: a, outcome })
            }
        })
        .reduce(Scan::empty, Scan::merge);
    Ok(AuditReport::new(Property::Unanimity, scan, peaks.len() as u64, started))
}

/// Strategy-proofness of a tops-only rule, reduced to peak profiles: each
/// voter, each alternative peak to report, and every sincere member of `D`
/// with the truthful peak.
pub fn check_strategy_proofness(rule: &dyn TopsOnlyRule, d: &Domain, n: usize) -> Result<AuditReport> {
    tops_sp_scan(rule, d, n, false)
}

/// Misreports restricted to preferences adjacent to the sincere one.
pub fn check_local_strategy_proofness(rule: &dyn TopsOnlyRule, d: &Domain, n: usize) -> Result<AuditReport> {
    tops_sp_scan(rule, d, n, true)
}

fn tops_sp_scan(rule: &dyn TopsOnlyRule, d: &Domain, n: usize, local: bool) -> Result<AuditReport> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    let started = Instant::now();
    let space = TopSpace::new(d, n)?;
    let table = space.table(rule);
    let sincere: Vec<Vec<(usize, &Preference)>> = space
        .peaks
        .iter()
        .map(|&a| d.prefs().iter().enumerate().filter(|(_, p)| p.top() == a).collect())
        .collect();
    let property = if local { Property::LocalStrategyProofness } else { Property::StrategyProofness };

    let scan = (0..space.size)
        .into_par_iter()
        .map(|idx| {
            let digits = space.digits(idx);
            let truthful = &table[idx];
            let mut acc = Scan::empty();
            for voter in 1..=n {
                let own = digits[voter - 1];
                for &(p_idx, p) in &sincere[own] {
                    for (lie, &lie_top) in space.peaks.iter().enumerate() {
                        if lie == own {
                            continue;
                        }
                        let misreport = if local {
                            // only a swap of the two best changes the peak
                            let swapped = p.swap_ranks(1);
                            if swapped.top() != lie_top || !d.contains(&swapped) {
                                continue;
                            }
                            swapped
                        } else {
                            first_with_top(d, lie_top).clone()
                        };
                        let mut dev = digits.clone();
                        dev[voter - 1] = lie;
                        let manipulated = &table[space.index_of(&dev)];
                        if let Some(prefix) = truthful.first_dominance_failure(manipulated, p) {
                            let mut profile = representative(d, &space.tops(&digits));
                            profile[voter - 1] = p.clone();
                            let cx = Counterexample::Manipulation {
                                profile,
                                voter,
                                misreport,
                                truthful: truthful.clone(),
                                manipulated: manipulated.clone(),
                                prefix,
                            };
                            acc = acc.merge(Scan::hit(vec![idx, voter, lie, p_idx], cx));
                        }
                    }
                }
            }
            acc
        })
        .reduce(Scan::empty, Scan::merge);
    Ok(AuditReport::new(property, scan, space.size as u64, started))
}

/// Every manipulation found by the tops-only scan, in scan order.
pub fn manipulations(rule: &dyn TopsOnlyRule, d: &Domain, n: usize) -> Result<Vec<Counterexample>> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    let space = TopSpace::new(d, n)?;
    let table = space.table(rule);
    let mut out = Vec::new();
    for idx in 0..space.size {
        let digits = space.digits(idx);
        for voter in 1..=n {
            let own = digits[voter - 1];
            for p in d.with_top(space.peaks[own]) {
                for (lie, &lie_top) in space.peaks.iter().enumerate() {
                    if lie == own {
                        continue;
                    }
                    let mut dev = digits.clone();
                    dev[voter - 1] = lie;
                    let (truthful, manipulated) = (&table[idx], &table[space.index_of(&dev)]);
                    if let Some(prefix) = truthful.first_dominance_failure(manipulated, p) {
                        let mut profile = representative(d, &space.tops(&digits));
                        profile[voter - 1] = p.clone();
                        out.push(Counterexample::Manipulation {
                            profile,
                            voter,
                            misreport: first_with_top(d, lie_top).clone(),
                            truthful: truthful.clone(),
                            manipulated: manipulated.clone(),
                            prefix,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Strategy-proofness over every profile in `D^n` and every misreport in `D`.
pub fn check_strategy_proofness_full(rule: &dyn Rule, d: &Domain, n: usize, budget: u128) -> Result<AuditReport> {
    full_sp_scan(rule, d, n, budget, false)
}

pub fn check_local_strategy_proofness_full(rule: &dyn Rule, d: &Domain, n: usize, budget: u128) -> Result<AuditReport> {
    full_sp_scan(rule, d, n, budget, true)
}

fn full_sp_scan(rule: &dyn Rule, d: &Domain, n: usize, budget: u128, local: bool) -> Result<AuditReport> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    let space = ProfileSpace::new(d, n);
    let needed = space.size * n as u128 * d.len() as u128;
    check_budget(needed, budget)?;
    let started = Instant::now();
    let adj = d.adjacency();
    let property = if local { Property::LocalStrategyProofness } else { Property::StrategyProofness };
    let scan = space
        .indices()
        .map(|idx| {
            let digits = space.digits(idx);
            let prefs = space.prefs(&digits);
            let truthful = rule.choose(&prefs);
            let mut acc = Scan::empty();
            for voter in 1..=n {
                let own = digits[voter - 1];
                let sincere = prefs[voter - 1];
                let lies: Vec<usize> = if local { adj[own].clone() } else { (0..d.len()).filter(|&j| j != own).collect() };
                for lie in lies {
                    let mut dev = prefs.clone();
                    dev[voter - 1] = &d.prefs()[lie];
                    let manipulated = rule.choose(&dev);
                    if let Some(prefix) = truthful.first_dominance_failure(&manipulated, sincere) {
                        let cx = Counterexample::Manipulation {
                            profile: prefs.iter().map(|&p| p.clone()).collect(),
                            voter,
                            misreport: d.prefs()[lie].clone(),
                            truthful: truthful.clone(),
                            manipulated,
                            prefix,
                        };
                        let mut key = digits.clone();
                        key.extend([voter, lie]);
                        acc = acc.merge(Scan::hit(key, cx));
                    }
                }
            }
            acc
        })
        .reduce(Scan::empty, Scan::merge);
    Ok(AuditReport::new(property, scan, space.size as u64, started))
}

/// Equal-peak profiles must give equal lotteries; compares every profile in
/// `D^n` with the representative profile sharing its peaks.
pub fn check_tops_only(rule: &dyn Rule, d: &Domain, n: usize, budget: u128) -> Result<AuditReport> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    let space = ProfileSpace::new(d, n);
    check_budget(space.size * 2, budget)?;
    let started = Instant::now();
    let scan = space
        .indices()
        .map(|idx| {
            let digits = space.digits(idx);
            let prefs = space.prefs(&digits);
            let tops = TopProfile::new(prefs.iter().map(|p| p.top()).collect()).expect("n >= 2");
            let rep = representative(d, &tops);
            let rep_refs: Vec<&Preference> = rep.iter().collect();
            if rep_refs == prefs {
                return Scan::empty();
            }
            let (a, b) = (rule.choose(&rep_refs), rule.choose(&prefs));
            if a == b {
                Scan::empty()
            } else {
                Scan::hit(
                    digits,
                    Counterexample::TopsDependence {
                        first: rep.clone(),
                        second: prefs.iter().map(|&p| p.clone()).collect(),
                        first_outcome: a,
                        second_outcome: b,
                    },
                )
            }
        })
        .reduce(Scan::empty, Scan::merge);
    Ok(AuditReport::new(Property::TopsOnly, scan, space.size as u64, started))
}

/// Runs the tops-only check and, when it passes, audits strategy-proofness on
/// peak profiles; otherwise falls back to the budgeted full-profile scan.
pub fn check_strategy_proofness_auto(rule: &dyn Rule, d: &Domain, n: usize, budget: u128) -> Result<AuditReport> {
    let tops_only = check_tops_only(rule, d, n, budget)?;
    if !tops_only.passed() {
        return check_strategy_proofness_full(rule, d, n, budget);
    }
    let reduced = Reduced { rule, d };
    let mut report = check_strategy_proofness(&reduced, d, n)?;
    report.profiles_examined += tops_only.profiles_examined;
    Ok(report)
}

/// Evaluates a tops-only full-profile rule at representative profiles.
struct Reduced<'a> {
    rule: &'a dyn Rule,
    d: &'a Domain,
}

impl TopsOnlyRule for Reduced<'_> {
    fn alternatives(&self) -> usize {
        self.rule.alternatives()
    }

    fn voters(&self) -> Option<usize> {
        self.rule.voters()
    }

    fn choose_tops(&self, tops: &TopProfile) -> Lottery {
        let rep = representative(self.d, tops);
        self.rule.choose(&rep.iter().collect::<Vec<_>>())
    }
}

/// Invariance under voter permutations; comparing each peak profile with its
/// sorted form covers all `n!` permutations.
pub fn check_anonymity(rule: &dyn TopsOnlyRule, d: &Domain, n: usize) -> Result<AuditReport> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    let started = Instant::now();
    let space = TopSpace::new(d, n)?;
    let table = space.table(rule);
    let scan = (0..space.size)
        .into_par_iter()
        .map(|idx| {
            let digits = space.digits(idx);
            let mut sorted = digits.clone();
            sorted.sort();
            let canon = space.index_of(&sorted);
            if table[idx] == table[canon] {
                Scan::empty()
            } else {
                Scan::hit(
                    vec![idx],
                    Counterexample::Asymmetry {
                        tops: space.tops(&sorted),
                        permuted: space.tops(&digits),
                        outcome: table[canon].clone(),
                        permuted_outcome: table[idx].clone(),
                    },
                )
            }
        })
        .reduce(Scan::empty, Scan::merge);
    Ok(AuditReport::new(Property::Anonymity, scan, space.size as u64, started))
}

/// Moving one voter's peak from one end of a vertex path to the other leaves
/// every off-path probability unchanged. Requires unanimity and
/// strategy-proofness, which are checked first.
pub fn check_uncompromising(rule: &dyn TopsOnlyRule, d: &Domain, n: usize) -> Result<AuditReport> {
    let unanimity = check_unanimity(rule, d, n)?;
    if !unanimity.passed() {
        return Err(Error::PreconditionFailed("rule is not unanimous".into()));
    }
    if !check_strategy_proofness(rule, d, n)?.passed() {
        return Err(Error::PreconditionFailed("rule is not strategy-proof".into()));
    }
    let started = Instant::now();
    let space = TopSpace::new(d, n)?;
    let table = space.table(rule);
    let g = full_graph(d);
    let mut paths = Vec::new();
    for (i, &a) in space.peaks.iter().enumerate() {
        for &b in &space.peaks[i + 1..] {
            paths.extend(all_vertex_paths(&g, a, b, DEFAULT_PATH_CAP)?);
        }
    }
    let position = |a: Alternative| space.peaks.binary_search(&a).ok();
    let mut examined = 0u64;
    let scan = paths
        .iter()
        .enumerate()
        .filter_map(|(pi, path)| {
            let (x1, xt) = (position(path.0[0])?, position(*path.0.last()?)?);
            Some((pi, path, x1, xt))
        })
        .map(|(pi, path, x1, xt)| {
            examined += space.size as u64;
            let mut acc = Scan::empty();
            for idx in 0..space.size {
                let digits = space.digits(idx);
                for voter in 1..=n {
                    if digits[voter - 1] != x1 {
                        continue;
                    }
                    let mut end = digits.clone();
                    end[voter - 1] = xt;
                    let (start_l, end_l) = (&table[idx], &table[space.index_of(&end)]);
                    let off_path = Alternative::all(d.m()).find(|a| !path.contains(*a) && start_l.prob(*a) != end_l.prob(*a));
                    if let Some(a) = off_path {
                        let cx = Counterexample::Compromising {
                            path: path.clone(),
                            voter,
                            tops: space.tops(&digits),
                            alternative: a,
                            at_start: start_l.prob(a).clone(),
                            at_end: end_l.prob(a).clone(),
                        };
                        acc = acc.merge(Scan::hit(vec![pi, idx, voter], cx));
                    }
                }
            }
            acc
        })
        .fold(Scan::empty(), Scan::merge);
    Ok(AuditReport::new(Property::Uncompromising, scan, examined, started))
}

/// Fits coefficients from profiles with one voter at the right threshold and
/// the rest at the left, then confirms `rule = Σ ε_i e_{peak_i}` on every
/// profile whose peaks all lie in the middle interval.
pub fn check_rd_on_middle(rule: &dyn TopsOnlyRule, d: &Domain, n: usize, klo: usize, khi: usize) -> Result<Option<Vec<Rational>>> {
    check_rule_shape(rule.alternatives(), rule.voters(), d, n)?;
    crate::rules::check_wide_thresholds(d.m(), klo, khi)?;
    let (lo, hi) = (Alternative::new(klo), Alternative::new(khi));
    let middle: Vec<Alternative> = d.peaks().into_iter().filter(|a| (klo..=khi).contains(&a.index())).collect();
    if !middle.contains(&lo) || !middle.contains(&hi) {
        return Err(Error::PreconditionFailed("both thresholds must be peaks in the domain".into()));
    }
    let eps: Vec<Rational> = (1..=n)
        .map(|i| {
            let tops: Vec<Alternative> = (1..=n).map(|j| if j == i { hi } else { lo }).collect();
            rule.choose_tops(&TopProfile::new(tops).expect("n >= 2")).prob(hi).clone()
        })
        .collect();
    if eps.iter().sum::<Rational>() != Rational::from_integer(1.into()) {
        return Ok(None);
    }
    let count = checked_pow(middle.len(), n)?;
    let consistent = (0..count).into_par_iter().all(|mut idx| {
        let mut tops = vec![lo; n];
        for slot in tops.iter_mut().rev() {
            *slot = middle[idx % middle.len()];
            idx /= middle.len();
        }
        let tp = TopProfile::new(tops).expect("n >= 2");
        let mut expected = vec![Rational::zero(); d.m()];
        for (e, a) in eps.iter().zip(tp.as_slice()) {
            expected[a.index() - 1] += e;
        }
        rule.choose_tops(&tp).probs() == expected.as_slice()
    });
    Ok(consistent.then_some(eps))
}

/// A profile where peaks differ but every voter ranks the same alternative second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompromiseCase {
    pub profile: Vec<Preference>,
    pub compromise: Alternative,
    #[serde(with = "rational::serde_one")]
    pub first: Rational,
    #[serde(with = "rational::serde_one")]
    pub second: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompromiseReport {
    /// The first rule's probability on the compromise is never lower.
    pub weakly_dominates: bool,
    /// Smallest profile where the first rule is strictly higher.
    pub strict_witness: Option<CompromiseCase>,
    /// Smallest profile where the first rule is strictly lower.
    pub violation: Option<CompromiseCase>,
    pub compromise_profiles: u64,
    pub strict_count: u64,
    pub tie_count: u64,
}

/// The shared second-ranked alternative when peaks disagree, else `None`.
pub fn compromise_of(profile: &[&Preference]) -> Option<Alternative> {
    let second = profile[0].at(2);
    let peaks_differ = profile.iter().any(|p| p.top() != profile[0].top());
    (peaks_differ && profile.iter().all(|p| p.at(2) == second)).then_some(second)
}

/// Compares the probability two rules put on the shared second-best
/// alternative across all compromise profiles in `D^n`.
pub fn compare_compromise(rule1: &dyn Rule, rule2: &dyn Rule, d: &Domain, n: usize, budget: u128) -> Result<CompromiseReport> {
    check_rule_shape(rule1.alternatives(), rule1.voters(), d, n)?;
    check_rule_shape(rule2.alternatives(), rule2.voters(), d, n)?;
    let space = ProfileSpace::new(d, n);
    check_budget(space.size, budget)?;

    #[derive(Default)]
    struct Tally {
        profiles: u64,
        strict: u64,
        ties: u64,
        strict_first: Option<(u128, CompromiseCase)>,
        lower_first: Option<(u128, CompromiseCase)>,
    }
    fn keep_min(a: Option<(u128, CompromiseCase)>, b: Option<(u128, CompromiseCase)>) -> Option<(u128, CompromiseCase)> {
        match (a, b) {
            (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
            (x, y) => x.or(y),
        }
    }

    let tally = space
        .indices()
        .map(|idx| {
            let prefs = space.prefs(&space.digits(idx));
            let mut t = Tally::default();
            let Some(a) = compromise_of(&prefs) else {
                return t;
            };
            t.profiles = 1;
            let (p1, p2) = (rule1.choose(&prefs).prob(a).clone(), rule2.choose(&prefs).prob(a).clone());
            let case = || CompromiseCase {
                profile: prefs.iter().map(|&p| p.clone()).collect(),
                compromise: a,
                first: p1.clone(),
                second: p2.clone(),
            };
            match p1.cmp(&p2) {
                std::cmp::Ordering::Greater => {
                    t.strict = 1;
                    t.strict_first = Some((idx, case()));
                }
                std::cmp::Ordering::Equal => t.ties = 1,
                std::cmp::Ordering::Less => t.lower_first = Some((idx, case())),
            }
            t
        })
        .reduce(Tally::default, |a, b| Tally {
            profiles: a.profiles + b.profiles,
            strict: a.strict + b.strict,
            ties: a.ties + b.ties,
            strict_first: keep_min(a.strict_first, b.strict_first),
            lower_first: keep_min(a.lower_first, b.lower_first),
        });
    Ok(CompromiseReport {
        weakly_dominates: tally.lower_first.is_none(),
        strict_witness: tally.strict_first.map(|(_, c)| c),
        violation: tally.lower_first.map(|(_, c)| c),
        compromise_profiles: tally.profiles,
        strict_count: tally.strict,
        tie_count: tally.ties,
    })
}

/// All compromise profiles in `D^n` with their shared second-best alternative.
pub fn compromise_profiles(d: &Domain, n: usize) -> Vec<(Vec<Preference>, Alternative)> {
    let space = ProfileSpace::new(d, n);
    (0..space.size)
        .filter_map(|idx| {
            let prefs = space.prefs(&space.digits(idx));
            compromise_of(&prefs).map(|a| (prefs.into_iter().cloned().collect(), a))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{gen_hybrid, gen_single_peaked};
    use crate::rational::ratio;
    use crate::rules::ProbabilisticBallots;

    fn two_voter() -> Pfbr {
        let l = |v: &[&str]| Lottery::parse(v).unwrap();
        Pfbr::new(
            ProbabilisticBallots::new(
                2,
                vec![
                    l(&["1", "0", "0", "0"]),
                    l(&["0.5", "0.2", "0.1", "0.2"]),
                    l(&["0.4", "0.3", "0.2", "0.1"]),
                    l(&["0", "0", "0", "1"]),
                ],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_rule_is_not_unanimous() {
        let d = gen_single_peaked(4).unwrap();
        let constant = TopsFn { m: 4, f: |_: &TopProfile| Lottery::point(4, Alternative::new(1)) };
        let report = check_unanimity(&constant, &d, 2).unwrap();
        assert!(!report.passed());
        match report.counterexample.unwrap() {
            Counterexample::NotUnanimous { peak, .. } => assert_eq!(peak, Alternative::new(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dictatorship_audits() {
        let d = gen_single_peaked(4).unwrap();
        let dict = RandomDictatorship::new(vec![ratio(1, 1), ratio(0, 1)], 4).unwrap();
        assert!(check_unanimity(&dict, &d, 2).unwrap().passed());
        assert!(check_strategy_proofness(&dict, &d, 2).unwrap().passed());
        assert!(!check_anonymity(&dict, &d, 2).unwrap().passed());
        assert!(check_tops_only(&FromTops(&dict), &d, 2, DEFAULT_BUDGET).unwrap().passed());
    }

    #[test]
    fn second_rank_reader_is_not_tops_only() {
        let d = gen_single_peaked(4).unwrap();
        let reader = ProfileFn { m: 4, f: |p: &[&Preference]| Lottery::point(4, p[0].at(2)) };
        let report = check_tops_only(&reader, &d, 2, DEFAULT_BUDGET).unwrap();
        assert!(!report.passed());
        assert!(report.counterexample.unwrap().replays(&reader));
    }

    #[test]
    fn table_one_sp_depends_on_domain() {
        let rule = two_voter();
        assert!(check_strategy_proofness(&rule, &gen_single_peaked(4).unwrap(), 2).unwrap().passed());
        let hybrid = gen_hybrid(4, 2, 4).unwrap();
        let report = check_strategy_proofness(&rule, &hybrid, 2).unwrap();
        assert!(!report.passed());
        assert!(report.counterexample.unwrap().replays(&FromTops(&rule)));
        assert!(!check_local_strategy_proofness(&rule, &hybrid, 2).unwrap().passed());
        assert!(!check_anonymity(&rule, &hybrid, 2).unwrap().passed());
    }

    #[test]
    fn full_scan_agrees_with_reduction() {
        let rule = two_voter();
        let hybrid = gen_hybrid(4, 2, 4).unwrap();
        let full = check_strategy_proofness_full(&FromTops(&rule), &hybrid, 2, DEFAULT_BUDGET).unwrap();
        let auto = check_strategy_proofness_auto(&FromTops(&rule), &hybrid, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(full.verdict, Verdict::Fail);
        assert_eq!(auto.verdict, Verdict::Fail);
        assert!(full.counterexample.unwrap().replays(&FromTops(&rule)));
        assert!(matches!(
            check_strategy_proofness_full(&FromTops(&rule), &hybrid, 2, 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn uncompromising_needs_sp() {
        let hybrid = gen_hybrid(4, 2, 4).unwrap();
        assert!(matches!(check_uncompromising(&two_voter(), &hybrid, 2), Err(Error::PreconditionFailed(_))));
        let rd = RandomDictatorship::uniform(2, 4).unwrap();
        assert!(check_uncompromising(&rd, &hybrid, 2).unwrap().passed());
    }

    #[test]
    fn rd_on_middle_fit() {
        let hybrid = gen_hybrid(5, 2, 4).unwrap();
        let rd = RandomDictatorship::new(vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)], 5).unwrap();
        assert_eq!(check_rd_on_middle(&rd, &hybrid, 3, 2, 4).unwrap(), Some(rd.coefficients().to_vec()));
        let rule = two_voter();
        assert_eq!(check_rd_on_middle(&rule, &gen_hybrid(4, 2, 4).unwrap(), 2, 2, 4).unwrap(), None);
    }

    #[test]
    fn compromise_against_itself() {
        let d = gen_hybrid(4, 2, 4).unwrap();
        let rd = RandomDictatorship::uniform(2, 4).unwrap();
        let report = compare_compromise(&FromTops(&rd), &FromTops(&rd), &d, 2, DEFAULT_BUDGET).unwrap();
        assert!(report.weakly_dominates);
        assert!(report.strict_witness.is_none());
        assert_eq!(report.tie_count, report.compromise_profiles);
    }
}
