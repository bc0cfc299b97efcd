//! Finite preference domains, the domain families used throughout the crate,
//! and the three regularity checks (minimal richness, diversity, no-restoration).

use std::sync::OnceLock;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefcore::{adjacent, Alternative, Preference, MIN_ALTERNATIVES, MIN_VOTERS};

/// Generators enumerate all `m!` orders, so `m` is capped.
pub const MAX_GENERATOR_M: usize = 8;

/// A sorted, deduplicated set of preferences over a common `m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DomainFile", into = "DomainFile")]
pub struct Domain {
    m: usize,
    prefs: Vec<Preference>,
    #[serde(skip)]
    adjacency: OnceLock<Vec<Vec<usize>>>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.prefs == other.prefs
    }
}

impl Eq for Domain {}

/// On-disk form: `{ "m": 4, "prefs": [[1,2,3,4], ...] }`.
#[derive(Serialize, Deserialize)]
struct DomainFile {
    m: usize,
    prefs: Vec<Preference>,
}

impl TryFrom<DomainFile> for Domain {
    type Error = Error;
    fn try_from(file: DomainFile) -> Result<Self> {
        if file.prefs.iter().any(|p| p.m() != file.m) {
            return Err(Error::Malformed(format!("preference length differs from m = {}", file.m)));
        }
        Domain::new(file.m, file.prefs)
    }
}

impl From<Domain> for DomainFile {
    fn from(d: Domain) -> Self {
        DomainFile { m: d.m, prefs: d.prefs }
    }
}

impl Domain {
    pub fn new(m: usize, mut prefs: Vec<Preference>) -> Result<Self> {
        if m < MIN_ALTERNATIVES {
            return Err(Error::DegenerateSize { m, n: MIN_VOTERS });
        }
        if prefs.is_empty() {
            return Err(Error::EmptyCollection("domain"));
        }
        if let Some(p) = prefs.iter().find(|p| p.m() != m) {
            return Err(Error::InvalidPreference(format!("{p} is not over {m} alternatives")));
        }
        prefs.sort();
        prefs.dedup();
        Ok(Domain { m, prefs, adjacency: OnceLock::new() })
    }

    pub fn from_orders(orders: &[Vec<usize>]) -> Result<Self> {
        let prefs = orders.iter().map(|o| Preference::new(o.clone())).collect::<Result<Vec<_>>>()?;
        let m = prefs.first().ok_or(Error::EmptyCollection("domain"))?.m();
        Domain::new(m, prefs)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn contains(&self, p: &Preference) -> bool {
        self.index_of(p).is_some()
    }

    pub fn index_of(&self, p: &Preference) -> Option<usize> {
        self.prefs.binary_search(p).ok()
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        self.prefs.iter().all(|p| other.contains(p))
    }

    /// Distinct peaks, in natural order.
    pub fn peaks(&self) -> Vec<Alternative> {
        self.prefs.iter().map(Preference::top).sorted().dedup().collect()
    }

    /// Members whose peak is `a`, in domain order.
    pub fn with_top(&self, a: Alternative) -> impl Iterator<Item = &Preference> + '_ {
        self.prefs.iter().filter(move |p| p.top() == a)
    }

    /// Neighbour lists of the adjacency graph (indices into [`Domain::prefs`]).
    pub fn adjacency(&self) -> &[Vec<usize>] {
        self.adjacency.get_or_init(|| {
            self.prefs
                .iter()
                .map(|p| {
                    (1..self.m)
                        .filter_map(|k| self.index_of(&p.swap_ranks(k)))
                        .sorted()
                        .collect()
                })
                .collect()
        })
    }
}

fn all_orders(m: usize) -> Result<impl Iterator<Item = Preference>> {
    if m < MIN_ALTERNATIVES {
        return Err(Error::DegenerateSize { m, n: MIN_VOTERS });
    }
    if m > MAX_GENERATOR_M {
        return Err(Error::SizeCap(format!("generators enumerate m! orders; m = {m} exceeds {MAX_GENERATOR_M}")));
    }
    Ok((1..=m).permutations(m).map(|o| Preference::new(o).expect("permutation")))
}

fn filtered(m: usize, keep: impl Fn(&Preference) -> bool) -> Result<Domain> {
    Domain::new(m, all_orders(m)?.filter(|p| keep(p)).collect())
}

/// Single-peakedness w.r.t. the axis `position` (`position[slot]` = place of
/// the alternative on the axis).
fn single_peaked_on_axis(p: &Preference, position: &[usize]) -> bool {
    let peak = position[p.top().index() - 1];
    // along each side of the peak, preference must fall as distance grows
    let mut by_pos: Vec<Alternative> = vec![p.top(); position.len()];
    for a in Alternative::all(p.m()) {
        by_pos[position[a.index() - 1]] = a;
    }
    let left_ok = by_pos[..=peak].windows(2).all(|w| p.prefers(w[1], w[0]));
    let right_ok = by_pos[peak..].windows(2).all(|w| p.prefers(w[0], w[1]));
    left_ok && right_ok
}

pub fn is_single_peaked(p: &Preference) -> bool {
    let identity: Vec<usize> = (0..p.m()).collect();
    single_peaked_on_axis(p, &identity)
}

/// Hybridness for thresholds `a_klo`, `a_khi`.
pub fn is_hybrid(p: &Preference, klo: usize, khi: usize) -> bool {
    let m = p.m();
    let top = p.top().index();
    let a = Alternative::new;
    // single-peaked within L = [1, klo] and within R = [khi, m], relative to the peak
    let falls = |lo: usize, hi: usize| {
        (lo..hi).all(|s| {
            let (x, y) = (a(s), a(s + 1));
            if y.index() <= top {
                p.prefers(y, x)
            } else if x.index() >= top {
                p.prefers(x, y)
            } else {
                true
            }
        })
    };
    if !falls(1, klo) || !falls(khi, m) {
        return false;
    }
    if top <= klo {
        return (klo + 1..=khi).all(|l| p.prefers(a(klo), a(l)));
    }
    if top >= khi {
        return (klo..khi).all(|l| p.prefers(a(khi), a(l)));
    }
    true
}

/// Semi-single-peakedness for a single threshold.
///
/// The ranking falls from the peak towards the threshold, and every
/// alternative lying beyond the threshold (on the side away from the peak) is
/// ranked below it.
pub fn is_semi_single_peaked(p: &Preference, threshold: Alternative) -> bool {
    let top = p.top().index();
    let t = threshold.index();
    let a = Alternative::new;
    let (lo, hi) = (top.min(t), top.max(t));
    let falls = (lo..hi).all(|s| {
        if top <= s {
            p.prefers(a(s), a(s + 1))
        } else {
            p.prefers(a(s + 1), a(s))
        }
    });
    let beyond: Vec<usize> = if top < t {
        (t + 1..=p.m()).collect()
    } else if top > t {
        (1..t).collect()
    } else {
        Vec::new()
    };
    falls && beyond.into_iter().all(|x| p.prefers(threshold, a(x)))
}

fn check_thresholds(m: usize, klo: usize, khi: usize) -> Result<()> {
    if klo < 1 || klo >= khi || khi > m {
        return Err(Error::InvalidThresholds { klo, khi, m });
    }
    Ok(())
}

pub fn gen_complete(m: usize) -> Result<Domain> {
    filtered(m, |_| true)
}

pub fn gen_single_peaked(m: usize) -> Result<Domain> {
    filtered(m, is_single_peaked)
}

pub fn gen_hybrid(m: usize, klo: usize, khi: usize) -> Result<Domain> {
    check_thresholds(m, klo, khi)?;
    filtered(m, |p| is_hybrid(p, klo, khi))
}

/// Union of the single-peaked domains w.r.t. each axis in `orders`.
///
/// Each axis is a permutation of `1..=m`, listed left to right.
pub fn gen_multiple_single_peaked(orders: &[Vec<usize>]) -> Result<Domain> {
    let first = orders.first().ok_or(Error::EmptyCollection("axis orders"))?;
    let m = first.len();
    let mut axes = Vec::with_capacity(orders.len());
    for order in orders {
        let axis = Preference::new(order.clone())?;
        if axis.m() != m {
            return Err(Error::InvalidPreference("axis orders over different alternative counts".into()));
        }
        axes.push((0..m).map(|s| axis.rank(Alternative::new(s + 1)) - 1).collect::<Vec<_>>());
    }
    filtered(m, |p| axes.iter().any(|pos| single_peaked_on_axis(p, pos)))
}

pub fn gen_semi_single_peaked(m: usize, threshold: Alternative) -> Result<Domain> {
    if threshold.index() > m {
        return Err(Error::InvalidThresholds { klo: threshold.index(), khi: threshold.index(), m });
    }
    filtered(m, |p| is_semi_single_peaked(p, threshold))
}

/// A pair of preferences joined by no restoration-free path for the pair `{s, t}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RestorationWitness {
    pub first: Preference,
    pub second: Preference,
    pub pair: (Alternative, Alternative),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub minimally_rich: bool,
    pub missing_peaks: Vec<Alternative>,
    pub diverse: bool,
    pub diversity_witness: Option<(Preference, Preference)>,
    pub no_restoration: bool,
    pub restoration_counterexample: Option<RestorationWitness>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.minimally_rich && self.diverse && self.no_restoration
    }

    /// Human-readable list of failed conditions.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.minimally_rich {
            let missing = self.missing_peaks.iter().map(|a| a.to_string()).join(", ");
            out.push(format!("not minimally rich: no preference peaks at {missing}"));
        }
        if !self.diverse {
            out.push("no completely reversed pair".to_string());
        }
        if let Some(w) = &self.restoration_counterexample {
            out.push(format!(
                "{{{}, {}}}-restoration between {} and {}",
                w.pair.0, w.pair.1, w.first, w.second
            ));
        }
        out
    }
}

/// Returns the alternatives that are nobody's peak (empty iff minimally rich).
pub fn is_minimally_rich(d: &Domain) -> (bool, Vec<Alternative>) {
    let peaks = d.peaks();
    let missing: Vec<Alternative> = Alternative::all(d.m()).filter(|a| !peaks.contains(a)).collect();
    (missing.is_empty(), missing)
}

/// The smallest `P` whose reversal is also in `D`, paired with that reversal.
pub fn has_diversity(d: &Domain) -> (bool, Option<(Preference, Preference)>) {
    let witness = d.prefs().iter().find_map(|p| {
        let r = p.reversed();
        (p < &r && d.contains(&r)).then(|| (p.clone(), r))
    });
    (witness.is_some(), witness)
}

/// Union-find free component labelling of the subgraph induced by `members`.
fn components(adj: &[Vec<usize>], members: &[bool]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut next = 0;
    for start in 0..adj.len() {
        if !members[start] || comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = next;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if members[w] && comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Smallest failing `(P, P')` with `P < P'` for one pair, if any.
fn restoration_for_pair(d: &Domain, s: Alternative, t: Alternative) -> Option<RestorationWitness> {
    let adj = d.adjacency();
    let upper: Vec<bool> = d.prefs().iter().map(|p| p.prefers(s, t)).collect();
    let lower: Vec<bool> = upper.iter().map(|u| !u).collect();
    let cu = components(adj, &upper);
    let cl = components(adj, &lower);
    let comp = |i: usize| if upper[i] { cu[i] } else { cl[i] };
    let count = |c: &[usize], mask: &[bool]| {
        c.iter().zip(mask).filter(|(_, &m)| m).map(|(c, _)| *c).max().map_or(0, |x| x + 1)
    };
    let (nu, nl) = (count(&cu, &upper), count(&cl, &lower));

    // cross[(cu, cl)] is set when some adjacency swaps s and t between those components
    let mut cross = vec![vec![false; nl.max(1)]; nu.max(1)];
    let mut any_cross = false;
    for (i, ns) in adj.iter().enumerate() {
        if !upper[i] {
            continue;
        }
        for &j in ns {
            if lower[j] {
                cross[cu[i]][cl[j]] = true;
                any_cross = true;
            }
        }
    }
    let layers_connected = nu <= 1 && nl <= 1;
    if layers_connected && (any_cross || nu == 0 || nl == 0) {
        return None;
    }

    let ok = |i: usize, j: usize| -> bool {
        match (upper[i], upper[j]) {
            (true, true) | (false, false) => comp(i) == comp(j),
            (true, false) => cross[cu[i]][cl[j]],
            (false, true) => cross[cu[j]][cl[i]],
        }
    };
    let len = d.len();
    (0..len).find_map(|i| {
        (i + 1..len).find(|&j| !ok(i, j)).map(|j| RestorationWitness {
            first: d.prefs()[i].clone(),
            second: d.prefs()[j].clone(),
            pair: (s, t),
        })
    })
}

/// No-restoration via the layered formulation: for every pair `{s, t}`, both
/// layers (`s` above `t`, `t` above `s`) must be internally connected and,
/// when both are non-empty, joined by at least one adjacency.
pub fn is_no_restoration(d: &Domain) -> (bool, Option<RestorationWitness>) {
    let pairs: Vec<(Alternative, Alternative)> = Alternative::all(d.m()).tuple_combinations().collect();
    d.adjacency();
    let witness = pairs
        .par_iter()
        .filter_map(|&(s, t)| restoration_for_pair(d, s, t))
        .min_by(|x, y| (&x.first, &x.second, x.pair).cmp(&(&y.first, &y.second, y.pair)));
    (witness.is_none(), witness)
}

pub fn is_regular(d: &Domain) -> RegularityReport {
    let (minimally_rich, missing_peaks) = is_minimally_rich(d);
    let (diverse, diversity_witness) = has_diversity(d);
    let (no_restoration, restoration_counterexample) = is_no_restoration(d);
    RegularityReport {
        minimally_rich,
        missing_peaks,
        diverse,
        diversity_witness,
        no_restoration,
        restoration_counterexample,
    }
}

/// Confirms a witness by exhaustive path search: true iff no path from
/// `first` to `second` switches the pair at most once.
pub fn confirm_restoration(d: &Domain, w: &RestorationWitness) -> bool {
    let adj = d.adjacency();
    let (Some(from), Some(to)) = (d.index_of(&w.first), d.index_of(&w.second)) else {
        return false;
    };
    let (s, t) = w.pair;
    // state: (node, switches used so far); BFS on at most 2 * |D| states
    let mut seen = vec![[false; 2]; d.len()];
    let mut queue = std::collections::VecDeque::from([(from, 0usize)]);
    seen[from][0] = true;
    while let Some((v, used)) = queue.pop_front() {
        if v == to {
            return false;
        }
        for &u in &adj[v] {
            let flips = adjacent(&d.prefs()[v], &d.prefs()[u]) == Some((s.min(t), s.max(t)));
            let next = used + flips as usize;
            if next <= 1 && !seen[u][next] {
                seen[u][next] = true;
                queue.push_back((u, next));
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(k: usize) -> Alternative {
        Alternative::new(k)
    }

    fn pref(order: &[usize]) -> Preference {
        Preference::new(order.to_vec()).unwrap()
    }

    #[test]
    fn sizes() {
        assert_eq!(gen_complete(3).unwrap().len(), 6);
        assert_eq!(gen_complete(4).unwrap().len(), 24);
        assert_eq!(gen_complete(5).unwrap().len(), 120);
        assert_eq!(gen_single_peaked(3).unwrap().len(), 4);
        assert_eq!(gen_single_peaked(4).unwrap().len(), 8);
        assert!(matches!(gen_complete(2), Err(Error::DegenerateSize { .. })));
        assert!(matches!(gen_complete(9), Err(Error::SizeCap(_))));
        assert!(matches!(gen_hybrid(5, 3, 3), Err(Error::InvalidThresholds { .. })));
    }

    #[test]
    fn hybrid_membership() {
        let d = gen_hybrid(4, 2, 4).unwrap();
        assert!(d.contains(&pref(&[2, 4, 3, 1])));
        assert!(d.contains(&pref(&[4, 2, 3, 1])));
        assert!(!d.contains(&pref(&[4, 1, 2, 3])));
    }

    #[test]
    fn hybrid_extremes() {
        for m in 3..=5 {
            assert_eq!(gen_hybrid(m, 1, m).unwrap(), gen_complete(m).unwrap());
            for k in 1..m {
                assert_eq!(gen_hybrid(m, k, k + 1).unwrap(), gen_single_peaked(m).unwrap());
            }
        }
    }

    #[test]
    fn multiple_single_peaked_figure_domain() {
        let omega = vec![vec![1, 2, 3, 4, 5, 6], vec![1, 2, 4, 3, 5, 6]];
        let d = gen_multiple_single_peaked(&omega).unwrap();
        assert!(d.is_subset_of(&gen_hybrid(6, 2, 5).unwrap()));
        assert!(!d.contains(&pref(&[1, 2, 3, 5, 4, 6])));
        assert_eq!(gen_multiple_single_peaked(&omega[..1]).unwrap(), gen_single_peaked(6).unwrap());
        assert!(matches!(gen_multiple_single_peaked(&[]), Err(Error::EmptyCollection(_))));
    }

    #[test]
    fn semi_single_peaked_counts() {
        // peak a1: 2, peak a2: 6, peak a3: 3, peak a4: 1
        assert_eq!(gen_semi_single_peaked(4, a(2)).unwrap().len(), 12);
        let sp = gen_single_peaked(4).unwrap();
        for t in 1..=4 {
            assert!(sp.is_subset_of(&gen_semi_single_peaked(4, a(t)).unwrap()));
        }
    }

    #[test]
    fn richness_and_diversity() {
        let single = Domain::from_orders(&[vec![1, 2, 3]]).unwrap();
        assert_eq!(is_minimally_rich(&single), (false, vec![a(2), a(3)]));
        assert_eq!(has_diversity(&single), (false, None));
        let (diverse, witness) = has_diversity(&gen_single_peaked(5).unwrap());
        assert!(diverse);
        assert_eq!(witness, Some((Preference::identity(5).unwrap(), Preference::reverse_identity(5).unwrap())));
        assert!(is_minimally_rich(&gen_hybrid(5, 2, 4).unwrap()).0);
    }

    #[test]
    fn no_restoration_examples() {
        assert!(is_no_restoration(&gen_single_peaked(4).unwrap()).0);
        assert!(is_no_restoration(&gen_complete(4).unwrap()).0);
        let semi = gen_semi_single_peaked(4, a(2)).unwrap();
        let (ok, witness) = is_no_restoration(&semi);
        assert!(!ok);
        assert!(confirm_restoration(&semi, &witness.unwrap()));
    }

    #[test]
    fn regular_examples() {
        assert!(is_regular(&gen_hybrid(5, 2, 4).unwrap()).is_regular());
        let omega = vec![vec![1, 2, 3, 4, 5, 6], vec![1, 2, 4, 3, 5, 6]];
        assert!(is_regular(&gen_multiple_single_peaked(&omega).unwrap()).is_regular());
        let single = Domain::from_orders(&[vec![1, 2, 3]]).unwrap();
        let report = is_regular(&single);
        assert!(!report.minimally_rich && !report.diverse);
    }

    #[test]
    fn domain_json() {
        let d = gen_single_peaked(3).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"m":3,"prefs":[[1,2,3],[2,1,3],[2,3,1],[3,2,1]]}"#);
        let back: Domain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<Domain>(r#"{"m":4,"prefs":[[1,2,3]]}"#).is_err());
    }
}
