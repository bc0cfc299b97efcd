//! Strong-connectedness graph, vertex paths, hybrid* verification and
//! endogenous threshold recovery for regular domains.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domains::{is_hybrid, is_regular, is_single_peaked, Domain};
use crate::error::{Error, Result};
use crate::prefcore::{Alternative, Preference};

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Graph on a vertex set `B` with an edge `{a, b}` whenever the domain holds two
/// preferences that rank `a, b` first and second in opposite orders and agree
/// everywhere below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrongConnGraph {
    m: usize,
    vertices: Vec<Alternative>,
    edges: Vec<(Alternative, Alternative)>,
    #[serde(skip)]
    neighbors: Vec<Vec<Alternative>>,
}

impl StrongConnGraph {
    pub fn vertices(&self) -> &[Alternative] {
        &self.vertices
    }

    /// Edges with the smaller endpoint first, sorted.
    pub fn edges(&self) -> &[(Alternative, Alternative)] {
        &self.edges
    }

    pub fn contains(&self, a: Alternative) -> bool {
        self.vertices.binary_search(&a).is_ok()
    }

    pub fn has_edge(&self, a: Alternative, b: Alternative) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Neighbours of `a`, ascending.
    pub fn neighbors(&self, a: Alternative) -> &[Alternative] {
        &self.neighbors[a.index() - 1]
    }

    pub fn degree(&self, a: Alternative) -> usize {
        self.neighbors(a).len()
    }

    /// Restriction to a subset of the current vertices.
    pub fn induced(&self, vertices: &[Alternative]) -> Result<StrongConnGraph> {
        let keep: BTreeSet<Alternative> = vertices.iter().copied().filter(|a| self.contains(*a)).collect();
        if keep.is_empty() {
            return Err(Error::EmptyVertexSet);
        }
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(x, y)| keep.contains(x) && keep.contains(y))
            .collect();
        Ok(StrongConnGraph::build(self.m, keep.into_iter().collect(), edges))
    }

    fn build(m: usize, vertices: Vec<Alternative>, edges: Vec<(Alternative, Alternative)>) -> Self {
        let mut neighbors = vec![Vec::new(); m];
        for &(x, y) in &edges {
            neighbors[x.index() - 1].push(y);
            neighbors[y.index() - 1].push(x);
        }
        for ns in &mut neighbors {
            ns.sort();
        }
        StrongConnGraph { m, vertices, edges, neighbors }
    }

    /// True iff every vertex is reachable from the smallest one.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.first() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph strong_connectedness {\n");
        for v in &self.vertices {
            let _ = writeln!(out, "  {v};");
        }
        for (x, y) in &self.edges {
            let _ = writeln!(out, "  {x} -- {y};");
        }
        out.push_str("}\n");
        out
    }
}

pub fn strong_conn_graph(d: &Domain, vertices: &[Alternative]) -> Result<StrongConnGraph> {
    let m = d.m();
    let keep: BTreeSet<Alternative> = vertices.iter().copied().collect();
    if keep.is_empty() {
        return Err(Error::EmptyVertexSet);
    }
    if let Some(a) = keep.iter().find(|a| a.index() > m) {
        return Err(Error::InvalidPreference(format!("{a} outside 1..={m}")));
    }
    let edges: BTreeSet<(Alternative, Alternative)> = d
        .prefs()
        .iter()
        .filter(|p| keep.contains(&p.at(1)) && keep.contains(&p.at(2)))
        .filter(|p| d.contains(&p.swap_ranks(1)))
        .map(|p| (p.at(1).min(p.at(2)), p.at(1).max(p.at(2))))
        .collect();
    Ok(StrongConnGraph::build(m, keep.into_iter().collect(), edges.into_iter().collect()))
}

/// The graph over all alternatives.
pub fn full_graph(d: &Domain) -> StrongConnGraph {
    let all: Vec<Alternative> = Alternative::all(d.m()).collect();
    strong_conn_graph(d, &all).expect("non-empty vertex set")
}

/// A simple path in a strong-connectedness graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexPath(pub Vec<Alternative>);

impl VertexPath {
    pub fn vertices(&self) -> &[Alternative] {
        &self.0
    }

    pub fn contains(&self, a: Alternative) -> bool {
        self.0.contains(&a)
    }
}

impl std::fmt::Display for VertexPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// All simple paths from `a` to `b`, found depth-first with ascending neighbours.
pub fn all_vertex_paths(g: &StrongConnGraph, a: Alternative, b: Alternative, cap: usize) -> Result<Vec<VertexPath>> {
    if !g.contains(a) || !g.contains(b) {
        return Err(Error::InvalidPreference(format!("{a} or {b} not in graph")));
    }
    if a == b {
        return Ok(vec![VertexPath(vec![a])]);
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; g.m + 1];
    let mut path = vec![a];
    on_path[a.index()] = true;
    // explicit stack of neighbour cursors keeps deep graphs off the call stack
    let mut cursors = vec![0usize];
    while let Some(cursor) = cursors.last_mut() {
        let v = *path.last().expect("path tracks cursors");
        let ns = g.neighbors(v);
        if *cursor >= ns.len() {
            cursors.pop();
            on_path[v.index()] = false;
            path.pop();
            continue;
        }
        let w = ns[*cursor];
        *cursor += 1;
        if on_path[w.index()] {
            continue;
        }
        if w == b {
            if out.len() == cap {
                return Err(Error::EnumerationOverflow { cap });
            }
            let mut found = path.clone();
            found.push(b);
            out.push(VertexPath(found));
            continue;
        }
        on_path[w.index()] = true;
        path.push(w);
        cursors.push(0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridStarReport {
    pub holds: bool,
    /// First member outside the full hybrid domain, if any.
    pub outside_hybrid: Option<Preference>,
    /// Interior alternatives on no `a1`-`am` vertex path.
    pub uncovered: Vec<Alternative>,
    /// Vertices of the middle subgraph with exactly one neighbour there.
    pub leaves: Vec<Alternative>,
}

/// Checks membership in the hybrid domain, path coverage of interior
/// alternatives, and absence of leaves in the middle subgraph.
pub fn is_hybrid_star(d: &Domain, klo: usize, khi: usize) -> Result<HybridStarReport> {
    let m = d.m();
    if klo < 1 || klo >= khi || khi > m {
        return Err(Error::InvalidThresholds { klo, khi, m });
    }
    let outside_hybrid = d.prefs().iter().find(|p| !is_hybrid(p, klo, khi)).cloned();

    let g = full_graph(d);
    let paths = all_vertex_paths(&g, Alternative::new(1), Alternative::new(m), DEFAULT_PATH_CAP)?;
    let covered: BTreeSet<Alternative> = paths.iter().flat_map(|p| p.0.iter().copied()).collect();
    let uncovered: Vec<Alternative> = (2..m).map(Alternative::new).filter(|a| !covered.contains(a)).collect();

    let leaves = if khi - klo > 1 {
        let middle: Vec<Alternative> = (klo..=khi).map(Alternative::new).collect();
        let sub = g.induced(&middle)?;
        middle.into_iter().filter(|&a| sub.degree(a) == 1).collect()
    } else {
        Vec::new()
    };
    Ok(HybridStarReport {
        holds: outside_hybrid.is_none() && uncovered.is_empty() && leaves.is_empty(),
        outside_hybrid,
        uncovered,
        leaves,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "classification")]
pub enum Classification {
    SinglePeaked,
    Hybrid { klo: usize, khi: usize },
    NotHybridStar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Alternative,
    pub hi: Alternative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdReport {
    #[serde(flatten)]
    pub classification: Classification,
    pub left: Option<Interval>,
    pub middle: Option<Interval>,
    pub right: Option<Interval>,
    /// `relabeling[k-1]` is the new name of `a_k`, present when the domain's
    /// reversed pair was not the natural one and alternatives were renamed.
    pub relabeling: Option<Vec<Alternative>>,
    pub path_count: usize,
    pub paths: Vec<VertexPath>,
    /// Distinct successors of the left threshold and predecessors of the right
    /// threshold across all paths; both must be at least two.
    pub left_branching: usize,
    pub right_branching: usize,
    pub hybrid_star: Option<HybridStarReport>,
    pub notes: Vec<String>,
}

fn common_prefix_len(paths: &[VertexPath]) -> usize {
    let first = &paths[0].0;
    paths[1..].iter().fold(first.len(), |len, p| {
        first.iter().zip(&p.0).take(len).take_while(|(x, y)| x == y).count()
    })
}

fn common_suffix_len(paths: &[VertexPath]) -> usize {
    let first = &paths[0].0;
    paths[1..].iter().fold(first.len(), |len, p| {
        first.iter().rev().zip(p.0.iter().rev()).take(len).take_while(|(x, y)| x == y).count()
    })
}

/// Recovers the hybrid thresholds of a regular domain from the vertex paths
/// between the two extreme alternatives.
pub fn recover_thresholds(d: &Domain) -> Result<ThresholdReport> {
    recover_thresholds_with_cap(d, DEFAULT_PATH_CAP)
}

pub fn recover_thresholds_with_cap(d: &Domain, cap: usize) -> Result<ThresholdReport> {
    let regularity = is_regular(d);
    if !regularity.is_regular() {
        return Err(Error::NotRegular(regularity.failures().join("; ")));
    }
    let (witness, _) = regularity.diversity_witness.expect("regular domains are diverse");
    let m = d.m();
    let mut notes = Vec::new();
    let (relabeling, domain) = if witness == Preference::identity(m)? {
        (None, d.clone())
    } else {
        // rename so the witness becomes a1 a2 ... am
        let mut map = vec![Alternative::new(1); m];
        for k in 1..=m {
            map[witness.at(k).index() - 1] = Alternative::new(k);
        }
        let prefs = d.prefs().iter().map(|p| p.relabel(&map)).collect();
        notes.push(format!("alternatives relabeled so that {witness} becomes the natural order"));
        (Some(map), Domain::new(m, prefs)?)
    };

    let g = full_graph(&domain);
    let (a1, am) = (Alternative::new(1), Alternative::new(m));
    let paths = all_vertex_paths(&g, a1, am, cap)?;
    if paths.is_empty() {
        return Err(Error::InternalInconsistency("regular domain with disconnected extremes".into()));
    }
    let mut report = ThresholdReport {
        classification: Classification::NotHybridStar,
        left: None,
        middle: None,
        right: None,
        relabeling,
        path_count: paths.len(),
        paths: paths.clone(),
        left_branching: 0,
        right_branching: 0,
        hybrid_star: None,
        notes,
    };

    if paths.len() == 1 {
        report.classification = single_peaked_or_not(&domain, &mut report.notes);
        return Ok(report);
    }

    let prefix = common_prefix_len(&paths);
    let suffix = common_suffix_len(&paths);
    let first = &paths[0].0;
    let klo = first[prefix - 1].index();
    let khi = first[first.len() - suffix].index();
    report.left_branching = paths.iter().map(|p| p.0[prefix]).collect::<BTreeSet<_>>().len();
    report.right_branching = paths.iter().map(|p| p.0[p.0.len() - suffix - 1]).collect::<BTreeSet<_>>().len();
    if report.left_branching < 2 || report.right_branching < 2 {
        report.notes.push("fewer than two continuations past a threshold".into());
        report.classification = single_peaked_or_not(&domain, &mut report.notes);
        return Ok(report);
    }
    let left_in_order = first[..prefix].iter().map(|a| a.index()).eq(1..=klo);
    let right_in_order = first[first.len() - suffix..].iter().map(|a| a.index()).eq(khi..=m);
    if !left_in_order || !right_in_order || klo >= khi {
        report.notes.push("common parts of the paths are not intervals of the natural order".into());
        return Ok(report);
    }

    let star = is_hybrid_star(&domain, klo, khi)?;
    let holds = star.holds;
    report.hybrid_star = Some(star);
    if holds {
        report.classification = Classification::Hybrid { klo, khi };
        report.left = Some(Interval { lo: a1, hi: Alternative::new(klo) });
        report.middle = Some(Interval { lo: Alternative::new(klo), hi: Alternative::new(khi) });
        report.right = Some(Interval { lo: Alternative::new(khi), hi: am });
    } else {
        report.notes.push(format!("domain fails the hybrid* conditions for ({klo}, {khi})"));
    }
    Ok(report)
}

fn single_peaked_or_not(d: &Domain, notes: &mut Vec<String>) -> Classification {
    if d.prefs().iter().all(is_single_peaked) {
        Classification::SinglePeaked
    } else {
        notes.push("unique extreme-to-extreme path but some preference is not single-peaked".into());
        Classification::NotHybridStar
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{gen_complete, gen_hybrid, gen_multiple_single_peaked, gen_semi_single_peaked, gen_single_peaked};

    fn a(k: usize) -> Alternative {
        Alternative::new(k)
    }

    fn figure_domain() -> Domain {
        gen_multiple_single_peaked(&[vec![1, 2, 3, 4, 5, 6], vec![1, 2, 4, 3, 5, 6]]).unwrap()
    }

    fn edge_list(g: &StrongConnGraph) -> Vec<(usize, usize)> {
        g.edges().iter().map(|(x, y)| (x.index(), y.index())).collect()
    }

    #[test]
    fn figure_graph_and_paths() {
        let g = full_graph(&figure_domain());
        assert_eq!(edge_list(&g), vec![(1, 2), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5), (5, 6)]);
        let paths = all_vertex_paths(&g, a(1), a(6), DEFAULT_PATH_CAP).unwrap();
        let as_idx: Vec<Vec<usize>> = paths.iter().map(|p| p.0.iter().map(|x| x.index()).collect()).collect();
        assert_eq!(
            as_idx,
            vec![vec![1, 2, 3, 4, 5, 6], vec![1, 2, 3, 5, 6], vec![1, 2, 4, 3, 5, 6], vec![1, 2, 4, 5, 6]]
        );
        assert_eq!(all_vertex_paths(&g, a(3), a(3), 10).unwrap(), vec![VertexPath(vec![a(3)])]);
        assert_eq!(all_vertex_paths(&g, a(1), a(6), 1), Err(Error::EnumerationOverflow { cap: 1 }));
    }

    #[test]
    fn single_peaked_graph_is_a_line() {
        let g = full_graph(&gen_single_peaked(6).unwrap());
        assert_eq!(edge_list(&g), (1..6).map(|k| (k, k + 1)).collect::<Vec<_>>());
        assert_eq!(all_vertex_paths(&g, a(1), a(6), 10).unwrap().len(), 1);
    }

    #[test]
    fn hybrid_middle_is_complete() {
        let d = gen_hybrid(6, 2, 5).unwrap();
        let middle: Vec<Alternative> = (2..=5).map(a).collect();
        let g = strong_conn_graph(&d, &middle).unwrap();
        assert_eq!(g.edges().len(), 6);
        assert_eq!(strong_conn_graph(&d, &[]), Err(Error::EmptyVertexSet));
    }

    #[test]
    fn hybrid_star_examples() {
        assert!(is_hybrid_star(&figure_domain(), 2, 5).unwrap().holds);
        assert!(is_hybrid_star(&gen_hybrid(5, 2, 4).unwrap(), 2, 4).unwrap().holds);
        let semi = gen_semi_single_peaked(5, a(3)).unwrap();
        let report = is_hybrid_star(&semi, 2, 4).unwrap();
        assert!(!report.holds);
        assert_eq!(report.leaves, vec![a(2), a(4)]);
    }

    #[test]
    fn recovery_examples() {
        let r = recover_thresholds(&figure_domain()).unwrap();
        assert_eq!(r.classification, Classification::Hybrid { klo: 2, khi: 5 });
        assert_eq!(recover_thresholds(&gen_single_peaked(5).unwrap()).unwrap().classification, Classification::SinglePeaked);
        assert_eq!(
            recover_thresholds(&gen_hybrid(5, 2, 4).unwrap()).unwrap().classification,
            Classification::Hybrid { klo: 2, khi: 4 }
        );
        assert_eq!(
            recover_thresholds(&gen_complete(4).unwrap()).unwrap().classification,
            Classification::Hybrid { klo: 1, khi: 4 }
        );
        assert!(matches!(recover_thresholds(&gen_semi_single_peaked(4, a(2)).unwrap()), Err(Error::NotRegular(_))));
    }

    #[test]
    fn relabeled_domain_is_flagged() {
        // single-peaked on the axis a2 a1 a3 a4
        let d = gen_multiple_single_peaked(&[vec![2, 1, 3, 4]]).unwrap();
        let r = recover_thresholds(&d).unwrap();
        assert_eq!(r.classification, Classification::SinglePeaked);
        assert!(r.relabeling.is_some());
    }

    #[test]
    fn report_json_shape() {
        let r = recover_thresholds(&figure_domain()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["classification"], "Hybrid");
        assert_eq!(v["klo"], 2);
        assert_eq!(v["khi"], 5);
    }
}
