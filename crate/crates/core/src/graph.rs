//! Weighted undirected graphs and the distance primitives every other module
//! builds on: multi-source shortest paths inside induced subgraphs, balls, and
//! weak/strong cluster diameters.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Absolute tolerance used by every invariant check that compares distances.
pub const EPS: f64 = 1e-9;

/// Membership bitmap over the vertex ids `0..universe`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    words: Vec<u64>,
    universe: usize,
}

impl VertexSet {
    pub fn new(universe: usize) -> Self {
        VertexSet {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::new(universe);
        for v in 0..universe {
            s.insert(v);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = Vertex>>(universe: usize, it: I) -> Self {
        let mut s = Self::new(universe);
        for v in it {
            s.insert(v);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        assert!(v < self.universe, "vertex {v} outside universe {}", self.universe);
        let (w, b) = (v / 64, v % 64);
        let was = self.words[w] >> b & 1 == 1;
        self.words[w] |= 1 << b;
        !was
    }

    pub fn remove(&mut self, v: Vertex) -> bool {
        if v >= self.universe {
            return false;
        }
        let (w, b) = (v / 64, v % 64);
        let was = self.words[w] >> b & 1 == 1;
        self.words[w] &= !(1 << b);
        was
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        v < self.universe && self.words[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<Vertex> {
        self.iter().collect()
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn intersects(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn first(&self) -> Option<Vertex> {
        self.iter().next()
    }
}

impl std::fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Immutable connected undirected graph with nonnegative edge weights.
///
/// Vertices are dense ids `0..n`. Parallel edges are collapsed to their minimum
/// weight at construction; self-loops and negative or non-finite weights are
/// rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(Vertex, Vertex, f64)>,
    adj: Vec<Vec<(Vertex, f64)>>,
}

impl WeightedGraph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex, f64)>) -> Result<Self> {
        Self::build(n, edges, true)
    }

    /// Same as [`WeightedGraph::from_edges`] without the connectivity requirement.
    /// Only test fixtures and oracles should need this.
    pub fn from_edges_unchecked_connectivity(
        n: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex, f64)>,
    ) -> Result<Self> {
        Self::build(n, edges, false)
    }

    fn build(
        n: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex, f64)>,
        require_connected: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("graph must have at least one vertex"));
        }
        let mut list: Vec<(Vertex, Vertex, f64)> = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::arg(format!("edge ({u},{v}) references a vertex outside 0..{n}")));
            }
            if u == v {
                return Err(Error::arg(format!("self-loop at vertex {u}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::arg(format!("edge ({u},{v}) has invalid weight {w}")));
            }
            list.push((u.min(v), u.max(v), w));
        }
        list.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        list.dedup_by(|next, kept| next.0 == kept.0 && next.1 == kept.1);

        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in &list {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        let g = WeightedGraph { n, edges: list, adj };
        if require_connected && !g.is_connected() {
            return Err(Error::invalid("graph is disconnected"));
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(Vertex, Vertex, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, f64)] {
        &self.adj[v]
    }

    pub fn weight(&self, u: Vertex, v: Vertex) -> Option<f64> {
        self.adj[u].iter().find(|&&(x, _)| x == v).map(|&(_, w)| w)
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Canonical edge-list text: `p ge <n> <m>` then `e <u> <v> <w>` with
    /// 1-indexed labels and shortest round-trip weight formatting.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p ge {} {}", self.n, self.edges.len()).unwrap();
        for &(u, v, w) in &self.edges {
            writeln!(out, "e {} {} {}", u + 1, v + 1, w).unwrap();
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            match tok[0] {
                "p" => {
                    if header.is_some() {
                        return Err(Error::parse(lineno, "duplicate header"));
                    }
                    if tok.len() != 4 || tok[1] != "ge" {
                        return Err(Error::parse(lineno, "expected `p ge <n> <m>`"));
                    }
                    let n = parse_num::<usize>(tok[2], lineno)?;
                    let m = parse_num::<usize>(tok[3], lineno)?;
                    header = Some((n, m));
                }
                "e" => {
                    let (n, _) = header.ok_or_else(|| Error::parse(lineno, "edge before header"))?;
                    if tok.len() != 4 {
                        return Err(Error::parse(lineno, "expected `e <u> <v> <w>`"));
                    }
                    let u = parse_label(tok[1], n, lineno)?;
                    let v = parse_label(tok[2], n, lineno)?;
                    let w = parse_num::<f64>(tok[3], lineno)?;
                    if u == v {
                        return Err(Error::parse(lineno, "self-loop"));
                    }
                    if !w.is_finite() || w < 0.0 {
                        return Err(Error::parse(lineno, format!("invalid weight {w}")));
                    }
                    edges.push((u, v, w));
                }
                other => return Err(Error::parse(lineno, format!("unknown line type `{other}`"))),
            }
        }
        let (n, m) = header.ok_or_else(|| Error::parse(0, "missing `p ge` header"))?;
        if edges.len() != m {
            return Err(Error::parse(0, format!("header announces {m} edges, found {}", edges.len())));
        }
        Self::from_edges(n, edges)
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| Error::parse(line, format!("cannot parse `{tok}`")))
}

fn parse_label(tok: &str, n: usize, line: usize) -> Result<Vertex> {
    let l = parse_num::<usize>(tok, line)?;
    if l == 0 || l > n {
        return Err(Error::parse(line, format!("vertex label {l} outside 1..={n}")));
    }
    Ok(l - 1)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, Vertex);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra inside `G[restrict]`.
///
/// Returns a length-`n` vector; entries outside `restrict` or unreachable from
/// `sources` inside the induced subgraph are `+inf`.
pub fn shortest_paths(g: &WeightedGraph, restrict: &VertexSet, sources: &VertexSet) -> Result<Vec<f64>> {
    if restrict.is_empty() {
        return Err(Error::arg("restrict set is empty"));
    }
    if !sources.is_subset(restrict) {
        return Err(Error::arg("sources are not contained in the restrict set"));
    }
    Ok(dijkstra(g, restrict, sources.iter(), f64::INFINITY))
}

/// Dijkstra that stops expanding past `limit`; distances beyond the limit stay
/// `+inf` unless settled earlier.
pub(crate) fn dijkstra(
    g: &WeightedGraph,
    restrict: &VertexSet,
    sources: impl IntoIterator<Item = Vertex>,
    limit: f64,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    for s in sources {
        dist[s] = 0.0;
        heap.push(HeapItem(0.0, s));
    }
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            if !restrict.contains(v) {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] && nd <= limit {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

/// `B_{G[restrict]}(centers, radius)` together with the realized distances.
#[derive(Clone, Debug)]
pub struct Ball {
    pub centers: VertexSet,
    pub radius: f64,
    pub members: VertexSet,
    /// Distance from the center set inside the restricting subgraph; `+inf`
    /// for non-members.
    pub distances: Vec<f64>,
}

pub fn ball(g: &WeightedGraph, restrict: &VertexSet, centers: &VertexSet, radius: f64) -> Result<Ball> {
    if !(radius >= 0.0) {
        return Err(Error::arg(format!("ball radius must be nonnegative, got {radius}")));
    }
    if !centers.is_subset(restrict) {
        return Err(Error::arg("ball centers are not contained in the restrict set"));
    }
    let mut distances = dijkstra(g, restrict, centers.iter(), radius);
    let mut members = VertexSet::new(g.vertex_count());
    for (v, d) in distances.iter_mut().enumerate() {
        if *d <= radius {
            members.insert(v);
        } else {
            *d = f64::INFINITY;
        }
    }
    Ok(Ball {
        centers: centers.clone(),
        radius,
        members,
        distances,
    })
}

/// Maximum `d_G(u, v)` over pairs of the cluster (distances in the whole graph).
pub fn weak_diameter(g: &WeightedGraph, cluster: &VertexSet) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::arg("weak diameter of an empty cluster"));
    }
    diameter_within(g, &g.all(), cluster)
}

/// Diameter of `G[cluster]`; `+inf` when the induced subgraph is disconnected.
pub fn strong_diameter(g: &WeightedGraph, cluster: &VertexSet) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::arg("strong diameter of an empty cluster"));
    }
    diameter_within(g, cluster, cluster)
}

fn diameter_within(g: &WeightedGraph, restrict: &VertexSet, cluster: &VertexSet) -> Result<f64> {
    let mut best: f64 = 0.0;
    for s in cluster.iter() {
        let d = dijkstra(g, restrict, [s], f64::INFINITY);
        for v in cluster.iter() {
            best = best.max(d[v]);
        }
        if best.is_infinite() {
            break;
        }
    }
    Ok(best)
}

/// All-pairs distances of the whole graph by repeated Dijkstra.
pub fn all_pairs(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let all = g.all();
    (0..g.vertex_count())
        .map(|s| dijkstra(g, &all, [s], f64::INFINITY))
        .collect()
}

/// Serializable edge list, used by the JSON exports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeRecord {
    pub u: Vertex,
    pub v: Vertex,
    pub w: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn set(n: usize, v: &[Vertex]) -> VertexSet {
        VertexSet::from_iter(n, v.iter().copied())
    }

    #[test]
    fn unit_path_distances() {
        let g = path3();
        let d = shortest_paths(&g, &g.all(), &set(3, &[0])).unwrap();
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn induced_subgraph_cut_is_infinite() {
        let g = path3();
        let d = shortest_paths(&g, &set(3, &[0, 2]), &set(3, &[0])).unwrap();
        assert_eq!(d[0], 0.0);
        assert!(d[2].is_infinite());
    }

    #[test]
    fn sources_outside_restrict_rejected() {
        let g = path3();
        assert!(matches!(
            shortest_paths(&g, &set(3, &[0, 1]), &set(3, &[2])),
            Err(Error::Argument(_))
        ));
        assert!(shortest_paths(&g, &VertexSet::new(3), &VertexSet::new(3)).is_err());
    }

    #[test]
    fn ball_examples() {
        let g = path3();
        let b = ball(&g, &g.all(), &set(3, &[1]), 1.0).unwrap();
        assert_eq!(b.members.to_vec(), vec![0, 1, 2]);
        assert!(ball(&g, &g.all(), &set(3, &[1]), -0.5).is_err());
    }

    #[test]
    fn zero_radius_ball_includes_zero_weight_neighbors() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 0.0), (1, 2, 0.0), (2, 3, 1.0)]).unwrap();
        let b = ball(&g, &g.all(), &set(4, &[0]), 0.0).unwrap();
        assert_eq!(b.members.to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn diameters() {
        let g = path3();
        assert_eq!(weak_diameter(&g, &set(3, &[1])).unwrap(), 0.0);
        assert_eq!(weak_diameter(&g, &set(3, &[0, 2])).unwrap(), 2.0);
        assert!(strong_diameter(&g, &set(3, &[0, 2])).unwrap().is_infinite());
        assert_eq!(strong_diameter(&g, &g.all()).unwrap(), 2.0);
        assert!(weak_diameter(&g, &VertexSet::new(3)).is_err());
        assert!(strong_diameter(&g, &VertexSet::new(3)).is_err());
    }

    #[test]
    fn parallel_edges_collapse_to_minimum() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 3.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 2.0)]);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(WeightedGraph::from_edges(2, [(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::from_edges(2, [(0, 1, -1.0)]).is_err());
        assert!(WeightedGraph::from_edges(3, [(0, 1, 1.0)]).is_err());
        assert!(WeightedGraph::from_edges(0, []).is_err());
    }

    #[test]
    fn edge_list_parse_and_write() {
        let text = "# comment\np ge 3 2\ne 1 2 1.5\n\ne 2 3 2\n";
        let g = WeightedGraph::parse_edge_list(text).unwrap();
        assert_eq!(g.to_edge_list(), "p ge 3 2\ne 1 2 1.5\ne 2 3 2\n");
        let err = WeightedGraph::parse_edge_list("p ge 2 1\ne 1 3 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(WeightedGraph::parse_edge_list("p ge 2 2\ne 1 2 1\n").is_err());
    }

    #[test]
    fn vertex_set_ops() {
        let mut a = set(130, &[0, 64, 129]);
        let b = set(130, &[64, 100]);
        assert!(a.intersects(&b));
        assert_eq!(a.len(), 3);
        a.difference_with(&b);
        assert_eq!(a.to_vec(), vec![0, 129]);
        a.union_with(&b);
        assert_eq!(a.to_vec(), vec![0, 64, 100, 129]);
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
    }
}
