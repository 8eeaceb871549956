//! Brute-force oracles and the invariant checks run against every structure
//! the pipeline produces.
//!
//! The oracles here share no code with [`crate::graph`]: all-pairs distances use
//! the Floyd–Warshall recurrence and single-source distances use a FIFO
//! Bellman–Ford relaxation.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covers::{PartitionCluster, PartitionCover, SparseCover};
use crate::decomposition::{PaddedPartition, PaddingEstimate, Sampler};
use crate::error::{Error, Result};
use crate::graph::{shortest_paths, Vertex, VertexSet, WeightedGraph, EPS};
use crate::net::{CoreConstruction, SemiTreeOrder, TreeOrder, TreeOrderedNet};
use crate::pipeline::Pipeline;
use crate::tree::{IsometricEmbedding, TreeDecomposition, TreePartition};

pub const DEFAULT_ORACLE_CAP: usize = 60;

/// Floyd–Warshall distances of `G[restrict]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleMatrix {
    pub vertices: Vec<Vertex>,
    index: Vec<Option<usize>>,
    d: Vec<Vec<f64>>,
}

impl OracleMatrix {
    /// `+inf` for pairs outside the restricted set or disconnected inside it.
    pub fn dist(&self, u: Vertex, v: Vertex) -> f64 {
        match (self.index[u], self.index[v]) {
            (Some(i), Some(j)) => self.d[i][j],
            _ => f64::INFINITY,
        }
    }
}

/// Refuses sets larger than `cap`.
pub fn oracle_all_pairs(g: &WeightedGraph, restrict: &VertexSet, cap: usize) -> Result<OracleMatrix> {
    let vertices = restrict.to_vec();
    let k = vertices.len();
    if k > cap {
        return Err(Error::OracleCap { size: k, cap });
    }
    let mut index = vec![None; g.vertex_count()];
    for (i, &v) in vertices.iter().enumerate() {
        index[v] = Some(i);
    }
    let mut d = vec![vec![f64::INFINITY; k]; k];
    for i in 0..k {
        d[i][i] = 0.0;
    }
    for &(u, v, w) in g.edges() {
        if let (Some(i), Some(j)) = (index[u], index[v]) {
            d[i][j] = d[i][j].min(w);
            d[j][i] = d[j][i].min(w);
        }
    }
    for m in 0..k {
        for i in 0..k {
            let dim = d[i][m];
            if dim.is_infinite() {
                continue;
            }
            for j in 0..k {
                let c = dim + d[m][j];
                if c < d[i][j] {
                    d[i][j] = c;
                }
            }
        }
    }
    Ok(OracleMatrix { vertices, index, d })
}

/// Single-source distances in `G[restrict]` by queue-based Bellman–Ford.
pub fn oracle_single_source(g: &WeightedGraph, restrict: &VertexSet, source: Vertex) -> Vec<f64> {
    let n = g.vertex_count();
    let mut d = vec![f64::INFINITY; n];
    if !restrict.contains(source) {
        return d;
    }
    let mut queued = vec![false; n];
    let mut q = VecDeque::from([source]);
    d[source] = 0.0;
    queued[source] = true;
    while let Some(u) = q.pop_front() {
        queued[u] = false;
        for &(v, w) in g.neighbors(u) {
            if restrict.contains(v) && d[u] + w < d[v] {
                d[v] = d[u] + w;
                if !queued[v] {
                    queued[v] = true;
                    q.push_back(v);
                }
            }
        }
    }
    d
}

/// All-pairs distances of a whole graph, by Floyd–Warshall within the cap and
/// by repeated Bellman–Ford beyond it.
#[derive(Clone, Debug)]
pub struct Metric {
    pub method: &'static str,
    d: Vec<Vec<f64>>,
}

impl Metric {
    pub fn compute(g: &WeightedGraph, cap: usize) -> Metric {
        let n = g.vertex_count();
        let all = g.all();
        match oracle_all_pairs(g, &all, cap) {
            Ok(m) => Metric {
                method: "floyd-warshall",
                d: m.d,
            },
            Err(_) => Metric {
                method: "bellman-ford",
                d: (0..n).into_par_iter().map(|s| oracle_single_source(g, &all, s)).collect(),
            },
        }
    }

    pub fn dist(&self, u: Vertex, v: Vertex) -> f64 {
        self.d[u][v]
    }

    pub fn weak_diameter(&self, cluster: &[Vertex]) -> f64 {
        let mut best: f64 = 0.0;
        for &u in cluster {
            for &v in cluster {
                best = best.max(self.d[u][v]);
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn push(&mut self, name: &str, status: Status, measured: Option<f64>, bound: Option<f64>, witness: Option<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            status,
            measured,
            bound,
            witness,
        });
    }

    /// Pass when `witness` is `None`, otherwise `on_fail`.
    fn record(&mut self, name: &str, on_fail: Status, measured: Option<f64>, bound: Option<f64>, witness: Option<String>) {
        let status = if witness.is_some() { on_fail } else { Status::Pass };
        self.push(name, status, measured, bound, witness);
    }

    /// Pass when `measured <= bound` up to tolerance.
    fn bounded(&mut self, name: &str, on_fail: Status, measured: f64, bound: f64, witness: impl FnOnce() -> String) {
        let status = if measured <= bound + EPS { Status::Pass } else { on_fail };
        let w = (status != Status::Pass).then(witness);
        self.push(name, status, Some(measured), Some(bound), w);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn status(&self, name: &str) -> Option<Status> {
        self.get(name).map(|c| c.status)
    }

    pub fn has_failures(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    /// Plain-text table, one row per check.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
        let mut out = String::new();
        writeln!(out, "{:<width$}  {:<6}  {:>14}  {:>14}  witness", "check", "status", "measured", "bound").unwrap();
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Warn => "warn",
                Status::Fail => "FAIL",
            };
            writeln!(
                out,
                "{:<width$}  {:<6}  {:>14}  {:>14}  {}",
                c.name,
                status,
                fmt(c.measured),
                fmt(c.bound),
                c.witness.as_deref().unwrap_or("")
            )
            .unwrap();
        }
        out
    }
}

/// Decomposition axioms, host partition, isometry, copy distances, and width.
pub fn verify_embedding(g: &WeightedGraph, td: &TreeDecomposition, emb: &IsometricEmbedding, metric: &Metric) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();

    r.record(
        "td.valid",
        Status::Fail,
        None,
        None,
        TreeDecomposition::new(g, td.bags().to_vec(), &tree_edges(td)).err().map(|e| e.to_string()),
    );

    let tp = &emb.partition;
    let hn = emb.host.vertex_count();
    let mut seen = vec![0usize; hn];
    for bag in tp.bags() {
        for &v in bag {
            seen[v] += 1;
        }
    }
    r.record(
        "tp.partition",
        Status::Fail,
        None,
        None,
        seen.iter().position(|&c| c != 1).map(|v| format!("host vertex {v} lies in {} bags", seen[v])),
    );
    let bad_edge = emb.host.edges().iter().find(|&&(u, v, _)| {
        let (a, b) = (tp.bag_of(u), tp.bag_of(v));
        !(a == b || tp.tree().parent(a) == Some(b) || tp.tree().parent(b) == Some(a))
    });
    r.record(
        "tp.edges",
        Status::Fail,
        None,
        None,
        bad_edge.map(|&(u, v, _)| format!("host edge {{{u},{v}}} spans non-adjacent bags")),
    );

    let all = emb.host.all();
    let from_copy: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|x| oracle_single_source(&emb.host, &all, emb.forward[x]))
        .collect();
    let mut worst = 0.0f64;
    let mut witness = None;
    for x in 0..n {
        for y in 0..n {
            let err = (from_copy[x][emb.forward[y]] - metric.dist(x, y)).abs();
            let err = if err.is_nan() { 0.0 } else { err };
            if err > worst {
                worst = err;
                witness = Some(format!("pair ({x},{y}): host {} vs graph {}", from_copy[x][emb.forward[y]], metric.dist(x, y)));
            }
        }
    }
    let status = if worst <= EPS { Status::Pass } else { Status::Fail };
    r.push("embedding.isometry", status, Some(worst), Some(0.0), if status == Status::Pass { None } else { witness });

    let mut copy_witness = None;
    'outer: for x in 0..n {
        for &c in &emb.copies[x] {
            if from_copy[x][c] > EPS || emb.origin[c] != x {
                copy_witness = Some(format!("copy {c} of vertex {x} at distance {}", from_copy[x][c]));
                break 'outer;
            }
        }
    }
    r.record("embedding.copies", Status::Fail, None, None, copy_witness);
    r.bounded("embedding.width", Status::Fail, tp.width() as f64, td.max_bag_size() as f64, || {
        format!("host bag size {} exceeds decomposition bag size {}", tp.width(), td.max_bag_size())
    });
    r
}

fn tree_edges(td: &TreeDecomposition) -> Vec<(usize, usize)> {
    (0..td.tree().len()).filter_map(|b| td.tree().parent(b).map(|p| (p, b))).collect()
}

fn first_rank(cores: &CoreConstruction, n: usize) -> Vec<usize> {
    let mut rank = vec![usize::MAX; n];
    for c in &cores.cores {
        for v in c.members.iter() {
            rank[v] = rank[v].min(c.rank);
        }
    }
    rank
}

/// Invariants of the core construction.
pub fn verify_cores(g: &WeightedGraph, tp: &TreePartition, cc: &CoreConstruction, delta: f64) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();
    let tpw = tp.width();
    let tree = tp.tree();
    let cores = &cc.cores;

    let mut union = VertexSet::new(n);
    for c in cores {
        union.union_with(&c.members);
    }
    r.record(
        "cores.cover",
        Status::Fail,
        Some(union.len() as f64),
        Some(n as f64),
        (0..n).find(|&v| !union.contains(v)).map(|v| format!("vertex {v} in no core")),
    );

    let mut w = None;
    'pairs: for (i, a) in cores.iter().enumerate() {
        for b in &cores[i + 1..] {
            if a.rank == b.rank && a.members.intersects(&b.members) {
                w = Some(format!("cores {} and {} share rank {} and a vertex", a.id, b.id, a.rank));
                break 'pairs;
            }
        }
    }
    r.record("cores.same-rank-disjoint", Status::Fail, None, None, w);

    let max_rank = cores.iter().map(|c| c.rank).max().unwrap_or(0);
    r.bounded("cores.rounds", Status::Fail, max_rank as f64, tpw as f64, || format!("{max_rank} rounds"));

    let mut per_vertex = vec![0usize; n];
    for c in cores {
        for v in c.members.iter() {
            per_vertex[v] += 1;
        }
    }
    let (vm, &vmax) = per_vertex.iter().enumerate().max_by_key(|&(v, c)| (*c, std::cmp::Reverse(v))).unwrap();
    r.bounded("cores.vertex-multiplicity", Status::Fail, vmax as f64, tpw as f64, || format!("vertex {vm}"));

    let mut bmax = (0usize, 0usize);
    for b in 0..tree.len() {
        let bag = VertexSet::from_iter(n, tp.bag(b).iter().copied());
        let c = cores.iter().filter(|c| c.members.intersects(&bag)).count();
        if c > bmax.0 {
            bmax = (c, b);
        }
    }
    r.bounded("cores.bag-multiplicity", Status::Fail, bmax.0 as f64, (tpw * tpw) as f64, || format!("bag {}", bmax.1));

    let w = cores.iter().find_map(|c| {
        let bag = VertexSet::from_iter(n, tp.bag(c.center_bag).iter().copied());
        (c.centers.is_empty() || !c.centers.is_subset(&bag) || !c.centers.is_subset(&c.members))
            .then(|| format!("core {}", c.id))
    });
    r.record("cores.centers", Status::Fail, None, None, w);

    // replay each ball with the oracle inside the recorded support
    let w = cores
        .par_iter()
        .find_map_first(|c| {
            if !c.members.is_subset(&c.support) {
                return Some(format!("core {} leaves its support", c.id));
            }
            let mut best = vec![f64::INFINITY; n];
            for x in c.centers.iter() {
                let d = oracle_single_source(g, &c.support, x);
                for v in 0..n {
                    best[v] = best[v].min(d[v]);
                }
            }
            let want = VertexSet::from_iter(n, (0..n).filter(|&v| best[v] <= delta));
            (want != c.members).then(|| format!("core {} differs from the Δ-ball of its centers", c.id))
        });
    r.record("cores.ball", Status::Fail, None, None, w);

    let w = cores.iter().find_map(|c| {
        c.members
            .iter()
            .find(|&v| !tree.is_ancestor(c.center_bag, tp.bag_of(v)))
            .map(|v| format!("core {} holds vertex {v} outside the subtree of bag {}", c.id, c.center_bag))
    });
    r.record("cores.descendant-bags", Status::Fail, None, None, w);

    let w = cc.trace.snapshots.iter().find_map(|s| {
        s.attachments.iter().find_map(|(x, set)| {
            set.iter().find(|&v| {
                let b = tp.bag_of(v);
                b == *x || !tree.is_ancestor(*x, b)
            })
            .map(|v| format!("after core {}: attachment of bag {x} holds vertex {v}", s.core))
        })
    });
    r.record("cores.attachments", Status::Fail, None, None, w);

    r.record("cores.hierarchy", Status::Fail, None, None, hierarchy_violation(cc, n));

    let rank = first_rank(cc, n);
    let w = cores.iter().find_map(|c| {
        tp.bag(c.center_bag)
            .iter()
            .find(|&&v| !c.centers.contains(v) && rank[v] >= c.rank)
            .map(|v| format!("core {}: non-center {v} has rank {}", c.id, rank[*v]))
    });
    r.record("cores.noncenter-rank", Status::Fail, None, None, w);

    r.record("cores.shadow-domains", Status::Warn, None, None, shadow_violation(tp, cc, n));
    r
}

fn hierarchy_violation(cc: &CoreConstruction, n: usize) -> Option<String> {
    let comps = &cc.trace.components;
    if let Some(first) = comps.first() {
        if first.cluster.len() != n {
            return Some("round 1 cluster is not the whole vertex set".into());
        }
    }
    for (i, a) in comps.iter().enumerate() {
        for b in &comps[i + 1..] {
            if a.round == b.round && a.cluster.intersects(&b.cluster) {
                return Some(format!("round {} components at bags {} and {} overlap", a.round, a.root, b.root));
            }
            if b.round == a.round + 1 && a.bags.contains(&b.root) && !b.cluster.is_subset(&a.cluster) {
                return Some(format!(
                    "round {} component at bag {} escapes its parent at bag {}",
                    b.round, b.root, a.root
                ));
            }
        }
    }
    None
}

/// Both implications about shadow domains over every ancestor pair of cores.
fn shadow_violation(tp: &TreePartition, cc: &CoreConstruction, n: usize) -> Option<String> {
    let tree = tp.tree();
    let cores = &cc.cores;
    let subtree: Vec<VertexSet> = (0..tree.len()).map(|b| crate::tree::subtree_vertices(tp, b)).collect();
    let anc = |a: usize, b: usize| tree.is_ancestor(cores[a].center_bag, cores[b].center_bag);
    let domain: Vec<VertexSet> = (0..cores.len())
        .map(|i| {
            let mut d = subtree[cores[i].center_bag].clone();
            for j in 0..cores.len() {
                if j != i && anc(j, i) && cores[j].rank < cores[i].rank {
                    d.difference_with(&cores[j].members);
                }
            }
            d
        })
        .collect();
    for i in 0..cores.len() {
        for j in 0..cores.len() {
            if i == j || !anc(i, j) || cores[i].rank < cores[j].rank {
                continue;
            }
            let (r1, r2) = (&cores[i], &cores[j]);
            let mut rest = VertexSet::from_iter(n, tp.bag(r2.center_bag).iter().copied());
            rest.difference_with(&r2.centers);
            if domain[i].intersects(&rest) {
                let found = (0..cores.len()).any(|k| anc(k, j) && anc(i, k) && cores[k].rank < r2.rank);
                if !found {
                    return Some(format!("cores {} over {}: no lower-rank core between them", r1.id, r2.id));
                }
            }
            if r1.rank > r2.rank {
                let blocked = (0..cores.len()).any(|k| {
                    let b = cores[k].center_bag;
                    cores[k].rank < r2.rank && b != r1.center_bag && tree.is_ancestor(r1.center_bag, b) && tree.is_ancestor(b, r2.center_bag)
                });
                if !blocked {
                    let mut inside = subtree[r2.center_bag].clone();
                    inside.intersect_with(&domain[i]);
                    if !inside.is_subset(&domain[j]) {
                        return Some(format!("cores {} over {}: shadow domain not inherited", r1.id, r2.id));
                    }
                }
            }
        }
    }
    None
}

/// Oracle distances from each net point inside its down-set.
pub struct OracleNetDistances {
    pub centers: Vec<Vertex>,
    pub dist: Vec<Vec<f64>>,
}

impl OracleNetDistances {
    pub fn compute<O: TreeOrder + Sync>(g: &WeightedGraph, order: &O, net: &VertexSet) -> Self {
        let centers = net.to_vec();
        let dist = centers
            .par_iter()
            .map(|&x| oracle_single_source(g, &order.down_set(x), x))
            .collect();
        OracleNetDistances { centers, dist }
    }

    pub fn counts(&self, r: f64) -> Vec<usize> {
        let n = self.dist.first().map_or(0, Vec::len);
        let mut c = vec![0; n];
        for d in &self.dist {
            for v in 0..n {
                if d[v] <= r + EPS {
                    c[v] += 1;
                }
            }
        }
        c
    }

    /// Vertices with no net point within `r` above them.
    pub fn uncovered(&self, n: usize, r: f64) -> Option<Vertex> {
        (0..n).find(|&v| !self.dist.iter().any(|d| d[v] <= r + EPS))
    }
}

fn validity_violation<O: TreeOrder>(g: &WeightedGraph, order: &O) -> Option<String> {
    g.edges()
        .iter()
        .find(|&&(u, v, _)| !order.comparable(u, v))
        .map(|&(u, v, _)| format!("edge {{{u},{v}}} joins incomparable vertices"))
}

fn packing_checks(r: &mut VerificationReport, prefix: &str, od: &OracleNetDistances, delta: f64, alpha: f64, bound: usize) {
    for (m, hard) in [(2.0, true), (3.0, false)] {
        let c = od.counts(m * delta);
        let (v, &max) = c.iter().enumerate().max_by_key(|&(v, c)| (*c, std::cmp::Reverse(v))).unwrap();
        let on_fail = if hard { Status::Fail } else { Status::Warn };
        r.bounded(&format!("{prefix}.packing-{m}delta"), on_fail, max as f64, bound as f64, || format!("vertex {v}"));
    }
    let c = od.counts(alpha * delta);
    let max = c.iter().copied().max().unwrap_or(0);
    r.push(&format!("{prefix}.packing-alpha"), Status::Pass, Some(max as f64), None, None);
}

/// Validity, covering, packing, and the core sequence argument for the semi order.
pub fn verify_semi_order(g: &WeightedGraph, tp: &TreePartition, cc: &CoreConstruction, semi: &SemiTreeOrder, net: &VertexSet, delta: f64, alpha: f64) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();
    r.record("semi.validity", Status::Fail, None, None, validity_violation(g, semi));
    let od = OracleNetDistances::compute(g, semi, net);
    r.record(
        "semi.covering",
        Status::Fail,
        None,
        None,
        od.uncovered(n, delta).map(|v| format!("vertex {v} has no net point within Δ above it")),
    );
    let tpw = tp.width();
    packing_checks(&mut r, "semi", &od, delta, alpha, tpw.pow(4) + tpw.pow(2));
    r.record("semi.core-sequence", Status::Warn, None, None, core_sequence_violation(tp, cc, &od, n, delta));
    r
}

/// For every vertex, the cores meeting its 2Δ ancestral net points (and not
/// containing it) split into groups led by a unique lowest-rank core whose
/// centers every group member meets.
fn core_sequence_violation(tp: &TreePartition, cc: &CoreConstruction, od: &OracleNetDistances, n: usize, delta: f64) -> Option<String> {
    let tree = tp.tree();
    let cores = &cc.cores;
    (0..n).into_par_iter().find_map_first(|v| {
        let near = VertexSet::from_iter(
            n,
            od.centers.iter().zip(&od.dist).filter(|(_, d)| d[v] <= 2.0 * delta + EPS).map(|(&x, _)| x),
        );
        let mut rest: Vec<usize> = (0..cores.len())
            .filter(|&i| cores[i].members.intersects(&near) && !cores[i].members.contains(v))
            .collect();
        while !rest.is_empty() {
            let low = rest.iter().map(|&i| cores[i].rank).min().unwrap();
            let lowest: Vec<usize> = rest.iter().copied().filter(|&i| cores[i].rank == low).collect();
            if lowest.len() > 1 {
                return Some(format!("vertex {v}: {} cores share the lowest rank {low}", lowest.len()));
            }
            let star = lowest[0];
            let group: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|&i| tree.is_ancestor(cores[i].center_bag, cores[star].center_bag))
                .collect();
            if let Some(&bad) = group.iter().find(|&&i| !cores[i].members.intersects(&cores[star].centers)) {
                return Some(format!("vertex {v}: core {bad} misses the centers of core {star}"));
            }
            rest.retain(|i| !group.contains(i));
        }
        None
    })
}

/// Order validity, unique maxima on sampled balls, covering, and packing.
pub fn verify_net(g: &WeightedGraph, net: &TreeOrderedNet, semi: Option<&SemiTreeOrder>, delta: f64, seed: u64) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();

    let mut owner = vec![None; net.tree.len()];
    let mut w = None;
    for v in 0..n {
        let node = net.node_of[v];
        if let Some(u) = owner[node] {
            w = Some(format!("vertices {u} and {v} share node {node}"));
            break;
        }
        owner[node] = Some(v);
    }
    r.record("net.injective", Status::Fail, None, None, w);
    r.record("net.validity", Status::Fail, None, None, validity_violation(g, net));

    if let Some(semi) = semi {
        let w = (0..n).into_par_iter().find_map_first(|u| {
            (0..n)
                .find(|&v| net.precedes(u, v) && !semi.precedes(u, v))
                .map(|v| format!("{u} ⪯ {v} in the net order only"))
        });
        r.record("net.refines-semi", Status::Fail, None, None, w);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = g.all();
    let mut w = None;
    for _ in 0..100 {
        let c = rng.gen_range(0..n);
        let radius = rng.gen_range(0.0..=3.0 * delta);
        let d = oracle_single_source(g, &all, c);
        let members: Vec<Vertex> = (0..n).filter(|&v| d[v] <= radius).collect();
        let maximal: Vec<Vertex> = members
            .iter()
            .copied()
            .filter(|&x| !members.iter().any(|&y| y != x && net.precedes(x, y)))
            .collect();
        if maximal.len() != 1 {
            w = Some(format!("ball around {c} of radius {radius:.3} has {} maximal vertices", maximal.len()));
            break;
        }
    }
    r.record("net.unique-maximum", Status::Fail, None, None, w);

    let od = OracleNetDistances::compute(g, net, &net.net);
    r.record(
        "net.covering",
        Status::Fail,
        None,
        None,
        od.uncovered(n, delta).map(|v| format!("vertex {v} has no net point within Δ above it")),
    );
    packing_checks(&mut r, "net", &od, delta, net.params.alpha, net.params.tau_bound);
    let tau = od.counts(net.params.alpha * delta).into_iter().max().unwrap_or(0);
    let ok = tau == net.params.tau_emp;
    r.push(
        "net.tau",
        if ok { Status::Pass } else { Status::Fail },
        Some(net.params.tau_emp as f64),
        Some(tau as f64),
        (!ok).then(|| format!("recorded tau {} but oracle measures {tau}", net.params.tau_emp)),
    );
    r
}

/// Totality, disjointness, diameter, and radius range of one sample.
pub fn verify_partition(p: &PaddedPartition, metric: &Metric) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = p.assignment.len();
    let mut count = vec![0usize; n];
    for c in &p.clusters {
        for &v in &c.members {
            if v < n {
                count[v] += 1;
            }
        }
    }
    r.record(
        "partition.total",
        Status::Fail,
        None,
        None,
        count.iter().position(|&c| c == 0).map(|v| format!("vertex {v} unclustered")),
    );
    let w = count.iter().position(|&c| c > 1).map(|v| format!("vertex {v} in {} clusters", count[v])).or_else(|| {
        p.clusters.iter().enumerate().find_map(|(i, c)| {
            c.members.iter().find(|&&v| p.assignment.get(v) != Some(&i)).map(|v| format!("assignment of {v} disagrees with cluster {i}"))
        })
    });
    r.record("partition.disjoint", Status::Fail, None, None, w);
    let (worst, wi) = p
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| (metric.weak_diameter(&c.members), i))
        .fold((0.0f64, 0), |a, b| if b.0 > a.0 { b } else { a });
    r.bounded("partition.diameter", Status::Fail, worst, p.params.diameter_bound, || format!("cluster {wi}"));
    let (lo, hi) = (p.params.delta, p.params.beta_internal * p.params.delta);
    let w = p
        .radii
        .iter()
        .find(|&&(_, r)| !(r >= lo - EPS && r <= hi + EPS))
        .map(|&(x, r)| format!("center {x} radius {r}"));
    r.record("partition.radius-range", Status::Fail, None, Some(hi), w);
    r
}

/// The sample is reproduced exactly from its recorded radii.
pub fn verify_replay(sampler: &Sampler, host: &PaddedPartition) -> VerificationReport {
    let mut r = VerificationReport::default();
    let w = match sampler.replay(host.seed, &host.radii) {
        Ok(q) if q == *host => None,
        Ok(_) => Some("replayed partition differs".to_string()),
        Err(e) => Some(e.to_string()),
    };
    r.record("partition.replay", Status::Fail, None, None, w);
    r
}

/// Padding estimates against `e^{-βγ}`.
pub fn verify_padding(estimates: &[PaddingEstimate]) -> VerificationReport {
    let mut r = VerificationReport::default();
    for e in estimates {
        let ok = e.lower_bound >= e.required;
        r.push(
            &format!("padding.gamma-{}", e.gamma),
            if ok { Status::Pass } else { Status::Fail },
            Some(e.lower_bound),
            Some(e.required),
            (!ok).then(|| format!("vertex {} kept its ball {}/{} times", e.worst_vertex, e.worst_successes, e.trials)),
        );
    }
    r
}

fn strong_diameter_oracle(g: &WeightedGraph, members: &[Vertex]) -> f64 {
    let set = VertexSet::from_iter(g.vertex_count(), members.iter().copied());
    members
        .par_iter()
        .map(|&s| {
            let d = oracle_single_source(g, &set, s);
            members.iter().map(|&v| d[v]).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn ball_escape(metric: &Metric, n: usize, radius: f64, clusters: &[Vec<Vertex>]) -> Option<Vertex> {
    let sets: Vec<VertexSet> = clusters.iter().map(|c| VertexSet::from_iter(n, c.iter().copied())).collect();
    (0..n).into_par_iter().find_first(|&v| {
        let ball = VertexSet::from_iter(n, (0..n).filter(|&u| metric.dist(v, u) <= radius + EPS));
        !sets.iter().any(|s| ball.is_subset(s))
    })
}

/// Cover, diameters, sparsity, and padding of a sparse cover on the input
/// graph. `host` adds strong-diameter checks on the unprojected clusters and
/// moves the sparsity check onto them; `packing` gives the per-vertex bound on
/// membership, indexed like the clusters it applies to.
pub fn verify_sparse_cover(
    g: &WeightedGraph,
    cover: &SparseCover,
    metric: &Metric,
    packing: Option<&[usize]>,
    host: Option<(&WeightedGraph, &SparseCover)>,
) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();
    let bound = cover.guarantees.diameter_bound;
    let mut count = vec![0usize; n];
    for c in &cover.clusters {
        for &v in &c.members {
            count[v] += 1;
        }
    }
    r.record(
        "cover.covers",
        Status::Fail,
        None,
        None,
        count.iter().position(|&c| c == 0).map(|v| format!("vertex {v} in no cluster")),
    );
    if let Some((hg, hc)) = host {
        let (worst, i) = hc
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (strong_diameter_oracle(hg, &c.members), i))
            .fold((0.0f64, 0), |a, b| if b.0 > a.0 { b } else { a });
        r.bounded("cover.strong-diameter", Status::Fail, worst, bound, || format!("host cluster {i}"));
    }
    let (worst, i) = cover
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| (metric.weak_diameter(&c.members), i))
        .fold((0.0f64, 0), |a, b| if b.0 > a.0 { b } else { a });
    r.bounded("cover.weak-diameter", Status::Fail, worst, bound, || format!("cluster {i}"));
    // membership is bounded per host vertex when a host cover is given
    let (sc, sn) = match host {
        Some((hg, hc)) => (hc, hg.vertex_count()),
        None => (cover, n),
    };
    let mut count = vec![0usize; sn];
    for c in &sc.clusters {
        for &v in &c.members {
            count[v] += 1;
        }
    }
    let limit: Vec<usize> = match packing {
        Some(p) => p.to_vec(),
        None => vec![cover.guarantees.tau; sn],
    };
    let over = (0..sn).find(|&v| count[v] > limit[v]);
    r.record(
        "cover.sparsity",
        Status::Fail,
        Some(count.iter().copied().max().unwrap_or(0) as f64),
        Some(limit.iter().copied().max().unwrap_or(0) as f64),
        over.map(|v| format!("vertex {v} in {} clusters, bound {}", count[v], limit[v])),
    );
    let clusters: Vec<Vec<Vertex>> = cover.clusters.iter().map(|c| c.members.clone()).collect();
    let rad = cover.guarantees.padding_radius;
    r.record(
        "cover.padding",
        Status::Fail,
        Some(rad),
        None,
        ball_escape(metric, n, rad, &clusters).map(|v| format!("ball of radius {rad} around {v} fits no cluster")),
    );
    r
}

/// Partition count, per-partition validity, diameters, and padding.
pub fn verify_partition_cover(
    g: &WeightedGraph,
    pc: &PartitionCover,
    metric: &Metric,
    host: Option<(&WeightedGraph, &PartitionCover)>,
) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();
    let count = pc.partitions.len();
    let tau = pc.guarantees.tau;
    let status = if count <= tau {
        Status::Pass
    } else if count == tau + 1 {
        Status::Warn
    } else {
        Status::Fail
    };
    r.push(
        "pcover.count",
        status,
        Some(count as f64),
        Some(tau as f64),
        (status != Status::Pass).then(|| format!("{count} partitions for tau {tau}")),
    );
    let w = pc.partitions.iter().enumerate().find_map(|(i, part)| {
        let mut seen = vec![0usize; n];
        for c in part {
            for v in c.members() {
                seen[v] += 1;
            }
        }
        seen.iter().position(|&s| s != 1).map(|v| format!("partition {i}: vertex {v} appears {} times", seen[v]))
    });
    r.record("pcover.partitions", Status::Fail, None, None, w);
    let bound = pc.guarantees.diameter_bound;
    let mut worst = (0.0f64, String::new());
    for (i, part) in pc.partitions.iter().enumerate() {
        for (j, c) in part.iter().enumerate() {
            let d = metric.weak_diameter(&c.members());
            if d > worst.0 {
                worst = (d, format!("partition {i} cluster {j}"));
            }
        }
    }
    r.bounded("pcover.weak-diameter", Status::Fail, worst.0, bound, || worst.1.clone());
    if let Some((hg, hpc)) = host {
        let mut worst = (0.0f64, String::new());
        for (i, part) in hpc.partitions.iter().enumerate() {
            for (j, c) in part.iter().enumerate() {
                if let PartitionCluster::Net { members, .. } = c {
                    let d = strong_diameter_oracle(hg, members);
                    if d > worst.0 {
                        worst = (d, format!("host partition {i} cluster {j}"));
                    }
                }
            }
        }
        r.bounded("pcover.strong-diameter", Status::Fail, worst.0, bound, || worst.1.clone());
    }
    let clusters: Vec<Vec<Vertex>> = pc.partitions.iter().flatten().map(|c| c.members()).collect();
    let rad = pc.guarantees.padding_radius;
    r.record(
        "pcover.padding",
        Status::Fail,
        Some(rad),
        None,
        ball_escape(metric, n, rad, &clusters).map(|v| format!("ball of radius {rad} around {v} fits no cluster")),
    );
    r
}

/// Dijkstra against Floyd–Warshall on random induced subgraphs.
pub fn verify_oracle_equivalence(g: &WeightedGraph, samples: usize, cap: usize, seed: u64) -> VerificationReport {
    let mut r = VerificationReport::default();
    let n = g.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = None;
    for _ in 0..samples {
        let keep = rng.gen_range(0.3..=1.0);
        let mut set = VertexSet::from_iter(n, (0..n).filter(|_| rng.gen_bool(keep)));
        while set.len() > cap {
            let v = set.iter().nth(rng.gen_range(0..set.len())).unwrap();
            set.remove(v);
        }
        if set.is_empty() {
            set.insert(rng.gen_range(0..n));
        }
        let fw = oracle_all_pairs(g, &set, cap).expect("set trimmed to the cap");
        for s in set.iter() {
            let d = shortest_paths(g, &set, &VertexSet::from_iter(n, [s])).expect("source inside set");
            if let Some(v) = set.iter().find(|&v| d[v] != fw.dist(s, v)) {
                w = Some(format!("source {s}, target {v}: {} vs {}", d[v], fw.dist(s, v)));
                break;
            }
        }
        if w.is_some() {
            break;
        }
    }
    r.record("oracle.equivalence", Status::Fail, Some(samples as f64), None, w);
    r
}

pub fn default_gammas(delta_param: f64) -> Vec<f64> {
    vec![delta_param / 4.0, delta_param / 2.0, delta_param]
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub oracle_cap: usize,
    pub seed: u64,
    /// Seeds checked for partition validity.
    pub samples: u64,
    pub trials: u64,
    /// Padding scales to estimate; empty means `{δ/4, δ/2, δ}` for the largest
    /// admissible `δ`.
    pub gammas: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            oracle_cap: DEFAULT_ORACLE_CAP,
            seed: 0,
            samples: 100,
            trials: 10_000,
            gammas: Vec::new(),
        }
    }
}

/// Every check, in a fixed order.
pub fn verify_pipeline(p: &Pipeline, cfg: &VerifyConfig) -> Result<(VerificationReport, &'static str)> {
    let mut report = VerificationReport::default();
    let metric = Metric::compute(&p.graph, cfg.oracle_cap);
    let host = p.host();
    let tp = &p.embedding.partition;
    let nb = &p.build;

    report.extend(verify_oracle_equivalence(&p.graph, 20, cfg.oracle_cap, cfg.seed));
    report.extend(verify_embedding(&p.graph, &p.td, &p.embedding, &metric));
    report.extend(verify_cores(host, tp, &nb.construction, p.delta));
    report.extend(verify_semi_order(host, tp, &nb.construction, &nb.semi, &nb.net.net, p.delta, p.alpha));
    report.extend(verify_net(host, &nb.net, Some(&nb.semi), p.delta, cfg.seed));

    let sampler = p.sampler()?;
    let mut merged: Option<VerificationReport> = None;
    for s in 0..cfg.samples {
        let (h, g) = p.sample(&sampler, cfg.seed.wrapping_add(s))?;
        let mut one = verify_partition(&g, &metric);
        one.extend(verify_replay(&sampler, &h));
        merged = Some(match merged {
            None => one,
            Some(mut acc) => {
                for (a, b) in acc.checks.iter_mut().zip(one.checks) {
                    if b.status == Status::Fail && a.status != Status::Fail {
                        *a = b;
                    } else if a.status == Status::Pass {
                        if let (Some(x), Some(y)) = (a.measured, b.measured) {
                            a.measured = Some(x.max(y));
                        }
                    }
                }
                acc
            }
        });
    }
    if let Some(m) = merged {
        report.extend(m);
    }
    let gammas = if cfg.gammas.is_empty() {
        default_gammas(sampler.params().delta_param)
    } else {
        cfg.gammas.clone()
    };
    let est = p.padding_estimate(&sampler, &gammas, cfg.trials, cfg.seed)?;
    report.extend(verify_padding(&est));

    let od_counts = {
        let od = OracleNetDistances::compute(host, &nb.net, &nb.net.net);
        od.counts(p.alpha * p.delta)
    };
    if p.alpha > 1.0 {
        let (hc, gc) = p.sparse_cover()?;
        report.extend(verify_sparse_cover(&p.graph, &gc, &metric, Some(&od_counts), Some((host, &hc))));
    }
    if p.alpha > 2.0 {
        let (hpc, gpc) = p.partition_cover()?;
        report.extend(verify_partition_cover(&p.graph, &gpc, &metric, Some((host, &hpc))));
    }
    Ok((report, metric.method))
}
