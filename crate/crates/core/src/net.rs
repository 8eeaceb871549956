//! Core construction over a tree partition, the semi-tree order it induces,
//! and the expansion into a tree-ordered net.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ball, dijkstra, Vertex, VertexSet, WeightedGraph, EPS};
use crate::tree::{RootedTree, TreePartition};

/// A ball carved by the core construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Core {
    pub id: usize,
    pub members: VertexSet,
    pub center_bag: usize,
    /// Uncovered vertices of the center bag when the core was carved.
    pub centers: VertexSet,
    /// Round in which the core was carved, starting at 1.
    pub rank: usize,
    /// Vertex set of the support graph the ball was carved in.
    pub support: VertexSet,
}

/// One connected component of uncovered bags at the start of a round.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentRecord {
    pub round: usize,
    pub root: usize,
    pub bags: Vec<usize>,
    /// Uncovered vertices of the component plus the attachments of its bags.
    pub cluster: VertexSet,
}

/// Non-empty attachments right after a core was carved.
#[derive(Clone, Debug, PartialEq)]
pub struct AttachmentSnapshot {
    pub core: usize,
    pub attachments: Vec<(usize, VertexSet)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoreTrace {
    pub rounds: usize,
    pub components: Vec<ComponentRecord>,
    pub snapshots: Vec<AttachmentSnapshot>,
}

#[derive(Clone, Debug)]
pub struct CoreConstruction {
    pub cores: Vec<Core>,
    pub trace: CoreTrace,
}

/// Runs the round-based core construction with ball radius `delta`.
///
/// Within a round, components are processed by ascending root bag id and bags
/// inside a component by (level, id).
pub fn construct_cores(g: &WeightedGraph, tp: &TreePartition, delta: f64) -> Result<CoreConstruction> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::arg(format!("delta must be positive and finite, got {delta}")));
    }
    let n = g.vertex_count();
    let tree = tp.tree();
    let nb = tree.len();
    let mut covered = VertexSet::new(n);
    let mut attach = vec![VertexSet::new(n); nb];
    let mut cores: Vec<Core> = Vec::new();
    let mut trace = CoreTrace::default();
    let mut round = 0;

    let bag_uncovered = |covered: &VertexSet, b: usize| tp.bag(b).iter().any(|&v| !covered.contains(v));

    while covered.len() < n {
        round += 1;
        let uncovered: Vec<bool> = (0..nb).map(|b| bag_uncovered(&covered, b)).collect();
        let roots: Vec<usize> = (0..nb)
            .filter(|&b| uncovered[b] && tree.parent(b).is_none_or(|p| !uncovered[p]))
            .collect();

        let mut components = Vec::with_capacity(roots.len());
        for &root in &roots {
            let mut bags = vec![root];
            let mut i = 0;
            while i < bags.len() {
                let b = bags[i];
                bags.extend(tree.children(b).iter().copied().filter(|&c| uncovered[c]));
                i += 1;
            }
            bags.sort_unstable_by_key(|&b| (tree.level(b), b));
            let mut cluster = VertexSet::new(n);
            for &b in &bags {
                for &v in tp.bag(b) {
                    if !covered.contains(v) {
                        cluster.insert(v);
                    }
                }
                cluster.union_with(&attach[b]);
            }
            components.push(ComponentRecord {
                round,
                root,
                bags,
                cluster,
            });
        }

        let mut in_comp = vec![false; nb];
        let mut visited = vec![false; nb];
        for comp in &components {
            for &b in &comp.bags {
                in_comp[b] = true;
                visited[b] = false;
            }
            for &b in &comp.bags {
                if visited[b] {
                    continue;
                }
                let sub: Vec<usize> = comp.bags.iter().copied().filter(|&x| tree.is_ancestor(b, x)).collect();
                let mut support = VertexSet::new(n);
                for &x in &sub {
                    for &v in tp.bag(x) {
                        if !covered.contains(v) {
                            support.insert(v);
                        }
                    }
                    support.union_with(&attach[x]);
                }
                let centers = VertexSet::from_iter(n, tp.bag(b).iter().copied().filter(|&v| !covered.contains(v)));
                let members = ball(g, &support, &centers, delta)?.members;

                covered.union_with(&members);
                for v in members.iter() {
                    let bv = tp.bag_of(v);
                    if in_comp[bv] {
                        visited[bv] = true;
                    }
                }
                for &x in &sub {
                    attach[x].difference_with(&members);
                }
                if b != comp.root {
                    let p = tree.parent(b).expect("non-root bag of a component has a parent");
                    attach[p].union_with(&members);
                }

                let id = cores.len();
                trace.snapshots.push(AttachmentSnapshot {
                    core: id,
                    attachments: (0..nb)
                        .filter(|&x| !attach[x].is_empty())
                        .map(|x| (x, attach[x].clone()))
                        .collect(),
                });
                cores.push(Core {
                    id,
                    members,
                    center_bag: b,
                    centers,
                    rank: round,
                    support,
                });
            }
            for &b in &comp.bags {
                in_comp[b] = false;
            }
        }
        trace.components.extend(components);
    }
    trace.rounds = round;
    Ok(CoreConstruction { cores, trace })
}

/// A partial order on vertices given by a map into a rooted tree: `u ⪯ x`
/// when the node of `x` is an ancestor of (or equal to) the node of `u`.
pub trait TreeOrder {
    fn vertex_count(&self) -> usize;

    fn precedes(&self, u: Vertex, x: Vertex) -> bool;

    /// `V_{⪯x}`.
    fn down_set(&self, x: Vertex) -> VertexSet {
        VertexSet::from_iter(self.vertex_count(), (0..self.vertex_count()).filter(|&u| self.precedes(u, x)))
    }

    fn comparable(&self, u: Vertex, v: Vertex) -> bool {
        self.precedes(u, v) || self.precedes(v, u)
    }
}

/// Each vertex mapped to the center bag of the first core containing it.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiTreeOrder {
    pub tree: RootedTree,
    pub assign: Vec<usize>,
    /// Rank of the first core containing each vertex.
    pub rank: Vec<usize>,
}

impl TreeOrder for SemiTreeOrder {
    fn vertex_count(&self) -> usize {
        self.assign.len()
    }

    fn precedes(&self, u: Vertex, x: Vertex) -> bool {
        self.tree.is_ancestor(self.assign[x], self.assign[u])
    }
}

/// Builds the semi-tree order and the net (union of all core centers).
pub fn build_semi_tree_order(cores: &[Core], tp: &TreePartition) -> Result<(SemiTreeOrder, VertexSet)> {
    let n = tp.vertex_count();
    let mut assign = vec![usize::MAX; n];
    let mut rank = vec![0; n];
    let mut net = VertexSet::new(n);
    for core in cores {
        net.union_with(&core.centers);
        for v in core.members.iter() {
            if assign[v] == usize::MAX {
                assign[v] = core.center_bag;
                rank[v] = core.rank;
            }
        }
    }
    if let Some(v) = assign.iter().position(|&a| a == usize::MAX) {
        return Err(Error::invalid(format!("vertex {v} is not covered by any core")));
    }
    Ok((
        SemiTreeOrder {
            tree: tp.tree().clone(),
            assign,
            rank,
        },
        net,
    ))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NetParams {
    pub alpha: f64,
    pub delta: f64,
    /// Largest `|N_{v⪯}^{αΔ}|` over all vertices.
    pub tau_emp: usize,
    /// `tp^4 + tp^2`.
    pub tau_bound: usize,
    pub tp_width: usize,
}

/// Net points with an injective tree order over all vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeOrderedNet {
    pub net: VertexSet,
    pub tree: RootedTree,
    pub node_of: Vec<usize>,
    /// `None` for placeholder nodes standing in for empty bags.
    pub vertex_at: Vec<Option<Vertex>>,
    pub params: NetParams,
}

impl TreeOrder for TreeOrderedNet {
    fn vertex_count(&self) -> usize {
        self.node_of.len()
    }

    fn precedes(&self, u: Vertex, x: Vertex) -> bool {
        self.tree.is_ancestor(self.node_of[x], self.node_of[u])
    }
}

impl TreeOrderedNet {
    /// Net points in processing order: by depth in the order tree, then id.
    pub fn centers_top_down(&self) -> Vec<Vertex> {
        let mut xs = self.net.to_vec();
        xs.sort_by_key(|&x| (self.tree.level(self.node_of[x]), x));
        xs
    }

    pub fn depth(&self, v: Vertex) -> usize {
        self.tree.level(self.node_of[v])
    }
}

/// Replaces every node of the semi order by a path holding its preimage: net
/// vertices first, then the rest, each group by id. Each child path hangs off
/// the last node of its parent's path.
pub fn semi_to_tree_order(semi: &SemiTreeOrder, net: &VertexSet) -> Result<(RootedTree, Vec<usize>, Vec<Option<Vertex>>)> {
    let n = semi.assign.len();
    let nb = semi.tree.len();
    let mut pre: Vec<Vec<Vertex>> = vec![Vec::new(); nb];
    for v in 0..n {
        pre[semi.assign[v]].push(v);
    }
    let mut vertex_at: Vec<Option<Vertex>> = Vec::with_capacity(n + nb);
    let mut path: Vec<(usize, usize)> = Vec::with_capacity(nb);
    let mut node_of = vec![0; n];
    for verts in &pre {
        let first = vertex_at.len();
        let ordered = verts
            .iter()
            .filter(|&&v| net.contains(v))
            .chain(verts.iter().filter(|&&v| !net.contains(v)));
        for &v in ordered {
            node_of[v] = vertex_at.len();
            vertex_at.push(Some(v));
        }
        if verts.is_empty() {
            vertex_at.push(None);
        }
        path.push((first, vertex_at.len() - 1));
    }
    let mut parent = vec![None; vertex_at.len()];
    for (b, &(first, last)) in path.iter().enumerate() {
        for node in first + 1..=last {
            parent[node] = Some(node - 1);
        }
        parent[first] = semi.tree.parent(b).map(|p| path[p].1);
    }
    Ok((RootedTree::from_parents(parent)?, node_of, vertex_at))
}

/// Per net point `x`, the vertices of `G[V_{⪯x}]` within `radius` of `x`, sorted
/// by distance then id.
#[derive(Clone, Debug, PartialEq)]
pub struct NetDistances {
    pub radius: f64,
    pub centers: Vec<Vertex>,
    pub balls: Vec<Vec<(Vertex, f64)>>,
}

impl NetDistances {
    pub fn compute<O: TreeOrder + Sync>(g: &WeightedGraph, order: &O, net: &VertexSet, radius: f64) -> Self {
        let centers = net.to_vec();
        let limit = radius + EPS;
        let balls = centers
            .par_iter()
            .map(|&x| {
                let down = order.down_set(x);
                let d = dijkstra(g, &down, [x], limit);
                let mut members: Vec<(Vertex, f64)> = down.iter().filter(|&v| d[v] <= limit).map(|v| (v, d[v])).collect();
                members.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                members
            })
            .collect();
        NetDistances { radius, centers, balls }
    }

    /// Members of the ball around the `i`-th center within `r`.
    pub fn within(&self, i: usize, r: f64) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.balls[i].iter().copied().take_while(move |&(_, d)| d <= r + EPS)
    }

    /// `|N_{v⪯}^{r}|` for every vertex.
    pub fn counts(&self, n: usize, r: f64) -> Vec<usize> {
        debug_assert!(r <= self.radius + EPS);
        let mut c = vec![0; n];
        for i in 0..self.centers.len() {
            for (v, _) in self.within(i, r) {
                c[v] += 1;
            }
        }
        c
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PackingEntry {
    pub multiplier: f64,
    pub max_count: usize,
    pub argmax: Vertex,
}

/// Largest `|N_{v⪯}^{mΔ}|` for each multiplier `m`.
pub fn packing_profile<O: TreeOrder + Sync>(
    g: &WeightedGraph,
    order: &O,
    net: &VertexSet,
    delta: f64,
    multipliers: &[f64],
) -> Result<Vec<PackingEntry>> {
    if multipliers.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(Error::arg("packing multipliers must be nonnegative and finite"));
    }
    let top = multipliers.iter().copied().fold(0.0, f64::max);
    let nd = NetDistances::compute(g, order, net, top * delta);
    Ok(multipliers
        .iter()
        .map(|&m| {
            let c = nd.counts(g.vertex_count(), m * delta);
            let (argmax, &max_count) = c.iter().enumerate().max_by_key(|&(v, c)| (*c, std::cmp::Reverse(v))).unwrap();
            PackingEntry {
                multiplier: m,
                max_count,
                argmax,
            }
        })
        .collect())
}

/// Everything produced while building a net on a graph with a tree partition.
#[derive(Clone, Debug)]
pub struct NetBuild {
    pub construction: CoreConstruction,
    pub semi: SemiTreeOrder,
    pub net: TreeOrderedNet,
}

/// Cores, semi order, and the final tree-ordered net. `tau_emp` is measured on
/// the final net at `alpha * delta`.
pub fn build_tree_ordered_net(g: &WeightedGraph, tp: &TreePartition, delta: f64, alpha: f64) -> Result<NetBuild> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::arg(format!("alpha must be at least 1, got {alpha}")));
    }
    let construction = construct_cores(g, tp, delta)?;
    let (semi, net_set) = build_semi_tree_order(&construction.cores, tp)?;
    let (tree, node_of, vertex_at) = semi_to_tree_order(&semi, &net_set)?;
    let tpw = tp.width();
    let mut net = TreeOrderedNet {
        net: net_set,
        tree,
        node_of,
        vertex_at,
        params: NetParams {
            alpha,
            delta,
            tau_emp: 0,
            tau_bound: tpw.pow(4) + tpw.pow(2),
            tp_width: tpw,
        },
    };
    let profile = packing_profile(g, &net, &net.net, delta, &[alpha])?;
    net.params.tau_emp = profile[0].max_count;
    Ok(NetBuild { construction, semi, net })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub vertex: Option<Vertex>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CoreRecord {
    pub id: usize,
    pub rank: usize,
    pub center_bag: usize,
    pub centers: Vec<Vertex>,
    pub members: Vec<Vertex>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NetExport {
    pub params: NetParams,
    pub nodes: Vec<NodeRecord>,
    pub node_of: Vec<usize>,
    pub is_net: Vec<bool>,
    pub cores: Vec<CoreRecord>,
}

impl NetBuild {
    pub fn export(&self) -> NetExport {
        let net = &self.net;
        NetExport {
            params: net.params.clone(),
            nodes: (0..net.tree.len())
                .map(|id| NodeRecord {
                    id,
                    parent: net.tree.parent(id),
                    vertex: net.vertex_at[id],
                })
                .collect(),
            node_of: net.node_of.clone(),
            is_net: (0..net.node_of.len()).map(|v| net.net.contains(v)).collect(),
            cores: self
                .construction
                .cores
                .iter()
                .map(|c| CoreRecord {
                    id: c.id,
                    rank: c.rank,
                    center_bag: c.center_bag,
                    centers: c.centers.to_vec(),
                    members: c.members.to_vec(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singleton_path(weights: &[f64]) -> (WeightedGraph, TreePartition) {
        let n = weights.len() + 1;
        let g = WeightedGraph::from_edges(n, weights.iter().enumerate().map(|(i, &w)| (i, i + 1, w))).unwrap();
        let tp = TreePartition::new(&g, (0..n).map(|v| vec![v]).collect(), (0..n).map(|i| i.checked_sub(1)).collect()).unwrap();
        (g, tp)
    }

    #[test]
    fn triangle_single_core() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let tp = TreePartition::new(&g, vec![vec![0, 1, 2]], vec![None]).unwrap();
        let cc = construct_cores(&g, &tp, 1.0).unwrap();
        assert_eq!(cc.cores.len(), 1);
        assert_eq!(cc.cores[0].rank, 1);
        assert_eq!(cc.cores[0].members.to_vec(), vec![0, 1, 2]);
        assert_eq!(cc.cores[0].centers.to_vec(), vec![0, 1, 2]);
        let (semi, net) = build_semi_tree_order(&cc.cores, &tp).unwrap();
        assert_eq!(semi.assign, vec![0, 0, 0]);
        assert_eq!(net.len(), 3);
        let prof = packing_profile(&g, &semi, &net, 1.0, &[2.0]).unwrap();
        assert_eq!(prof[0].max_count, 3);
    }

    #[test]
    fn star_is_one_core() {
        let g = WeightedGraph::from_edges(5, (1..5).map(|l| (0, l, 1.0))).unwrap();
        let tp = TreePartition::new(&g, vec![vec![0], vec![1], vec![2], vec![3], vec![4]], vec![None, Some(0), Some(0), Some(0), Some(0)]).unwrap();
        let cc = construct_cores(&g, &tp, 1.0).unwrap();
        assert_eq!(cc.cores.len(), 1);
        assert_eq!(cc.cores[0].members.len(), 5);
        assert_eq!(cc.trace.rounds, 1);
    }

    #[test]
    fn heavy_path_gives_rank_one_cores() {
        // carving from the root marks only its own bag; each later bag starts a new core in round 1
        let (g, tp) = singleton_path(&[10.0; 4]);
        let cc = construct_cores(&g, &tp, 1.0).unwrap();
        assert_eq!(cc.cores.len(), 5);
        for (i, c) in cc.cores.iter().enumerate() {
            assert_eq!(c.rank, 1);
            assert_eq!(c.center_bag, i);
            assert_eq!(c.members.to_vec(), vec![i]);
        }
        // after core i (i >= 1) the parent bag holds it as attachment
        assert_eq!(cc.trace.snapshots[2].attachments.iter().map(|(b, s)| (*b, s.to_vec())).collect::<Vec<_>>(), vec![(0, vec![1]), (1, vec![2])]);
        let (semi, net) = build_semi_tree_order(&cc.cores, &tp).unwrap();
        assert_eq!(semi.assign, vec![0, 1, 2, 3, 4]);
        assert_eq!(net.len(), 5);
    }

    #[test]
    fn attachments_let_second_round_grow() {
        // bag 0 = {0, 1}; bag 1 = {2}. 0-2 short, 1 far from everything.
        let g = WeightedGraph::from_edges(3, [(0, 2, 1.0), (1, 2, 5.0)]).unwrap();
        let tp = TreePartition::new(&g, vec![vec![0, 1], vec![2]], vec![None, Some(0)]).unwrap();
        let cc = construct_cores(&g, &tp, 1.0).unwrap();
        // round 1: root centers {0,1} cover {0,1,2}; done
        assert_eq!(cc.cores.len(), 1);
        assert_eq!(cc.cores[0].members.to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn single_node_expansion_puts_net_first() {
        let semi = SemiTreeOrder {
            tree: RootedTree::from_parents(vec![None]).unwrap(),
            assign: vec![0, 0, 0],
            rank: vec![1, 1, 1],
        };
        let net = VertexSet::from_iter(3, [1]);
        let (tree, node_of, vertex_at) = semi_to_tree_order(&semi, &net).unwrap();
        assert_eq!(vertex_at, vec![Some(1), Some(0), Some(2)]);
        assert_eq!(node_of, vec![1, 0, 2]);
        assert_eq!(tree.parents(), &[None, Some(0), Some(1)]);
    }

    #[test]
    fn empty_bag_becomes_placeholder() {
        let semi = SemiTreeOrder {
            tree: RootedTree::from_parents(vec![None, Some(0), Some(1)]).unwrap(),
            assign: vec![0, 2],
            rank: vec![1, 1],
        };
        let net = VertexSet::from_iter(2, [0, 1]);
        let (tree, node_of, vertex_at) = semi_to_tree_order(&semi, &net).unwrap();
        assert_eq!(vertex_at, vec![Some(0), None, Some(1)]);
        assert_eq!(node_of, vec![0, 2]);
        assert!(tree.is_ancestor(0, 2));
    }

    #[test]
    fn identity_when_no_sharing() {
        let (g, tp) = singleton_path(&[10.0; 4]);
        let nb = build_tree_ordered_net(&g, &tp, 1.0, 3.0).unwrap();
        assert_eq!(nb.net.tree.parents(), tp.tree().parents());
        assert_eq!(nb.net.params.tau_emp, 1);
    }

    #[test]
    fn zero_multiplier_counts_self() {
        let (g, tp) = singleton_path(&[1.0, 2.0, 3.0]);
        let nb = build_tree_ordered_net(&g, &tp, 1.5, 3.0).unwrap();
        let prof = packing_profile(&g, &nb.net, &nb.net.net, 1.5, &[0.0]).unwrap();
        assert_eq!(prof[0].max_count, 1);
    }

    #[test]
    fn rejects_bad_delta() {
        let (g, tp) = singleton_path(&[1.0]);
        assert!(construct_cores(&g, &tp, 0.0).is_err());
        assert!(construct_cores(&g, &tp, -1.0).is_err());
    }
}
