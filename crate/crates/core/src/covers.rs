//! Sparse covers and padded partition covers built from a tree-ordered net.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};
use crate::net::{NetDistances, TreeOrderedNet};
use crate::tree::IsometricEmbedding;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverCluster {
    pub center: Vertex,
    pub members: Vec<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverGuarantees {
    pub padding_ratio: f64,
    pub diameter_bound: f64,
    pub padding_radius: f64,
    /// Measured largest number of clusters containing one vertex (sparse cover)
    /// or number of partitions (partition cover).
    pub measured: usize,
    pub tau: usize,
}

/// One ball `B_{G[V_{⪯x}]}(x, αΔ)` per net point `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseCover {
    pub alpha: f64,
    pub delta: f64,
    pub clusters: Vec<CoverCluster>,
    pub guarantees: CoverGuarantees,
}

fn check_scale(alpha: f64, delta: f64, min_alpha: f64) -> Result<()> {
    if !(alpha > min_alpha) || !alpha.is_finite() {
        return Err(Error::arg(format!("alpha must exceed {min_alpha}, got {alpha}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::arg(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

fn net_balls(g: &WeightedGraph, net: &TreeOrderedNet, radius: f64) -> Vec<CoverCluster> {
    let nd = NetDistances::compute(g, net, &net.net, radius);
    nd.centers
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut members: Vec<Vertex> = nd.within(i, radius).map(|(v, _)| v).collect();
            members.sort_unstable();
            CoverCluster { center: x, members }
        })
        .collect()
}

fn max_membership(n: usize, clusters: &[CoverCluster]) -> usize {
    let mut c = vec![0; n];
    for cl in clusters {
        for &v in &cl.members {
            c[v] += 1;
        }
    }
    c.into_iter().max().unwrap_or(0)
}

pub fn build_sparse_cover(g: &WeightedGraph, net: &TreeOrderedNet, delta: f64) -> Result<SparseCover> {
    let alpha = net.params.alpha;
    check_scale(alpha, delta, 1.0)?;
    let clusters = net_balls(g, net, alpha * delta);
    let measured = max_membership(g.vertex_count(), &clusters);
    Ok(SparseCover {
        alpha,
        delta,
        guarantees: CoverGuarantees {
            padding_ratio: 4.0 * alpha / (alpha - 1.0),
            diameter_bound: 2.0 * alpha * delta,
            padding_radius: (alpha - 1.0) * delta / 2.0,
            measured,
            tau: net.params.tau_emp,
        },
        clusters,
    })
}

fn project_clusters(clusters: &[CoverCluster], emb: &IsometricEmbedding) -> Vec<CoverCluster> {
    let mut of_host = vec![Vec::new(); emb.host.vertex_count()];
    for (v, &h) in emb.forward.iter().enumerate() {
        of_host[h].push(v);
    }
    clusters
        .iter()
        .filter_map(|c| {
            let mut members: Vec<Vertex> = c.members.iter().flat_map(|&h| of_host[h].iter().copied()).collect();
            if members.is_empty() {
                return None;
            }
            members.sort_unstable();
            Some(CoverCluster {
                center: emb.origin[c.center],
                members,
            })
        })
        .collect()
}

impl SparseCover {
    /// Restricts to designated copies; clusters left empty are dropped.
    pub fn project(&self, emb: &IsometricEmbedding) -> SparseCover {
        let clusters = project_clusters(&self.clusters, emb);
        let mut guarantees = self.guarantees.clone();
        guarantees.measured = max_membership(emb.forward.len(), &clusters);
        SparseCover {
            alpha: self.alpha,
            delta: self.delta,
            clusters,
            guarantees,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionCluster {
    Net { center: Vertex, members: Vec<Vertex> },
    Singleton { vertex: Vertex },
}

impl PartitionCluster {
    pub fn members(&self) -> Vec<Vertex> {
        match self {
            PartitionCluster::Net { members, .. } => members.clone(),
            PartitionCluster::Singleton { vertex } => vec![*vertex],
        }
    }
}

/// Partitions of the vertex set whose net clusters are the balls
/// `B_{G[V_{⪯x}]}(x, αΔ/2)`; uncovered vertices are padded as singletons.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionCover {
    pub alpha: f64,
    pub delta: f64,
    pub partitions: Vec<Vec<PartitionCluster>>,
    pub guarantees: CoverGuarantees,
}

pub fn build_partition_cover(g: &WeightedGraph, net: &TreeOrderedNet, delta: f64) -> Result<PartitionCover> {
    let alpha = net.params.alpha;
    check_scale(alpha, delta, 2.0)?;
    let n = g.vertex_count();
    let balls = net_balls(g, net, alpha * delta / 2.0);
    let sets: Vec<VertexSet> = balls.iter().map(|c| VertexSet::from_iter(n, c.members.iter().copied())).collect();
    let slot_of: std::collections::BTreeMap<Vertex, usize> = balls.iter().enumerate().map(|(i, c)| (c.center, i)).collect();

    let mut remaining = vec![true; balls.len()];
    let mut left = balls.len();
    let mut partitions = Vec::new();
    while left > 0 {
        let mut used = VertexSet::new(n);
        let mut candidate = remaining.clone();
        let mut chosen = Vec::new();
        loop {
            // maximal: no strict ancestor in the order tree is also a candidate
            let pick = (0..balls.len()).filter(|&i| candidate[i]).find(|&i| {
                let mut node = net.tree.parent(net.node_of[balls[i].center]);
                while let Some(a) = node {
                    if let Some(x) = net.vertex_at[a] {
                        if let Some(&j) = slot_of.get(&x) {
                            if candidate[j] {
                                return false;
                            }
                        }
                    }
                    node = net.tree.parent(a);
                }
                true
            });
            let Some(i) = pick else { break };
            remaining[i] = false;
            left -= 1;
            candidate[i] = false;
            used.union_with(&sets[i]);
            for j in 0..balls.len() {
                if candidate[j] && sets[j].intersects(&sets[i]) {
                    candidate[j] = false;
                }
            }
            chosen.push(i);
        }
        let mut clusters: Vec<PartitionCluster> = chosen
            .iter()
            .map(|&i| PartitionCluster::Net {
                center: balls[i].center,
                members: balls[i].members.clone(),
            })
            .collect();
        clusters.extend((0..n).filter(|&v| !used.contains(v)).map(|vertex| PartitionCluster::Singleton { vertex }));
        partitions.push(clusters);
    }
    Ok(PartitionCover {
        alpha,
        delta,
        guarantees: CoverGuarantees {
            padding_ratio: 4.0 * alpha / (alpha - 2.0),
            diameter_bound: alpha * delta,
            padding_radius: (alpha - 2.0) * delta / 4.0,
            measured: partitions.len(),
            tau: net.params.tau_emp,
        },
        partitions,
    })
}

impl PartitionCover {
    pub fn project(&self, emb: &IsometricEmbedding) -> PartitionCover {
        let n = emb.forward.len();
        let mut of_host = vec![None; emb.host.vertex_count()];
        for (v, &h) in emb.forward.iter().enumerate() {
            of_host[h] = Some(v);
        }
        let partitions = self
            .partitions
            .iter()
            .map(|part| {
                let mut out = Vec::new();
                for c in part {
                    match c {
                        PartitionCluster::Net { center, members } => {
                            let m: Vec<Vertex> = members.iter().filter_map(|&h| of_host[h]).collect();
                            if !m.is_empty() {
                                let mut m = m;
                                m.sort_unstable();
                                out.push(PartitionCluster::Net {
                                    center: emb.origin[*center],
                                    members: m,
                                });
                            }
                        }
                        PartitionCluster::Singleton { vertex } => {
                            if let Some(v) = of_host[*vertex] {
                                out.push(PartitionCluster::Singleton { vertex: v });
                            }
                        }
                    }
                }
                debug_assert_eq!(out.iter().map(|c| c.members().len()).sum::<usize>(), n);
                out
            })
            .collect();
        PartitionCover {
            alpha: self.alpha,
            delta: self.delta,
            partitions,
            guarantees: self.guarantees.clone(),
        }
    }
}
