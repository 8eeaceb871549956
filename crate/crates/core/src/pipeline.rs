//! The end-to-end chain: decomposition to host graph, host to net, net to
//! decompositions and covers, and projection back onto the input graph.

use crate::covers::{build_partition_cover, build_sparse_cover, PartitionCover, SparseCover};
use crate::decomposition::{padding_probability_estimate, PaddedPartition, PaddingEstimate, Sampler};
use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::net::{build_tree_ordered_net, NetBuild, TreeOrderedNet};
use crate::tree::{td_to_tree_partition, IsometricEmbedding, TreeDecomposition};

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub graph: WeightedGraph,
    pub td: TreeDecomposition,
    pub embedding: IsometricEmbedding,
    pub build: NetBuild,
    pub delta: f64,
    pub alpha: f64,
}

impl Pipeline {
    pub fn new(graph: WeightedGraph, td: TreeDecomposition, delta: f64, alpha: f64) -> Result<Self> {
        let embedding = td_to_tree_partition(&graph, &td)?;
        let build = build_tree_ordered_net(&embedding.host, &embedding.partition, delta, alpha)?;
        Ok(Pipeline {
            graph,
            td,
            embedding,
            build,
            delta,
            alpha,
        })
    }

    pub fn host(&self) -> &WeightedGraph {
        &self.embedding.host
    }

    pub fn net(&self) -> &TreeOrderedNet {
        &self.build.net
    }

    pub fn sampler(&self) -> Result<Sampler<'_>> {
        Sampler::new(self.host(), self.net())
    }

    /// A host-level sample and its projection onto the input graph.
    pub fn sample(&self, sampler: &Sampler, seed: u64) -> Result<(PaddedPartition, PaddedPartition)> {
        let host = sampler.sample(seed)?;
        let projected = host.project(&self.embedding);
        Ok((host, projected))
    }

    pub fn sparse_cover(&self) -> Result<(SparseCover, SparseCover)> {
        let host = build_sparse_cover(self.host(), self.net(), self.delta)?;
        let projected = host.project(&self.embedding);
        Ok((host, projected))
    }

    pub fn partition_cover(&self) -> Result<(PartitionCover, PartitionCover)> {
        let host = build_partition_cover(self.host(), self.net(), self.delta)?;
        let projected = host.project(&self.embedding);
        Ok((host, projected))
    }

    pub fn padding_estimate(&self, sampler: &Sampler, gammas: &[f64], trials: u64, seed: u64) -> Result<Vec<PaddingEstimate>> {
        padding_probability_estimate(&self.graph, &self.embedding, sampler, gammas, trials, seed)
    }
}
