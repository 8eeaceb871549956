//! Test graphs with tree decompositions, and two small decomposition routines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Vertex, WeightedGraph};
use crate::tree::TreeDecomposition;

/// A named graph with a valid decomposition and a suggested ball radius.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub graph: WeightedGraph,
    pub td: TreeDecomposition,
    pub delta: f64,
}

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(1..=10) as f64
}

pub fn path(weights: &[f64]) -> Result<(WeightedGraph, TreeDecomposition)> {
    let n = weights.len() + 1;
    let g = WeightedGraph::from_edges(n, weights.iter().enumerate().map(|(i, &w)| (i, i + 1, w)))?;
    let bags = (0..n - 1).map(|i| vec![i, i + 1]).collect::<Vec<_>>();
    let bags = if bags.is_empty() { vec![vec![0]] } else { bags };
    let edges: Vec<(usize, usize)> = (1..bags.len()).map(|i| (i - 1, i)).collect();
    let td = TreeDecomposition::new(&g, bags, &edges)?;
    Ok((g, td))
}

/// Star with the hub in the root bag and one bag per spoke.
pub fn star(weights: &[f64]) -> Result<(WeightedGraph, TreeDecomposition)> {
    let g = WeightedGraph::from_edges(weights.len() + 1, weights.iter().enumerate().map(|(i, &w)| (0, i + 1, w)))?;
    let mut bags = vec![vec![0]];
    let mut edges = Vec::new();
    for leaf in 1..=weights.len() {
        bags.push(vec![0, leaf]);
        edges.push((0, leaf));
    }
    let td = TreeDecomposition::new(&g, bags, &edges)?;
    Ok((g, td))
}

/// `k × k` grid in row-major order with a sliding-window path decomposition
/// (bags of `k + 1` consecutive vertices).
pub fn grid(k: usize, weights: impl Fn(Vertex, Vertex) -> f64) -> Result<(WeightedGraph, TreeDecomposition)> {
    if k < 2 {
        return Err(Error::arg("grid side must be at least 2"));
    }
    let n = k * k;
    let mut edges = Vec::new();
    for r in 0..k {
        for c in 0..k {
            let v = r * k + c;
            if c + 1 < k {
                edges.push((v, v + 1, weights(v, v + 1)));
            }
            if r + 1 < k {
                edges.push((v, v + k, weights(v, v + k)));
            }
        }
    }
    let g = WeightedGraph::from_edges(n, edges)?;
    let bags: Vec<Vec<Vertex>> = (0..n - k).map(|i| (i..=i + k).collect()).collect();
    let tree: Vec<(usize, usize)> = (1..bags.len()).map(|i| (i - 1, i)).collect();
    let td = TreeDecomposition::new(&g, bags, &tree)?;
    Ok((g, td))
}

/// Random series-parallel graph: starting from one edge, repeatedly subdivide an
/// edge or add a parallel two-edge path across it.
pub fn series_parallel(n: usize, seed: u64) -> Result<(WeightedGraph, TreeDecomposition)> {
    if n < 2 {
        return Err(Error::arg("series-parallel fixture needs at least 2 vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(Vertex, Vertex)> = vec![(0, 1)];
    for w in 2..n {
        let i = rng.gen_range(0..edges.len());
        let (a, b) = edges[i];
        if rng.gen_bool(0.5) {
            edges.swap_remove(i);
        }
        edges.push((a, w));
        edges.push((w, b));
    }
    let g = WeightedGraph::from_edges(n, edges.into_iter().map(|(a, b)| (a, b, weight(&mut rng))))?;
    let td = min_degree_decomposition(&g)?;
    Ok((g, td))
}

/// Random partial `k`-tree: a `k`-tree grown one vertex at a time, then
/// thinned while staying connected. The growth order supplies the decomposition.
pub fn partial_k_tree(n: usize, k: usize, keep: f64, seed: u64) -> Result<(WeightedGraph, TreeDecomposition)> {
    if k == 0 || n <= k {
        return Err(Error::arg(format!("partial k-tree needs n > k >= 1, got n={n}, k={k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cliques: Vec<Vec<Vertex>> = Vec::new();
    let mut bags: Vec<Vec<Vertex>> = vec![(0..=k).collect()];
    let mut tree = Vec::new();
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    for a in 0..=k {
        for b in a + 1..=k {
            edges.push((a, b));
        }
    }
    for skip in 0..=k {
        cliques.push((0..=k).filter(|&v| v != skip).collect());
    }
    let mut clique_bag = vec![0; cliques.len()];
    for v in k + 1..n {
        let ci = rng.gen_range(0..cliques.len());
        let base = cliques[ci].clone();
        let parent_bag = clique_bag[ci];
        let mut bag = base.clone();
        bag.push(v);
        let bi = bags.len();
        bags.push(bag);
        tree.push((parent_bag, bi));
        for &u in &base {
            edges.push((u, v));
        }
        for skip in 0..k {
            let mut c: Vec<Vertex> = base.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &u)| u).collect();
            c.push(v);
            cliques.push(c);
            clique_bag.push(bi);
        }
    }
    // drop edges at random but keep a spanning tree
    edges.shuffle(&mut rng);
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(d: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while d[r] != r {
            r = d[r];
        }
        let mut y = x;
        while d[y] != r {
            let next = d[y];
            d[y] = r;
            y = next;
        }
        r
    }
    let mut kept = Vec::new();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut dsu, a), find(&mut dsu, b));
        if ra != rb {
            dsu[ra] = rb;
            kept.push((a, b));
        } else if rng.gen_bool(keep) {
            kept.push((a, b));
        }
    }
    kept.sort_unstable();
    let g = WeightedGraph::from_edges(n, kept.into_iter().map(|(a, b)| (a, b, weight(&mut rng))))?;
    let td = TreeDecomposition::new(&g, bags, &tree)?;
    Ok((g, td))
}

/// Decomposition from an elimination order. The bag of the last eliminated
/// vertex becomes bag 0 so the decomposition is rooted there.
pub fn decomposition_from_order(g: &WeightedGraph, order: &[Vertex]) -> Result<TreeDecomposition> {
    let n = g.vertex_count();
    if order.len() != n {
        return Err(Error::arg("elimination order must list every vertex once"));
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in order.iter().enumerate() {
        if v >= n || pos[v] != usize::MAX {
            return Err(Error::arg("elimination order must list every vertex once"));
        }
        pos[v] = i;
    }
    let mut adj: Vec<std::collections::BTreeSet<Vertex>> = vec![Default::default(); n];
    for &(u, v, _) in g.edges() {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let mut later: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for &v in order {
        let nb: Vec<Vertex> = adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        for &a in &nb {
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        later[v] = nb;
    }
    // bag index of the vertex eliminated at step i is n - 1 - i
    let bag_index = |v: Vertex| n - 1 - pos[v];
    let mut bags = vec![Vec::new(); n];
    let mut tree = Vec::new();
    for &v in order {
        let mut bag = later[v].clone();
        bag.push(v);
        bags[bag_index(v)] = bag;
        if let Some(&next) = later[v].iter().min_by_key(|&&u| pos[u]) {
            tree.push((bag_index(next), bag_index(v)));
        } else if pos[v] + 1 < n {
            // disconnected fill graph cannot happen for a connected input
            tree.push((0, bag_index(v)));
        }
    }
    TreeDecomposition::new(g, bags, &tree)
}

/// Greedy min-degree elimination (ties by smallest id).
pub fn min_degree_decomposition(g: &WeightedGraph) -> Result<TreeDecomposition> {
    let n = g.vertex_count();
    let mut adj: Vec<std::collections::BTreeSet<Vertex>> = vec![Default::default(); n];
    for &(u, v, _) in g.edges() {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&v| alive[v]).min_by_key(|&v| (adj[v].len(), v)).unwrap();
        let nb: Vec<Vertex> = adj[v].iter().copied().collect();
        for &a in &nb {
            adj[a].remove(&v);
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        adj[v].clear();
        alive[v] = false;
        order.push(v);
    }
    decomposition_from_order(g, &order)
}

/// Largest graph accepted by [`exact_decomposition`].
pub const EXACT_LIMIT: usize = 12;

/// Optimal-width decomposition by dynamic programming over vertex subsets.
pub fn exact_decomposition(g: &WeightedGraph) -> Result<TreeDecomposition> {
    let n = g.vertex_count();
    if n > EXACT_LIMIT {
        return Err(Error::arg(format!("exact decomposition is limited to {EXACT_LIMIT} vertices, got {n}")));
    }
    let mut nbr = vec![0u32; n];
    for &(u, v, _) in g.edges() {
        nbr[u] |= 1 << v;
        nbr[v] |= 1 << u;
    }
    // q(s, v): vertices outside s ∪ {v} reachable from v through s
    let q = |s: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut stack = vec![v];
        let mut out = 0u32;
        while let Some(u) = stack.pop() {
            let mut m = nbr[u] & !seen;
            while m != 0 {
                let w = m.trailing_zeros() as usize;
                m &= m - 1;
                seen |= 1 << w;
                if s & (1 << w) != 0 {
                    stack.push(w);
                } else {
                    out |= 1 << w;
                }
            }
        }
        out
    };
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut tw = vec![usize::MAX; 1 << n];
    let mut last = vec![usize::MAX; 1 << n];
    tw[0] = 0;
    for s in 1..=full {
        let mut m = s;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            let rest = s & !(1 << v);
            let cand = tw[rest as usize].max(q(rest, v).count_ones() as usize);
            if cand < tw[s as usize] {
                tw[s as usize] = cand;
                last[s as usize] = v;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    while s != 0 {
        let v = last[s as usize];
        order.push(v);
        s &= !(1 << v);
    }
    order.reverse();
    decomposition_from_order(g, &order)
}

/// Random connected graph with integer weights, used for oracle comparisons.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Result<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, weight(&mut rng)));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a, b, weight(&mut rng)));
        }
    }
    WeightedGraph::from_edges(n, edges)
}

fn fixture(name: impl Into<String>, built: Result<(WeightedGraph, TreeDecomposition)>, delta: f64) -> Result<Fixture> {
    let (graph, td) = built?;
    Ok(Fixture {
        name: name.into(),
        graph,
        td,
        delta,
    })
}

/// The standard suite: paths, stars, grids up to 8×8, series-parallel graphs,
/// and random partial k-trees up to 100 vertices.
pub fn standard_fixtures() -> Result<Vec<Fixture>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    let mut out = Vec::new();
    out.push(fixture("path-5-heavy", path(&[10.0; 4]), 1.0)?);
    out.push(fixture("path-12-unit", path(&[1.0; 11]), 2.0)?);
    let w: Vec<f64> = (0..30).map(|_| weight(&mut rng)).collect();
    out.push(fixture("path-31-weighted", path(&w), 6.0)?);
    out.push(fixture("star-4", star(&[1.0; 4]), 1.0)?);
    let w: Vec<f64> = (0..20).map(|_| weight(&mut rng)).collect();
    out.push(fixture("star-20-weighted", star(&w), 4.0)?);
    for k in [3, 5, 8] {
        out.push(fixture(format!("grid-{k}x{k}"), grid(k, |_, _| 1.0), 1.0)?);
    }
    out.push(fixture("grid-4x4-delta2", grid(4, |_, _| 1.0), 2.0)?);
    out.push(fixture("grid-6x6-delta4", grid(6, |_, _| 1.0), 4.0)?);
    out.push(fixture("grid-6x6-weighted", grid(6, |u, v| ((u * 7 + v * 3) % 10 + 1) as f64), 5.0)?);
    for (i, n) in [10usize, 25, 40, 60].into_iter().enumerate() {
        out.push(fixture(format!("series-parallel-{n}"), series_parallel(n, 100 + i as u64), 6.0)?);
    }
    for (i, (n, k, keep)) in [(20usize, 2usize, 0.5), (40, 2, 0.3), (50, 3, 0.4), (70, 3, 0.25), (100, 2, 0.3), (100, 3, 0.2), (80, 4, 0.15)]
        .into_iter()
        .enumerate()
    {
        out.push(fixture(format!("partial-{k}-tree-{n}"), partial_k_tree(n, k, keep, 200 + i as u64), 5.0)?);
    }
    for (n, extra, seed) in [(30usize, 8usize, 300u64), (60, 12, 301)] {
        let g = random_connected(n, extra, seed)?;
        let td = min_degree_decomposition(&g)?;
        out.push(fixture(format!("random-{n}"), Ok((g, td)), 12.0)?);
    }
    Ok(out)
}
