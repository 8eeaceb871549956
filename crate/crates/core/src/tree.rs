//! Tree decompositions, tree partitions, and the copy-based conversion from the
//! former to the latter.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Vertex, VertexSet, WeightedGraph};

/// A rooted tree over nodes `0..len` with constant-time ancestry queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    level: Vec<usize>,
    preorder: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    root: usize,
}

impl RootedTree {
    /// Builds the tree from parent pointers. Exactly one node must have no parent
    /// and every node must reach it.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        let len = parent.len();
        if len == 0 {
            return Err(Error::invalid("tree has no nodes"));
        }
        let roots: Vec<usize> = (0..len).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::invalid(format!("tree must have exactly one root, found {}", roots.len())));
        }
        let mut children = vec![Vec::new(); len];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= len {
                    return Err(Error::invalid(format!("node {i} has out-of-range parent {p}")));
                }
                children[p].push(i);
            }
        }
        let root = roots[0];
        let mut level = vec![usize::MAX; len];
        let mut preorder = Vec::with_capacity(len);
        let mut tin = vec![0; len];
        let mut tout = vec![0; len];
        // iterative DFS; children visited in ascending id order
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        level[root] = 0;
        let mut clock = 0;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next == 0 {
                tin[node] = clock;
                clock += 1;
                preorder.push(node);
            }
            if *next < children[node].len() {
                let c = children[node][*next];
                *next += 1;
                if level[c] != usize::MAX {
                    return Err(Error::invalid("parent pointers contain a cycle"));
                }
                level[c] = level[node] + 1;
                stack.push((c, 0));
            } else {
                tout[node] = clock;
                stack.pop();
            }
        }
        if preorder.len() != len {
            return Err(Error::invalid("parent pointers do not form a single tree"));
        }
        Ok(RootedTree {
            parent,
            children,
            level,
            preorder,
            tin,
            tout,
            root,
        })
    }

    /// Roots an undirected edge list at `root`.
    pub fn from_edges(len: usize, edges: &[(usize, usize)], root: usize) -> Result<Self> {
        if len == 0 || root >= len {
            return Err(Error::invalid("invalid root for tree"));
        }
        if edges.len() + 1 != len {
            return Err(Error::invalid(format!(
                "a tree on {len} nodes needs {} edges, got {}",
                len - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); len];
        for &(a, b) in edges {
            if a >= len || b >= len || a == b {
                return Err(Error::invalid(format!("invalid tree edge ({a},{b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![None; len];
        let mut seen = vec![false; len];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let mut next = adj[u].clone();
            next.sort_unstable();
            for v in next {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("tree edges do not connect all nodes"));
        }
        Self::from_parents(parent)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Hop distance from the root.
    pub fn level(&self, node: usize) -> usize {
        self.level[node]
    }

    /// Nodes in depth-first preorder (children by ascending id).
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// True when `a` is an ancestor of `b` or `a == b`.
    #[inline]
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.tin[a] <= self.tin[b] && self.tout[b] <= self.tout[a]
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }
}

/// Tree decomposition rooted at its first bag.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeDecomposition {
    bags: Vec<Vec<Vertex>>,
    tree: RootedTree,
    vertex_count: usize,
}

impl TreeDecomposition {
    /// Validates all three decomposition axioms against `g`.
    pub fn new(g: &WeightedGraph, bags: Vec<Vec<Vertex>>, tree_edges: &[(usize, usize)]) -> Result<Self> {
        let n = g.vertex_count();
        let mut bags = bags;
        for (i, bag) in bags.iter_mut().enumerate() {
            bag.sort_unstable();
            bag.dedup();
            if let Some(&v) = bag.iter().find(|&&v| v >= n) {
                return Err(Error::invalid(format!("bag {} references unknown vertex {}", i + 1, v + 1)));
            }
        }
        let tree = RootedTree::from_edges(bags.len(), tree_edges, 0)?;
        let td = TreeDecomposition {
            bags,
            tree,
            vertex_count: n,
        };
        td.validate(g)?;
        Ok(td)
    }

    fn validate(&self, g: &WeightedGraph) -> Result<()> {
        let n = g.vertex_count();
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                holders[v].push(i);
            }
        }
        if let Some(v) = (0..n).find(|&v| holders[v].is_empty()) {
            return Err(Error::invalid(format!("vertex {} is in no bag", v + 1)));
        }
        for &(u, v, _) in g.edges() {
            let covered = holders[u].iter().any(|b| self.bags[*b].binary_search(&v).is_ok());
            if !covered {
                return Err(Error::invalid(format!("edge {{{},{}}} is not covered by any bag", u + 1, v + 1)));
            }
        }
        // bags holding v are connected iff exactly one of them has its parent outside the set
        for v in 0..n {
            let tops = holders[v]
                .iter()
                .filter(|&&b| match self.tree.parent(b) {
                    None => true,
                    Some(p) => self.bags[p].binary_search(&v).is_err(),
                })
                .count();
            if tops != 1 {
                return Err(Error::invalid(format!(
                    "bags containing vertex {} do not form a connected subtree",
                    v + 1
                )));
            }
        }
        Ok(())
    }

    /// Parses PACE-2017 `.td` text and validates it against `g`.
    pub fn parse_pace(text: &str, g: &WeightedGraph) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut bags: Vec<Option<Vec<Vertex>>> = Vec::new();
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("cannot parse `{s}`")))
            };
            match tok[0] {
                "s" => {
                    if tok.len() != 5 || tok[1] != "td" {
                        return Err(Error::parse(lineno, "expected `s td <bags> <max-bag> <n>`"));
                    }
                    if header.is_some() {
                        return Err(Error::parse(lineno, "duplicate header"));
                    }
                    let (nb, mb, n) = (num(tok[2])?, num(tok[3])?, num(tok[4])?);
                    if n != g.vertex_count() {
                        return Err(Error::parse(
                            lineno,
                            format!("decomposition is for {n} vertices, graph has {}", g.vertex_count()),
                        ));
                    }
                    header = Some((nb, mb, n));
                    bags = vec![None; nb];
                }
                "b" => {
                    let (nb, _, n) = header.ok_or_else(|| Error::parse(lineno, "bag before header"))?;
                    if tok.len() < 2 {
                        return Err(Error::parse(lineno, "expected `b <id> <v...>`"));
                    }
                    let id = num(tok[1])?;
                    if id == 0 || id > nb {
                        return Err(Error::parse(lineno, format!("bag id {id} outside 1..={nb}")));
                    }
                    if bags[id - 1].is_some() {
                        return Err(Error::parse(lineno, format!("bag {id} defined twice")));
                    }
                    let mut verts = Vec::with_capacity(tok.len() - 2);
                    for t in &tok[2..] {
                        let v = num(t)?;
                        if v == 0 || v > n {
                            return Err(Error::parse(lineno, format!("bag {id} references unknown vertex {v}")));
                        }
                        verts.push(v - 1);
                    }
                    bags[id - 1] = Some(verts);
                }
                _ => {
                    let (nb, _, _) = header.ok_or_else(|| Error::parse(lineno, "tree edge before header"))?;
                    if tok.len() != 2 {
                        return Err(Error::parse(lineno, "expected tree edge `<id> <id>`"));
                    }
                    let (a, b) = (num(tok[0])?, num(tok[1])?);
                    if a == 0 || b == 0 || a > nb || b > nb {
                        return Err(Error::parse(lineno, format!("tree edge ({a},{b}) references unknown bag")));
                    }
                    edges.push((a - 1, b - 1));
                }
            }
        }
        let (_, max_bag, _) = header.ok_or_else(|| Error::parse(0, "missing `s td` header"))?;
        let bags: Vec<Vec<Vertex>> = bags
            .into_iter()
            .enumerate()
            .map(|(i, b)| b.ok_or_else(|| Error::parse(0, format!("bag {} missing", i + 1))))
            .collect::<Result<_>>()?;
        let td = TreeDecomposition::new(g, bags, &edges)?;
        if td.max_bag_size() != max_bag {
            return Err(Error::parse(
                0,
                format!("header announces max bag size {max_bag}, actual {}", td.max_bag_size()),
            ));
        }
        Ok(td)
    }

    pub fn to_pace(&self) -> String {
        let mut out = String::new();
        writeln!(out, "s td {} {} {}", self.bags.len(), self.max_bag_size(), self.vertex_count).unwrap();
        for (i, bag) in self.bags.iter().enumerate() {
            write!(out, "b {}", i + 1).unwrap();
            for v in bag {
                write!(out, " {}", v + 1).unwrap();
            }
            out.push('\n');
        }
        for node in 0..self.tree.len() {
            if let Some(p) = self.tree.parent(node) {
                writeln!(out, "{} {}", p + 1, node + 1).unwrap();
            }
        }
        out
    }

    pub fn bags(&self) -> &[Vec<Vertex>] {
        &self.bags
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn max_bag_size(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Treewidth convention: max bag size minus one.
    pub fn width(&self) -> usize {
        self.max_bag_size().saturating_sub(1)
    }
}

/// Rooted tree of pairwise-disjoint bags; every edge lies inside one bag or
/// across a parent-child pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePartition {
    bags: Vec<Vec<Vertex>>,
    tree: RootedTree,
    bag_of: Vec<usize>,
}

impl TreePartition {
    pub fn new(g: &WeightedGraph, bags: Vec<Vec<Vertex>>, parent: Vec<Option<usize>>) -> Result<Self> {
        if bags.len() != parent.len() {
            return Err(Error::invalid("bag count and parent count differ"));
        }
        let tree = RootedTree::from_parents(parent)?;
        let n = g.vertex_count();
        let mut bag_of = vec![usize::MAX; n];
        let mut bags = bags;
        for (i, bag) in bags.iter_mut().enumerate() {
            bag.sort_unstable();
            for &v in bag.iter() {
                if v >= n {
                    return Err(Error::invalid(format!("bag {i} references unknown vertex {v}")));
                }
                if bag_of[v] != usize::MAX {
                    return Err(Error::invalid(format!("vertex {v} appears in bags {} and {i}", bag_of[v])));
                }
                bag_of[v] = i;
            }
        }
        if let Some(v) = (0..n).find(|&v| bag_of[v] == usize::MAX) {
            return Err(Error::invalid(format!("vertex {v} is in no bag")));
        }
        for &(u, v, _) in g.edges() {
            let (a, b) = (bag_of[u], bag_of[v]);
            let ok = a == b || tree.parent(a) == Some(b) || tree.parent(b) == Some(a);
            if !ok {
                return Err(Error::invalid(format!(
                    "edge {{{u},{v}}} joins bags {a} and {b} which are not parent and child"
                )));
            }
        }
        Ok(TreePartition { bags, tree, bag_of })
    }

    pub fn bags(&self) -> &[Vec<Vertex>] {
        &self.bags
    }

    pub fn bag(&self, i: usize) -> &[Vertex] {
        &self.bags[i]
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn vertex_count(&self) -> usize {
        self.bag_of.len()
    }

    pub fn bag_of(&self, v: Vertex) -> usize {
        self.bag_of[v]
    }

    /// Tree-partition width: the maximum bag size.
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn level(&self, bag: usize) -> usize {
        self.tree.level(bag)
    }
}

/// A graph `H` with a tree partition and an isometric map from the original
/// graph into it.
#[derive(Clone, Debug)]
pub struct IsometricEmbedding {
    pub host: WeightedGraph,
    pub partition: TreePartition,
    /// Designated copy of each original vertex.
    pub forward: Vec<Vertex>,
    /// All copies of each original vertex, ascending.
    pub copies: Vec<Vec<Vertex>>,
    /// Original vertex of each host vertex.
    pub origin: Vec<Vertex>,
}

/// Width bookkeeping reported alongside a conversion.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WidthReport {
    pub td_width: usize,
    pub td_max_bag_size: usize,
    /// Tree-partition width as max bag size.
    pub tp_max_bag_size: usize,
    /// `td_width + 1`, the width bound quoted for the conversion.
    pub tp_width_bound: usize,
}

impl IsometricEmbedding {
    pub fn width_report(&self, td: &TreeDecomposition) -> WidthReport {
        WidthReport {
            td_width: td.width(),
            td_max_bag_size: td.max_bag_size(),
            tp_max_bag_size: self.partition.width(),
            tp_width_bound: td.width() + 1,
        }
    }

    /// The identity embedding for a graph that already comes with a tree partition.
    pub fn identity(g: &WeightedGraph, partition: TreePartition) -> Self {
        let n = g.vertex_count();
        IsometricEmbedding {
            host: g.clone(),
            partition,
            forward: (0..n).collect(),
            copies: (0..n).map(|v| vec![v]).collect(),
            origin: (0..n).collect(),
        }
    }
}

/// Replaces each vertex by one copy per bag that holds it. Copies in adjacent
/// bags are joined by zero-weight edges; each original edge is realized once,
/// in the common bag nearest the root.
pub fn td_to_tree_partition(g: &WeightedGraph, td: &TreeDecomposition) -> Result<IsometricEmbedding> {
    let n = g.vertex_count();
    let tree = td.tree();
    let key = |b: usize| (tree.level(b), b);

    let mut copy_in: Vec<Vec<(usize, Vertex)>> = vec![Vec::new(); n];
    let mut host_bags: Vec<Vec<Vertex>> = Vec::with_capacity(td.bags().len());
    let mut origin = Vec::new();
    for (b, bag) in td.bags().iter().enumerate() {
        let mut hb = Vec::with_capacity(bag.len());
        for &v in bag {
            let id = origin.len();
            origin.push(v);
            copy_in[v].push((b, id));
            hb.push(id);
        }
        host_bags.push(hb);
    }
    let find_copy = |v: Vertex, b: usize| -> Vertex {
        copy_in[v].iter().find(|&&(bb, _)| bb == b).map(|&(_, id)| id).unwrap()
    };

    let mut edges = Vec::new();
    for (b, bag) in td.bags().iter().enumerate() {
        if let Some(p) = tree.parent(b) {
            for &v in bag {
                if td.bags()[p].binary_search(&v).is_ok() {
                    edges.push((find_copy(v, b), find_copy(v, p), 0.0));
                }
            }
        }
    }
    for &(u, v, w) in g.edges() {
        let host_bag = copy_in[u]
            .iter()
            .map(|&(b, _)| b)
            .filter(|&b| td.bags()[b].binary_search(&v).is_ok())
            .min_by_key(|&b| key(b))
            .ok_or_else(|| Error::invalid(format!("edge {{{u},{v}}} has no common bag")))?;
        edges.push((find_copy(u, host_bag), find_copy(v, host_bag), w));
    }

    let host = WeightedGraph::from_edges(origin.len(), edges)?;
    let partition = TreePartition::new(&host, host_bags, tree.parents().to_vec())?;
    let forward = (0..n)
        .map(|v| copy_in[v].iter().min_by_key(|&&(b, _)| key(b)).unwrap().1)
        .collect();
    let copies = (0..n)
        .map(|v| {
            let mut c: Vec<Vertex> = copy_in[v].iter().map(|&(_, id)| id).collect();
            c.sort_unstable();
            c
        })
        .collect();
    Ok(IsometricEmbedding {
        host,
        partition,
        forward,
        copies,
        origin,
    })
}

/// Bitmap of the vertices in the subtree of `bag`.
pub fn subtree_vertices(tp: &TreePartition, bag: usize) -> VertexSet {
    let n = tp.bag_of.len();
    let mut s = VertexSet::new(n);
    for (b, vs) in tp.bags.iter().enumerate() {
        if tp.tree.is_ancestor(bag, b) {
            for &v in vs {
                s.insert(v);
            }
        }
    }
    s
}
