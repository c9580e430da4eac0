//! Weighted-graph representation and the exact shortest-path machinery used
//! both as protocol ground truth and as checker oracle.
//!
//! Graphs are connected, undirected, positively weighted, with no self-loops
//! and no parallel edges. Vertices are internal indices `0..n`. All distance
//! arithmetic is plain `f64`; test fixtures stick to small integer weights so
//! oracle comparisons stay exact.

use std::collections::BinaryHeap;
use std::fmt::Write as _;

use thiserror::Error;

/// Comparison tolerance used by checkers and tie tests.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(usize, usize),
    #[error("vertex index {0} out of range (n = {1})")]
    BadVertex(usize, usize),
    #[error("edge {0}-{1} has non-positive weight {2}")]
    BadWeight(usize, usize, f64),
    #[error("graph is not connected")]
    Disconnected,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An undirected edge, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Connected undirected positively-weighted graph.
///
/// Edges are canonicalized (`u < v`) and sorted lexicographically, so an edge
/// index is also its lexicographic rank.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64, usize)>>, // (peer, weight, edge index)
}

impl WeightedGraph {
    pub fn new(n: usize, raw_edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        for &(a, b, w) in raw_edges {
            if a >= n {
                return Err(GraphError::BadVertex(a, n));
            }
            if b >= n {
                return Err(GraphError::BadVertex(b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight(a, b, w));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge { u, v, w });
        }
        edges.sort_by_key(|x| (x.u, x.v));
        for pair in edges.windows(2) {
            if (pair[0].u, pair[0].v) == (pair[1].u, pair[1].v) {
                return Err(GraphError::ParallelEdge(pair[0].u, pair[0].v));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, e.w, i));
            adj[e.v].push((e.u, e.w, i));
        }
        let g = WeightedGraph { n, edges, adj };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Edge {
        self.edges[i]
    }

    /// Neighbors of `v` as `(peer, weight, edge index)`.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64, usize)] {
        &self.adj[v]
    }

    /// Index of edge `a-b`, if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&(u, v)))
            .ok()
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(0.0, f64::max)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(p, _, _) in &self.adj[v] {
                if !seen[p] {
                    seen[p] = true;
                    count += 1;
                    stack.push(p);
                }
            }
        }
        count == self.n
    }

    /// Whether the graph stays connected after removing edge `i`.
    pub fn connected_without(&self, i: usize) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(p, _, ei) in &self.adj[v] {
                if ei != i && !seen[p] {
                    seen[p] = true;
                    count += 1;
                    stack.push(p);
                }
            }
        }
        count == self.n
    }

    /// Parse the line-oriented text format: first line `n m`, then `m` lines
    /// `u v w`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first_no, first) = lines.next().ok_or(GraphError::Parse {
            line: 0,
            msg: "empty file".into(),
        })?;
        let mut it = first.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(GraphError::Parse {
                line: first_no,
                msg: "expected `n m`".into(),
            })?;
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(GraphError::Parse {
                line: first_no,
                msg: "expected `n m`".into(),
            })?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (no, line) = lines.next().ok_or(GraphError::Parse {
                line: first_no,
                msg: format!("expected {} edge lines", m),
            })?;
            let mut it = line.split_whitespace();
            let u: Option<usize> = it.next().and_then(|t| t.parse().ok());
            let v: Option<usize> = it.next().and_then(|t| t.parse().ok());
            let w: Option<f64> = it.next().and_then(|t| t.parse().ok());
            match (u, v, w) {
                (Some(u), Some(v), Some(w)) => edges.push((u, v, w)),
                _ => {
                    return Err(GraphError::Parse {
                        line: no,
                        msg: "expected `u v w`".into(),
                    })
                }
            }
        }
        Self::new(n, &edges)
    }

    /// Render in the same text format `parse` accepts.
    pub fn format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
        }
        out
    }
}

/// A vertex, or a dummy point on an edge at offset `alpha` from the
/// lower-index endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneralNode {
    Vertex(usize),
    /// `alpha` is measured from `edge.0` (the smaller internal index).
    EdgePoint { edge: (usize, usize), alpha: f64 },
}

impl GeneralNode {
    /// Collapse exact-endpoint edge points onto the endpoint vertex.
    pub fn normalized(self, g: &WeightedGraph) -> GeneralNode {
        match self {
            GeneralNode::Vertex(_) => self,
            GeneralNode::EdgePoint { edge: (u, v), alpha } => {
                let i = g.edge_index(u, v).expect("edge point on a non-edge");
                let w = g.edge(i).w;
                if alpha == 0.0 {
                    GeneralNode::Vertex(u.min(v))
                } else if alpha == w {
                    GeneralNode::Vertex(u.max(v))
                } else {
                    GeneralNode::EdgePoint {
                        edge: (u.min(v), u.max(v)),
                        alpha,
                    }
                }
            }
        }
    }
}

impl std::fmt::Display for GeneralNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneralNode::Vertex(v) => write!(f, "vertex {}", v),
            GeneralNode::EdgePoint { edge, alpha } => {
                write!(f, "edge {}-{} @ {}", edge.0, edge.1, alpha)
            }
        }
    }
}

/// Exact all-pairs distances plus the fewest hop count among weight-shortest
/// paths (round complexity is stated in hops).
#[derive(Debug, Clone)]
pub struct DistanceTable {
    pub dist: Vec<Vec<f64>>,
    pub hops: Vec<Vec<u32>>,
}

/// Dijkstra from every vertex, relaxing on `(weight, hops)` lexicographically.
pub fn all_pairs_distances(g: &WeightedGraph) -> DistanceTable {
    let n = g.n();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    let mut hops = vec![vec![u32::MAX; n]; n];
    for s in 0..n {
        let (d, h) = dijkstra(g, s);
        dist[s] = d;
        hops[s] = h;
    }
    DistanceTable { dist, hops }
}

/// Single-source shortest paths; returns (distance, min-hops-among-shortest).
pub fn dijkstra(g: &WeightedGraph, s: usize) -> (Vec<f64>, Vec<u32>) {
    #[derive(PartialEq)]
    struct Entry(f64, u32, usize);
    impl Eq for Entry {}
    impl Ord for Entry {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            // reversed: BinaryHeap is a max-heap
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1)).then(o.2.cmp(&self.2))
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }

    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![u32::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    hops[s] = 0;
    heap.push(Entry(0.0, 0, s));
    while let Some(Entry(d, h, v)) = heap.pop() {
        if d > dist[v] || (d == dist[v] && h > hops[v]) {
            continue;
        }
        for &(p, w, _) in g.neighbors(v) {
            let nd = d + w;
            let nh = h + 1;
            if nd < dist[p] || (nd == dist[p] && nh < hops[p]) {
                dist[p] = nd;
                hops[p] = nh;
                heap.push(Entry(nd, nh, p));
            }
        }
    }
    (dist, hops)
}

/// d(γ, z): for an edge point, `min(α + d(u,z), ω − α + d(v,z))`.
pub fn general_distance(g: &WeightedGraph, dt: &DistanceTable, gamma: GeneralNode, z: usize) -> f64 {
    match gamma {
        GeneralNode::Vertex(v) => dt.dist[v][z],
        GeneralNode::EdgePoint { edge: (a, b), alpha } => {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            let i = g.edge_index(u, v).expect("edge point on a non-edge");
            let w = g.edge(i).w;
            (alpha + dt.dist[u][z]).min(w - alpha + dt.dist[v][z])
        }
    }
}

/// s(γ) = max over vertices of d(γ, z).
pub fn separation(g: &WeightedGraph, dt: &DistanceTable, gamma: GeneralNode) -> f64 {
    (0..g.n())
        .map(|z| general_distance(g, dt, gamma, z))
        .fold(0.0, f64::max)
}

/// (D, R, hop diameter): max and min vertex separation, max hop entry.
pub fn diameter_radius(g: &WeightedGraph, dt: &DistanceTable) -> (f64, f64, u32) {
    let mut d = 0.0f64;
    let mut r = f64::INFINITY;
    let mut hd = 0u32;
    for v in 0..g.n() {
        let s = dt.dist[v].iter().copied().fold(0.0, f64::max);
        d = d.max(s);
        r = r.min(s);
        hd = hd.max(*dt.hops[v].iter().max().unwrap());
    }
    if g.n() == 1 {
        r = 0.0;
    }
    (d, r, hd)
}

/// Tie-breaking order for parent/side selection: a rank per vertex. The
/// default order ranks by internal index; the checker substitutes the
/// protocol's assigned process IDs so both sides resolve ties identically.
#[derive(Debug, Clone)]
pub struct TieOrder {
    rank: Vec<u64>,
}

impl TieOrder {
    pub fn identity(n: usize) -> Self {
        TieOrder {
            rank: (0..n as u64).collect(),
        }
    }

    /// Order by externally assigned ids (one per vertex, distinct).
    pub fn from_ids(ids: &[u64]) -> Self {
        TieOrder { rank: ids.to_vec() }
    }

    pub fn rank(&self, v: usize) -> u64 {
        self.rank[v]
    }

    /// Endpoints of an edge with the lower-ranked one first.
    pub fn orient(&self, u: usize, v: usize) -> (usize, usize) {
        if self.rank[u] <= self.rank[v] {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// Lexicographic key of an edge under this order.
    pub fn edge_key(&self, e: &Edge) -> (u64, u64) {
        let (p, q) = self.orient(e.u, e.v);
        (self.rank[p], self.rank[q])
    }
}

/// Spanning tree of the graph, rooted at a general node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    /// Edges as `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub root: GeneralNode,
}

/// Shortest-path tree rooted at a general node, parent ties broken by the
/// given vertex order (smaller rank preferred).
///
/// For an interior edge point each vertex routes through the endpoint side
/// with the smaller entry cost (ties to the lower-ranked endpoint); the edge
/// carrying the root joins the two sides whenever both are used.
pub fn shortest_path_tree_ordered(
    g: &WeightedGraph,
    dt: &DistanceTable,
    root: GeneralNode,
    order: &TieOrder,
) -> SpanningTree {
    let root = root.normalized(g);
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(g.n().saturating_sub(1));
    match root {
        GeneralNode::Vertex(r) => {
            for z in 0..g.n() {
                if z != r {
                    let p = spt_parent(g, dt, r, z, order);
                    edges.push(norm_pair(p, z));
                }
            }
        }
        GeneralNode::EdgePoint { edge: (a, b), alpha } => {
            let i = g.edge_index(a, b).expect("edge point on a non-edge");
            let w = g.edge(i).w;
            // Orient by rank; alpha is stored from the lower internal index.
            let (p, q) = order.orient(a, b);
            let ap = if p == a { alpha } else { w - alpha };
            let side_p = |z: usize| ap + dt.dist[p][z] <= (w - ap) + dt.dist[q][z];
            let any_q = (0..g.n()).any(|z| !side_p(z));
            let all_q = (0..g.n()).all(|z| !side_p(z));
            if !any_q || all_q {
                // One side swallows everything: the entry endpoint is an
                // ordinary vertex root.
                let r = if all_q { q } else { p };
                for z in 0..g.n() {
                    if z != r {
                        let par = spt_parent(g, dt, r, z, order);
                        edges.push(norm_pair(par, z));
                    }
                }
            } else {
                edges.push(norm_pair(a, b));
                for z in 0..g.n() {
                    if z == p || z == q {
                        continue;
                    }
                    let side = if side_p(z) { p } else { q };
                    let par = spt_parent(g, dt, side, z, order);
                    edges.push(norm_pair(par, z));
                }
            }
        }
    }
    edges.sort_unstable();
    SpanningTree { edges, root }
}

pub fn shortest_path_tree(g: &WeightedGraph, dt: &DistanceTable, root: GeneralNode) -> SpanningTree {
    shortest_path_tree_ordered(g, dt, root, &TieOrder::identity(g.n()))
}

/// Lowest-ranked neighbor of `z` lying on a weight-shortest `r → z` path.
fn spt_parent(g: &WeightedGraph, dt: &DistanceTable, r: usize, z: usize, order: &TieOrder) -> usize {
    let mut best: Option<usize> = None;
    for &(p, w, _) in g.neighbors(z) {
        if (dt.dist[r][p] + w - dt.dist[r][z]).abs() <= TOL {
            best = match best {
                Some(b) if order.rank(b) <= order.rank(p) => Some(b),
                _ => Some(p),
            };
        }
    }
    best.expect("no shortest-path predecessor; distance table inconsistent")
}

fn norm_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Per-vertex distances inside a spanning tree (weights from the graph).
pub fn tree_distances(g: &WeightedGraph, t: &SpanningTree) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &t.edges {
        let i = g.edge_index(u, v).expect("tree edge missing from graph");
        let w = g.edge(i).w;
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut all = vec![vec![f64::INFINITY; n]; n];
    for s in 0..n {
        let d = &mut all[s];
        d[s] = 0.0;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            let dv = d[v];
            for &(p, w) in &adj[v] {
                if d[p].is_infinite() {
                    d[p] = dv + w;
                    stack.push(p);
                }
            }
        }
    }
    all
}

/// Maximum pairwise path weight inside the tree.
pub fn tree_diameter(g: &WeightedGraph, t: &SpanningTree) -> f64 {
    tree_distances(g, t)
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max)
}

/// Whether an edge set forms a spanning tree of `g`.
pub fn is_spanning_tree(g: &WeightedGraph, edges: &[(usize, usize)]) -> bool {
    let n = g.n();
    if edges.len() + 1 != n {
        return false;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v) in edges {
        if g.edge_index(u, v).is_none() {
            return false;
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return false;
        }
        parent[ru] = rv;
    }
    true
}
