//! Signed graphs: storage, edge-list I/O, switching, balance detection, and
//! the generator family used as test fixtures throughout the crate.
//!
//! A signed graph is a simple undirected graph whose edges carry a sign in
//! {+1, −1}. Nodes are identified by opaque string labels mapped to dense
//! indices in first-seen order; every matrix produced by this crate is
//! indexed by that order.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper bound on connectivity resampling attempts in [`gen_random_balanced`].
const MAX_CONNECTIVITY_RESAMPLES: usize = 10_000;

/// An undirected signed graph with string node labels.
///
/// Immutable after construction. The adjacency matrix is symmetric with
/// entries in {−1, 0, +1} and zero diagonal (no self-loops, no multi-edges,
/// no weights).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedGraph {
    labels: Vec<String>,
    adj: DMatrix<i8>,
}

/// A diagonal ±1 switching vector, one sign per node.
///
/// Switching conjugates the adjacency matrix by `diag(d)`; it preserves the
/// spectrum and the balance class of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingVector {
    signs: Vec<i8>,
}

impl SwitchingVector {
    /// Builds a switching vector; every entry must be +1 or −1.
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::usage("switching vector must be non-empty"));
        }
        if let Some(pos) = signs.iter().position(|s| *s != 1 && *s != -1) {
            return Err(Error::usage(format!(
                "switching vector entry {pos} is {}, expected +1 or -1",
                signs[pos]
            )));
        }
        Ok(SwitchingVector { signs })
    }

    /// The per-node signs.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Number of nodes covered.
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    /// True when the vector covers zero nodes (never constructible).
    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

/// Outcome of balance detection on a connected signed graph.
///
/// Exactly one of `indicator` / `witness` is present: a balanced graph has a
/// ±1 faction indicator (canonicalized so node 0 is +1), an unbalanced graph
/// has a negative cycle given as a sequence of distinct node indices (the
/// closing edge from the last node back to the first is implicit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceResult {
    pub balanced: bool,
    pub indicator: Option<SwitchingVector>,
    pub witness: Option<Vec<usize>>,
}

/// Validates a node label for round-trippable edge-list serialization.
fn validate_label(label: &str) -> Result<()> {
    if label.is_empty() {
        return Err(Error::data("empty node label"));
    }
    if label.starts_with('#') {
        return Err(Error::data(format!(
            "node label {label:?} starts with '#', which marks comment lines"
        )));
    }
    if label.contains(['\t', '\n', '\r']) {
        return Err(Error::data(format!(
            "node label {label:?} contains a tab or line break"
        )));
    }
    Ok(())
}

impl SignedGraph {
    /// Builds a graph from explicit labels and a {−1,0,+1} adjacency matrix.
    pub fn from_adjacency(labels: Vec<String>, adj: DMatrix<i8>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::data("graph must have at least one node"));
        }
        if adj.nrows() != n || adj.ncols() != n {
            return Err(Error::data(format!(
                "adjacency is {}x{} but there are {n} labels",
                adj.nrows(),
                adj.ncols()
            )));
        }
        for label in &labels {
            validate_label(label)?;
        }
        {
            let mut seen = std::collections::HashSet::new();
            for label in &labels {
                if !seen.insert(label.as_str()) {
                    return Err(Error::data(format!("duplicate node label {label:?}")));
                }
            }
        }
        for i in 0..n {
            if adj[(i, i)] != 0 {
                return Err(Error::data(format!("self-loop on node {:?}", labels[i])));
            }
            for j in 0..n {
                let s = adj[(i, j)];
                if s != -1 && s != 0 && s != 1 {
                    return Err(Error::data(format!(
                        "adjacency entry ({i},{j}) is {s}, expected -1, 0, or +1"
                    )));
                }
                if adj[(j, i)] != s {
                    return Err(Error::data(format!(
                        "adjacency is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(SignedGraph { labels, adj })
    }

    /// Builds a graph from an edge list over string labels.
    ///
    /// Labels are assigned indices in first-seen order. Duplicate edges with
    /// the same sign are idempotent; conflicting signs are a data error.
    pub fn from_edges(edges: &[(String, String, i8)]) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut resolved: Vec<(usize, usize, i8)> = Vec::with_capacity(edges.len());
        for (u, v, s) in edges {
            let mut id_of = |label: &String| -> Result<usize> {
                if let Some(&i) = index.get(label) {
                    return Ok(i);
                }
                validate_label(label)?;
                let i = labels.len();
                labels.push(label.clone());
                index.insert(label.clone(), i);
                Ok(i)
            };
            let iu = id_of(u)?;
            let iv = id_of(v)?;
            resolved.push((iu, iv, *s));
        }
        let n = labels.len();
        let mut adj = DMatrix::<i8>::zeros(n, n);
        for (k, &(iu, iv, s)) in resolved.iter().enumerate() {
            if s != 1 && s != -1 {
                return Err(Error::data(format!(
                    "edge {k} has sign {s}, expected +1 or -1"
                )));
            }
            if iu == iv {
                return Err(Error::data(format!(
                    "self-loop on node {:?}",
                    labels[iu]
                )));
            }
            let existing = adj[(iu, iv)];
            if existing != 0 && existing != s {
                return Err(Error::data(format!(
                    "conflicting signs for edge {:?} -- {:?}",
                    labels[iu], labels[iv]
                )));
            }
            adj[(iu, iv)] = s;
            adj[(iv, iu)] = s;
        }
        SignedGraph::from_adjacency(labels, adj)
    }

    /// Parses the edge-list text format.
    ///
    /// One edge per line: `u`, `v`, `s` separated by a single tab or comma,
    /// with `s` one of `+1`, `-1`, `+`, `-`. Lines starting with `#` and
    /// blank lines are ignored. Labels are taken verbatim.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges: Vec<(String, String, i8)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').collect()
            } else {
                line.split(',').collect()
            };
            if fields.len() != 3 {
                return Err(Error::data(format!(
                    "line {}: expected 3 fields (u, v, sign), found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let sign = match fields[2] {
                "+1" | "+" => 1i8,
                "-1" | "-" => -1i8,
                other => {
                    return Err(Error::data(format!(
                        "line {}: invalid sign {other:?}, expected +1, -1, +, or -",
                        lineno + 1
                    )))
                }
            };
            edges.push((fields[0].to_string(), fields[1].to_string(), sign));
        }
        if edges.is_empty() {
            return Err(Error::data("edge list contains no edges"));
        }
        SignedGraph::from_edges(&edges)
    }

    /// Serializes to the edge-list text format (tab-separated, `+1`/`-1`),
    /// one edge per line in index order `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j, s) in self.edges() {
            out.push_str(&self.labels[i]);
            out.push('\t');
            out.push_str(&self.labels[j]);
            out.push('\t');
            out.push_str(if s > 0 { "+1" } else { "-1" });
            out.push('\n');
        }
        out
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Node labels in index order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Label of node `i`.
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Index of the node with the given label, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Sign of the edge between `i` and `j` (0 when absent).
    pub fn sign(&self, i: usize, j: usize) -> i8 {
        self.adj[(i, j)]
    }

    /// The signed adjacency matrix as `f64`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        self.adj.map(|s| s as f64)
    }

    /// The signed adjacency matrix with integer entries.
    pub fn adjacency_i64(&self) -> DMatrix<i64> {
        self.adj.map(|s| s as i64)
    }

    /// Iterates edges as `(i, j, sign)` with `i < j`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let s = self.adj[(i, j)];
                (s != 0).then_some((i, j, s))
            })
        })
    }

    /// Iterates the neighbors of `i` as `(j, sign)` in index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let n = self.n();
        (0..n).filter_map(move |j| {
            let s = self.adj[(i, j)];
            (s != 0).then_some((j, s))
        })
    }

    /// The underlying unsigned graph |Σ| (all edge signs made positive).
    pub fn underlying(&self) -> SignedGraph {
        SignedGraph {
            labels: self.labels.clone(),
            adj: self.adj.map(|s| s.abs()),
        }
    }

    /// Switches the graph by `d`: the edge (i,j) sign becomes d_i·σ(i,j)·d_j.
    ///
    /// Switching is an involution and preserves the spectrum and balance
    /// class of the graph.
    pub fn switch(&self, d: &SwitchingVector) -> Result<SignedGraph> {
        if d.len() != self.n() {
            return Err(Error::usage(format!(
                "switching vector has {} entries but the graph has {} nodes",
                d.len(),
                self.n()
            )));
        }
        let n = self.n();
        let mut adj = self.adj.clone();
        for i in 0..n {
            for j in 0..n {
                adj[(i, j)] = d.signs()[i] * self.adj[(i, j)] * d.signs()[j];
            }
        }
        Ok(SignedGraph {
            labels: self.labels.clone(),
            adj,
        })
    }

    /// True when the graph is connected (a single node counts as connected).
    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Connected components as sorted index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            let mut comp = vec![start];
            while let Some(u) = queue.pop_front() {
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// True when both graphs have the same label set and the same signed
    /// edges between labels, regardless of internal index order.
    ///
    /// This is the equality the edge-list format can round-trip; `==`
    /// additionally requires identical first-seen index order.
    pub fn same_labeled_graph(&self, other: &SignedGraph) -> bool {
        let canon = |g: &SignedGraph| -> (
            std::collections::BTreeSet<String>,
            std::collections::BTreeSet<(String, String, i8)>,
        ) {
            let nodes = g.labels.iter().cloned().collect();
            let edges = g
                .edges()
                .map(|(i, j, s)| {
                    let (a, b) = (&g.labels[i], &g.labels[j]);
                    if a <= b {
                        (a.clone(), b.clone(), s)
                    } else {
                        (b.clone(), a.clone(), s)
                    }
                })
                .collect();
            (nodes, edges)
        };
        canon(self) == canon(other)
    }

    /// The induced subgraph on the given (sorted, distinct) node indices.
    pub fn subgraph(&self, nodes: &[usize]) -> Result<SignedGraph> {
        let labels: Vec<String> = nodes
            .iter()
            .map(|&i| {
                self.labels
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::usage(format!("node index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        let k = nodes.len();
        let mut adj = DMatrix::<i8>::zeros(k, k);
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                adj[(a, b)] = self.adj[(i, j)];
            }
        }
        SignedGraph::from_adjacency(labels, adj)
    }
}

/// Loads a signed graph from an edge-list file.
pub fn load_edge_list(path: &std::path::Path) -> Result<SignedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::usage(format!("cannot read {}: {e}", path.display()))
    })?;
    SignedGraph::parse_edge_list(&text)
}

/// Decides structural balance of a connected signed graph by BFS 2-coloring.
///
/// Balanced graphs yield a faction indicator (node 0 fixed to +1); unbalanced
/// graphs yield a negative-cycle witness: the fundamental cycle closed by the
/// first sign-violating edge in BFS order.
pub fn detect_balance(g: &SignedGraph) -> Result<BalanceResult> {
    if !g.is_connected() {
        return Err(Error::data(
            "balance detection requires a connected graph; analyze components separately",
        ));
    }
    let n = g.n();
    let mut color = vec![0i8; n];
    let mut parent = vec![usize::MAX; n];
    color[0] = 1;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for (v, s) in g.neighbors(u) {
            let expected = color[u] * s;
            if color[v] == 0 {
                color[v] = expected;
                parent[v] = u;
                queue.push_back(v);
            } else if color[v] != expected {
                return Ok(BalanceResult {
                    balanced: false,
                    indicator: None,
                    witness: Some(fundamental_cycle(&parent, u, v)),
                });
            }
        }
    }
    Ok(BalanceResult {
        balanced: true,
        indicator: Some(SwitchingVector::new(color).expect("BFS colors every node ±1")),
        witness: None,
    })
}

/// Closes the BFS tree paths of `u` and `v` into the fundamental cycle of
/// edge (u,v): `lca → … → u`, then the edge to `v`, then `v → … → lca`.
fn fundamental_cycle(parent: &[usize], u: usize, v: usize) -> Vec<usize> {
    let ancestors = |mut x: usize| -> Vec<usize> {
        let mut path = vec![x];
        while parent[x] != usize::MAX {
            x = parent[x];
            path.push(x);
        }
        path
    };
    let up_u = ancestors(u);
    let up_v = ancestors(v);
    let in_up_u: std::collections::HashSet<usize> = up_u.iter().copied().collect();
    let lca = *up_v
        .iter()
        .find(|x| in_up_u.contains(x))
        .expect("BFS tree paths share the root");
    let mut cycle: Vec<usize> = up_u
        .iter()
        .take_while(|&&x| x != lca)
        .copied()
        .collect::<Vec<_>>();
    cycle.push(lca);
    cycle.reverse(); // lca → … → u
    for &x in up_v.iter().take_while(|&&x| x != lca) {
        cycle.push(x); // v first, then its ancestors; the last one closes to lca
    }
    // Reads lca → … → u → v → … with the tree edge back to lca implicit;
    // the violating edge (u,v) sits in the middle.
    cycle
}

/// Balance results per connected component, ordered by smallest member;
/// indices in each result refer to the accompanying component node list.
pub fn detect_balance_per_component(
    g: &SignedGraph,
) -> Result<Vec<(Vec<usize>, BalanceResult)>> {
    g.components()
        .into_iter()
        .map(|comp| {
            let sub = g.subgraph(&comp)?;
            let res = detect_balance(&sub)?;
            Ok((comp, res))
        })
        .collect()
}

/// Sign product along a closed node sequence (the edge from the last node
/// back to the first is included); `None` if some step is not an edge.
pub fn cycle_sign(g: &SignedGraph, cycle: &[usize]) -> Option<i8> {
    if cycle.len() < 3 {
        return None;
    }
    let mut product = 1i8;
    for w in 0..cycle.len() {
        let a = cycle[w];
        let b = cycle[(w + 1) % cycle.len()];
        let s = g.sign(a, b);
        if s == 0 {
            return None;
        }
        product *= s;
    }
    Some(product)
}

/// Labels \"1\"..=\"n\" used by all generators.
fn numeric_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Complete graph K_n with a balanced split: the last `split` nodes form one
/// faction, the rest the other; intra-faction edges positive, cross-faction
/// edges negative. `split = 0` yields the all-positive K_n.
pub fn gen_balanced_complete(n: usize, split: usize) -> Result<SignedGraph> {
    if n < 2 {
        return Err(Error::usage("gen_balanced_complete requires n >= 2"));
    }
    if split > n / 2 {
        return Err(Error::usage(format!(
            "split {split} out of range 0..={} for n = {n}",
            n / 2
        )));
    }
    let side = |i: usize| -> i8 {
        if i < n - split {
            1
        } else {
            -1
        }
    };
    let mut adj = DMatrix::<i8>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = side(i) * side(j);
            adj[(i, j)] = s;
            adj[(j, i)] = s;
        }
    }
    SignedGraph::from_adjacency(numeric_labels(n), adj)
}

/// The signed pentagon: C5 on nodes 1..5 with exactly one negative edge
/// (between nodes 1 and 2). Unbalanced, with a doubly degenerate leading
/// eigenvalue φ (the golden ratio).
pub fn gen_pentagon() -> SignedGraph {
    let mut adj = DMatrix::<i8>::zeros(5, 5);
    let ring = [(0usize, 1usize, -1i8), (1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 0, 1)];
    for (i, j, s) in ring {
        adj[(i, j)] = s;
        adj[(j, i)] = s;
    }
    SignedGraph::from_adjacency(numeric_labels(5), adj).expect("fixed fixture is valid")
}

/// Ring of `k` all-positive cliques K_r; consecutive cliques are joined by
/// exactly one positive and one negative edge between distinct node pairs.
/// Always unbalanced: each inter-clique pair closes a negative cycle.
pub fn gen_clique_ring(k: usize, r: usize) -> Result<SignedGraph> {
    if k < 3 {
        return Err(Error::usage("gen_clique_ring requires k >= 3"));
    }
    if r < 3 {
        return Err(Error::usage("gen_clique_ring requires r >= 3"));
    }
    let n = k * r;
    let mut adj = DMatrix::<i8>::zeros(n, n);
    let mut put = |i: usize, j: usize, s: i8| {
        adj[(i, j)] = s;
        adj[(j, i)] = s;
    };
    for c in 0..k {
        let base = c * r;
        for a in 0..r {
            for b in (a + 1)..r {
                put(base + a, base + b, 1);
            }
        }
    }
    for c in 0..k {
        let base = c * r;
        let next = ((c + 1) % k) * r;
        put(base, next, 1);
        put(base + 1, next + 1, -1);
    }
    SignedGraph::from_adjacency(numeric_labels(n), adj)
}

/// Clique-with-tail fixture for the distance-vs-angle contrast: an
/// all-positive K_{q−1} on nodes 1..q−1, node q attached to node q−1 by one
/// positive edge, and node q+1 attached to node q by one negative edge.
///
/// Balanced with factions {1..q} vs {q+1}. The tail makes nodes q and q+1
/// mutually close in communicability distance while the angle still isolates
/// node q+1 — the failure mode of distance-based faction detection.
pub fn gen_pendant_clique(q: usize) -> Result<SignedGraph> {
    if q < 3 {
        return Err(Error::usage("gen_pendant_clique requires q >= 3"));
    }
    let n = q + 1;
    let mut adj = DMatrix::<i8>::zeros(n, n);
    let mut put = |i: usize, j: usize, s: i8| {
        adj[(i, j)] = s;
        adj[(j, i)] = s;
    };
    for i in 0..(q - 1) {
        for j in (i + 1)..(q - 1) {
            put(i, j, 1);
        }
    }
    put(q - 2, q - 1, 1);
    put(q - 1, q, -1);
    SignedGraph::from_adjacency(numeric_labels(n), adj)
}

/// Random connected balanced graph: Erdős–Rényi underlying graph with edge
/// probability `p` (resampled until connected), a random bipartition with
/// expected faction fraction `split_fraction`, and signs set positive within
/// factions and negative across. Deterministic given `seed`.
pub fn gen_random_balanced(
    n: usize,
    p: f64,
    split_fraction: f64,
    seed: u64,
) -> Result<SignedGraph> {
    if n < 2 {
        return Err(Error::usage("gen_random_balanced requires n >= 2"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::usage(format!("edge probability {p} not in (0, 1]")));
    }
    if !(0.0..=1.0).contains(&split_fraction) {
        return Err(Error::usage(format!(
            "split fraction {split_fraction} not in [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present = vec![false; n * n];
    for _attempt in 0..MAX_CONNECTIVITY_RESAMPLES {
        present.iter_mut().for_each(|e| *e = false);
        let mut dsu: Vec<usize> = (0..n).collect();
        fn root(dsu: &mut [usize], mut x: usize) -> usize {
            while dsu[x] != x {
                dsu[x] = dsu[dsu[x]];
                x = dsu[x];
            }
            x
        }
        let mut parts = n;
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    present[i * n + j] = true;
                    let (ri, rj) = (root(&mut dsu, i), root(&mut dsu, j));
                    if ri != rj {
                        dsu[ri] = rj;
                        parts -= 1;
                    }
                }
            }
        }
        if parts != 1 {
            continue;
        }
        let faction: Vec<i8> = (0..n)
            .map(|_| if rng.gen::<f64>() < split_fraction { -1 } else { 1 })
            .collect();
        let mut adj = DMatrix::<i8>::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if present[i * n + j] {
                    let s = faction[i] * faction[j];
                    adj[(i, j)] = s;
                    adj[(j, i)] = s;
                }
            }
        }
        return SignedGraph::from_adjacency(numeric_labels(n), adj);
    }
    Err(Error::usage(format!(
        "no connected graph sampled after {MAX_CONNECTIVITY_RESAMPLES} attempts (n = {n}, p = {p})"
    )))
}
