//! Undirected graphs on `{0, …, q-1}`: chordality, perfect clique sequences
//! and the single-edge toggle proposal used by the graph sampler.
//!
//! Chordality is decided with maximum cardinality search (MCS) followed by a
//! perfect-elimination check. The same MCS visit order yields the maximal
//! cliques in a perfect sequence, so every separator
//! `Q_k = P_k ∩ (P_1 ∪ … ∪ P_{k-1})` is contained in an earlier clique.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct UndirectedGraph {
    q: usize,
    adj: Vec<bool>,
    edges: usize,
}

impl fmt::Debug for UndirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UndirectedGraph")
            .field("q", &self.q)
            .field("edges", &self.edges())
            .finish()
    }
}

impl UndirectedGraph {
    pub fn empty(q: usize) -> Self {
        UndirectedGraph {
            q,
            adj: vec![false; q * q],
            edges: 0,
        }
    }

    pub fn complete(q: usize) -> Self {
        let mut g = Self::empty(q);
        for i in 0..q {
            for j in (i + 1)..q {
                g.add_edge(i, j);
            }
        }
        g
    }

    /// Path `0 – 1 – … – (q-1)`.
    pub fn path(q: usize) -> Self {
        let mut g = Self::empty(q);
        for i in 1..q {
            g.add_edge(i - 1, i);
        }
        g
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(q: usize, edges: I) -> Result<Self> {
        let mut g = Self::empty(q);
        for (i, j) in edges {
            if i >= q || j >= q {
                return Err(Error::Dimension(format!("edge ({i},{j}) outside {q} vertices")));
            }
            if i == j {
                return Err(Error::Validation(format!("self-loop at vertex {i}")));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.q
    }

    /// Number of edges, `|G|`.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adj[i * self.q + j]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loops are not allowed");
        if !self.adj[i * self.q + j] {
            self.adj[i * self.q + j] = true;
            self.adj[j * self.q + i] = true;
            self.edges += 1;
        }
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        if i != j && self.adj[i * self.q + j] {
            self.adj[i * self.q + j] = false;
            self.adj[j * self.q + i] = false;
            self.edges -= 1;
        }
    }

    pub fn toggle(&mut self, i: usize, j: usize) {
        if self.has_edge(i, j) {
            self.remove_edge(i, j)
        } else {
            self.add_edge(i, j)
        }
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edges);
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                if self.adj[i * self.q + j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.q).filter(move |&w| self.has_edge(v, w))
    }

    /// Total number of unordered vertex pairs, `q (q-1) / 2`.
    pub fn pair_count(&self) -> usize {
        self.q * self.q.saturating_sub(1) / 2
    }
}

/// Cliques `P_1 … P_K` in a perfect sequence with separators `Q_2 … Q_K`.
///
/// `separators[k]` belongs to `cliques[k + 1]`. Vertex sets are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueDecomposition {
    pub cliques: Vec<Vec<usize>>,
    pub separators: Vec<Vec<usize>>,
}

impl CliqueDecomposition {
    /// `P_k \ Q_k` for `k ≥ 2`, and `P_1` itself for the first clique.
    pub fn residual(&self, k: usize) -> Vec<usize> {
        if k == 0 {
            return self.cliques[0].clone();
        }
        let sep = &self.separators[k - 1];
        self.cliques[k]
            .iter()
            .copied()
            .filter(|v| !sep.contains(v))
            .collect()
    }
}

/// Maximum cardinality search: returns the visit order and, for each visited
/// vertex, its neighbors visited before it (in visit order).
fn mcs(graph: &UndirectedGraph) -> (Vec<usize>, Vec<Vec<usize>>) {
    let q = graph.q;
    let mut weight = vec![0usize; q];
    let mut visited = vec![false; q];
    let mut order = Vec::with_capacity(q);
    let mut earlier = Vec::with_capacity(q);
    for _ in 0..q {
        // smallest index among the heaviest unvisited vertices
        let mut best = usize::MAX;
        for v in 0..q {
            if !visited[v] && (best == usize::MAX || weight[v] > weight[best]) {
                best = v;
            }
        }
        let prev: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&u| graph.has_edge(best, u))
            .collect();
        visited[best] = true;
        for w in 0..q {
            if !visited[w] && graph.has_edge(best, w) {
                weight[w] += 1;
            }
        }
        order.push(best);
        earlier.push(prev);
    }
    (order, earlier)
}

/// True iff the graph is chordal (every cycle of length ≥ 4 has a chord).
pub fn is_decomposable(graph: &UndirectedGraph) -> bool {
    let (order, earlier) = mcs(graph);
    let mut position = vec![0usize; graph.q];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    for prev in &earlier {
        // the most recently visited earlier neighbor must see all the others
        if let Some(&parent) = prev.iter().max_by_key(|&&u| position[u]) {
            for &u in prev {
                if u != parent && !graph.has_edge(u, parent) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn clique_decomposition(graph: &UndirectedGraph) -> Result<CliqueDecomposition> {
    if !is_decomposable(graph) {
        return Err(Error::NotDecomposable);
    }
    let q = graph.q;
    if q == 0 {
        return Ok(CliqueDecomposition {
            cliques: vec![],
            separators: vec![],
        });
    }
    let (order, earlier) = mcs(graph);
    // v_i closes a maximal clique when the next label does not grow
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for i in 0..q {
        let closes = i + 1 == q || earlier[i + 1].len() <= earlier[i].len();
        if closes {
            let mut c = earlier[i].clone();
            c.push(order[i]);
            c.sort_unstable();
            cliques.push(c);
        }
    }
    let mut seen = vec![false; q];
    let mut separators = Vec::with_capacity(cliques.len().saturating_sub(1));
    for (k, c) in cliques.iter().enumerate() {
        if k > 0 {
            separators.push(c.iter().copied().filter(|&v| seen[v]).collect());
        }
        for &v in c {
            seen[v] = true;
        }
    }
    Ok(CliqueDecomposition {
        cliques,
        separators,
    })
}

/// Pairs `(j, j')` whose toggle keeps the graph decomposable.
pub fn decomposable_neighbors(graph: &UndirectedGraph) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut g = graph.clone();
    for i in 0..graph.q {
        for j in (i + 1)..graph.q {
            g.toggle(i, j);
            if is_decomposable(&g) {
                out.push((i, j));
            }
            g.toggle(i, j);
        }
    }
    out
}

/// Draws a pair uniformly at random and toggles it, redrawing until the
/// result is decomposable. Returns the new graph and the toggled pair.
pub fn propose_edge_toggle<R: Rng + ?Sized>(
    graph: &UndirectedGraph,
    rng: &mut R,
) -> Result<(UndirectedGraph, (usize, usize))> {
    let q = graph.q;
    if q < 2 {
        return Err(Error::Domain("edge proposals need at least two vertices".into()));
    }
    let mut g = graph.clone();
    loop {
        let i = rng.random_range(0..q);
        let mut j = rng.random_range(0..q - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        g.toggle(a, b);
        if is_decomposable(&g) {
            return Ok((g, (a, b)));
        }
        g.toggle(a, b);
    }
}
