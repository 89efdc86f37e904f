//! Ordered undirected graphs and the decomposable/homogeneous machinery.
//!
//! Vertices are `0..m` internally; file formats and reports use `1..=m`.
//! The vertex order is semantic: matrix row `i` belongs to vertex `i`, and
//! the lower-triangular structure of Cholesky factors is read off it.
//!
//! Two orderings matter for the covariance model:
//!
//! * perfect orders (`S_D`): the Cholesky factor `L` of any `Σ` with the
//!   graph's zero pattern keeps that pattern, so `(L, D) <-> Σ` is a bijection;
//! * Hasse orders (`S_H`, homogeneous graphs only): additionally `L^{-1}`
//!   keeps the pattern.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..m` with dense adjacency.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    adj: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph")
            .field("m", &self.m)
            .field("edges", &self.edges().map(|(i, j)| (i + 1, j + 1)).collect::<Vec<_>>())
            .finish()
    }
}

impl Graph {
    /// Graph with `m` vertices and no edges.
    pub fn empty(m: usize) -> Self {
        Graph {
            m,
            adj: vec![false; m * m],
            neighbors: vec![Vec::new(); m],
        }
    }

    pub fn complete(m: usize) -> Self {
        let mut g = Graph::empty(m);
        for i in 0..m {
            for j in (i + 1)..m {
                g.insert(i, j);
            }
        }
        g
    }

    /// Path `0 - 1 - ... - (m-1)`.
    pub fn path(m: usize) -> Self {
        let mut g = Graph::empty(m);
        for i in 1..m {
            g.insert(i - 1, i);
        }
        g
    }

    /// Cycle `0 - 1 - ... - (m-1) - 0`.
    pub fn cycle(m: usize) -> Self {
        let mut g = Graph::path(m);
        if m > 2 {
            g.insert(0, m - 1);
        }
        g
    }

    /// Star whose center is `center`, all other vertices being leaves.
    pub fn star(m: usize, center: usize) -> Self {
        let mut g = Graph::empty(m);
        for i in (0..m).filter(|&i| i != center) {
            g.insert(i, center);
        }
        g
    }

    /// Build from 0-based edges. Self-loops and out-of-range vertices are rejected;
    /// duplicate edges are merged.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(m);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.m || j >= self.m {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}) outside 1..={}",
                i + 1,
                j + 1,
                self.m
            )));
        }
        if i == j {
            return Err(Error::InvalidGraph(format!("self-loop at vertex {}", i + 1)));
        }
        self.insert(i, j);
        Ok(())
    }

    fn insert(&mut self, i: usize, j: usize) {
        if self.adj[i * self.m + j] {
            return;
        }
        self.adj[i * self.m + j] = true;
        self.adj[j * self.m + i] = true;
        let pos = self.neighbors[i].binary_search(&j).unwrap_err();
        self.neighbors[i].insert(pos, j);
        let pos = self.neighbors[j].binary_search(&i).unwrap_err();
        self.neighbors[j].insert(pos, i);
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.m + j]
    }

    /// Sorted neighbors of `i`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m).flat_map(move |i| {
            self.neighbors[i]
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(a, &i)| {
            vertices[a + 1..].iter().all(|&j| self.has_edge(i, j))
        })
    }

    /// True if `i == j` or `(i, j)` is an edge: the positions a matrix in `P_G` may be nonzero.
    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        i == j || self.has_edge(i, j)
    }

    /// Graph relabeled so that vertex `v` becomes `order.label(v)`.
    pub fn relabel(&self, order: &VertexOrder) -> Graph {
        let mut g = Graph::empty(self.m);
        for (i, j) in self.edges() {
            g.insert(order.label(i), order.label(j));
        }
        g
    }

    /// Subgraph induced on `vertices`, relabeled `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len());
        for (a, &i) in vertices.iter().enumerate() {
            for (b, &j) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    g.insert(a, b);
                }
            }
        }
        g
    }

    /// Closed neighborhood `{i} ∪ N(i)` as a membership mask.
    fn closed_neighborhood(&self, i: usize) -> Vec<bool> {
        let mut mask = self.adj[i * self.m..(i + 1) * self.m].to_vec();
        mask[i] = true;
        mask
    }
}

/// A relabeling of `0..m`: vertex `v` receives label `label(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexOrder {
    new_label: Vec<usize>,
    vertex_at: Vec<usize>,
}

impl VertexOrder {
    pub fn identity(m: usize) -> Self {
        VertexOrder {
            new_label: (0..m).collect(),
            vertex_at: (0..m).collect(),
        }
    }

    /// From the label map: `labels[v]` is the new label of vertex `v`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let m = labels.len();
        let mut vertex_at = vec![usize::MAX; m];
        for (v, &l) in labels.iter().enumerate() {
            if l >= m || vertex_at[l] != usize::MAX {
                return Err(Error::InvalidOrdering(format!(
                    "labels are not a permutation of 1..={m}"
                )));
            }
            vertex_at[l] = v;
        }
        Ok(VertexOrder {
            new_label: labels,
            vertex_at,
        })
    }

    /// From an elimination sequence: `sequence[k]` is the vertex that receives label `k`.
    pub fn from_sequence(sequence: Vec<usize>) -> Result<Self> {
        let inv = VertexOrder::from_labels(sequence)?;
        Ok(inv.inverse())
    }

    pub fn len(&self) -> usize {
        self.new_label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_label.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.new_label.iter().enumerate().all(|(v, &l)| v == l)
    }

    #[inline]
    pub fn label(&self, v: usize) -> usize {
        self.new_label[v]
    }

    #[inline]
    pub fn vertex_at(&self, label: usize) -> usize {
        self.vertex_at[label]
    }

    pub fn labels(&self) -> &[usize] {
        &self.new_label
    }

    pub fn sequence(&self) -> &[usize] {
        &self.vertex_at
    }

    pub fn inverse(&self) -> VertexOrder {
        VertexOrder {
            new_label: self.vertex_at.clone(),
            vertex_at: self.new_label.clone(),
        }
    }

    /// `self` followed by `then`.
    pub fn compose(&self, then: &VertexOrder) -> VertexOrder {
        let labels = self.new_label.iter().map(|&l| then.label(l)).collect();
        VertexOrder::from_labels(labels).expect("composition of permutations")
    }

    /// Matrix indexed by new labels: `out[label(i), label(j)] = a[i, j]`.
    pub fn permute_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |r, c| a[(self.vertex_at[r], self.vertex_at[c])])
    }

    /// Inverse of [`permute_matrix`](Self::permute_matrix).
    pub fn unpermute_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |r, c| a[(self.new_label[r], self.new_label[c])])
    }

    pub fn permute_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |r, _| x[self.vertex_at[r]])
    }

    pub fn unpermute_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.len(), |r, _| x[self.new_label[r]])
    }
}

/// Lower/upper neighbor tables under the current vertex order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborIndex {
    /// `N(i)`, sorted.
    pub neighbors: Vec<Vec<usize>>,
    /// `N^≺(i) = {j < i : (i, j) ∈ E}`, sorted.
    pub preceding: Vec<Vec<usize>>,
    /// `n_i = |{j > i : (i, j) ∈ E}|`.
    pub n_following: Vec<usize>,
}

impl NeighborIndex {
    pub fn new(g: &Graph) -> Self {
        let m = g.num_vertices();
        let neighbors: Vec<Vec<usize>> = (0..m).map(|i| g.neighbors(i).to_vec()).collect();
        let preceding = neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.iter().copied().filter(|&j| j < i).collect())
            .collect();
        let n_following = neighbors
            .iter()
            .enumerate()
            .map(|(i, nb)| nb.iter().filter(|&&j| j > i).count())
            .collect();
        NeighborIndex {
            neighbors,
            preceding,
            n_following,
        }
    }

    /// `|N^≺(i)|` for every vertex.
    pub fn preceding_counts(&self) -> Vec<usize> {
        self.preceding.iter().map(Vec::len).collect()
    }
}

pub fn neighbor_index(g: &Graph) -> NeighborIndex {
    NeighborIndex::new(g)
}

/// Maximum cardinality search. Returns the visit sequence; ties go to the
/// smallest vertex index. The reverse of the sequence is a perfect elimination
/// ordering exactly when the graph is chordal.
pub fn maximum_cardinality_search(g: &Graph) -> Vec<usize> {
    let m = g.num_vertices();
    let mut weight = vec![0usize; m];
    let mut visited = vec![false; m];
    let mut sequence = Vec::with_capacity(m);
    for _ in 0..m {
        let v = (0..m)
            .filter(|&v| !visited[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex");
        visited[v] = true;
        sequence.push(v);
        for &w in g.neighbors(v) {
            if !visited[w] {
                weight[w] += 1;
            }
        }
    }
    sequence
}

/// Earlier-visited neighbors of each vertex along an MCS sequence.
fn monotone_adjacency(g: &Graph, sequence: &[usize]) -> Vec<Vec<usize>> {
    let mut position = vec![0usize; g.num_vertices()];
    for (k, &v) in sequence.iter().enumerate() {
        position[v] = k;
    }
    sequence
        .iter()
        .map(|&v| {
            g.neighbors(v)
                .iter()
                .copied()
                .filter(|&w| position[w] < position[v])
                .collect()
        })
        .collect()
}

/// Chordality test: MCS followed by perfect-elimination verification.
pub fn is_decomposable(g: &Graph) -> bool {
    let sequence = maximum_cardinality_search(g);
    monotone_adjacency(g, &sequence)
        .iter()
        .all(|madj| g.is_clique(madj))
}

/// Perfect sequence of cliques with histories, separators and residuals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueDecomposition {
    /// `C_1, ..., C_k`, each sorted.
    pub cliques: Vec<Vec<usize>>,
    /// `S_j = H_{j-1} ∩ C_j` for `j = 2..k` (index `j - 2`).
    pub separators: Vec<Vec<usize>>,
    /// `H_j = C_1 ∪ ... ∪ C_j`.
    pub histories: Vec<Vec<usize>>,
    /// `R_1 = C_1` followed by `R_j = C_j \ H_{j-1}`.
    pub residuals: Vec<Vec<usize>>,
}

impl CliqueDecomposition {
    /// Distinct separators with their multiplicities `ν(S)`. The empty separator
    /// (between connected components) is included when present.
    pub fn separator_multiplicities(&self) -> Vec<(Vec<usize>, usize)> {
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for s in &self.separators {
            *counts.entry(s.clone()).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }

    /// Running-intersection check: every `S_j` lies inside some earlier clique.
    pub fn has_running_intersection(&self) -> bool {
        self.separators.iter().enumerate().all(|(idx, s)| {
            let j = idx + 1;
            self.cliques[..j]
                .iter()
                .any(|c| s.iter().all(|v| c.binary_search(v).is_ok()))
        })
    }
}

/// Clique decomposition from the MCS visit sequence: a new clique starts
/// whenever the monotone adjacency stops growing.
pub fn clique_decomposition(g: &Graph) -> Result<CliqueDecomposition> {
    let m = g.num_vertices();
    let sequence = maximum_cardinality_search(g);
    let madj = monotone_adjacency(g, &sequence);
    if !madj.iter().all(|a| g.is_clique(a)) {
        return Err(Error::NotDecomposable);
    }
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut separators: Vec<Vec<usize>> = Vec::new();
    for k in 0..m {
        let v = sequence[k];
        let starts_new = k == 0 || madj[k].len() <= madj[k - 1].len();
        if starts_new {
            let mut c = madj[k].clone();
            c.push(v);
            c.sort_unstable();
            if !cliques.is_empty() {
                let mut s = madj[k].clone();
                s.sort_unstable();
                separators.push(s);
            }
            cliques.push(c);
        } else {
            let c = cliques.last_mut().expect("open clique");
            let pos = c.binary_search(&v).unwrap_err();
            c.insert(pos, v);
        }
    }
    let mut histories = Vec::with_capacity(cliques.len());
    let mut residuals = Vec::with_capacity(cliques.len());
    let mut seen = vec![false; m];
    for c in &cliques {
        let r: Vec<usize> = c.iter().copied().filter(|&v| !seen[v]).collect();
        for &v in c {
            seen[v] = true;
        }
        residuals.push(r);
        histories.push((0..m).filter(|&v| seen[v]).collect());
    }
    Ok(CliqueDecomposition {
        cliques,
        separators,
        histories,
        residuals,
    })
}

/// A perfect vertex order: labels are handed out in descending order to the
/// vertices of `C_1, R_2, ..., R_k`, ascending original index within each set.
pub fn perfect_vertex_order(g: &Graph) -> Result<VertexOrder> {
    let dec = clique_decomposition(g)?;
    let m = g.num_vertices();
    let mut labels = vec![0usize; m];
    let mut next = m;
    for r in &dec.residuals {
        for &v in r {
            next -= 1;
            labels[v] = next;
        }
    }
    VertexOrder::from_labels(labels)
}

/// Structural test for `S_D`: eliminating vertices in label order on the
/// relabeled pattern produces no fill-in, i.e. every vertex's higher-labeled
/// neighbors form a clique.
pub fn verify_order_in_sd(g: &Graph, order: &VertexOrder) -> bool {
    if order.len() != g.num_vertices() {
        return false;
    }
    let h = g.relabel(order);
    (0..h.num_vertices()).all(|j| {
        let higher: Vec<usize> = h.neighbors(j).iter().copied().filter(|&i| i > j).collect();
        h.is_clique(&higher)
    })
}

/// Structural test for `S_H`: the order is in `S_D`, and strictly decreasing
/// paths never leave the edge set (`a > b > c`, `a~b`, `b~c` imply `a~c`), so
/// `L^{-1}` inherits the zero pattern of `L`.
pub fn verify_order_in_sh(g: &Graph, order: &VertexOrder) -> bool {
    if !verify_order_in_sd(g, order) {
        return false;
    }
    let h = g.relabel(order);
    (0..h.num_vertices()).all(|b| {
        h.neighbors(b).iter().filter(|&&a| a > b).all(|&a| {
            h.neighbors(b)
                .iter()
                .filter(|&&c| c < b)
                .all(|&c| h.has_edge(a, c))
        })
    })
}

/// Homogeneity: decomposable and, for every edge, one closed neighborhood
/// contains the other (equivalently, no induced 4-path).
pub fn is_homogeneous(g: &Graph) -> bool {
    if !is_decomposable(g) {
        return false;
    }
    let m = g.num_vertices();
    let closed: Vec<Vec<bool>> = (0..m).map(|i| g.closed_neighborhood(i)).collect();
    let subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(&x, &y)| !x || y);
    g.edges()
        .all(|(i, j)| subset(&closed[i], &closed[j]) || subset(&closed[j], &closed[i]))
}

/// Rooted forest over twin classes (vertices with equal closed neighborhoods).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HasseDiagram {
    /// Twin classes, each sorted; class ids are ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Class id of each vertex.
    pub class_of: Vec<usize>,
}

impl HasseDiagram {
    pub fn roots(&self) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&c| self.parent[c].is_none())
            .collect()
    }

    /// `w(ī) = |ī|`.
    pub fn weight(&self, class: usize) -> usize {
        self.classes[class].len()
    }

    pub fn depth(&self, class: usize) -> usize {
        let mut d = 0;
        let mut c = class;
        while let Some(p) = self.parent[c] {
            d += 1;
            c = p;
        }
        d
    }
}

pub fn hasse_diagram(g: &Graph) -> Result<HasseDiagram> {
    if !is_homogeneous(g) {
        return Err(Error::NotHomogeneous);
    }
    let m = g.num_vertices();
    let closed: Vec<Vec<bool>> = (0..m).map(|i| g.closed_neighborhood(i)).collect();
    let mut class_of = vec![usize::MAX; m];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        if class_of[i] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let members: Vec<usize> = (i..m).filter(|&j| closed[j] == closed[i]).collect();
        for &j in &members {
            class_of[j] = id;
        }
        classes.push(members);
    }
    let size: Vec<usize> = closed.iter().map(|c| c.iter().filter(|&&x| x).count()).collect();
    let contains = |big: usize, small: usize| {
        closed[small].iter().zip(&closed[big]).all(|(&x, &y)| !x || y)
    };
    let k = classes.len();
    let mut parent = vec![None; k];
    for c in 0..k {
        let rep = classes[c][0];
        parent[c] = (0..k)
            .filter(|&d| d != c && contains(classes[d][0], rep))
            .min_by_key(|&d| (size[classes[d][0]], d));
    }
    let mut children = vec![Vec::new(); k];
    for c in 0..k {
        if let Some(p) = parent[c] {
            children[p].push(c);
        }
    }
    Ok(HasseDiagram {
        classes,
        parent,
        children,
        class_of,
    })
}

/// Hasse perfect vertex elimination scheme: classes are visited breadth-first
/// from the roots and receive descending labels. Members of a class are taken
/// in ascending index order; sibling classes in descending order of their
/// smallest member.
pub fn hasse_order(g: &Graph) -> Result<VertexOrder> {
    let h = hasse_diagram(g)?;
    let m = g.num_vertices();
    let by_desc_min = |mut v: Vec<usize>| {
        v.sort_by(|&a, &b| h.classes[b][0].cmp(&h.classes[a][0]));
        v
    };
    let mut queue: VecDeque<usize> = by_desc_min(h.roots()).into();
    let mut labels = vec![0usize; m];
    let mut next = m;
    while let Some(c) = queue.pop_front() {
        for &v in &h.classes[c] {
            next -= 1;
            labels[v] = next;
        }
        queue.extend(by_desc_min(h.children[c].clone()));
    }
    VertexOrder::from_labels(labels)
}
