//! Random graphs and matrices for tests, benchmarks and simulations.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{perfect_vertex_order, verify_order_in_sd, Graph, VertexOrder};
use crate::linalg::{reconstruct, CholFactor};

/// Applies a uniformly random relabeling.
pub fn shuffle_labels<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Graph {
    let mut labels: Vec<usize> = (0..g.num_vertices()).collect();
    labels.shuffle(rng);
    g.relabel(&VertexOrder::from_labels(labels).expect("permutation"))
}

/// Random homogeneous graph on `m` vertices with vertices already in a Hasse
/// order. A random weighted forest is grown top-down: each node takes 1 to 3
/// vertices and splits the rest of its subtree among 2 or 3 children, so no
/// node has exactly one child. Every vertex is adjacent to the vertices of its
/// own node and of all ancestor and descendant nodes.
pub fn random_hasse_graph<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Graph {
    let mut g = Graph::empty(m);
    let mut next = m;
    let roots = if m >= 4 && rng.random_bool(0.25) {
        split(m, 2, rng)
    } else {
        vec![m]
    };
    for size in roots {
        grow(size, &[], &mut next, &mut g, rng);
    }
    g
}

/// Random homogeneous graph with shuffled labels.
pub fn random_homogeneous_graph<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Graph {
    let g = random_hasse_graph(m, rng);
    shuffle_labels(&g, rng)
}

// Labels are handed out downward from `next` so ancestors get larger labels.
fn grow<R: Rng + ?Sized>(size: usize, ancestors: &[usize], next: &mut usize, g: &mut Graph, rng: &mut R) {
    let mut weight = rng.random_range(1..=size.min(3));
    if size - weight == 1 {
        weight = size;
    }
    let own: Vec<usize> = (0..weight)
        .map(|_| {
            *next -= 1;
            *next
        })
        .collect();
    for (a, &i) in own.iter().enumerate() {
        for &j in own[a + 1..].iter().chain(ancestors) {
            g.add_edge(i, j).expect("valid edge");
        }
    }
    let rest = size - weight;
    if rest == 0 {
        return;
    }
    let mut below: Vec<usize> = ancestors.to_vec();
    below.extend(&own);
    let children = if rest >= 3 && rng.random_bool(0.5) { 3 } else { 2 };
    for part in split(rest, children, rng) {
        grow(part, &below, next, g, rng);
    }
}

/// Random composition of `n` into `k` positive parts.
fn split<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        parts.push(c - prev);
        prev = c;
    }
    parts
}

/// Random decomposable graph: each new vertex is joined to a random subset of
/// a random maximal clique, which keeps it simplicial. Labels are shuffled.
pub fn random_decomposable_graph<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Graph {
    let mut g = Graph::empty(m);
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for v in 0..m {
        let mut attach: Vec<usize> = if cliques.is_empty() || rng.random_bool(0.1) {
            Vec::new()
        } else {
            let c = &cliques[rng.random_range(0..cliques.len())];
            c.iter().copied().filter(|_| rng.random_bool(0.6)).collect()
        };
        for &u in &attach {
            g.add_edge(u, v).expect("valid edge");
        }
        attach.push(v);
        attach.sort_unstable();
        cliques.retain(|c| !c.iter().all(|x| attach.binary_search(x).is_ok()));
        cliques.push(attach);
    }
    shuffle_labels(&g, rng)
}

pub fn random_spd<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(m, m) * 0.5
}

/// Unit lower-triangular matrix with uniform entries on the edges below the diagonal.
pub fn random_unit_lower<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> DMatrix<f64> {
    let m = g.num_vertices();
    let mut l = DMatrix::identity(m, m);
    for (j, i) in g.edges() {
        l[(i, j)] = rng.random_range(-1.0..1.0);
    }
    l
}

/// Random point of `Θ_G` for the graph's own labels.
pub fn random_factor<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> CholFactor {
    let m = g.num_vertices();
    let l = random_unit_lower(g, rng);
    let d = DVector::from_iterator(m, (0..m).map(|_| rng.random_range(0.5..2.0)));
    CholFactor::new(l, d).expect("valid factor")
}

/// Random `Σ ∈ P_G` for a decomposable graph in any labeling: built as `LDLᵀ`
/// under a perfect order and mapped back.
pub fn random_pg<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> DMatrix<f64> {
    let m = g.num_vertices();
    let identity = VertexOrder::identity(m);
    let order = if verify_order_in_sd(g, &identity) {
        identity
    } else {
        perfect_vertex_order(g).expect("decomposable graph")
    };
    let h = g.relabel(&order);
    let s = reconstruct(&random_factor(&h, rng));
    let mut out = order.unpermute_matrix(&s);
    // exact zeros off the edge set
    for i in 0..m {
        for j in 0..m {
            if !g.allows(i, j) {
                out[(i, j)] = 0.0;
            }
        }
    }
    out
}
