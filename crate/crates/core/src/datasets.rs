//! Bundled example graphs and data.

use nalgebra::DMatrix;

use crate::graph::{hasse_order, Graph, VertexOrder};

/// Gene names of the yeast galactose network, in the primary vertex order.
pub const YEAST_GENES: [&str; 8] = [
    "GAL11", "GAL4", "GAL80", "GAL3", "GAL7", "GAL10", "GAL1", "GAL2",
];

/// Number of observations behind [`yeast_covariance`].
pub const YEAST_N: usize = 134;

const YEAST_EDGES: [(usize, usize); 21] = [
    (1, 2),
    (2, 3),
    (1, 4),
    (2, 4),
    (3, 4),
    (3, 5),
    (4, 5),
    (3, 6),
    (4, 6),
    (5, 6),
    (3, 7),
    (4, 7),
    (5, 7),
    (6, 7),
    (1, 8),
    (2, 8),
    (3, 8),
    (4, 8),
    (5, 8),
    (6, 8),
    (7, 8),
];

/// The 8-gene network, 21 edges, labeled in the primary order.
pub fn yeast_graph() -> Graph {
    let e: Vec<(usize, usize)> = YEAST_EDGES.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    Graph::from_edges(8, &e).expect("valid edges")
}

/// The alternate order GAL11, GAL4, GAL80, GAL10, GAL2, GAL3, GAL1, GAL7,
/// as a relabeling of the primary order.
pub fn yeast_alternate_order() -> VertexOrder {
    VertexOrder::from_sequence(vec![0, 1, 2, 5, 7, 3, 6, 4]).expect("permutation")
}

/// Centered empirical covariance of the yeast data (n = 134), primary order.
/// The GAL80/GAL10 entry is taken as +0.188; the negative sign makes the
/// matrix indefinite.
pub fn yeast_covariance() -> DMatrix<f64> {
    let lower: [&[f64]; 8] = [
        &[0.152],
        &[0.034, 0.130],
        &[0.015, 0.039, 0.221],
        &[-0.055, 0.034, 0.073, 0.608],
        &[-0.051, -0.053, 0.183, 0.722, 3.423],
        &[-0.048, -0.039, 0.188, 0.553, 2.503, 2.372],
        &[-0.066, -0.061, 0.224, 0.517, 2.768, 2.409, 2.890],
        &[-0.119, -0.018, 0.208, 0.583, 2.547, 2.278, 2.514, 2.890],
    ];
    let mut s = DMatrix::zeros(8, 8);
    for (i, row) in lower.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    s
}

/// Vertex names of the 7-vertex homogeneous example, in label order.
pub const SEVEN_VERTEX_NAMES: [&str; 7] = ["a", "b", "c", "d", "e", "f", "g"];

/// 7-vertex homogeneous graph: `e` and `f` are joined to everything, plus
/// the edges `a-d`, `b-c`, `b-g`.
pub fn seven_vertex_graph() -> Graph {
    let (a, b, c, d, e, f, g) = (0, 1, 2, 3, 4, 5, 6);
    let mut edges = vec![(e, f), (a, d), (b, c), (b, g)];
    for v in [a, b, c, d, g] {
        edges.push((v, e));
        edges.push((v, f));
    }
    Graph::from_edges(7, &edges).expect("valid edges")
}

/// The Hasse labeling `{a,b,c,d,e,f,g} -> {4,5,1,3,7,6,2}` (0-based here).
pub fn seven_vertex_hasse_labels() -> VertexOrder {
    VertexOrder::from_labels(vec![3, 4, 0, 2, 6, 5, 1]).expect("permutation")
}

/// Node of the weighted tree behind the 50-vertex simulation graph.
struct Node {
    weight: usize,
    children: Vec<Node>,
}

fn node(weight: usize, children: Vec<Node>) -> Node {
    Node { weight, children }
}

fn sim50_tree() -> Node {
    node(
        2,
        vec![
            node(
                3,
                vec![
                    node(4, vec![]),
                    node(2, vec![node(3, vec![]), node(3, vec![])]),
                    node(1, vec![]),
                ],
            ),
            node(
                2,
                vec![node(5, vec![]), node(1, vec![node(4, vec![]), node(2, vec![])])],
            ),
            node(
                3,
                vec![
                    node(3, vec![]),
                    node(4, vec![]),
                    node(2, vec![node(3, vec![]), node(3, vec![])]),
                ],
            ),
        ],
    )
}

fn expand(n: &Node, ancestors: &[usize], next: &mut usize, edges: &mut Vec<(usize, usize)>) {
    let own: Vec<usize> = (0..n.weight)
        .map(|_| {
            *next += 1;
            *next - 1
        })
        .collect();
    for (a, &i) in own.iter().enumerate() {
        for &j in own[a + 1..].iter().chain(ancestors) {
            edges.push((i, j));
        }
    }
    let mut below = ancestors.to_vec();
    below.extend(&own);
    for c in &n.children {
        expand(c, &below, next, edges);
    }
}

/// The 50-vertex homogeneous simulation graph, labeled by its Hasse order.
pub fn sim50_graph() -> Graph {
    let mut edges = Vec::new();
    let mut next = 0;
    expand(&sim50_tree(), &[], &mut next, &mut edges);
    let g = Graph::from_edges(next, &edges).expect("valid edges");
    let order = hasse_order(&g).expect("homogeneous by construction");
    g.relabel(&order)
}

/// True covariance for the simulation: 50 on the diagonal, 1 on every edge.
pub fn sim50_sigma(g: &Graph) -> DMatrix<f64> {
    let m = g.num_vertices();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            50.0
        } else if g.has_edge(i, j) {
            1.0
        } else {
            0.0
        }
    })
}
