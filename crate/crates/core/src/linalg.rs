//! Modified Cholesky factors, triangular inverses, derivative identities and
//! Jacobians of the parameter maps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{CliqueDecomposition, Graph};

/// Relative pivot tolerance for positive definiteness.
pub const PIVOT_TOL: f64 = 1e-12;

/// Largest dimension accepted by [`tri_inverse_pathsum`].
pub const PATHSUM_CAP: usize = 12;

/// `Σ = L D Lᵀ` with `L` unit lower triangular and `D > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CholFactor {
    pub l: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl CholFactor {
    pub fn identity(m: usize) -> Self {
        CholFactor {
            l: DMatrix::identity(m, m),
            d: DVector::from_element(m, 1.0),
        }
    }

    /// Validates shape, unit diagonal, zero upper triangle and positive `D`.
    pub fn new(l: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let m = d.len();
        if l.nrows() != m || l.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: l.nrows(),
            });
        }
        for i in 0..m {
            if l[(i, i)] != 1.0 {
                return Err(Error::InvalidParams(format!("L[{0},{0}] is not 1", i + 1)));
            }
            if (i + 1..m).any(|j| l[(i, j)] != 0.0) {
                return Err(Error::InvalidParams("L is not lower triangular".into()));
            }
            if !(d[i] > 0.0 && d[i].is_finite()) {
                return Err(Error::NotPositiveDefinite {
                    index: i + 1,
                    pivot: d[i],
                });
            }
        }
        Ok(CholFactor { l, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// True if `L_ij = 0` for every `i > j` that is not an edge.
    pub fn respects(&self, g: &Graph) -> bool {
        let m = self.dim();
        m == g.num_vertices()
            && (0..m).all(|i| (0..i).all(|j| g.has_edge(i, j) || self.l[(i, j)] == 0.0))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        reconstruct(self)
    }
}

/// A positive definite covariance matrix with zeros off the edge set.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix {
    sigma: DMatrix<f64>,
}

impl CovMatrix {
    /// Checks symmetry, the zero pattern of `g` and positive definiteness.
    pub fn new(sigma: DMatrix<f64>, g: &Graph) -> Result<Self> {
        check_in_pg(&sigma, g)?;
        Ok(CovMatrix { sigma })
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.sigma
    }
}

/// Verifies `Σ ∈ P_G`: square, symmetric, exact zeros off the edge set, positive definite.
pub fn check_in_pg(sigma: &DMatrix<f64>, g: &Graph) -> Result<()> {
    let m = g.num_vertices();
    if sigma.nrows() != m || sigma.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: sigma.nrows(),
        });
    }
    for i in 0..m {
        for j in 0..i {
            if sigma[(i, j)] != sigma[(j, i)] {
                return Err(Error::NotInPG(format!("not symmetric at ({}, {})", i + 1, j + 1)));
            }
            if !g.has_edge(i, j) && sigma[(i, j)] != 0.0 {
                return Err(Error::NotInPG(format!(
                    "nonzero entry at non-edge ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    modified_cholesky(sigma).map(|_| ())
}

/// `Σ = L D Lᵀ`. Fails when a pivot drops below `1e-12 · max_i Σ_ii`.
pub fn modified_cholesky(sigma: &DMatrix<f64>) -> Result<CholFactor> {
    let m = sigma.nrows();
    if sigma.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: sigma.ncols(),
        });
    }
    let scale = (0..m).map(|i| sigma[(i, i)]).fold(0.0_f64, f64::max);
    let tol = PIVOT_TOL * scale;
    let mut l = DMatrix::<f64>::identity(m, m);
    let mut d = DVector::<f64>::zeros(m);
    for j in 0..m {
        let mut dj = sigma[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > tol) || !dj.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: j + 1,
                pivot: dj,
            });
        }
        d[j] = dj;
        for i in (j + 1)..m {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(CholFactor { l, d })
}

/// `L D Lᵀ`, symmetrized exactly.
pub fn reconstruct(f: &CholFactor) -> DMatrix<f64> {
    let m = f.dim();
    let mut s = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += f.l[(i, k)] * f.d[k] * f.l[(j, k)];
            }
            s[(i, j)] = acc;
            s[(j, i)] = acc;
        }
    }
    s
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
pub fn tri_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let m = l.nrows();
    let mut n = DMatrix::<f64>::identity(m, m);
    for j in 0..m {
        for i in (j + 1)..m {
            let mut s = 0.0;
            for k in j..i {
                s -= l[(i, k)] * n[(k, j)];
            }
            n[(i, j)] = s;
        }
    }
    n
}

/// Inverse of a unit lower-triangular matrix as an explicit sum over strictly
/// decreasing index paths `i = τ_1 > τ_2 > ... > τ_d = j`, each contributing
/// `(-1)^{d-1} ∏ L_{τ_k τ_{k+1}}`. Exponential in `m`; capped at [`PATHSUM_CAP`].
pub fn tri_inverse_pathsum(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = l.nrows();
    if m > PATHSUM_CAP {
        return Err(Error::DimensionCapExceeded {
            m,
            cap: PATHSUM_CAP,
        });
    }
    fn walk(l: &DMatrix<f64>, at: usize, target: usize, weight: f64, sign: f64) -> f64 {
        if at == target {
            return sign * weight;
        }
        let mut total = 0.0;
        for next in target..at {
            let e = l[(at, next)];
            if e != 0.0 {
                total += walk(l, next, target, weight * e, -sign);
            }
        }
        total
    }
    let mut n = DMatrix::<f64>::identity(m, m);
    for i in 0..m {
        for j in 0..i {
            n[(i, j)] = walk(l, i, j, 1.0, 1.0);
        }
    }
    Ok(n)
}

/// Indices `w` with `L^{-1}_{vw} ≡ 0` for every `L` with the graph's pattern:
/// all `w > v`, and all `w < v` not reachable from `v` along a strictly
/// decreasing path of edges. Sorted, 0-based.
pub fn structural_zero_row(g: &Graph, v: usize) -> Vec<usize> {
    let m = g.num_vertices();
    let mut reach = vec![false; m];
    reach[v] = true;
    // vertices below v in decreasing order: reachability only flows downward
    for a in (0..v).rev() {
        reach[a] = g.neighbors(a).iter().any(|&b| b > a && b <= v && reach[b]);
    }
    (0..m).filter(|&w| !reach[w]).collect()
}

/// `∂ L^{-1}_{ij} / ∂ L_{uv} = -L^{-1}_{iu} L^{-1}_{vj}` for `i > j`, zero elsewhere.
pub fn dlinv_dl(l: &DMatrix<f64>, g: &Graph, u: usize, v: usize) -> Result<DMatrix<f64>> {
    if u <= v || u >= g.num_vertices() || !g.has_edge(u, v) {
        return Err(Error::EdgeNotPresent { u: u + 1, v: v + 1 });
    }
    let n = tri_inverse(l);
    let m = l.nrows();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i > j {
            -n[(i, u)] * n[(v, j)]
        } else {
            0.0
        }
    }))
}

/// Closed-form `∂² tr((LDLᵀ)^{-1} Ũ) / ∂L_{uv} ∂L_{u'v}
/// = 2 (L^{-1} Ũ L^{-T})_{vv} (LDLᵀ)^{-1}_{uu'}`.
pub fn trace_hessian_entry(
    f: &CholFactor,
    u_tilde: &DMatrix<f64>,
    g: &Graph,
    v: usize,
    u: usize,
    u2: usize,
) -> Result<f64> {
    for &w in &[u, u2] {
        if w <= v || w >= g.num_vertices() || !g.has_edge(w, v) {
            return Err(Error::EdgeNotPresent { u: w + 1, v: v + 1 });
        }
    }
    let b = tri_inverse(&f.l);
    let row = b.row(v);
    let c = (row * u_tilde * row.transpose())[(0, 0)];
    let omega = precision_from_inverse_factor(&b, &f.d);
    Ok(2.0 * c * omega[(u, u2)])
}

/// `Ω = Bᵀ D^{-1} B` where `B = L^{-1}`.
pub fn precision_from_inverse_factor(b: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let m = d.len();
    let mut scaled = b.clone();
    for i in 0..m {
        let s = 1.0 / d[i];
        scaled.row_mut(i).scale_mut(s);
    }
    let mut omega = b.transpose() * scaled;
    symmetrize(&mut omega);
    omega
}

/// `log ∏_j D_jj^{n_j}`, with `n_j` the number of neighbors above `j`.
pub fn log_jacobian_theta_to_sigma(f: &CholFactor, g: &Graph) -> f64 {
    (0..f.dim())
        .map(|j| {
            let nj = g.neighbors(j).iter().filter(|&&i| i > j).count();
            nj as f64 * f.d[j].ln()
        })
        .sum()
}

/// `∏_j D_jj^{n_j}`: absolute Jacobian determinant of `(L, D) -> Σ` on the free coordinates.
pub fn jacobian_theta_to_sigma(f: &CholFactor, g: &Graph) -> f64 {
    log_jacobian_theta_to_sigma(f, g).exp()
}

/// Symmetric matrix known only on the diagonal and the edges of a graph.
/// Non-edge entries are stored as zero and never read.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompleteMatrix {
    x: DMatrix<f64>,
}

impl IncompleteMatrix {
    /// Projection `κ`: keeps the diagonal and edge entries of a symmetric matrix.
    pub fn project(full: &DMatrix<f64>, g: &Graph) -> Self {
        let m = g.num_vertices();
        IncompleteMatrix {
            x: DMatrix::from_fn(m, m, |i, j| {
                if g.allows(i, j) {
                    full[(i, j)]
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Known entry; `None` for non-edges.
    pub fn get(&self, i: usize, j: usize, g: &Graph) -> Option<f64> {
        g.allows(i, j).then(|| self.x[(i, j)])
    }

    pub fn block(&self, idx: &[usize]) -> DMatrix<f64> {
        submatrix(&self.x, idx)
    }

    /// Verifies every clique block is positive definite.
    pub fn check(&self, dec: &CliqueDecomposition) -> Result<()> {
        for c in &dec.cliques {
            if spd_log_det(&self.block(c)).is_none() {
                return Err(Error::CliqueNotPositiveDefinite(c.iter().map(|v| v + 1).collect()));
            }
        }
        Ok(())
    }

    /// `x̂^{-1} = Σ_C [x_C^{-1}]^0 - Σ_S ν(S) [x_S^{-1}]^0`: the inverse of the
    /// positive definite completion, which has zeros off the edge set.
    pub fn completion_inverse(&self, dec: &CliqueDecomposition) -> Result<DMatrix<f64>> {
        self.check(dec)?;
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        let mut scatter = |idx: &[usize], sign: f64| -> Result<()> {
            if idx.is_empty() {
                return Ok(());
            }
            let inv = spd_inverse(&self.block(idx))
                .ok_or_else(|| Error::CliqueNotPositiveDefinite(idx.iter().map(|v| v + 1).collect()))?;
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out[(i, j)] += sign * inv[(a, b)];
                }
            }
            Ok(())
        };
        for c in &dec.cliques {
            scatter(c, 1.0)?;
        }
        for s in &dec.separators {
            scatter(s, -1.0)?;
        }
        symmetrize(&mut out);
        Ok(out)
    }

    /// The positive definite completion `x̂`.
    pub fn completion(&self, dec: &CliqueDecomposition) -> Result<DMatrix<f64>> {
        let inv = self.completion_inverse(dec)?;
        spd_inverse(&inv).ok_or(Error::NotPositiveDefinite { index: 0, pivot: 0.0 })
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.x
    }
}

/// `log ∏_C |x_C|^{-|C|-1} ∏_S |x_S|^{(|S|+1) ν(S)}`.
pub fn log_jacobian_qg_to_pg(x: &IncompleteMatrix, dec: &CliqueDecomposition) -> Result<f64> {
    x.check(dec)?;
    let mut total = 0.0;
    for c in &dec.cliques {
        let ld = spd_log_det(&x.block(c))
            .ok_or_else(|| Error::CliqueNotPositiveDefinite(c.iter().map(|v| v + 1).collect()))?;
        total -= (c.len() as f64 + 1.0) * ld;
    }
    for s in &dec.separators {
        let ld = spd_log_det(&x.block(s))
            .ok_or_else(|| Error::CliqueNotPositiveDefinite(s.iter().map(|v| v + 1).collect()))?;
        total += (s.len() as f64 + 1.0) * ld;
    }
    Ok(total)
}

pub fn jacobian_qg_to_pg(x: &IncompleteMatrix, dec: &CliqueDecomposition) -> Result<f64> {
    log_jacobian_qg_to_pg(x, dec).map(f64::exp)
}

/// Blocks of `U` around vertex `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Submatrices {
    /// `N^≺(i)`, sorted.
    pub index: Vec<usize>,
    /// `U^{≺i}` over `N^≺(i)`, including entries between non-adjacent members.
    pub prec: DMatrix<f64>,
    /// `U^{⪯i}` over `N^≺(i) ∪ {i}` with `i` last.
    pub prec_eq: DMatrix<f64>,
    /// `U^≺_{·i}`.
    pub col: DVector<f64>,
}

pub fn submatrices(u: &DMatrix<f64>, g: &Graph, i: usize) -> Submatrices {
    let index: Vec<usize> = g.neighbors(i).iter().copied().filter(|&j| j < i).collect();
    let mut with_i = index.clone();
    with_i.push(i);
    Submatrices {
        prec: submatrix(u, &index),
        prec_eq: submatrix(u, &with_i),
        col: DVector::from_iterator(index.len(), index.iter().map(|&j| u[(j, i)])),
        index,
    }
}

pub fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

/// Log-determinant of a symmetric positive definite matrix; `Some(0)` for the
/// empty matrix, `None` if the Cholesky factorization fails.
pub fn spd_log_det(a: &DMatrix<f64>) -> Option<f64> {
    if a.is_empty() {
        return Some(0.0);
    }
    let ch = a.clone().cholesky()?;
    Some(2.0 * ch.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.is_empty() {
        return Some(a.clone());
    }
    let mut inv = a.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if a.is_empty() {
        return Some(b.clone());
    }
    Some(a.clone().cholesky()?.solve(b))
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let m = a.nrows();
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
}

/// `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
