//! The covariance-Wishart family `π_{U,α}` on `Θ_G`, its induced densities on
//! `P_G` and `Q_G`, integrability, and conjugate updating.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{is_homogeneous, CliqueDecomposition, Graph, NeighborIndex};
use crate::linalg::{
    self, log_jacobian_qg_to_pg, modified_cholesky, precision_from_inverse_factor, tri_inverse,
    CholFactor, IncompleteMatrix,
};

/// Location matrix `U` and shape vector `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    pub u: DMatrix<f64>,
    pub alpha: DVector<f64>,
}

impl PriorSpec {
    /// Checks dimensions, symmetry and finiteness. `U` may be zero or merely
    /// positive semidefinite: the improper `U = 0` prior is accepted.
    pub fn new(u: DMatrix<f64>, alpha: DVector<f64>) -> Result<Self> {
        let m = alpha.len();
        if u.nrows() != m || u.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: u.nrows(),
            });
        }
        if alpha.iter().any(|a| !a.is_finite()) || u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite prior parameter".into()));
        }
        for i in 0..m {
            for j in 0..i {
                if (u[(i, j)] - u[(j, i)]).abs() > 1e-9 * (1.0 + u[(i, j)].abs()) {
                    return Err(Error::InvalidParams(format!(
                        "U is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let mut u = u;
        linalg::symmetrize(&mut u);
        Ok(PriorSpec { u, alpha })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// True if `U` is positive definite.
    pub fn has_proper_location(&self) -> bool {
        linalg::spd_log_det(&self.u).is_some()
    }

    /// The same prior with vertices relabeled by `order`.
    pub fn permuted(&self, order: &crate::graph::VertexOrder) -> PriorSpec {
        PriorSpec {
            u: order.permute_matrix(&self.u),
            alpha: order.permute_vector(&self.alpha),
        }
    }
}

/// Ways to give the shape vector.
#[derive(Clone, Debug, PartialEq)]
pub enum ShapeSpec {
    /// Explicit `α`.
    Vector(Vec<f64>),
    /// `α_i = c + |N^≺(i)|`.
    Offset(f64),
    /// `α_i = δ + 2m - 2 n_i`, the single-parameter subfamily.
    Delta(f64),
}

impl ShapeSpec {
    pub fn resolve(&self, g: &Graph) -> Result<DVector<f64>> {
        let m = g.num_vertices();
        let idx = NeighborIndex::new(g);
        match self {
            ShapeSpec::Vector(v) => {
                if v.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: v.len(),
                    });
                }
                Ok(DVector::from_column_slice(v))
            }
            ShapeSpec::Offset(c) => Ok(DVector::from_iterator(
                m,
                idx.preceding.iter().map(|p| c + p.len() as f64),
            )),
            ShapeSpec::Delta(delta) => Ok(DVector::from_iterator(
                m,
                idx.n_following
                    .iter()
                    .map(|&n| delta + 2.0 * m as f64 - 2.0 * n as f64),
            )),
        }
    }
}

/// Sample size and second-moment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSummary {
    pub n: usize,
    /// `S = (1/n) Σ y yᵀ`, or `S̃` about the sample mean when `centered`.
    pub s: DMatrix<f64>,
    pub centered: bool,
}

impl DataSummary {
    pub fn new(n: usize, s: DMatrix<f64>, centered: bool) -> Result<Self> {
        if n == 0 || (centered && n < 2) {
            return Err(Error::InsufficientData(format!(
                "n = {n} observations ({})",
                if centered { "centered" } else { "uncentered" }
            )));
        }
        if s.nrows() != s.ncols() {
            return Err(Error::DimensionMismatch {
                expected: s.nrows(),
                found: s.ncols(),
            });
        }
        Ok(DataSummary { n, s, centered })
    }

    /// Degrees of freedom added to every shape parameter.
    pub fn dof(&self) -> f64 {
        if self.centered {
            self.n as f64 - 1.0
        } else {
            self.n as f64
        }
    }

    /// `n S`.
    pub fn scatter(&self) -> DMatrix<f64> {
        &self.s * self.n as f64
    }

    /// Pools two uncentered summaries as if the observations had been concatenated.
    pub fn pool(&self, other: &DataSummary) -> Result<DataSummary> {
        if self.centered || other.centered {
            return Err(Error::InvalidParams(
                "only uncentered summaries can be pooled".into(),
            ));
        }
        let n = self.n + other.n;
        let s = (self.scatter() + other.scatter()) / n as f64;
        DataSummary::new(n, s, false)
    }
}

/// `S` (or `S̃` when `center`) from an `n × m` data matrix.
pub fn sample_covariance(y: &DMatrix<f64>, center: bool) -> Result<DataSummary> {
    let n = y.nrows();
    if n == 0 || (center && n < 2) {
        return Err(Error::InsufficientData(format!("{n} observations")));
    }
    let mut x = y.clone();
    if center {
        for j in 0..x.ncols() {
            let mean = x.column(j).mean();
            x.column_mut(j).add_scalar_mut(-mean);
        }
    }
    let mut s = x.transpose() * &x / n as f64;
    linalg::symmetrize(&mut s);
    DataSummary::new(n, s, center)
}

/// `(BŨBᵀ)_ii` for `B = L^{-1}`: the quadratic forms that drive every `D` conditional.
pub(crate) fn row_quadratics(b: &DMatrix<f64>, u: &DMatrix<f64>) -> DVector<f64> {
    let bu = b * u;
    DVector::from_iterator(b.nrows(), (0..b.nrows()).map(|i| bu.row(i).dot(&b.row(i))))
}

/// `-½ [tr((LDLᵀ)^{-1} U) + Σ α_i log D_ii]`.
pub fn log_unnorm_density_theta(f: &CholFactor, p: &PriorSpec) -> Result<f64> {
    let m = f.dim();
    if p.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: p.dim(),
        });
    }
    let b = tri_inverse(&f.l);
    let q = row_quadratics(&b, &p.u);
    let mut total = 0.0;
    for i in 0..m {
        total += q[i] / f.d[i] + p.alpha[i] * f.d[i].ln();
    }
    Ok(-0.5 * total)
}

/// `-½ [tr(Σ^{-1} U) + Σ (2 n_i + α_i) log D_ii(Σ)]`, the induced density on `P_G`.
pub fn log_unnorm_density_pg(sigma: &DMatrix<f64>, p: &PriorSpec, g: &Graph) -> Result<f64> {
    linalg::check_in_pg(sigma, g)?;
    let m = g.num_vertices();
    if p.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: p.dim(),
        });
    }
    let f = modified_cholesky(sigma)?;
    let b = tri_inverse(&f.l);
    let omega = precision_from_inverse_factor(&b, &f.d);
    let trace = omega.component_mul(&p.u).sum();
    let mut total = trace;
    for i in 0..m {
        let ni = g.neighbors(i).iter().filter(|&&j| j > i).count() as f64;
        total += (2.0 * ni + p.alpha[i]) * f.d[i].ln();
    }
    Ok(-0.5 * total)
}

/// Induced density on `Q_G`: the `P_G` density at `x̂^{-1}` times the Jacobian of `x -> x̂^{-1}`.
pub fn log_unnorm_density_qg(
    x: &IncompleteMatrix,
    p: &PriorSpec,
    g: &Graph,
    dec: &CliqueDecomposition,
) -> Result<f64> {
    let sigma = x.completion_inverse(dec)?;
    Ok(log_unnorm_density_pg(&sigma, p, g)? + log_jacobian_qg_to_pg(x, dec)?)
}

/// Outcome of the shape-parameter check `α_i > |N^≺(i)| + 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Integrability {
    /// The condition holds at every vertex.
    pub satisfied: bool,
    /// First vertex (0-based) where it fails.
    pub failing_vertex: Option<usize>,
    /// For homogeneous graphs the condition is also necessary; otherwise it is
    /// only known to be sufficient.
    pub necessary: bool,
}

pub fn integrability(alpha: &DVector<f64>, g: &Graph) -> Integrability {
    let failing_vertex = (0..g.num_vertices()).find(|&i| {
        let k = g.neighbors(i).iter().filter(|&&j| j < i).count() as f64;
        !(alpha[i] > k + 2.0)
    });
    Integrability {
        satisfied: failing_vertex.is_none(),
        failing_vertex,
        necessary: is_homogeneous(g),
    }
}

pub fn is_integrable(p: &PriorSpec, g: &Graph) -> bool {
    p.dim() == g.num_vertices() && integrability(&p.alpha, g).satisfied
}

/// Conjugate update: `Ũ = nS + U`, `α̃ = α + n` (or `α + n - 1` for centered data).
pub fn posterior_update(p: &PriorSpec, d: &DataSummary) -> Result<PriorSpec> {
    let m = p.dim();
    if d.s.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: d.s.nrows(),
        });
    }
    let mut u = &p.u + d.scatter();
    linalg::symmetrize(&mut u);
    let alpha = p.alpha.add_scalar(d.dof());
    if linalg::spd_log_det(&u).is_none() {
        log::warn!("posterior location matrix is not positive definite");
    }
    Ok(PriorSpec { u, alpha })
}

/// Gaussian log-likelihood of the data at `Σ = LDLᵀ`, up to the `2π` constant:
/// `-½ [n log|Σ| + tr(Σ^{-1} n S)]`. For centered data `n - 1` replaces `n` in the
/// determinant term, matching the Wishart law of `n S̃`.
pub fn log_likelihood(f: &CholFactor, d: &DataSummary) -> Result<f64> {
    if d.s.nrows() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: d.s.nrows(),
        });
    }
    let b = tri_inverse(&f.l);
    let q = row_quadratics(&b, &d.scatter());
    let logdet: f64 = f.d.iter().map(|x| x.ln()).sum();
    let trace: f64 = (0..f.dim()).map(|i| q[i] / f.d[i]).sum();
    Ok(-0.5 * (d.dof() * logdet + trace))
}
