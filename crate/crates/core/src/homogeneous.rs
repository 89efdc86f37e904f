//! Closed forms for homogeneous graphs: regression coordinates, exact
//! sampling, normalizing constant, posterior mean and hyper-Markov checks.
//!
//! Every entry point takes matrices in the caller's vertex labels. Work is
//! done under a Hasse order: the caller's order is kept when it already is
//! one, otherwise [`hasse_order`] is used and results are mapped back.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::{hasse_order, is_homogeneous, verify_order_in_sh, Graph, VertexOrder};
use crate::linalg::{
    check_in_pg, modified_cholesky, spd_log_det, spd_solve, submatrix, symmetrize,
};
use crate::sampling::{sample_invgamma, standard_normal_vector};
use crate::wishart::PriorSpec;

/// A homogeneous graph together with the Hasse order used internally.
#[derive(Clone, Debug)]
pub struct HomogeneousModel {
    order: VertexOrder,
    graph: Graph,
    preceding: Vec<Vec<usize>>,
}

impl HomogeneousModel {
    pub fn new(g: &Graph) -> Result<Self> {
        if !is_homogeneous(g) {
            return Err(Error::NotHomogeneous);
        }
        let m = g.num_vertices();
        let identity = VertexOrder::identity(m);
        let order = if verify_order_in_sh(g, &identity) {
            identity
        } else {
            log::info!("relabeling vertices to a Hasse order");
            hasse_order(g)?
        };
        let graph = g.relabel(&order);
        let preceding = (0..m)
            .map(|i| graph.neighbors(i).iter().copied().filter(|&j| j < i).collect())
            .collect();
        Ok(HomogeneousModel {
            order,
            graph,
            preceding,
        })
    }

    /// Map from the caller's labels to working labels.
    pub fn order(&self) -> &VertexOrder {
        &self.order
    }

    /// The graph under working labels.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.num_vertices()
    }

    /// `N^≺(i)` in working labels.
    pub fn preceding(&self, i: usize) -> &[usize] {
        &self.preceding[i]
    }

    fn to_working(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.order.permute_matrix(a)
    }

    fn to_caller(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.order.unpermute_matrix(a)
    }

    /// Bottom-up layers `A_1, A_2, ...` in working labels.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let m = self.dim();
        let mut placed = vec![false; m];
        let mut layers = Vec::new();
        let mut remaining = m;
        while remaining > 0 {
            let layer: Vec<usize> = (0..m)
                .filter(|&i| !placed[i] && self.preceding[i].iter().all(|&j| placed[j]))
                .collect();
            for &i in &layer {
                placed[i] = true;
            }
            remaining -= layer.len();
            layers.push(layer);
        }
        layers
    }

    fn check_prior(&self, p: &PriorSpec) -> Result<PriorSpec> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.dim(),
            });
        }
        Ok(p.permuted(&self.order))
    }
}

/// Layer sets in the caller's labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSets {
    pub layers: Vec<Vec<usize>>,
}

pub fn layer_sets(g: &Graph) -> Result<LayerSets> {
    let model = HomogeneousModel::new(g)?;
    let layers = model
        .layers()
        .into_iter()
        .map(|layer| {
            let mut l: Vec<usize> = layer.iter().map(|&w| model.order.vertex_at(w)).collect();
            l.sort_unstable();
            l
        })
        .collect();
    Ok(LayerSets { layers })
}

/// Regression coordinates `(D_ii, β_i)` under the working labels, where
/// `β_i = (Σ^{≺i})^{-1} Σ^≺_{·i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaCoords {
    pub order: VertexOrder,
    pub d: Vec<f64>,
    pub beta: Vec<DVector<f64>>,
}

fn gamma_from_working(model: &HomogeneousModel, sigma: &DMatrix<f64>) -> Result<GammaCoords> {
    let m = model.dim();
    let mut d = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    for i in 0..m {
        let k = model.preceding(i);
        let skk = submatrix(sigma, k);
        let ski = DVector::from_iterator(k.len(), k.iter().map(|&j| sigma[(j, i)]));
        let b = spd_solve(&skk, &ski).ok_or(Error::NotPositiveDefinite {
            index: model.order.vertex_at(i) + 1,
            pivot: f64::NAN,
        })?;
        let di = sigma[(i, i)] - ski.dot(&b);
        if !(di > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: model.order.vertex_at(i) + 1,
                pivot: di,
            });
        }
        d.push(di);
        beta.push(b);
    }
    Ok(GammaCoords {
        order: model.order.clone(),
        d,
        beta,
    })
}

fn working_from_gamma(model: &HomogeneousModel, gamma: &GammaCoords) -> DMatrix<f64> {
    let m = model.dim();
    let mut sigma = DMatrix::zeros(m, m);
    for i in 0..m {
        let k = model.preceding(i);
        let skk = submatrix(&sigma, k);
        let col = &skk * &gamma.beta[i];
        for (a, &j) in k.iter().enumerate() {
            sigma[(j, i)] = col[a];
            sigma[(i, j)] = col[a];
        }
        sigma[(i, i)] = gamma.d[i] + gamma.beta[i].dot(&col);
    }
    sigma
}

pub fn to_gamma(sigma: &DMatrix<f64>, g: &Graph) -> Result<GammaCoords> {
    let model = HomogeneousModel::new(g)?;
    check_in_pg(sigma, g)?;
    gamma_from_working(&model, &model.to_working(sigma))
}

/// Rebuilds `Σ` vertex by vertex: `Σ^≺_{·i} = Σ^{≺i} β_i`, `Σ_ii = D_ii + β_iᵀ Σ^{≺i} β_i`.
pub fn from_gamma(gamma: &GammaCoords, g: &Graph) -> Result<DMatrix<f64>> {
    let model = HomogeneousModel::new(g)?;
    let m = model.dim();
    if gamma.order != model.order {
        return Err(Error::InvalidOrdering(
            "coordinates were computed under a different vertex order".into(),
        ));
    }
    if gamma.d.len() != m || gamma.beta.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: gamma.d.len(),
        });
    }
    for i in 0..m {
        if gamma.beta[i].len() != model.preceding(i).len() {
            return Err(Error::DimensionMismatch {
                expected: model.preceding(i).len(),
                found: gamma.beta[i].len(),
            });
        }
        if !(gamma.d[i] > 0.0) {
            return Err(Error::NotInPG(format!("D[{}] is not positive", i + 1)));
        }
    }
    Ok(model.to_caller(&working_from_gamma(&model, gamma)))
}

/// Per-vertex ingredients of the closed forms, in working labels.
#[derive(Clone, Debug)]
struct VertexTerms {
    k: usize,
    /// `(U^{≺i})^{-1} U^≺_{·i}`.
    mean: DVector<f64>,
    /// Cholesky factor `C` of `U^{≺i} = C Cᵀ`.
    chol: Option<DMatrix<f64>>,
    /// `U_ii - U^≺ᵀ (U^{≺i})^{-1} U^≺`.
    schur: f64,
    log_det_prec: f64,
    log_det_prec_eq: f64,
}

fn vertex_terms(model: &HomogeneousModel, u: &DMatrix<f64>, i: usize) -> Result<VertexTerms> {
    let k = model.preceding(i);
    let ukk = submatrix(u, k);
    let uki = DVector::from_iterator(k.len(), k.iter().map(|&j| u[(j, i)]));
    let not_pd = || Error::NotPositiveDefinite {
        index: model.order.vertex_at(i) + 1,
        pivot: f64::NAN,
    };
    let (mean, chol) = if k.is_empty() {
        (DVector::zeros(0), None)
    } else {
        let ch = ukk.clone().cholesky().ok_or_else(not_pd)?;
        (ch.solve(&uki), Some(ch.l()))
    };
    let schur = u[(i, i)] - uki.dot(&mean);
    if !(schur > 0.0) {
        return Err(not_pd());
    }
    let log_det_prec = spd_log_det(&ukk).ok_or_else(not_pd)?;
    Ok(VertexTerms {
        k: k.len(),
        mean,
        chol,
        schur,
        log_det_prec,
        log_det_prec_eq: log_det_prec + schur.ln(),
    })
}

/// Exact sampler for `π_{U,α}` on a homogeneous graph, with per-vertex
/// quantities precomputed.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    model: HomogeneousModel,
    terms: Vec<VertexTerms>,
    shapes: Vec<f64>,
}

impl ExactSampler {
    pub fn new(p: &PriorSpec, g: &Graph) -> Result<Self> {
        let model = HomogeneousModel::new(g)?;
        let pw = model.check_prior(p)?;
        let mut terms = Vec::with_capacity(model.dim());
        let mut shapes = Vec::with_capacity(model.dim());
        for i in 0..model.dim() {
            let t = vertex_terms(&model, &pw.u, i)?;
            let a = pw.alpha[i] / 2.0 - t.k as f64 / 2.0 - 1.0;
            if !(a > 0.0) {
                return Err(Error::NonIntegrable {
                    vertex: model.order.vertex_at(i) + 1,
                });
            }
            shapes.push(a);
            terms.push(t);
        }
        Ok(ExactSampler {
            model,
            terms,
            shapes,
        })
    }

    pub fn model(&self) -> &HomogeneousModel {
        &self.model
    }

    /// Draws `D_ii ~ IG(a_i, s_i/2)` and `β_i | D_ii ~ N(μ_i, D_ii (U^{≺i})^{-1})`.
    pub fn sample_gamma<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GammaCoords> {
        let m = self.model.dim();
        let mut d = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        for i in 0..m {
            let t = &self.terms[i];
            let di = sample_invgamma(self.shapes[i], t.schur / 2.0, rng)?;
            let b = match &t.chol {
                None => DVector::zeros(0),
                Some(c) => {
                    let z = standard_normal_vector(t.k, rng);
                    let x = c
                        .transpose()
                        .solve_upper_triangular(&z)
                        .expect("nonsingular Cholesky factor");
                    &t.mean + x * di.sqrt()
                }
            };
            d.push(di);
            beta.push(b);
        }
        Ok(GammaCoords {
            order: self.model.order.clone(),
            d,
            beta,
        })
    }

    /// A draw of `Σ` in working labels.
    pub fn sample_working<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DMatrix<f64>> {
        let gamma = self.sample_gamma(rng)?;
        Ok(working_from_gamma(&self.model, &gamma))
    }

    /// A draw of `Σ` in the caller's labels.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DMatrix<f64>> {
        Ok(self.model.to_caller(&self.sample_working(rng)?))
    }

    /// Rebuild `Σ` (caller labels) from coordinates produced by this sampler.
    pub fn sigma_from_gamma(&self, gamma: &GammaCoords) -> DMatrix<f64> {
        self.model.to_caller(&working_from_gamma(&self.model, gamma))
    }
}

pub fn exact_sample<R: Rng + ?Sized>(p: &PriorSpec, g: &Graph, rng: &mut R) -> Result<DMatrix<f64>> {
    ExactSampler::new(p, g)?.sample(rng)
}

/// `log z_G(U, α) = Σ_i [log Γ(a_i) + (α_i/2 - 1) log 2 + (k_i/2) log π
/// + (a_i - ½) log|U^{≺i}| - a_i log|U^{⪯i}|]`, `a_i = α_i/2 - k_i/2 - 1`,
/// `k_i = |N^≺(i)|`, with `|U^{≺i}| = 1` for empty blocks.
pub fn log_normalizing_constant(p: &PriorSpec, g: &Graph) -> Result<f64> {
    let model = HomogeneousModel::new(g)?;
    let pw = model.check_prior(p)?;
    let mut total = 0.0;
    for i in 0..model.dim() {
        let k = model.preceding(i).len() as f64;
        let a = pw.alpha[i] / 2.0 - k / 2.0 - 1.0;
        if !(a > 0.0) {
            return Err(Error::NonIntegrable {
                vertex: model.order.vertex_at(i) + 1,
            });
        }
        let t = vertex_terms(&model, &pw.u, i)?;
        total += ln_gamma(a)
            + (pw.alpha[i] / 2.0 - 1.0) * std::f64::consts::LN_2
            + k / 2.0 * std::f64::consts::PI.ln()
            + (a - 0.5) * t.log_det_prec
            - a * t.log_det_prec_eq;
    }
    Ok(total)
}

/// `E[Σ]` under `π_{U,α}`, evaluated layer by layer from the leaves up.
/// Requires `α_i > |N^≺(i)| + 4` everywhere.
pub fn expected_sigma(p: &PriorSpec, g: &Graph) -> Result<DMatrix<f64>> {
    let model = HomogeneousModel::new(g)?;
    let pw = model.check_prior(p)?;
    let m = model.dim();
    for i in 0..m {
        let k = model.preceding(i).len() as f64;
        if !(pw.alpha[i] > k + 4.0) {
            return Err(Error::MomentDoesNotExist {
                vertex: model.order.vertex_at(i) + 1,
            });
        }
    }
    let mut e = DMatrix::zeros(m, m);
    for layer in model.layers() {
        for i in layer {
            let t = vertex_terms(&model, &pw.u, i)?;
            let k = model.preceding(i);
            let ed = t.schur / (pw.alpha[i] - t.k as f64 - 4.0);
            if k.is_empty() {
                e[(i, i)] = ed;
                continue;
            }
            let ekk = submatrix(&e, k);
            let col = &ekk * &t.mean;
            for (a, &j) in k.iter().enumerate() {
                e[(j, i)] = col[a];
                e[(i, j)] = col[a];
            }
            let uinv = {
                let c = t.chol.as_ref().expect("nonempty block");
                let cinv = c
                    .clone()
                    .solve_lower_triangular(&DMatrix::identity(t.k, t.k))
                    .expect("nonsingular Cholesky factor");
                cinv.transpose() * cinv
            };
            let second = uinv * ed + &t.mean * t.mean.transpose();
            e[(i, i)] = ed + (ekk * second).trace();
        }
    }
    symmetrize(&mut e);
    Ok(model.to_caller(&e))
}

/// Per-vertex terms `(U_ii - 2 β_iᵀ U^≺_{·i} + β_iᵀ U^{≺i} β_i) / D_ii` whose
/// sum is `tr(Σ^{-1} U)`. Indexed by the caller's labels.
pub fn trace_decomposition(sigma: &DMatrix<f64>, u: &DMatrix<f64>, g: &Graph) -> Result<Vec<f64>> {
    let model = HomogeneousModel::new(g)?;
    check_in_pg(sigma, g)?;
    if u.nrows() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: u.nrows(),
        });
    }
    let gamma = gamma_from_working(&model, &model.to_working(sigma))?;
    let uw = model.to_working(u);
    let mut terms = vec![0.0; model.dim()];
    for i in 0..model.dim() {
        let k = model.preceding(i);
        let ukk = submatrix(&uw, k);
        let uki = DVector::from_iterator(k.len(), k.iter().map(|&j| uw[(j, i)]));
        let b = &gamma.beta[i];
        let q = uw[(i, i)] - 2.0 * b.dot(&uki) + b.dot(&(&ukk * b));
        terms[model.order.vertex_at(i)] = q / gamma.d[i];
    }
    Ok(terms)
}

/// Streaming Pearson correlations between each `D_ii(Σ)` and the free
/// entries of the leading block `Σ_{1..i-1}` (working labels).
#[derive(Clone, Debug)]
pub struct HyperMarkovCheck {
    model: HomogeneousModel,
    /// For vertex `i`: the tracked entries `(j, k)`, `j <= k < i`.
    entries: Vec<Vec<(usize, usize)>>,
    n: usize,
    sx: Vec<f64>,
    sxx: Vec<f64>,
    sy: Vec<Vec<f64>>,
    syy: Vec<Vec<f64>>,
    sxy: Vec<Vec<f64>>,
}

/// Largest absolute correlation found per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperMarkovReport {
    pub samples: usize,
    /// `4 / sqrt(N)`.
    pub threshold: f64,
    /// `(vertex, max |r|)` in the caller's labels; vertices without a leading block are omitted.
    pub per_vertex: Vec<(usize, f64)>,
    pub flagged: Vec<usize>,
}

impl HyperMarkovReport {
    pub fn max_abs_correlation(&self) -> f64 {
        self.per_vertex.iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }
}

impl HyperMarkovCheck {
    pub fn new(g: &Graph) -> Result<Self> {
        let model = HomogeneousModel::new(g)?;
        let m = model.dim();
        let entries: Vec<Vec<(usize, usize)>> = (0..m)
            .map(|i| {
                (0..i)
                    .flat_map(|k| (0..=k).map(move |j| (j, k)))
                    .filter(|&(j, k)| model.graph.allows(j, k))
                    .collect()
            })
            .collect();
        let zeros = |i: usize| vec![0.0; entries[i].len()];
        Ok(HyperMarkovCheck {
            sy: (0..m).map(zeros).collect(),
            syy: (0..m).map(zeros).collect(),
            sxy: (0..m).map(zeros).collect(),
            entries,
            model,
            n: 0,
            sx: vec![0.0; m],
            sxx: vec![0.0; m],
        })
    }

    /// Adds one sample given in the caller's labels.
    pub fn push(&mut self, sigma: &DMatrix<f64>) -> Result<()> {
        self.push_working(&self.model.to_working(sigma))
    }

    /// Adds one sample given in working labels.
    pub fn push_working(&mut self, sigma: &DMatrix<f64>) -> Result<()> {
        let f = modified_cholesky(sigma)?;
        self.n += 1;
        for (i, entries) in self.entries.iter().enumerate() {
            let x = f.d[i];
            self.sx[i] += x;
            self.sxx[i] += x * x;
            for (e, &(j, k)) in entries.iter().enumerate() {
                let y = sigma[(j, k)];
                self.sy[i][e] += y;
                self.syy[i][e] += y * y;
                self.sxy[i][e] += x * y;
            }
        }
        Ok(())
    }

    pub fn report(&self) -> HyperMarkovReport {
        let n = self.n as f64;
        let threshold = 4.0 / n.sqrt();
        let mut per_vertex = Vec::new();
        let mut flagged = Vec::new();
        for (i, entries) in self.entries.iter().enumerate() {
            if entries.is_empty() {
                continue;
            }
            let vx = self.sxx[i] - self.sx[i] * self.sx[i] / n;
            let mut worst: f64 = 0.0;
            for e in 0..entries.len() {
                let vy = self.syy[i][e] - self.sy[i][e] * self.sy[i][e] / n;
                let cxy = self.sxy[i][e] - self.sx[i] * self.sy[i][e] / n;
                let denom = (vx * vy).sqrt();
                if denom > 0.0 {
                    worst = worst.max((cxy / denom).abs());
                }
            }
            let v = self.model.order.vertex_at(i);
            per_vertex.push((v + 1, worst));
            if worst > threshold {
                flagged.push(v + 1);
            }
        }
        per_vertex.sort_by_key(|&(v, _)| v);
        flagged.sort_unstable();
        HyperMarkovReport {
            samples: self.n,
            threshold,
            per_vertex,
            flagged,
        }
    }
}

pub fn check_hyper_markov(samples: &[DMatrix<f64>], g: &Graph) -> Result<HyperMarkovReport> {
    let mut check = HyperMarkovCheck::new(g)?;
    for s in samples {
        check.push(s)?;
    }
    Ok(check.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_stream;

    fn star() -> Graph {
        Graph::star(3, 2)
    }

    #[test]
    fn layers_of_simple_graphs() {
        let k = layer_sets(&Graph::complete(4)).unwrap();
        assert_eq!(k.layers, vec![vec![0], vec![1], vec![2], vec![3]]);
        let s = layer_sets(&star()).unwrap();
        assert_eq!(s.layers, vec![vec![0, 1], vec![2]]);
        assert_eq!(layer_sets(&Graph::path(4)), Err(Error::NotHomogeneous));
    }

    #[test]
    fn gamma_of_identity() {
        let g = star();
        let gm = to_gamma(&DMatrix::identity(3, 3), &g).unwrap();
        assert_eq!(gm.d, vec![1.0; 3]);
        assert!(gm.beta.iter().all(|b| b.iter().all(|&x| x == 0.0)));
        let one = to_gamma(&DMatrix::from_element(1, 1, 2.5), &Graph::empty(1)).unwrap();
        assert_eq!(one.d, vec![2.5]);
    }

    #[test]
    fn gamma_round_trip_star() {
        let g = star();
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.5, 0.0, 1.0, -0.3, 0.5, -0.3, 3.0]);
        let gm = to_gamma(&s, &g).unwrap();
        let back = from_gamma(&gm, &g).unwrap();
        assert!((back - s).abs().max() < 1e-12);
    }

    #[test]
    fn normalizing_constant_scalar_case() {
        let p = PriorSpec::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 6.0))
            .unwrap();
        assert!(log_normalizing_constant(&p, &Graph::empty(1)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn normalizing_constant_star_hand_value() {
        let p = PriorSpec::new(DMatrix::identity(3, 3), DVector::from_row_slice(&[5.0, 5.0, 7.0]))
            .unwrap();
        let expect = 3.0 * ln_gamma(1.5) + 5.5 * std::f64::consts::LN_2 + std::f64::consts::PI.ln();
        assert!((log_normalizing_constant(&p, &star()).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn normalizing_constant_boundary() {
        let p = PriorSpec::new(DMatrix::identity(3, 3), DVector::from_row_slice(&[5.0, 5.0, 4.0]))
            .unwrap();
        assert_eq!(
            log_normalizing_constant(&p, &star()),
            Err(Error::NonIntegrable { vertex: 3 })
        );
        assert!(matches!(
            ExactSampler::new(&p, &star()),
            Err(Error::NonIntegrable { vertex: 3 })
        ));
    }

    #[test]
    fn expected_sigma_hand_values() {
        let p = PriorSpec::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 6.0))
            .unwrap();
        assert!((expected_sigma(&p, &Graph::empty(1)).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        let p = PriorSpec::new(DMatrix::identity(3, 3), DVector::from_row_slice(&[6.0, 6.0, 8.0]))
            .unwrap();
        let e = expected_sigma(&p, &star()).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.5, 0.5, 1.0]));
        assert!((e - expect).abs().max() < 1e-15);
        let low = PriorSpec::new(DMatrix::identity(3, 3), DVector::from_row_slice(&[6.0, 6.0, 6.0]))
            .unwrap();
        assert_eq!(
            expected_sigma(&low, &star()),
            Err(Error::MomentDoesNotExist { vertex: 3 })
        );
    }

    #[test]
    fn trace_terms_simple() {
        let g = star();
        let u = DMatrix::from_row_slice(3, 3, &[2.0, 0.2, 0.5, 0.2, 1.0, -0.3, 0.5, -0.3, 3.0]);
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.5, 0.0, 1.0, -0.3, 0.5, -0.3, 3.0]);
        let terms = trace_decomposition(&s, &u, &g).unwrap();
        let dense = (s.clone().try_inverse().unwrap() * &u).trace();
        assert!((terms.iter().sum::<f64>() - dense).abs() < 1e-12);
        let one = trace_decomposition(
            &DMatrix::from_element(1, 1, 4.0),
            &DMatrix::from_element(1, 1, 2.0),
            &Graph::empty(1),
        )
        .unwrap();
        assert_eq!(one, vec![0.5]);
        let same = trace_decomposition(&s, &s, &g).unwrap();
        assert!((same.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hyper_markov_single_vertex_is_vacuous() {
        let rep = check_hyper_markov(&[DMatrix::identity(1, 1)], &Graph::empty(1)).unwrap();
        assert!(rep.per_vertex.is_empty() && rep.flagged.is_empty());
    }

    #[test]
    fn scalar_exact_sampler_is_inverse_gamma() {
        let p = PriorSpec::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 10.0))
            .unwrap();
        let s = ExactSampler::new(&p, &Graph::empty(1)).unwrap();
        let mut rng = rng_stream(5, 0);
        let n = 50_000;
        let mean = (0..n).map(|_| s.sample(&mut rng).unwrap()[(0, 0)]).sum::<f64>() / n as f64;
        // IG(4, 1): mean 1/3, variance 1/18
        assert!((mean - 1.0 / 3.0).abs() < 3.0 * (1.0 / 18.0 / n as f64).sqrt());
    }

    #[test]
    fn non_hasse_labels_are_reordered() {
        // star with the center first is homogeneous but not in Hasse order
        let g = Graph::star(3, 0);
        let model = HomogeneousModel::new(&g).unwrap();
        assert_eq!(model.order().label(0), 2);
        let p = PriorSpec::new(DMatrix::identity(3, 3), DVector::from_row_slice(&[8.0, 6.0, 6.0]))
            .unwrap();
        let e = expected_sigma(&p, &g).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.5, 0.5]));
        assert!((e - expect).abs().max() < 1e-15);
    }
}
