//! Block Gibbs sampler over the free columns of `L` and the diagonal `D`.
//!
//! One sweep draws each nonempty column block `L_{G,v}` (rows `u > v` adjacent
//! to `v`) from its Gaussian conditional, then every `D_ii` from its
//! inverse-gamma conditional. `B = L^{-1}` and `Ω = (LDLᵀ)^{-1}` are rebuilt
//! from scratch at the start of each sweep and carried through the column
//! updates by exact rank-one corrections.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{verify_order_in_sd, Graph, VertexOrder};
use crate::linalg::{
    precision_from_inverse_factor, reconstruct, spd_log_det, structural_zero_row, submatrix,
    tri_inverse, CholFactor,
};
use crate::sampling::{rng_stream, sample_invgamma, standard_normal_vector};
use crate::wishart::{integrability, row_quadratics, PriorSpec};

/// Starting point of a chain.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum InitPolicy {
    /// `L = I`, `D_ii = Ũ_ii / (α̃_i - 2)`.
    #[default]
    Default,
    /// A user-supplied factor; must respect the graph.
    Factor(CholFactor),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsConfig {
    pub burn_in: usize,
    /// Post-burn-in iterations `I`.
    pub iterations: usize,
    pub seed: u64,
    /// Keep every `thin`-th post-burn-in iteration.
    pub thin: usize,
    pub init: InitPolicy,
    /// Batches used for the drift diagnostic.
    pub drift_batches: usize,
    /// Batches used for the Monte-Carlo standard errors.
    pub se_batches: usize,
    /// Independent chains (streams `0..chains` of `seed`), merged by averaging.
    pub chains: usize,
    /// Run even if the posterior shape parameters fail the integrability condition.
    pub allow_nonintegrable: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            burn_in: 1000,
            iterations: 1000,
            seed: 0,
            thin: 1,
            init: InitPolicy::Default,
            drift_batches: 10,
            se_batches: 50,
            chains: 1,
            allow_nonintegrable: false,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.thin == 0 || self.thin > self.iterations {
            return Err(Error::InvalidConfig(format!(
                "thin must lie in 1..={}",
                self.iterations
            )));
        }
        if self.chains == 0 || self.drift_batches == 0 || self.se_batches == 0 {
            return Err(Error::InvalidConfig(
                "chains and batch counts must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        self.iterations / self.thin
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub factor: CholFactor,
    /// Completed sweeps.
    pub iteration: u64,
    /// RNG stream of the chain that produced this state.
    pub stream: u64,
}

impl ChainState {
    pub fn new(factor: CholFactor, stream: u64) -> Self {
        ChainState {
            factor,
            iteration: 0,
            stream,
        }
    }

    /// The default starting point for posterior parameters `(Ũ, α̃)`.
    pub fn initial(post: &PriorSpec, stream: u64) -> Result<Self> {
        let m = post.dim();
        let mut d = DVector::zeros(m);
        for i in 0..m {
            let denom = post.alpha[i] - 2.0;
            let v = post.u[(i, i)] / denom;
            if !(denom > 0.0 && v > 0.0 && v.is_finite()) {
                return Err(Error::NonIntegrableShape {
                    vertex: i + 1,
                    shape: post.alpha[i] / 2.0 - 1.0,
                });
            }
            d[i] = v;
        }
        Ok(ChainState::new(
            CholFactor::new(DMatrix::identity(m, m), d)?,
            stream,
        ))
    }
}

/// Gaussian conditional of one column block.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalColumnParams {
    /// Row indices `u > v` with `(u, v) ∈ E`, ascending.
    pub rows: Vec<usize>,
    pub mean: DVector<f64>,
    /// `(M^{v,G})^{-1}_{uu'} = (L^{-1}ŨL^{-T})_{vv} (LDLᵀ)^{-1}_{uu'}`.
    pub precision: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
}

fn block_rows(g: &Graph, v: usize) -> Vec<usize> {
    g.neighbors(v).iter().copied().filter(|&u| u > v).collect()
}

fn check_column(g: &Graph, v: usize, u_tilde: &DMatrix<f64>, f: &CholFactor) -> Result<()> {
    let m = g.num_vertices();
    if f.dim() != m || u_tilde.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: f.dim().min(u_tilde.nrows()),
        });
    }
    if v + 1 >= m {
        return Err(Error::InvalidParams(format!(
            "column {} has no entries below the diagonal",
            v + 1
        )));
    }
    Ok(())
}

/// Conditional law of `L_{G,v}` given everything else.
///
/// Writing `r` for row `v` of `B = L^{-1}` and `c = r Ũ rᵀ`, the trace term is
/// quadratic in the block with Hessian `2c Ω_GG` and gradient
/// `-2 (Ω Ũ rᵀ)_G` at the current value `x`, so the mean is
/// `x + (c Ω_GG)^{-1} (Ω Ũ rᵀ)_G`. An empty block yields empty parameters.
pub fn conditional_column_params(
    state: &ChainState,
    g: &Graph,
    v: usize,
    u_tilde: &DMatrix<f64>,
) -> Result<ConditionalColumnParams> {
    let f = &state.factor;
    check_column(g, v, u_tilde, f)?;
    let rows = block_rows(g, v);
    let b = tri_inverse(&f.l);
    let omega = precision_from_inverse_factor(&b, &f.d);
    let r = b.row(v).transpose();
    let ur = u_tilde * &r;
    let c = r.dot(&ur);
    let k = rows.len();
    if k == 0 {
        return Ok(ConditionalColumnParams {
            rows,
            mean: DVector::zeros(0),
            precision: DMatrix::zeros(0, 0),
            covariance: DMatrix::zeros(0, 0),
        });
    }
    let precision = submatrix(&omega, &rows) * c;
    let y = DVector::from_iterator(k, rows.iter().map(|&u| omega.row(u).dot(&ur.transpose())));
    let x = DVector::from_iterator(k, rows.iter().map(|&u| f.l[(u, v)]));
    let ch = precision
        .clone()
        .cholesky()
        .ok_or(Error::SingularPrecision(v + 1))?;
    let mean = x + ch.solve(&y);
    let covariance = ch.inverse();
    Ok(ConditionalColumnParams {
        rows,
        mean,
        precision,
        covariance,
    })
}

/// The block mean built only from the structural-zero set `Z` of row `v` of
/// `L^{-1}`: solves `(M^{-1} μ)_u = Σ_{j ∈ Z} (L^{-1}Ũ)_{vj} (LDLᵀ)^{-1}_{uj}`.
/// It agrees with [`conditional_column_params`] only when no vertex reachable
/// from `v` along decreasing edge paths has a neighbor above `v` (paths and
/// stars in natural order, say), and differs in general, Hasse orders included.
pub fn column_mean_from_zero_set(
    state: &ChainState,
    g: &Graph,
    v: usize,
    u_tilde: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let f = &state.factor;
    check_column(g, v, u_tilde, f)?;
    let rows = block_rows(g, v);
    let b = tri_inverse(&f.l);
    let omega = precision_from_inverse_factor(&b, &f.d);
    let r = b.row(v).transpose();
    let ru = u_tilde * &r;
    let c = r.dot(&ru);
    let zeros = structural_zero_row(g, v);
    let k = rows.len();
    let rhs = DVector::from_iterator(
        k,
        rows.iter()
            .map(|&u| zeros.iter().map(|&j| omega[(u, j)] * ru[j]).sum::<f64>()),
    );
    let precision = submatrix(&omega, &rows) * c;
    let ch = precision.cholesky().ok_or(Error::SingularPrecision(v + 1))?;
    Ok(ch.solve(&rhs))
}

/// `(shape, scale)` of `D_ii | L ~ IG(α̃_i/2 - 1, (L^{-1}ŨL^{-T})_ii / 2)`.
pub fn conditional_d_params(
    state: &ChainState,
    i: usize,
    u_tilde: &DMatrix<f64>,
    alpha_tilde: &DVector<f64>,
) -> Result<(f64, f64)> {
    let f = &state.factor;
    if i >= f.dim() || u_tilde.nrows() != f.dim() || alpha_tilde.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: u_tilde.nrows(),
        });
    }
    let shape = alpha_tilde[i] / 2.0 - 1.0;
    if !(shape > 0.0) {
        return Err(Error::NonIntegrableShape {
            vertex: i + 1,
            shape,
        });
    }
    let b = tri_inverse(&f.l);
    let row = b.row(i);
    let q = (row * u_tilde * row.transpose())[(0, 0)];
    Ok((shape, q / 2.0))
}

/// Reusable sweep machinery for one graph and posterior.
pub struct Sweeper<'a> {
    post: &'a PriorSpec,
    blocks: Vec<(usize, Vec<usize>)>,
    shapes: DVector<f64>,
}

impl<'a> Sweeper<'a> {
    pub fn new(g: &Graph, post: &'a PriorSpec) -> Result<Self> {
        let m = g.num_vertices();
        if post.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: post.dim(),
            });
        }
        let mut shapes = DVector::zeros(m);
        for i in 0..m {
            let a = post.alpha[i] / 2.0 - 1.0;
            if !(a > 0.0) {
                return Err(Error::NonIntegrableShape {
                    vertex: i + 1,
                    shape: a,
                });
            }
            shapes[i] = a;
        }
        let blocks = (0..m.saturating_sub(1))
            .map(|v| (v, block_rows(g, v)))
            .filter(|(_, rows)| !rows.is_empty())
            .collect();
        Ok(Sweeper {
            post,
            blocks,
            shapes,
        })
    }

    /// One full sweep in place.
    pub fn sweep<R: Rng + ?Sized>(&self, f: &mut CholFactor, rng: &mut R) -> Result<()> {
        let u = &self.post.u;
        let m = f.dim();
        let mut b = tri_inverse(&f.l);
        let mut omega = precision_from_inverse_factor(&b, &f.d);
        let dinv = f.d.map(|x| 1.0 / x);
        for (v, rows) in &self.blocks {
            let v = *v;
            let k = rows.len();
            let r = b.row(v).transpose();
            let ur = u * &r;
            let c = r.dot(&ur);
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::SingularPrecision(v + 1));
            }
            let mut precision = DMatrix::zeros(k, k);
            let mut y = DVector::zeros(k);
            for (a, &ua) in rows.iter().enumerate() {
                for (bb, &ub) in rows.iter().enumerate() {
                    precision[(a, bb)] = c * omega[(ua, ub)];
                }
                y[a] = omega.row(ua).dot(&ur.transpose());
            }
            let ch = precision.cholesky().ok_or(Error::SingularPrecision(v + 1))?;
            let shift = ch.solve(&y);
            let z = standard_normal_vector(k, rng);
            let noise = ch
                .l()
                .transpose()
                .solve_upper_triangular(&z)
                .expect("nonsingular Cholesky factor");
            // new - old = shift + noise
            let delta = shift + noise;
            let mut bvec = DVector::zeros(m);
            for (a, &ua) in rows.iter().enumerate() {
                f.l[(ua, v)] += delta[a];
                bvec.axpy(delta[a], &b.column(ua), 1.0);
            }
            let scaled = bvec.component_mul(&dinv);
            let gvec = b.tr_mul(&scaled);
            let s = bvec.dot(&scaled);
            b.ger(-1.0, &bvec, &r, 1.0);
            omega.ger(-1.0, &r, &gvec, 1.0);
            omega.ger(-1.0, &gvec, &r, 1.0);
            omega.ger(s, &r, &r, 1.0);
        }
        let q = row_quadratics(&b, u);
        for i in 0..m {
            f.d[i] = sample_invgamma(self.shapes[i], q[i] / 2.0, rng)?;
        }
        Ok(())
    }
}

/// One sweep from `state`.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &ChainState,
    g: &Graph,
    post: &PriorSpec,
    rng: &mut R,
) -> Result<ChainState> {
    let sweeper = Sweeper::new(g, post)?;
    let mut next = state.clone();
    sweeper.sweep(&mut next.factor, rng)?;
    next.iteration += 1;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainDiagnostics {
    pub burn_in: usize,
    pub iterations: usize,
    pub thin: usize,
    pub chains: usize,
    /// Samples averaged, summed over chains.
    pub kept: usize,
    /// `max_b ||mean_b - mean||_F / ||mean||_F` over the drift batches, worst chain.
    pub max_batch_drift: f64,
    pub drift_warning: bool,
    /// Smallest `D_ii` visited after burn-in.
    pub min_d: f64,
}

/// Drift above this fraction triggers a warning.
pub const DRIFT_WARN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    /// Average of `LDLᵀ` over kept iterations.
    pub mean: DMatrix<f64>,
    /// Batch-means Monte-Carlo standard error per entry (NaN with fewer than two batches).
    pub std_error: DMatrix<f64>,
    pub diagnostics: ChainDiagnostics,
    pub final_states: Vec<ChainState>,
}

struct Batches {
    sums: Vec<DMatrix<f64>>,
    counts: Vec<usize>,
}

impl Batches {
    fn new(n: usize, m: usize) -> Self {
        Batches {
            sums: vec![DMatrix::zeros(m, m); n],
            counts: vec![0; n],
        }
    }

    fn means(&self) -> impl Iterator<Item = DMatrix<f64>> + '_ {
        self.sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
    }
}

struct SingleChain {
    total: DMatrix<f64>,
    kept: usize,
    se: Batches,
    drift: f64,
    min_d: f64,
    state: ChainState,
}

/// Checks shared by every entry point.
fn prepare(cfg: &GibbsConfig, post: &PriorSpec, g: &Graph) -> Result<()> {
    cfg.validate()?;
    let m = g.num_vertices();
    if post.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: post.dim(),
        });
    }
    if !verify_order_in_sd(g, &VertexOrder::identity(m)) {
        return Err(Error::InvalidOrdering(
            "vertex labels are not a perfect elimination order of the graph".into(),
        ));
    }
    let integ = integrability(&post.alpha, g);
    if let Some(i) = integ.failing_vertex {
        if !cfg.allow_nonintegrable {
            return Err(Error::NonIntegrablePosterior { vertex: i + 1 });
        }
        log::warn!("posterior shape fails the integrability condition at vertex {}", i + 1);
    }
    if spd_log_det(&post.u).is_none() {
        return Err(Error::InvalidParams(
            "posterior location matrix is not positive definite".into(),
        ));
    }
    if let InitPolicy::Factor(f) = &cfg.init {
        if !f.respects(g) {
            return Err(Error::InvalidParams(
                "initial factor does not respect the graph".into(),
            ));
        }
    }
    Ok(())
}

fn run_single(
    cfg: &GibbsConfig,
    post: &PriorSpec,
    g: &Graph,
    stream: u64,
    observer: &mut dyn FnMut(u64, &CholFactor),
) -> Result<SingleChain> {
    let m = g.num_vertices();
    let mut rng = rng_stream(cfg.seed, stream);
    let mut state = match &cfg.init {
        InitPolicy::Default => ChainState::initial(post, stream)?,
        InitPolicy::Factor(f) => ChainState::new(f.clone(), stream),
    };
    let sweeper = Sweeper::new(g, post)?;
    for _ in 0..cfg.burn_in {
        sweeper.sweep(&mut state.factor, &mut rng)?;
        state.iteration += 1;
    }
    let kept = cfg.kept();
    let n_drift = cfg.drift_batches.min(kept);
    let n_se = cfg.se_batches.min(kept);
    let mut drift = Batches::new(n_drift, m);
    let mut se = Batches::new(n_se, m);
    let mut total = DMatrix::zeros(m, m);
    let mut min_d = f64::INFINITY;
    let mut k = 0usize;
    for t in 1..=cfg.iterations {
        sweeper.sweep(&mut state.factor, &mut rng)?;
        state.iteration += 1;
        if t % cfg.thin != 0 || k >= kept {
            continue;
        }
        let sigma = reconstruct(&state.factor);
        min_d = state.factor.d.iter().copied().fold(min_d, f64::min);
        let bd = k * n_drift / kept;
        let bs = k * n_se / kept;
        drift.sums[bd] += &sigma;
        drift.counts[bd] += 1;
        se.sums[bs] += &sigma;
        se.counts[bs] += 1;
        total += &sigma;
        observer(state.iteration, &state.factor);
        k += 1;
    }
    let mean = &total / kept as f64;
    let norm = mean.norm();
    let max_drift = drift
        .means()
        .map(|bm| (bm - &mean).norm() / norm)
        .fold(0.0, f64::max);
    Ok(SingleChain {
        total,
        kept,
        se,
        drift: max_drift,
        min_d,
        state,
    })
}

fn merge(cfg: &GibbsConfig, m: usize, chains: Vec<SingleChain>) -> ChainResult {
    let kept: usize = chains.iter().map(|c| c.kept).sum();
    let mut total = DMatrix::zeros(m, m);
    for c in &chains {
        total += &c.total;
    }
    let mean = total / kept as f64;
    let batch_means: Vec<DMatrix<f64>> = chains.iter().flat_map(|c| c.se.means()).collect();
    let nb = batch_means.len();
    let std_error = if nb < 2 {
        DMatrix::from_element(m, m, f64::NAN)
    } else {
        let bbar = batch_means.iter().fold(DMatrix::zeros(m, m), |acc, b| acc + b) / nb as f64;
        let mut var = DMatrix::zeros(m, m);
        for b in &batch_means {
            let d = b - &bbar;
            var += d.component_mul(&d);
        }
        (var / ((nb - 1) as f64 * nb as f64)).map(f64::sqrt)
    };
    let max_batch_drift = chains.iter().map(|c| c.drift).fold(0.0, f64::max);
    let min_d = chains.iter().map(|c| c.min_d).fold(f64::INFINITY, f64::min);
    if max_batch_drift > DRIFT_WARN {
        log::warn!(
            "batch means drift by {:.3} relative to the overall mean",
            max_batch_drift
        );
    }
    ChainResult {
        mean,
        std_error,
        diagnostics: ChainDiagnostics {
            burn_in: cfg.burn_in,
            iterations: cfg.iterations,
            thin: cfg.thin,
            chains: chains.len(),
            kept,
            max_batch_drift,
            drift_warning: max_batch_drift > DRIFT_WARN,
            min_d,
        },
        final_states: chains.into_iter().map(|c| c.state).collect(),
    }
}

/// Runs `cfg.chains` chains (in parallel when more than one) and averages
/// `LDLᵀ` over the kept post-burn-in iterations. The graph's vertex labels
/// must be a perfect elimination order.
pub fn run_chain(cfg: &GibbsConfig, post: &PriorSpec, g: &Graph) -> Result<ChainResult> {
    prepare(cfg, post, g)?;
    let m = g.num_vertices();
    if cfg.chains == 1 {
        let c = run_single(cfg, post, g, 0, &mut |_, _| {})?;
        return Ok(merge(cfg, m, vec![c]));
    }
    let results: Vec<Result<SingleChain>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.chains as u64)
            .map(|stream| scope.spawn(move || run_single(cfg, post, g, stream, &mut |_, _| {})))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain worker panicked"))
            .collect()
    });
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge(cfg, m, chains))
}

/// Single-chain run that hands every kept state to `observer` along with its
/// sweep number. Chains beyond the first are ignored.
pub fn run_chain_observed(
    cfg: &GibbsConfig,
    post: &PriorSpec,
    g: &Graph,
    observer: &mut dyn FnMut(u64, &CholFactor),
) -> Result<ChainResult> {
    prepare(cfg, post, g)?;
    let c = run_single(cfg, post, g, 0, observer)?;
    Ok(merge(cfg, g.num_vertices(), vec![c]))
}
