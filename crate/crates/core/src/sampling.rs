//! Random variate generation and seeded RNG streams.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rand::SeedableRng;

use crate::error::{Error, Result};

/// The generator used everywhere in the crate.
pub type ChainRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Draw from `N(mean, covariance)`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = mean.len();
    if covariance.nrows() != n || covariance.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: covariance.nrows(),
        });
    }
    if n == 0 {
        return Ok(mean.clone());
    }
    let ch = covariance
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
    let z = standard_normal_vector(n, rng);
    Ok(mean + ch.l() * z)
}

/// Draw from `N(mean, P^{-1})` given the precision `P`: with `P = C Cᵀ`,
/// `mean + C^{-T} z` has the right covariance.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = mean.len();
    if n == 0 {
        return Ok(mean.clone());
    }
    let ch = precision
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
    let z = standard_normal_vector(n, rng);
    let x = ch
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .expect("nonsingular Cholesky factor");
    Ok(mean + x)
}

/// Inverse-gamma draw with density `∝ x^{-(shape+1)} e^{-scale/x}` (mean `scale/(shape-1)`).
pub fn sample_invgamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "inverse-gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(scale / g.sample(rng))
}

/// Log density of the inverse gamma at `x`.
pub fn invgamma_log_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - statrs::function::gamma::ln_gamma(shape) - (shape + 1.0) * x.ln()
        - scale / x
}
