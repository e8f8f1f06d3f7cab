//! Baseline samplers of the standard normal distribution.
//!
//! Three schemes are provided: seeded i.i.d. Monte Carlo, Sobol
//! quasi-Monte Carlo mapped through the normal inverse CDF, and randomized
//! QMC via a Cranley-Patterson uniform shift. All samplers are pure
//! functions of their arguments: the Monte Carlo path draws ChaCha8
//! uniforms and applies the inverse CDF, so batches reproduce bit-for-bit
//! across platforms.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobol::params::JoeKuoD6;
use sobol::Sobol;
use thiserror::Error;

/// Largest supported QMC dimension. The embedded Joe-Kuo direction-number
/// table extends further, but everything in this crate stays well below it.
pub const MAX_QMC_DIM: usize = 1000;

const SQRT_2PI: f64 = 2.5066282746310002;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("sample count must be at least 1")]
    EmptyBatch,
    #[error("dimension {dim} exceeds the Sobol direction-number table ({max} dimensions)")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("inverse normal CDF requires u in (0, 1), got {0}")]
    InvalidUniform(f64),
    #[error("shift vector has length {got}, expected {expected}")]
    ShiftLength { expected: usize, got: usize },
}

/// Which sampler produced a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleScheme {
    Mc,
    Qmc,
    Rqmc,
}

/// A batch of `len` points in R^dim with implicit uniform weights 1/len.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    dim: usize,
    points: Vec<f64>,
    scheme: SampleScheme,
    seed: Option<u64>,
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn scheme(&self) -> SampleScheme {
        self.scheme
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The uniform weight carried by every point, exactly 1/len.
    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }
}

/// Draws one standard normal via the inverse CDF of a ChaCha8 uniform.
pub(crate) fn draw_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.sample(Open01);
    // Open01 guarantees u in (0, 1), so this cannot fail.
    normal_inverse_cdf(u).expect("Open01 sample out of range")
}

/// `n` i.i.d. standard-normal vectors in R^d, deterministic given `seed`.
pub fn sample_mc(dim: usize, n: usize, seed: u64) -> Result<SampleBatch, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n * dim).map(|_| draw_standard_normal(&mut rng)).collect();
    Ok(SampleBatch {
        dim,
        points,
        scheme: SampleScheme::Mc,
        seed: Some(seed),
    })
}

/// First `n` Sobol points (skipping the origin at index 0) mapped through
/// the normal inverse CDF componentwise. Fully deterministic.
pub fn sample_qmc(dim: usize, n: usize) -> Result<SampleBatch, SamplingError> {
    let zero_shift = vec![0.0; dim];
    let mut batch = sample_qmc_shifted(dim, n, &zero_shift)?;
    batch.scheme = SampleScheme::Qmc;
    batch.seed = None;
    Ok(batch)
}

/// Sobol points with a Cranley-Patterson shift modulo 1, then inverse CDF.
///
/// A zero shift recovers [`sample_qmc`] exactly. Shifted coordinates are
/// clamped into the open unit interval before the inverse CDF so that a
/// rounding artifact can never produce an infinite normal coordinate.
pub fn sample_qmc_shifted(dim: usize, n: usize, shift: &[f64]) -> Result<SampleBatch, SamplingError> {
    if n == 0 {
        return Err(SamplingError::EmptyBatch);
    }
    if dim > MAX_QMC_DIM {
        return Err(SamplingError::DimensionTooLarge {
            dim,
            max: MAX_QMC_DIM,
        });
    }
    if shift.len() != dim {
        return Err(SamplingError::ShiftLength {
            expected: dim,
            got: shift.len(),
        });
    }
    const U_CLAMP: f64 = 1e-16;
    let params = JoeKuoD6::minimal();
    let seq = Sobol::<f64>::new(dim, &params);
    let mut points = Vec::with_capacity(n * dim);
    for u in seq.skip(1).take(n) {
        for (k, &uk) in u.iter().enumerate() {
            let mut s = uk + shift[k];
            if s >= 1.0 {
                s -= 1.0;
            }
            let s = s.clamp(U_CLAMP, 1.0 - U_CLAMP);
            points.push(normal_inverse_cdf(s)?);
        }
    }
    Ok(SampleBatch {
        dim,
        points,
        scheme: SampleScheme::Qmc,
        seed: None,
    })
}

/// Randomized QMC: a seeded uniform shift applied to the Sobol points.
/// Unbiased over the random shift; deterministic given `seed`.
pub fn sample_rqmc(dim: usize, n: usize, seed: u64) -> Result<SampleBatch, SamplingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Open01)).collect();
    let mut batch = sample_qmc_shifted(dim, n, &shift)?;
    batch.scheme = SampleScheme::Rqmc;
    batch.seed = Some(seed);
    Ok(batch)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF via the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF, absolute error below 1e-9.
///
/// Rational approximation (Acklam) refined by one Halley step against the
/// erfc-based [`norm_cdf`].
pub fn normal_inverse_cdf(u: f64) -> Result<f64, SamplingError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(SamplingError::InvalidUniform(u));
    }

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if u < P_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - P_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley refinement against the high-precision CDF.
    let e = norm_cdf(x) - u;
    let du = e * SQRT_2PI * (0.5 * x * x).exp();
    x -= du / (1.0 + 0.5 * x * du);
    Ok(x)
}
