//! Monte-Carlo oracle for the analytic squeezing pipeline: output quadrature
//! covariance, IQ-shot sampling with a counter-based generator, Gaussian
//! fitting, and the measured-squeezing estimator with on/off histograms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::{infer_reference_squeezing, EfficiencyChain};
use crate::dpa::{
    effective_params, kerr_lowest_order, optimal_squeeze, scattering_set, squeeze_variance,
    DeviceParams, PumpPoint, ScatteringSet,
};
use crate::error::ModelError;
use crate::units::lin_to_db;

/// Quadrature covariance with vacuum = 1/2 on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCovariance {
    pub vxx: f64,
    pub vyy: f64,
    pub vxy: f64,
}

impl QuadCovariance {
    /// Vacuum state: identity / 2.
    pub fn vacuum() -> Self {
        Self { vxx: 0.5, vyy: 0.5, vxy: 0.0 }
    }

    pub fn det(&self) -> f64 {
        self.vxx * self.vyy - self.vxy * self.vxy
    }

    /// Variance of the quadrature at angle `theta`:
    /// `vxx cos^2 + vyy sin^2 + 2 vxy sin cos`.
    pub fn variance_along(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.vxx * c * c + self.vyy * s * s + 2.0 * self.vxy * s * c
    }

    /// Covariance of the frame rotated by `phi` (samples rotated by `phi`
    /// have this covariance).
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self {
            vxx: self.vxx * c * c + self.vyy * s * s - 2.0 * self.vxy * s * c,
            vyy: self.vxx * s * s + self.vyy * c * c + 2.0 * self.vxy * s * c,
            vxy: (self.vxx - self.vyy) * s * c + self.vxy * (c * c - s * s),
        }
    }

    /// Positive semidefiniteness and the Heisenberg bound `det >= 1/4`,
    /// both with a small numerical allowance.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.vxx >= 0.0 && self.vyy >= 0.0 && self.det() >= -1e-12) {
            return Err(ModelError::NotPositiveSemidefinite);
        }
        if self.det() < 0.25 - 1e-10 {
            return Err(ModelError::NotPositiveSemidefinite);
        }
        Ok(())
    }
}

/// Zero-frequency output covariance behind an external transmission `eta`:
/// the scattering variances give `vxx = S(0)`, `vyy = S(pi/2)`,
/// `vxy = S(pi/4) - (vxx + vyy)/2`, then `V -> eta V + (1 - eta) I/2`.
pub fn output_covariance(scat: &ScatteringSet, eta: f64) -> Result<QuadCovariance, ModelError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ModelError::EtaOutOfRange { value: eta });
    }
    let vxx = squeeze_variance(scat, 0.0);
    let vyy = squeeze_variance(scat, std::f64::consts::FRAC_PI_2);
    let vxy = squeeze_variance(scat, std::f64::consts::FRAC_PI_4) - 0.5 * (vxx + vyy);
    Ok(QuadCovariance {
        vxx: eta * vxx + (1.0 - eta) * 0.5,
        vyy: eta * vyy + (1.0 - eta) * 0.5,
        vxy: eta * vxy,
    })
}

/// A reproducible set of heterodyne shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IQEnsemble {
    pub seed: u64,
    pub shots: usize,
    pub samples: Vec<(f64, f64)>,
}

/// splitmix64 finalizer: decorrelates (seed, counter) pairs.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-shot generator keyed on (seed, shot index) only, so serial and
/// partitioned parallel runs produce bit-identical streams.
fn shot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(index)))
}

fn draw_shot(chol: &(f64, f64, f64), seed: u64, index: u64) -> (f64, f64) {
    let mut rng = shot_rng(seed, index);
    let z1: f64 = StandardNormal.sample(&mut rng);
    let z2: f64 = StandardNormal.sample(&mut rng);
    let (l11, l21, l22) = *chol;
    (l11 * z1, l21 * z1 + l22 * z2)
}

fn cholesky(cov: &QuadCovariance) -> Result<(f64, f64, f64), ModelError> {
    if !(cov.vxx >= 0.0 && cov.vyy >= 0.0 && cov.det() >= -1e-12) {
        return Err(ModelError::NotPositiveSemidefinite);
    }
    if cov.vxx == 0.0 {
        if cov.vxy != 0.0 {
            return Err(ModelError::NotPositiveSemidefinite);
        }
        return Ok((0.0, 0.0, cov.vyy.sqrt()));
    }
    let l11 = cov.vxx.sqrt();
    let l21 = cov.vxy / l11;
    let l22 = (cov.vyy - l21 * l21).max(0.0).sqrt();
    Ok((l11, l21, l22))
}

/// Sequential sampler; see [`sample_iq`] for the determinism contract.
pub fn sample_iq_seq(
    cov: &QuadCovariance,
    shots: usize,
    seed: u64,
) -> Result<IQEnsemble, ModelError> {
    let chol = cholesky(cov)?;
    let samples = (0..shots as u64).map(|i| draw_shot(&chol, seed, i)).collect();
    Ok(IQEnsemble { seed, shots, samples })
}

/// Draw `shots` IQ pairs from a Gaussian with the given covariance. Each
/// shot is keyed on (seed, shot index) alone, so the result is bit-identical
/// across serial and parallel execution.
pub fn sample_iq(cov: &QuadCovariance, shots: usize, seed: u64) -> Result<IQEnsemble, ModelError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let chol = cholesky(cov)?;
        let samples = (0..shots)
            .into_par_iter()
            .map(|i| draw_shot(&chol, seed, i as u64))
            .collect();
        Ok(IQEnsemble { seed, shots, samples })
    }
    #[cfg(not(feature = "parallel"))]
    {
        sample_iq_seq(cov, shots, seed)
    }
}

/// Sample mean and unbiased covariance of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mean_i: f64,
    pub mean_q: f64,
    pub cov: QuadCovariance,
    /// Set when an axis has (numerically) zero spread.
    pub degenerate: bool,
}

/// Fit a two-dimensional normal distribution: sample mean plus covariance
/// with the `shots - 1` divisor.
pub fn fit_gaussian(ens: &IQEnsemble) -> Result<GaussianFit, ModelError> {
    let n = ens.samples.len();
    if n < 2 {
        return Err(ModelError::InsufficientPoints { needed: 2, got: n });
    }
    let inv_n = 1.0 / n as f64;
    let (sum_i, sum_q) = ens
        .samples
        .iter()
        .fold((0.0, 0.0), |(a, b), &(i, q)| (a + i, b + q));
    let (mean_i, mean_q) = (sum_i * inv_n, sum_q * inv_n);
    let (mut sii, mut sqq, mut siq) = (0.0, 0.0, 0.0);
    for &(i, q) in &ens.samples {
        let di = i - mean_i;
        let dq = q - mean_q;
        sii += di * di;
        sqq += dq * dq;
        siq += di * dq;
    }
    let inv = 1.0 / (n - 1) as f64;
    let cov = QuadCovariance { vxx: sii * inv, vyy: sqq * inv, vxy: siq * inv };
    Ok(GaussianFit { mean_i, mean_q, cov, degenerate: cov.vxx == 0.0 || cov.vyy == 0.0 })
}

/// Square 2D histogram of IQ counts, 101 x 101 bins over +-`half_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub bins: usize,
    pub half_width: f64,
    /// Row-major counts, `i` along rows and `q` along columns.
    pub counts: Vec<u64>,
}

impl Histogram2D {
    pub const DEFAULT_BINS: usize = 101;

    pub fn from_samples(samples: &[(f64, f64)], half_width: f64) -> Self {
        let bins = Self::DEFAULT_BINS;
        let mut counts = vec![0u64; bins * bins];
        let scale = bins as f64 / (2.0 * half_width);
        for &(i, q) in samples {
            let bi = ((i + half_width) * scale) as isize;
            let bq = ((q + half_width) * scale) as isize;
            if (0..bins as isize).contains(&bi) && (0..bins as isize).contains(&bq) {
                counts[bi as usize * bins + bq as usize] += 1;
            }
        }
        Self { bins, half_width, counts }
    }

    /// Signed per-bin difference `self - other`.
    pub fn difference(&self, other: &Self) -> Vec<i64> {
        self.counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| a as i64 - b as i64)
            .collect()
    }
}

/// Result of the simulated interleaved squeezing measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SMeasReport {
    /// `10 log10(var_Q,on / var_Q,off)` from the fitted ensembles (dB).
    pub s_meas_db: f64,
    /// Squeezing inferred back at the reference plane through `eta_hot`,
    /// when the measured value sits above the chain noise floor.
    pub s_ref_db: Option<f64>,
    /// Squeezed-quadrature angle before rotation (rad).
    pub theta_min: f64,
    pub fit_on: GaussianFit,
    pub fit_off: GaussianFit,
    pub hist_on: Histogram2D,
    pub hist_off: Histogram2D,
}

/// Simulate the interleaved pump-on/pump-off heterodyne measurement.
///
/// Samples are rotated so the squeezed axis lands on Q (amplified on I);
/// pump-on shots take even counter values and pump-off odd ones, mirroring
/// the interleaved acquisition. The device Kerr constant is taken at lowest
/// order from `g3`, `g4`.
pub fn s_meas_pipeline(
    device: &DeviceParams,
    pump: &PumpPoint,
    chain: &EfficiencyChain,
    shots: usize,
    seed: u64,
) -> Result<SMeasReport, ModelError> {
    let kerr = kerr_lowest_order(device.g3, device.g4, device.omega0)?;
    let eff = effective_params(device, pump, kerr);
    let scat_on = scattering_set(&eff, device, 0.0)?;
    let eta = chain.eta_external();

    let theta_min = optimal_squeeze(&scat_on).theta_min;
    let rot = std::f64::consts::FRAC_PI_2 - theta_min;
    let cov_on = output_covariance(&scat_on, eta)?.rotated(rot);
    let cov_off = QuadCovariance::vacuum();

    let chol_on = cholesky(&cov_on)?;
    let chol_off = cholesky(&cov_off)?;
    let mut on = Vec::with_capacity(shots);
    let mut off = Vec::with_capacity(shots);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..shots)
            .into_par_iter()
            .map(|k| {
                let k = k as u64;
                (draw_shot(&chol_on, seed, 2 * k), draw_shot(&chol_off, seed, 2 * k + 1))
            })
            .unzip_into_vecs(&mut on, &mut off);
    }
    #[cfg(not(feature = "parallel"))]
    for k in 0..shots as u64 {
        on.push(draw_shot(&chol_on, seed, 2 * k));
        off.push(draw_shot(&chol_off, seed, 2 * k + 1));
    }
    let ens_on = IQEnsemble { seed, shots, samples: on };
    let ens_off = IQEnsemble { seed, shots, samples: off };

    let fit_on = fit_gaussian(&ens_on)?;
    let fit_off = fit_gaussian(&ens_off)?;
    let s_meas_db = lin_to_db(fit_on.cov.vyy / fit_off.cov.vyy);
    let s_ref_db = infer_reference_squeezing(s_meas_db, chain.eta_hot).ok();

    let sigma_on = fit_on.cov.vxx.max(fit_on.cov.vyy).sqrt();
    let half_width = 6.0 * sigma_on;
    let hist_on = Histogram2D::from_samples(&ens_on.samples, half_width);
    let hist_off = Histogram2D::from_samples(&ens_off.samples, half_width);

    Ok(SMeasReport { s_meas_db, s_ref_db, theta_min, fit_on, fit_off, hist_on, hist_off })
}
