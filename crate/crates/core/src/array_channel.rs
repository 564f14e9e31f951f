//! 3D channel synthesis for a uniform planar array (UPA).
//!
//! A channel realization is a sum of `i_mpc` plane waves leaving the array at
//! Gaussian-perturbed angles of departure, each weighted by an independent
//! complex Gaussian path gain. Antenna `(m, n)` (horizontal index `m`,
//! vertical index `n`) lives at flat index `n * m_th + m`, i.e. the array
//! response is the column-major vectorization of the `m_th x m_tv` outer
//! product of the horizontal and vertical steering vectors.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Geometry and angular statistics of the channel ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Horizontal antenna count.
    pub m_th: usize,
    /// Vertical antenna count.
    pub m_tv: usize,
    /// Horizontal spacing, in wavelengths.
    pub d_h: f64,
    /// Vertical spacing, in wavelengths.
    pub d_v: f64,
    /// Number of multipath components.
    pub i_mpc: usize,
    /// Mean azimuth of departure (radians).
    pub mean_azimuth: f64,
    /// Mean elevation of departure (radians, measured from the array axis).
    pub mean_elevation: f64,
    /// Standard deviation of both angles around their mean (radians).
    pub angular_spread: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            m_th: 8,
            m_tv: 8,
            d_h: 0.5,
            d_v: 0.5,
            i_mpc: 20,
            mean_azimuth: PI / 4.0,
            mean_elevation: 1.75,
            angular_spread: 0.0,
            seed: 1,
        }
    }
}

impl ChannelConfig {
    /// Total number of transmit antennas.
    pub fn m_t(&self) -> usize {
        self.m_th * self.m_tv
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_th == 0 || self.m_tv == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if !(self.d_h > 0.0 && self.d_v > 0.0) || !self.d_h.is_finite() || !self.d_v.is_finite() {
            return Err(Error::Config("antenna spacings must be positive".into()));
        }
        if self.i_mpc == 0 {
            return Err(Error::Config("i_mpc must be at least 1".into()));
        }
        if !self.angular_spread.is_finite() || self.angular_spread < 0.0 {
            return Err(Error::Config("angular_spread must be finite and non-negative".into()));
        }
        if !self.mean_azimuth.is_finite() || !self.mean_elevation.is_finite() {
            return Err(Error::Config("mean angles must be finite".into()));
        }
        Ok(())
    }

    /// Mean angle of departure, normalized into range.
    pub fn mean_aod(&self) -> AngleOfDeparture {
        AngleOfDeparture::new(self.mean_azimuth, self.mean_elevation)
    }
}

/// Angle of departure of one propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleOfDeparture {
    azimuth: f64,
    elevation: f64,
}

impl AngleOfDeparture {
    /// Builds an AoD, wrapping azimuth into `[0, 2pi)` and clamping elevation
    /// into `[0, pi]`.
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        let mut azimuth = azimuth.rem_euclid(TAU);
        if azimuth >= TAU {
            azimuth = 0.0;
        }
        Self {
            azimuth,
            elevation: elevation.clamp(0.0, PI),
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }
}

/// One MISO channel realization, laid out as `n * m_th + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }

    /// Scalar gain `H w` seen by a beamformer `w` (no conjugation).
    pub fn apply(&self, w: &[Complex64]) -> Complex64 {
        self.entries.iter().zip(w).map(|(h, w)| h * w).sum()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.entries
    }
}

impl From<Vec<Complex64>> for ChannelVector {
    fn from(entries: Vec<Complex64>) -> Self {
        Self::new(entries)
    }
}

fn steering(phase: f64, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|k| Complex64::from_polar(1.0, -(k as f64) * phase))
        .collect()
}

/// Horizontal steering vector `[1, e^{-j mu}, ..., e^{-j (m_th-1) mu}]`.
pub fn steering_horizontal(mu: f64, m_th: usize) -> Vec<Complex64> {
    steering(mu, m_th)
}

/// Vertical steering vector `[1, e^{-j upsilon}, ...]`.
pub fn steering_vertical(upsilon: f64, m_tv: usize) -> Vec<Complex64> {
    steering(upsilon, m_tv)
}

/// Inter-element phase shifts `(mu, upsilon)` produced by an AoD.
pub fn phases_from_aod(aod: AngleOfDeparture, cfg: &ChannelConfig) -> (f64, f64) {
    let mu = TAU * cfg.d_h * aod.azimuth.cos() * aod.elevation.sin();
    let upsilon = TAU * cfg.d_v * aod.elevation.cos();
    (mu, upsilon)
}

/// Array response for explicit phase shifts.
pub fn array_response_from_phases(mu: f64, upsilon: f64, m_th: usize, m_tv: usize) -> Vec<Complex64> {
    let horizontal = steering_horizontal(mu, m_th);
    let vertical = steering_vertical(upsilon, m_tv);
    let mut out = Vec::with_capacity(m_th * m_tv);
    for v in &vertical {
        out.extend(horizontal.iter().map(|h| h * v));
    }
    out
}

/// Single-path array response `vec(a_H(mu) a_V(upsilon)^T)`.
pub fn array_response(aod: AngleOfDeparture, cfg: &ChannelConfig) -> Vec<Complex64> {
    let (mu, upsilon) = phases_from_aod(aod, cfg);
    array_response_from_phases(mu, upsilon, cfg.m_th, cfg.m_tv)
}

/// Draws a circularly symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Draws one channel realization.
///
/// Path gains are `CN(0, 1/i_mpc)` so that `E[|h|^2] = m_t` regardless of the
/// path count. Azimuths are wrapped and elevations clamped after the
/// Gaussian draw.
pub fn generate_channel<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> ChannelVector {
    let m_t = cfg.m_t();
    let mut h = vec![Complex64::new(0.0, 0.0); m_t];
    let gain_var = 1.0 / cfg.i_mpc as f64;
    for _ in 0..cfg.i_mpc {
        let d_az: f64 = StandardNormal.sample(rng);
        let d_el: f64 = StandardNormal.sample(rng);
        let azimuth = cfg.mean_azimuth + cfg.angular_spread * d_az;
        let elevation = cfg.mean_elevation + cfg.angular_spread * d_el;
        let alpha = complex_gaussian(rng, gain_var);
        let response = array_response(AngleOfDeparture::new(azimuth, elevation), cfg);
        for (acc, a) in h.iter_mut().zip(response) {
            *acc += alpha * a;
        }
    }
    ChannelVector::new(h)
}

/// Correlation estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub rho: f64,
    pub std_err: f64,
}

const CORRELATION_BATCHES: usize = 10;

/// Magnitude of the sample correlation coefficient between adjacent antennas,
/// averaged over horizontally and vertically adjacent pairs.
pub fn empirical_correlation(cfg: &ChannelConfig, n_samples: usize) -> Result<f64> {
    correlation_estimate(cfg, n_samples).map(|e| e.rho)
}

/// Like [`empirical_correlation`], also reporting a batch-means standard
/// error over ten equal batches.
///
/// A single-antenna array has no adjacent pairs and reports `rho = 1`.
pub fn correlation_estimate(cfg: &ChannelConfig, n_samples: usize) -> Result<CorrelationEstimate> {
    cfg.validate()?;
    if n_samples < 100 {
        return Err(Error::Config(format!(
            "n_samples must be at least 100, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<ChannelVector> = (0..n_samples).map(|_| generate_channel(cfg, &mut rng)).collect();
    if samples.iter().all(|h| h.norm_sqr() == 0.0) {
        return Err(Error::DegenerateEnsemble("all channel samples are zero".into()));
    }

    let pairs = adjacent_pairs(cfg.m_th, cfg.m_tv);
    if pairs.horizontal.is_empty() && pairs.vertical.is_empty() {
        return Ok(CorrelationEstimate { rho: 1.0, std_err: 0.0 });
    }

    let rho = pairs.average(&samples)?;
    let batch = n_samples / CORRELATION_BATCHES;
    let batch_rhos: Vec<f64> = samples
        .chunks_exact(batch)
        .take(CORRELATION_BATCHES)
        .map(|chunk| pairs.average(chunk))
        .collect::<Result<_>>()?;
    let mean = batch_rhos.iter().sum::<f64>() / batch_rhos.len() as f64;
    let var = batch_rhos.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (batch_rhos.len() - 1) as f64;
    Ok(CorrelationEstimate {
        rho,
        std_err: (var / batch_rhos.len() as f64).sqrt(),
    })
}

struct AdjacentPairs {
    horizontal: Vec<(usize, usize)>,
    vertical: Vec<(usize, usize)>,
}

fn adjacent_pairs(m_th: usize, m_tv: usize) -> AdjacentPairs {
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for n in 0..m_tv {
        for m in 0..m_th {
            let k = n * m_th + m;
            if m + 1 < m_th {
                horizontal.push((k, k + 1));
            }
            if n + 1 < m_tv {
                vertical.push((k, k + m_th));
            }
        }
    }
    AdjacentPairs { horizontal, vertical }
}

impl AdjacentPairs {
    fn average(&self, samples: &[ChannelVector]) -> Result<f64> {
        let mut group_means = Vec::with_capacity(2);
        for group in [&self.horizontal, &self.vertical] {
            if group.is_empty() {
                continue;
            }
            let total = group
                .iter()
                .map(|&(a, b)| pair_correlation(samples, a, b))
                .sum::<Result<f64>>()?;
            group_means.push(total / group.len() as f64);
        }
        Ok(group_means.iter().sum::<f64>() / group_means.len() as f64)
    }
}

fn pair_correlation(samples: &[ChannelVector], a: usize, b: usize) -> Result<f64> {
    let n = samples.len() as f64;
    let mean_a: Complex64 = samples.iter().map(|h| h.entries[a]).sum::<Complex64>() / n;
    let mean_b: Complex64 = samples.iter().map(|h| h.entries[b]).sum::<Complex64>() / n;
    let mut cross = Complex64::new(0.0, 0.0);
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for h in samples {
        let da = h.entries[a] - mean_a;
        let db = h.entries[b] - mean_b;
        cross += da * db.conj();
        var_a += da.norm_sqr();
        var_b += db.norm_sqr();
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::DegenerateEnsemble(format!(
            "antenna {} or {} has zero sample variance",
            a, b
        )));
    }
    Ok(cross.norm() / (var_a * var_b).sqrt())
}

/// Finds the angular spread whose empirical correlation is closest to
/// `target_rho`, by bisection on `[0, max_spread]`.
///
/// Correlation estimates share the config seed across probes, so the
/// bisection sees a smooth, monotone-in-practice curve.
pub fn calibrate_angular_spread(
    cfg: &ChannelConfig,
    target_rho: f64,
    n_samples: usize,
    max_spread: f64,
) -> Result<f64> {
    bisect_spread(target_rho, max_spread, |spread| {
        let probe = ChannelConfig {
            angular_spread: spread,
            ..cfg.clone()
        };
        empirical_correlation(&probe, n_samples)
    })
}

/// Bisection on `[0, max_spread]` for the spread at which `rho_at` crosses
/// `target_rho`. `rho_at` should be decreasing in the spread; returns
/// `max_spread` if even that is too correlated.
pub fn bisect_spread<F>(target_rho: f64, max_spread: f64, mut rho_at: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(0.0..=1.0).contains(&target_rho) {
        return Err(Error::Config(format!("target correlation {target_rho} outside [0, 1]")));
    }
    if !(max_spread > 0.0 && max_spread.is_finite()) {
        return Err(Error::Config(format!(
            "maximum spread must be positive, got {max_spread}"
        )));
    }
    let (mut lo, mut hi) = (0.0, max_spread);
    if rho_at(hi)? >= target_rho {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if rho_at(mid)? > target_rho {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-5 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
