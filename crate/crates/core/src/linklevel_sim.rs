//! Monte Carlo BER harness for the beamformed MISO link `y = H w x + n`.
//!
//! Each trial draws one channel (block fading), picks a beamformer with the
//! configured scheme, and sends a block of Gray-mapped QPSK symbols through
//! AWGN. The receiver knows the scalar `H w` exactly.
//!
//! The SNR axis is `Eb/N0` with unit symbol energy: `N0 = 1 / (2 * 10^(snr_db / 10))`,
//! so a unit-gain link has bit error rate `Q(sqrt(2 Eb/N0))`.
//!
//! Trial `t` draws all of its randomness from a ChaCha stream keyed by
//! `(seed, t)`, in a fixed order (channel, then bits and noise per symbol).
//! The SNR and the scheme do not enter the key, so different SNR points and
//! different schemes see the same channels, bits and unit-variance noise:
//! comparisons between them are paired.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::array_channel::{
    bisect_spread, complex_gaussian, correlation_estimate, generate_channel, ChannelConfig, ChannelVector,
    CorrelationEstimate,
};
use crate::codebook::{dft_codebook, dft_kron_codebook, CodebookSpec, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::quantizer::{beamforming_gain, exhaustive_kpc_search, quantize_csi};

/// Reference BER at which coding gains are read off.
pub const REFERENCE_BER: f64 = 4e-2;

/// Channel samples used for the correlation attached to each record.
pub const RHO_SAMPLES: usize = 2000;

/// Mean directions averaged over when the mean AoD is random.
pub const RHO_DIRECTIONS: usize = 16;

/// Beamformer selection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Kronecker PSK codebook, quantized by two fast noncoherent detections.
    Psk3d,
    /// Exhaustive search over `M_t * Q` DFT vectors of length `M_t`.
    Dft2d,
    /// Exhaustive search over the Kronecker product of two DFT codebooks.
    Dft3d,
    /// Exhaustive search over the full Kronecker PSK codebook.
    Psk3dExhaustive,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Psk3d, Scheme::Dft2d, Scheme::Dft3d, Scheme::Psk3dExhaustive];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Psk3d => "3d-psk",
            Scheme::Dft2d => "2d-dft",
            Scheme::Dft3d => "3d-dft",
            Scheme::Psk3dExhaustive => "3d-psk-exhaustive",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Everything needed to reproduce one BER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub channel: ChannelConfig,
    pub codebook: CodebookSpec,
    pub scheme: Scheme,
    pub snr_db_list: Vec<f64>,
    pub iterations: usize,
    pub symbols_per_iteration: usize,
    pub dft_oversample: usize,
    /// Rescale every channel draw to `|h|^2 = M_t`, removing amplitude
    /// fading while keeping the spatial structure.
    pub normalize_channel: bool,
    /// Draw a fresh mean angle of departure for every trial (azimuth uniform
    /// on `[0, 2 pi)`, elevation uniform on `[0, pi]`) instead of using the
    /// configured one. Angular spread and path count still apply around it.
    pub random_mean_aod: bool,
    pub seed: u64,
}

impl SimConfig {
    /// Desk-scale defaults for the given array.
    pub fn new(m_th: usize, m_tv: usize, scheme: Scheme) -> Self {
        Self {
            channel: ChannelConfig {
                m_th,
                m_tv,
                ..ChannelConfig::default()
            },
            codebook: CodebookSpec {
                n_h: 4,
                n_v: 4,
                m_th,
                m_tv,
            },
            scheme,
            snr_db_list: vec![0.0],
            iterations: 200,
            symbols_per_iteration: 1 << 10,
            dft_oversample: 1,
            normalize_channel: false,
            random_mean_aod: false,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.codebook.validate()?;
        if self.channel.m_th != self.codebook.m_th || self.channel.m_tv != self.codebook.m_tv {
            return Err(Error::Config(format!(
                "codebook geometry {}x{} does not match array {}x{}",
                self.codebook.m_th, self.codebook.m_tv, self.channel.m_th, self.channel.m_tv
            )));
        }
        if self.iterations == 0 || self.symbols_per_iteration == 0 {
            return Err(Error::Config(
                "iterations and symbols_per_iteration must be at least 1".into(),
            ));
        }
        if self.snr_db_list.is_empty() || self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db list must be nonempty and finite".into()));
        }
        if self.dft_oversample == 0 {
            return Err(Error::Config("dft_oversample must be at least 1".into()));
        }
        if self.scheme == Scheme::Psk3dExhaustive && self.codebook.codebook_size() > DEFAULT_ENUMERATION_CAP {
            return Err(Error::TooLarge {
                required: self.codebook.codebook_size(),
                cap: DEFAULT_ENUMERATION_CAP,
            });
        }
        Ok(())
    }
}

/// Aggregated result of one `(scheme, SNR)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub trials: usize,
    pub total_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Adjacent-antenna correlation from [`scenario_correlation`].
    pub empirical_rho: f64,
}

/// Bit counts of a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub total_bits: u64,
}

impl std::ops::Add for TrialOutcome {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            bit_errors: self.bit_errors + rhs.bit_errors,
            total_bits: self.total_bits + rhs.total_bits,
        }
    }
}

impl TrialOutcome {
    pub fn ber(&self) -> f64 {
        if self.total_bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.total_bits as f64
        }
    }
}

/// Per-trial outcomes of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub trials: Vec<TrialOutcome>,
}

impl PointResult {
    pub fn total(&self) -> TrialOutcome {
        self.trials.iter().copied().fold(TrialOutcome::default(), |a, b| a + b)
    }

    pub fn ber(&self) -> f64 {
        self.total().ber()
    }

    /// Standard error of the BER estimate, from the spread of per-trial BERs.
    /// Trials are the independent unit under block fading; symbols within a
    /// trial are not.
    pub fn std_err(&self) -> f64 {
        trial_std_err(self.trials.iter().map(TrialOutcome::ber))
    }
}

fn trial_std_err(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Gray-mapped QPSK with unit average energy: `(b1, b0) -> ((1 - 2 b1) + j (1 - 2 b0)) / sqrt(2)`.
pub fn qpsk_symbol(b1: bool, b0: bool) -> Complex64 {
    let re = if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    let im = if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// Maps consecutive bit pairs onto QPSK symbols.
pub fn qpsk_modulate(bits: &[bool]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::Framing(bits.len()));
    }
    Ok(bits.chunks_exact(2).map(|p| qpsk_symbol(p[0], p[1])).collect())
}

/// Coherent ML decision given the effective scalar channel. Points exactly on
/// a decision boundary resolve to bit 0.
pub fn qpsk_demodulate(y: Complex64, effective_channel: Complex64) -> Result<(bool, bool)> {
    if effective_channel.norm_sqr() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let z = y * effective_channel.conj();
    Ok((z.re < 0.0, z.im < 0.0))
}

/// Noise power spectral density for a given `Eb/N0` in dB, unit symbol energy.
pub fn noise_density(snr_db: f64) -> f64 {
    1.0 / (2.0 * 10f64.powf(snr_db / 10.0))
}

/// RNG stream of trial `trial_index` under `seed`.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// A configured link with its baseline codebooks built once.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    dft: Vec<Vec<Complex64>>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let dft = match cfg.scheme {
            Scheme::Dft2d => dft_codebook(cfg.channel.m_t(), cfg.dft_oversample),
            Scheme::Dft3d => dft_kron_codebook(cfg.channel.m_th, cfg.channel.m_tv, cfg.dft_oversample),
            Scheme::Psk3d | Scheme::Psk3dExhaustive => Vec::new(),
        };
        Ok(Self { cfg, dft })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Draws the channel of a trial from its own stream.
    pub fn draw_channel(&self, rng: &mut ChaCha8Rng) -> Result<ChannelVector> {
        let h = if self.cfg.random_mean_aod {
            let local = ChannelConfig {
                mean_azimuth: rng.random_range(0.0..TAU),
                mean_elevation: rng.random_range(0.0..=PI),
                ..self.cfg.channel.clone()
            };
            generate_channel(&local, rng)
        } else {
            generate_channel(&self.cfg.channel, rng)
        };
        if !self.cfg.normalize_channel {
            return Ok(h);
        }
        let power = h.norm_sqr();
        if power == 0.0 {
            return Err(Error::ZeroChannel);
        }
        let scale = (self.cfg.channel.m_t() as f64 / power).sqrt();
        Ok(h.into_inner().into_iter().map(|z| z * scale).collect::<Vec<_>>().into())
    }

    /// Beamformer chosen by the configured scheme.
    pub fn select_beamformer(&self, h: &ChannelVector) -> Result<Vec<Complex64>> {
        match self.cfg.scheme {
            Scheme::Psk3d => Ok(quantize_csi(h, &self.cfg.codebook)?.beamformer.weights().to_vec()),
            Scheme::Psk3dExhaustive => Ok(exhaustive_kpc_search(h, &self.cfg.codebook, DEFAULT_ENUMERATION_CAP)?
                .weights()
                .to_vec()),
            Scheme::Dft2d | Scheme::Dft3d => {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, v) in self.dft.iter().enumerate() {
                    let gain = beamforming_gain(h, v);
                    if gain > best.1 {
                        best = (i, gain);
                    }
                }
                Ok(self.dft[best.0].clone())
            }
        }
    }

    pub fn run_trial(&self, snr_db: f64, trial_index: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(self.cfg.seed, trial_index);
        let h = self.draw_channel(&mut rng)?;
        let w = self.select_beamformer(&h)?;
        let effective = h.apply(&w);
        let n0 = noise_density(snr_db);
        let noise_scale = n0.sqrt();

        let mut bit_errors = 0;
        for _ in 0..self.cfg.symbols_per_iteration {
            let word: u32 = rng.random();
            let (b1, b0) = (word & 2 != 0, word & 1 != 0);
            let x = qpsk_symbol(b1, b0);
            let y = effective * x + complex_gaussian(&mut rng, 1.0) * noise_scale;
            let (d1, d0) = qpsk_demodulate(y, effective)?;
            bit_errors += u64::from(d1 != b1) + u64::from(d0 != b0);
        }
        Ok(TrialOutcome {
            bit_errors,
            total_bits: 2 * self.cfg.symbols_per_iteration as u64,
        })
    }

    /// Runs every trial of one SNR point, in parallel.
    pub fn run_point(&self, snr_db: f64) -> Result<PointResult> {
        let trials = (0..self.cfg.iterations as u64)
            .into_par_iter()
            .map(|t| self.run_trial(snr_db, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointResult { snr_db, trials })
    }
}

/// One trial of `cfg` at `snr_db`.
pub fn run_trial(cfg: &SimConfig, snr_db: f64, trial_index: u64) -> Result<TrialOutcome> {
    Simulator::new(cfg.clone())?.run_trial(snr_db, trial_index)
}

/// BER curve of `cfg` over its SNR list. Fails as a whole if any trial fails.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    let sim = Simulator::new(cfg.clone())?;
    let rho = scenario_correlation(cfg, RHO_SAMPLES)?.rho;
    cfg.snr_db_list
        .iter()
        .map(|&snr_db| {
            let point = sim.run_point(snr_db)?;
            let total = point.total();
            Ok(BerRecord {
                scheme: cfg.scheme,
                snr_db,
                trials: point.trials.len(),
                total_bits: total.total_bits,
                bit_errors: total.bit_errors,
                ber: total.ber(),
                empirical_rho: rho,
            })
        })
        .collect()
}

/// Adjacent-antenna correlation of the channels `cfg` draws.
///
/// With a random mean AoD this is the correlation given the mean direction,
/// averaged over [`RHO_DIRECTIONS`] directions drawn from the config seed,
/// `n_samples` channels each; the standard error is then the spread across
/// directions.
pub fn scenario_correlation(cfg: &SimConfig, n_samples: usize) -> Result<CorrelationEstimate> {
    if !cfg.random_mean_aod {
        return correlation_estimate(&cfg.channel, n_samples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let rhos: Vec<f64> = (0..RHO_DIRECTIONS)
        .map(|_| {
            let local = ChannelConfig {
                mean_azimuth: rng.random_range(0.0..TAU),
                mean_elevation: rng.random_range(0.0..=PI),
                ..cfg.channel.clone()
            };
            correlation_estimate(&local, n_samples).map(|e| e.rho)
        })
        .collect::<Result<_>>()?;
    let k = rhos.len() as f64;
    let rho = rhos.iter().sum::<f64>() / k;
    let var = rhos.iter().map(|r| (r - rho).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(CorrelationEstimate {
        rho,
        std_err: (var / k).sqrt(),
    })
}

/// Angular spread at which [`scenario_correlation`] matches `target_rho`.
pub fn calibrate_scenario(cfg: &SimConfig, target_rho: f64, n_samples: usize, max_spread: f64) -> Result<f64> {
    bisect_spread(target_rho, max_spread, |spread| {
        let mut probe = cfg.clone();
        probe.channel.angular_spread = spread;
        scenario_correlation(&probe, n_samples).map(|e| e.rho)
    })
}

/// Paired comparison of two schemes on identical trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedComparison {
    pub ber_a: f64,
    pub ber_b: f64,
    /// Mean over trials of `ber_a - ber_b`.
    pub mean_diff: f64,
    /// Standard error of `mean_diff`.
    pub std_err: f64,
}

impl PairedComparison {
    /// z-score of the difference; positive when scheme `a` has more errors.
    pub fn z(&self) -> f64 {
        if self.std_err == 0.0 {
            if self.mean_diff == 0.0 {
                0.0
            } else {
                self.mean_diff.signum() * f64::INFINITY
            }
        } else {
            self.mean_diff / self.std_err
        }
    }
}

/// Runs `cfg` with schemes `a` and `b` at one SNR and compares them trial by
/// trial.
pub fn compare_schemes(cfg: &SimConfig, a: Scheme, b: Scheme, snr_db: f64) -> Result<PairedComparison> {
    let run = |scheme| Simulator::new(SimConfig { scheme, ..cfg.clone() })?.run_point(snr_db);
    let pa = run(a)?;
    let pb = run(b)?;
    let diffs = pa.trials.iter().zip(&pb.trials).map(|(x, y)| x.ber() - y.ber());
    let mean_diff = pa
        .trials
        .iter()
        .zip(&pb.trials)
        .map(|(x, y)| x.ber() - y.ber())
        .sum::<f64>()
        / pa.trials.len() as f64;
    Ok(PairedComparison {
        ber_a: pa.ber(),
        ber_b: pb.ber(),
        mean_diff,
        std_err: trial_std_err(diffs),
    })
}

/// SNR at which a BER curve crosses `target`, interpolating linearly in
/// `log10(BER)` between the bracketing points. Records are sorted by SNR
/// first; returns `None` if the curve never crosses.
pub fn snr_at_ber(records: &[BerRecord], target: f64) -> Option<f64> {
    let mut points: Vec<(f64, f64)> = records.iter().map(|r| (r.snr_db, r.ber)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let log_target = target.log10();
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if !(b0 >= target && b1 <= target) || b0 <= 0.0 || b1 <= 0.0 {
            return None;
        }
        let (l0, l1) = (b0.log10(), b1.log10());
        if l0 == l1 {
            return Some(s0);
        }
        Some(s0 + (l0 - log_target) / (l0 - l1) * (s1 - s0))
    })
}

/// Horizontal shift, in dB, of curve `a` relative to curve `b` at the
/// reference BER. Positive when `a` reaches the target at a lower SNR.
pub fn coding_gain_db(a: &[BerRecord], b: &[BerRecord], target: f64) -> Option<f64> {
    Some(snr_at_ber(b, target)? - snr_at_ber(a, target)?)
}
