//! CSI quantization onto the Kronecker product PSK codebook.
//!
//! Picking the codeword `v` that maximizes `|H v|^2` is the same problem as
//! noncoherent (GLRT) detection of a PSK sequence `x` from an observation
//! `y`, which maximizes `|y^H x|^2 / |x|^2` over the unknown complex channel
//! scalar. For a single PSK factor that problem is solved exactly in
//! `O(L log L)` by sweeping a common phase rotation across `[0, 2 pi / N)`:
//! the per-entry nearest-symbol decisions only change at `L` crossover
//! angles, so at most `L + 1` candidate sequences need to be scored, and each
//! one differs from the previous in a single entry.
//!
//! The product codebook is handled by splitting the channel into its first
//! row (horizontal factor) and first column (vertical factor), detecting each
//! independently, and taking the Kronecker product of the two results. That
//! split is exact for a single-path channel and lossy otherwise; the
//! exhaustive searches in this module are the reference it is checked
//! against.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::array_channel::ChannelVector;
use crate::codebook::{
    enumerate_psk, feedback_bits, kron_beamformer, realize, CodebookSpec, KpcBeamformer, PskCodeword,
};
use crate::error::{Error, Result};

/// Outcome of a noncoherent PSK sequence detection.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Canonical (first index zero) codeword.
    pub codeword: PskCodeword,
    /// GLRT objective `|y^H x|^2 / |x|^2`.
    pub metric: f64,
}

/// Quantized channel: the selected beamformer plus the decomposed
/// sub-channels it was detected from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCsi {
    pub beamformer: KpcBeamformer,
    pub h_hat_h: Vec<Complex64>,
    pub h_hat_v: Vec<Complex64>,
    pub bits: u32,
}

/// `|y^H x|^2 / |x|^2` for a unit-modulus codeword of length `y.len()`.
pub fn glrt_metric(y: &[Complex64], x: &[Complex64]) -> f64 {
    let ip: Complex64 = y.iter().zip(x).map(|(y, x)| y.conj() * x).sum();
    ip.norm_sqr() / x.len() as f64
}

/// Received power `|H w|^2` for a beamformer.
pub fn beamforming_gain(h: &ChannelVector, w: &[Complex64]) -> f64 {
    h.apply(w).norm_sqr()
}

fn check_entries(y: &[Complex64], reject_zero: bool) -> Result<()> {
    for (index, z) in y.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if reject_zero && z.re == 0.0 && z.im == 0.0 {
            return Err(Error::ZeroEntry { index });
        }
    }
    Ok(())
}

/// Maximum-likelihood noncoherent detection of an `n_const`-PSK sequence.
///
/// Returns the canonical codeword maximizing `|y^H x|^2` over every sequence
/// of `n_const`-PSK symbols. Entries of `y` must be finite and nonzero.
pub fn ncsd_detect(y: &[Complex64], n_const: u32) -> Result<DetectionResult> {
    if y.is_empty() {
        return Err(Error::Config("detection input must be nonempty".into()));
    }
    if n_const < 2 {
        return Err(Error::Config(format!(
            "constellation size must be at least 2, got {n_const}"
        )));
    }
    check_entries(y, true)?;

    let n = f64::from(n_const);
    let step = TAU / n;

    // Phases in units of the constellation step, rounded to the nearest
    // symbol. `f64::round` rounds half away from zero.
    let scaled: Vec<f64> = y.iter().map(|z| z.arg() * n / TAU).collect();
    let mut g: Vec<i64> = scaled.iter().map(|a| a.round() as i64).collect();

    // Rotating the observation by +t symbol steps moves entry k onto its next
    // symbol once t exceeds residual_k + 1/2, so ascending residual order is
    // the crossover order. The sort is stable: ties keep index order.
    let residual: Vec<f64> = g.iter().zip(&scaled).map(|(&g, a)| g as f64 - a).collect();
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| residual[a].total_cmp(&residual[b]));

    let terms: Vec<Complex64> = y
        .iter()
        .zip(&g)
        .map(|(z, &g)| z.conj() * Complex64::from_polar(1.0, step * g as f64))
        .collect();
    let bump = Complex64::from_polar(1.0, step) - 1.0;

    let mut inner: Complex64 = terms.iter().sum();
    let mut best = inner.norm_sqr();
    let mut best_prefix = 0;
    for (i, &k) in order.iter().enumerate() {
        inner += terms[k] * bump;
        let value = inner.norm_sqr();
        if value > best {
            best = value;
            best_prefix = i + 1;
        }
    }
    for &k in &order[..best_prefix] {
        g[k] += 1;
    }

    let codeword = PskCodeword::canonical_from(&g, n_const)?;
    let metric = glrt_metric(y, &realize(&codeword));
    Ok(DetectionResult { codeword, metric })
}

/// Exhaustive search over every canonical `n_const`-PSK codeword of length
/// `y.len()`. Ties go to the lexicographically smallest codeword.
pub fn exhaustive_psk_detect(y: &[Complex64], n_const: u32, cap: u128) -> Result<DetectionResult> {
    if y.is_empty() {
        return Err(Error::Config("detection input must be nonempty".into()));
    }
    check_entries(y, false)?;
    let mut best: Option<(PskCodeword, f64)> = None;
    for cw in enumerate_psk(y.len(), n_const, cap)? {
        let metric = glrt_metric(y, &realize(&cw));
        if best.as_ref().is_none_or(|(_, m)| metric > *m) {
            best = Some((cw, metric));
        }
    }
    let (codeword, metric) = best.expect("enumeration yields at least one codeword");
    Ok(DetectionResult { codeword, metric })
}

/// Splits a channel into its horizontal part (first `m_th` entries) and its
/// vertical part (every `m_th`-th entry starting at 0).
pub fn decompose_channel(h: &ChannelVector, m_th: usize, m_tv: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let expected = m_th * m_tv;
    if h.len() != expected || expected == 0 {
        return Err(Error::Dimension {
            expected,
            actual: h.len(),
        });
    }
    let entries = h.entries();
    let horizontal = entries[..m_th].to_vec();
    let vertical = (0..m_tv).map(|n| entries[n * m_th]).collect();
    Ok((horizontal, vertical))
}

/// Quantizes a channel onto the product codebook with two independent
/// per-factor detections.
///
/// Detection runs on the conjugated sub-channels, so the GLRT objective
/// `|y^H x|` equals the beamforming objective `|H x|` of each factor.
pub fn quantize_csi(h: &ChannelVector, spec: &CodebookSpec) -> Result<QuantizedCsi> {
    spec.validate()?;
    let (h_hat_h, h_hat_v) = decompose_channel(h, spec.m_th, spec.m_tv)?;
    let conj = |v: &[Complex64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    let horizontal = ncsd_detect(&conj(&h_hat_h), spec.n_h)?;
    let vertical = ncsd_detect(&conj(&h_hat_v), spec.n_v)?;
    Ok(QuantizedCsi {
        beamformer: kron_beamformer(horizontal.codeword, vertical.codeword),
        h_hat_h,
        h_hat_v,
        bits: feedback_bits(spec)?,
    })
}

/// Exhaustive search of the full product codebook for the beamformer
/// maximizing `|H v|^2`. Ties go to the first codeword in enumeration order
/// (vertical codeword outermost).
pub fn exhaustive_kpc_search(h: &ChannelVector, spec: &CodebookSpec, cap: u128) -> Result<KpcBeamformer> {
    spec.validate()?;
    let (m_th, m_tv) = (spec.m_th, spec.m_tv);
    if h.len() != spec.m_t() {
        return Err(Error::Dimension {
            expected: spec.m_t(),
            actual: h.len(),
        });
    }
    let required = spec.codebook_size();
    if required > cap {
        return Err(Error::TooLarge { required, cap });
    }

    // Per horizontal codeword, partial sums z[n] = sum_m h[n m_th + m] wh[m].
    let horizontal: Vec<PskCodeword> = enumerate_psk(m_th, spec.n_h, cap)?.collect();
    let partials: Vec<Vec<Complex64>> = horizontal
        .iter()
        .map(|cw| {
            let wh = realize(cw);
            (0..m_tv)
                .map(|n| {
                    h.entries()[n * m_th..(n + 1) * m_th]
                        .iter()
                        .zip(&wh)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut best: Option<(PskCodeword, usize, f64)> = None;
    for gv in enumerate_psk(m_tv, spec.n_v, cap)? {
        let wv = realize(&gv);
        for (hi, z) in partials.iter().enumerate() {
            let gain = z.iter().zip(&wv).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr();
            if best.as_ref().is_none_or(|(_, _, g)| gain > *g) {
                best = Some((gv.clone(), hi, gain));
            }
        }
    }
    let (gv, hi, _) = best.expect("codebook is nonempty");
    Ok(kron_beamformer(horizontal[hi].clone(), gv))
}
