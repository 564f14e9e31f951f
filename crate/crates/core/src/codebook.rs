//! PSK factor codebooks, their Kronecker product codebook, and DFT baselines.
//!
//! Kronecker product codewords are never stored: a codeword is identified by
//! its horizontal and vertical phase-index vectors, and the beamformer is
//! generated from them on demand. Enumeration exists for exhaustive oracles
//! and is capped.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on exhaustive enumerations.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

/// Phase-index sequence of an `N`-PSK codeword. Entry `k` realizes to
/// `exp(j 2 pi g[k] / N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PskCodeword {
    g: Vec<u32>,
    n_const: u32,
}

impl PskCodeword {
    pub fn new(g: Vec<u32>, n_const: u32) -> Result<Self> {
        if n_const < 2 {
            return Err(Error::Config(format!(
                "constellation size must be at least 2, got {n_const}"
            )));
        }
        if g.is_empty() {
            return Err(Error::Config("codeword length must be at least 1".into()));
        }
        if let Some(bad) = g.iter().find(|&&x| x >= n_const) {
            return Err(Error::Config(format!("phase index {bad} outside 0..{n_const}")));
        }
        Ok(Self { g, n_const })
    }

    /// Builds a codeword from arbitrary (possibly negative) indices, reducing
    /// them modulo `n_const` and rotating so the first index is zero.
    pub fn canonical_from(indices: &[i64], n_const: u32) -> Result<Self> {
        let n = i64::from(n_const);
        let first = indices.first().copied().unwrap_or(0);
        let g = indices.iter().map(|&x| (x - first).rem_euclid(n) as u32).collect();
        Self::new(g, n_const)
    }

    pub fn indices(&self) -> &[u32] {
        &self.g
    }

    pub fn n_const(&self) -> u32 {
        self.n_const
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.g[0] == 0
    }

    /// Rotates every index so the first one is zero. The realized vector
    /// changes only by a global phase.
    pub fn canonicalize(&self) -> Self {
        let first = self.g[0];
        let g = self
            .g
            .iter()
            .map(|&x| (x + self.n_const - first) % self.n_const)
            .collect();
        Self {
            g,
            n_const: self.n_const,
        }
    }
}

/// Complex realization of a PSK codeword.
pub fn realize(cw: &PskCodeword) -> Vec<Complex64> {
    let step = TAU / f64::from(cw.n_const);
    cw.g.iter()
        .map(|&g| Complex64::from_polar(1.0, step * f64::from(g)))
        .collect()
}

/// Parameters of the Kronecker product codebook `W_V (x) W_H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodebookSpec {
    pub n_h: u32,
    pub n_v: u32,
    pub m_th: usize,
    pub m_tv: usize,
}

impl CodebookSpec {
    pub fn m_t(&self) -> usize {
        self.m_th * self.m_tv
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_th == 0 || self.m_tv == 0 {
            return Err(Error::Config("codeword lengths must be at least 1".into()));
        }
        for (name, n) in [("n_h", self.n_h), ("n_v", self.n_v)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "{name} must be a power of two of at least 2, got {n}"
                )));
            }
        }
        Ok(())
    }

    /// Number of canonical codewords in the full product codebook.
    pub fn codebook_size(&self) -> u128 {
        let pow = |n: u32, e: usize| (0..e.saturating_sub(1)).try_fold(1u128, |acc, _| acc.checked_mul(u128::from(n)));
        match (pow(self.n_h, self.m_th), pow(self.n_v, self.m_tv)) {
            (Some(a), Some(b)) => a.saturating_mul(b),
            _ => u128::MAX,
        }
    }
}

/// Feedback payload: the first index of each factor is fixed by
/// canonicalization, the rest cost `log2(N)` bits each.
pub fn feedback_bits(spec: &CodebookSpec) -> Result<u32> {
    spec.validate()?;
    let bits_h = (spec.m_th as u32 - 1) * spec.n_h.trailing_zeros();
    let bits_v = (spec.m_tv as u32 - 1) * spec.n_v.trailing_zeros();
    Ok(bits_h + bits_v)
}

/// Equal-gain beamformer built from a horizontal and a vertical PSK codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct KpcBeamformer {
    w: Vec<Complex64>,
    g_h: PskCodeword,
    g_v: PskCodeword,
}

impl KpcBeamformer {
    /// Unit-norm beamforming vector, entry `n * m_th + m`.
    pub fn weights(&self) -> &[Complex64] {
        &self.w
    }

    pub fn g_h(&self) -> &PskCodeword {
        &self.g_h
    }

    pub fn g_v(&self) -> &PskCodeword {
        &self.g_v
    }
}

/// `w = vec(realize(g_h) realize(g_v)^T) / sqrt(M_t)`.
pub fn kron_beamformer(g_h: PskCodeword, g_v: PskCodeword) -> KpcBeamformer {
    let wh = realize(&g_h);
    let wv = realize(&g_v);
    let scale = 1.0 / ((wh.len() * wv.len()) as f64).sqrt();
    let mut w = Vec::with_capacity(wh.len() * wv.len());
    for v in &wv {
        w.extend(wh.iter().map(|h| h * v * scale));
    }
    KpcBeamformer { w, g_h, g_v }
}

/// Odometer over canonical index vectors (first entry pinned to zero).
#[derive(Debug, Clone)]
struct CanonicalCounter {
    g: Vec<u32>,
    n_const: u32,
}

impl CanonicalCounter {
    fn new(len: usize, n_const: u32) -> Self {
        Self {
            g: vec![0; len],
            n_const,
        }
    }

    /// Advances to the next vector; returns false after wrapping to all-zero.
    fn advance(&mut self) -> bool {
        for k in (1..self.g.len()).rev() {
            self.g[k] += 1;
            if self.g[k] < self.n_const {
                return true;
            }
            self.g[k] = 0;
        }
        false
    }
}

/// Enumerates every canonical codeword of one PSK factor codebook, in
/// lexicographic order.
pub fn enumerate_psk(len: usize, n_const: u32, cap: u128) -> Result<impl Iterator<Item = PskCodeword>> {
    if len == 0 || n_const < 2 {
        return Err(Error::Config("need len >= 1 and n_const >= 2".into()));
    }
    let required = (1..len).try_fold(1u128, |acc, _| acc.checked_mul(u128::from(n_const)));
    let required = required.unwrap_or(u128::MAX);
    if required > cap {
        return Err(Error::TooLarge { required, cap });
    }
    let mut counter = CanonicalCounter::new(len, n_const);
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cw = PskCodeword {
            g: counter.g.clone(),
            n_const,
        };
        done = !counter.advance();
        Some(cw)
    }))
}

/// Every beamformer of the Kronecker product codebook, vertical codeword
/// outermost.
pub fn enumerate_kpc(spec: &CodebookSpec, cap: u128) -> Result<impl Iterator<Item = KpcBeamformer>> {
    spec.validate()?;
    let required = spec.codebook_size();
    if required > cap {
        return Err(Error::TooLarge { required, cap });
    }
    let horizontal: Vec<PskCodeword> = enumerate_psk(spec.m_th, spec.n_h, cap)?.collect();
    let vertical = enumerate_psk(spec.m_tv, spec.n_v, cap)?;
    Ok(vertical.flat_map(move |gv| {
        horizontal
            .clone()
            .into_iter()
            .map(move |gh| kron_beamformer(gh, gv.clone()))
    }))
}

/// DFT codebook with `m * oversample` unit-norm columns; column `q` has entry
/// `exp(-j 2 pi k q / (m oversample)) / sqrt(m)`.
pub fn dft_codebook(m: usize, oversample: usize) -> Vec<Vec<Complex64>> {
    let size = m * oversample;
    let scale = 1.0 / (m as f64).sqrt();
    (0..size)
        .map(|q| {
            (0..m)
                .map(|k| {
                    // Reduce the product first to keep the phase argument small.
                    let phase = -TAU * ((k * q) % size) as f64 / size as f64;
                    Complex64::from_polar(scale, phase)
                })
                .collect()
        })
        .collect()
}

/// Kronecker DFT codebook: every `vec(u_h u_v^T)` for `u_h` in the horizontal
/// DFT codebook and `u_v` in the vertical one, matching the array layout.
pub fn dft_kron_codebook(m_th: usize, m_tv: usize, oversample: usize) -> Vec<Vec<Complex64>> {
    let horizontal = dft_codebook(m_th, oversample);
    let vertical = dft_codebook(m_tv, oversample);
    let mut out = Vec::with_capacity(horizontal.len() * vertical.len());
    for v in &vertical {
        for h in &horizontal {
            out.push(kron(v, h));
        }
    }
    out
}

/// Kronecker product of two vectors: `(a (x) b)[i * len(b) + j] = a[i] b[j]`.
pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Square unitary DFT matrix, row-major.
fn dft_matrix(m: usize) -> Vec<Complex64> {
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Vec::with_capacity(m * m);
    for r in 0..m {
        for c in 0..m {
            let phase = -TAU * ((r * c) % m) as f64 / m as f64;
            out.push(Complex64::from_polar(scale, phase));
        }
    }
    out
}

/// Kronecker product of two square row-major matrices.
fn kron_matrix(a: &[Complex64], na: usize, b: &[Complex64], nb: usize) -> Vec<Complex64> {
    let n = na * nb;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for ra in 0..na {
        for ca in 0..na {
            let x = a[ra * na + ca];
            for rb in 0..nb {
                let row = ra * nb + rb;
                for cb in 0..nb {
                    out[row * n + ca * nb + cb] = x * b[rb * nb + cb];
                }
            }
        }
    }
    out
}

/// Builds `U_K = U_H (x) U_V` from square DFT matrices and returns
/// `|| U_K U_K^H - I ||_F`, computed densely.
pub fn verify_unitary_kron(m_th: usize, m_tv: usize) -> f64 {
    let u = kron_matrix(&dft_matrix(m_th), m_th, &dft_matrix(m_tv), m_tv);
    unitarity_error(&u, m_th * m_tv)
}

/// `|| U U^H - I ||_F` for a square row-major matrix.
fn unitarity_error(u: &[Complex64], n: usize) -> f64 {
    // Split planes vectorize much better than Complex64 rows.
    let re: Vec<f64> = u.iter().map(|z| z.re).collect();
    let im: Vec<f64> = u.iter().map(|z| z.im).collect();
    let mut err_sq = 0.0;
    for r in 0..n {
        let (ar, ai) = (&re[r * n..(r + 1) * n], &im[r * n..(r + 1) * n]);
        for s in r..n {
            let (br, bi) = (&re[s * n..(s + 1) * n], &im[s * n..(s + 1) * n]);
            // sum_c a_c conj(b_c)
            let mut sr = 0.0;
            let mut si = 0.0;
            for c in 0..n {
                sr += ar[c] * br[c] + ai[c] * bi[c];
                si += ai[c] * br[c] - ar[c] * bi[c];
            }
            let target = if r == s { 1.0 } else { 0.0 };
            let e = (sr - target).powi(2) + si * si;
            err_sq += if r == s { e } else { 2.0 * e };
        }
    }
    err_sq.sqrt()
}
