//! `verify`: randomized self-checks of the fast detector and the unitarity
//! construction.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array_channel::complex_gaussian;
use crate::codebook::{verify_unitary_kron, PskCodeword, DEFAULT_ENUMERATION_CAP};
use crate::error::Result;
use crate::quantizer::{exhaustive_psk_detect, DetectionResult};

use super::CliError;

pub const METRIC_TOLERANCE: f64 = 1e-9;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Longest detection input; lengths are drawn from `2..=max_len`.
    pub max_len: usize,
    /// Largest constellation; every power of two from 2 up is exercised.
    pub max_const: u32,
    /// Random cases per suite.
    pub trials: usize,
    /// Largest `m_th * m_tv` in the unitarity sweep.
    pub max_antennas: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_len: 6,
            max_const: 8,
            trials: 10_000,
            max_antennas: 256,
            seed: 1,
        }
    }
}

impl VerifyOptions {
    pub fn validate(&self) -> std::result::Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(CliError::Usage("max_len must be at least 1".into()));
        }
        if self.max_const < 2 || !self.max_const.is_power_of_two() {
            return Err(CliError::Usage(format!(
                "max_const must be a power of two of at least 2, got {}",
                self.max_const
            )));
        }
        let size = u128::from(self.max_const).checked_pow(self.max_len as u32 - 1);
        if size.is_none_or(|s| s > DEFAULT_ENUMERATION_CAP) {
            return Err(CliError::Usage(format!(
                "max_const^(max_len-1) exceeds the enumeration cap of {DEFAULT_ENUMERATION_CAP}"
            )));
        }
        Ok(())
    }

    fn constellations(&self) -> Vec<u32> {
        (1..=self.max_const.trailing_zeros()).map(|k| 1 << k).collect()
    }
}

/// Outcome of one suite: how many cases ran and the first failure, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub counterexample: Option<String>,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.counterexample {
            None => write!(f, "PASS {} ({} cases)", self.name, self.cases),
            Some(c) => write!(
                f,
                "FAIL {} after {} cases\n  counterexample: {c}",
                self.name, self.cases
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suites: Vec<SuiteOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.counterexample.is_none())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= METRIC_TOLERANCE * b.abs().max(1.0)
}

fn random_input(rng: &mut ChaCha8Rng, opts: &VerifyOptions, ns: &[u32]) -> (Vec<Complex64>, u32) {
    let len = rng.random_range(opts.max_len.min(2)..=opts.max_len);
    let n = ns[rng.random_range(0..ns.len())];
    ((0..len).map(|_| complex_gaussian(rng, 1.0)).collect(), n)
}

fn describe(y: &[Complex64], n: u32) -> String {
    let entries: Vec<String> = y.iter().map(|z| format!("({:?},{:?})", z.re, z.im)).collect();
    format!("N={n} y=[{}]", entries.join(", "))
}

fn describe_result(r: &Result<DetectionResult>) -> String {
    match r {
        Ok(r) => format!("g={:?} metric={:?}", r.codeword.indices(), r.metric),
        Err(e) => format!("error: {e}"),
    }
}

/// Fast detection against the exhaustive oracle.
pub fn oracle_suite<D>(opts: &VerifyOptions, detect: &D) -> SuiteOutcome
where
    D: Fn(&[Complex64], u32) -> Result<DetectionResult>,
{
    let ns = opts.constellations();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for case in 0..opts.trials {
        let (y, n) = random_input(&mut rng, opts, &ns);
        let fast = detect(&y, n);
        let exact = exhaustive_psk_detect(&y, n, DEFAULT_ENUMERATION_CAP);
        let agree = matches!((&fast, &exact), (Ok(f), Ok(e)) if close(f.metric, e.metric));
        if !agree {
            return SuiteOutcome {
                name: "oracle equivalence",
                cases: case,
                counterexample: Some(format!(
                    "{} fast {} exhaustive {}",
                    describe(&y, n),
                    describe_result(&fast),
                    describe_result(&exact)
                )),
            };
        }
    }
    SuiteOutcome {
        name: "oracle equivalence",
        cases: opts.trials,
        counterexample: None,
    }
}

/// How an input is transformed, and what the detector must do in response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariance {
    /// `y -> e^{j phi} y`: same codeword, same metric.
    GlobalPhase,
    /// `y -> c y`, `c > 0`: same codeword, metric times `c^2`.
    PositiveScale,
    /// `y -> e^{j 2 pi r / N} y`: same canonical codeword, same metric.
    PskRotation,
}

impl Invariance {
    pub const ALL: [Invariance; 3] = [
        Invariance::GlobalPhase,
        Invariance::PositiveScale,
        Invariance::PskRotation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariance::GlobalPhase => "global-phase invariance",
            Invariance::PositiveScale => "positive-scale invariance",
            Invariance::PskRotation => "PSK-rotation invariance",
        }
    }
}

/// Adding `shift` to every index and canonicalizing gives `cw` back.
fn shifted_canonical(cw: &PskCodeword, shift: u32) -> bool {
    let moved: Vec<i64> = cw.indices().iter().map(|&g| i64::from(g + shift)).collect();
    PskCodeword::canonical_from(&moved, cw.n_const()).is_ok_and(|c| &c == cw)
}

pub fn invariance_suite<D>(opts: &VerifyOptions, kind: Invariance, detect: &D) -> SuiteOutcome
where
    D: Fn(&[Complex64], u32) -> Result<DetectionResult>,
{
    let ns = opts.constellations();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (kind as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    for case in 0..opts.trials {
        let (y, n) = random_input(&mut rng, opts, &ns);
        let mut shift = 0;
        let (factor, metric_scale, label) = match kind {
            Invariance::GlobalPhase => {
                let phi = rng.random_range(0.0..TAU);
                (Complex64::from_polar(1.0, phi), 1.0, format!("phi={phi:?}"))
            }
            Invariance::PositiveScale => {
                let c = 10f64.powf(rng.random_range(-3.0..3.0));
                (Complex64::new(c, 0.0), c * c, format!("c={c:?}"))
            }
            Invariance::PskRotation => {
                let r = rng.random_range(0..n);
                shift = r;
                (
                    Complex64::from_polar(1.0, TAU * f64::from(r) / f64::from(n)),
                    1.0,
                    format!("r={r}"),
                )
            }
        };
        let moved: Vec<Complex64> = y.iter().map(|z| z * factor).collect();
        let base = detect(&y, n);
        let other = detect(&moved, n);
        let ok = match (&base, &other) {
            (Ok(a), Ok(b)) => {
                a.codeword == b.codeword
                    && close(b.metric, a.metric * metric_scale)
                    && (kind != Invariance::PskRotation || shifted_canonical(&a.codeword, shift))
            }
            _ => false,
        };
        if !ok {
            return SuiteOutcome {
                name: kind.name(),
                cases: case,
                counterexample: Some(format!(
                    "{} {label} original {} transformed {}",
                    describe(&y, n),
                    describe_result(&base),
                    describe_result(&other)
                )),
            };
        }
    }
    SuiteOutcome {
        name: kind.name(),
        cases: opts.trials,
        counterexample: None,
    }
}

/// Dense unitarity check of the Kronecker DFT basis for every geometry with
/// at most `max_antennas` elements.
pub fn unitarity_suite(max_antennas: usize) -> SuiteOutcome {
    let mut cases = 0;
    for m_th in 1..=max_antennas {
        for m_tv in 1..=max_antennas / m_th {
            let err = verify_unitary_kron(m_th, m_tv);
            if err.is_nan() || err >= UNITARITY_TOLERANCE {
                return SuiteOutcome {
                    name: "unitarity",
                    cases,
                    counterexample: Some(format!("m_th={m_th} m_tv={m_tv} frobenius error {err:e}")),
                };
            }
            cases += 1;
        }
    }
    SuiteOutcome {
        name: "unitarity",
        cases,
        counterexample: None,
    }
}

/// Runs every suite with the given detector.
pub fn run_verify<D>(opts: &VerifyOptions, detect: D) -> std::result::Result<VerifyReport, CliError>
where
    D: Fn(&[Complex64], u32) -> Result<DetectionResult>,
{
    opts.validate()?;
    let mut suites = vec![oracle_suite(opts, &detect)];
    suites.extend(
        Invariance::ALL
            .into_iter()
            .map(|kind| invariance_suite(opts, kind, &detect)),
    );
    suites.push(unitarity_suite(opts.max_antennas));
    Ok(VerifyReport { suites })
}

/// Runs every suite with `detect`, prints one line per suite and returns the
/// exit code: 0 if all pass, 1 otherwise.
pub fn cmd_verify<D>(opts: &VerifyOptions, detect: D, out: &mut dyn Write) -> std::result::Result<u8, CliError>
where
    D: Fn(&[Complex64], u32) -> Result<DetectionResult>,
{
    let report = run_verify(opts, detect)?;
    for suite in &report.suites {
        writeln!(out, "{suite}").map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::ncsd_detect;

    fn small() -> VerifyOptions {
        VerifyOptions {
            trials: 300,
            max_antennas: 16,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn fast_detector_passes() {
        let report = run_verify(&small(), ncsd_detect).unwrap();
        assert!(report.passed(), "{:?}", report);
        assert_eq!(report.suites.len(), 5);
    }

    #[test]
    fn rejects_invalid_options() {
        for opts in [
            VerifyOptions { trials: 0, ..small() },
            VerifyOptions {
                max_const: 6,
                ..small()
            },
            VerifyOptions { max_len: 30, ..small() },
        ] {
            assert_eq!(run_verify(&opts, ncsd_detect).unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn wrong_detector_yields_counterexample() {
        let always_zero = |y: &[Complex64], n: u32| {
            let cw = crate::codebook::PskCodeword::new(vec![0; y.len()], n)?;
            let metric = crate::quantizer::glrt_metric(y, &crate::codebook::realize(&cw));
            Ok(DetectionResult { codeword: cw, metric })
        };
        let outcome = oracle_suite(&small(), &always_zero);
        assert!(outcome.counterexample.unwrap().contains("exhaustive"));
    }
}
