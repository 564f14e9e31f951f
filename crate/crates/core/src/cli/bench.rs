//! `bench`: timing of fast detection against input length.

use std::hint::black_box;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::array_channel::complex_gaussian;
use crate::quantizer::ncsd_detect;

use super::CliError;

pub const MIN_REPETITIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// `(length, median ns per detection)`, sorted by length.
    pub rows: Vec<(usize, f64)>,
    /// Least-squares slope of `ln(ns)` against `ln(length)`; needs two sizes.
    pub slope: Option<f64>,
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "length,median_ns")?;
        for (len, ns) in &self.rows {
            writeln!(f, "{len},{ns:.1}")?;
        }
        if let Some(slope) = self.slope {
            writeln!(f, "slope={slope:.3}")?;
        }
        Ok(())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        0.5 * (xs[mid - 1] + xs[mid])
    } else {
        xs[mid]
    }
}

/// Least-squares slope through `(x, y)` points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Median wall time of `ncsd_detect` per size. Sizes are sorted and
/// deduplicated first.
pub fn cmd_bench(sizes: &[usize], repetitions: usize, n_const: u32, seed: u64) -> Result<BenchReport, CliError> {
    if sizes.is_empty() || sizes.iter().any(|&s| s < 2) {
        return Err(CliError::Usage("sizes must be nonempty and each at least 2".into()));
    }
    if repetitions < MIN_REPETITIONS {
        return Err(CliError::Usage(format!(
            "repetitions must be at least {MIN_REPETITIONS}"
        )));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &len in &sizes {
        let y: Vec<Complex64> = (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        ncsd_detect(&y, n_const)?;
        let times: Vec<f64> = (0..repetitions)
            .map(|_| {
                let start = Instant::now();
                let _ = black_box(ncsd_detect(black_box(&y), n_const));
                start.elapsed().as_nanos() as f64
            })
            .collect();
        rows.push((len, median(times)));
    }
    let logs: Vec<(f64, f64)> = rows.iter().map(|&(l, t)| ((l as f64).ln(), t.max(1.0).ln())).collect();
    Ok(BenchReport {
        rows,
        slope: fit_slope(&logs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0]
            .iter()
            .map(|x| (x.ln(), 1.5 * x.ln() + 3.0))
            .collect();
        assert!((fit_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
    }

    #[test]
    fn single_size_omits_slope() {
        let report = cmd_bench(&[16], 100, 4, 1).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.slope, None);
        assert!(!report.to_string().contains("slope"));
    }

    #[test]
    fn sizes_are_sorted() {
        let report = cmd_bench(&[64, 8, 32, 8], 100, 4, 1).unwrap();
        let lens: Vec<usize> = report.rows.iter().map(|r| r.0).collect();
        assert_eq!(lens, vec![8, 32, 64]);
        assert!(report.slope.is_some());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(cmd_bench(&[1, 8], 100, 4, 1).is_err());
        assert!(cmd_bench(&[], 100, 4, 1).is_err());
        assert!(cmd_bench(&[8], 10, 4, 1).is_err());
    }
}
