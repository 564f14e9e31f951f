//! `quantize`: one-shot KPC quantization of a channel read from a file.

use num_complex::Complex64;

use crate::array_channel::ChannelVector;
use crate::codebook::{CodebookSpec, PskCodeword};
use crate::quantizer::{beamforming_gain, quantize_csi};

use super::CliError;

/// Parses `re,im` lines. Blank lines and `#` comments are skipped.
pub fn parse_channel(text: &str) -> Result<Vec<Complex64>, CliError> {
    let mut h = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Usage(format!("line {}: expected `re,im`, got `{line}`", i + 1));
        let (re, im) = line.split_once(',').ok_or_else(bad)?;
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad());
        }
        h.push(Complex64::new(re, im));
    }
    if h.is_empty() {
        return Err(CliError::Usage("channel file has no entries".into()));
    }
    Ok(h)
}

fn join(cw: &PskCodeword) -> String {
    cw.indices().iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",")
}

/// Quantizes `h` and formats the result as a single line.
pub fn cmd_quantize(h: Vec<Complex64>, spec: &CodebookSpec) -> Result<String, CliError> {
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if h.len() != spec.m_t() {
        return Err(CliError::Usage(format!(
            "channel has {} entries but the array is {}x{} ({} antennas)",
            h.len(),
            spec.m_th,
            spec.m_tv,
            spec.m_t()
        )));
    }
    let h = ChannelVector::new(h);
    let q = quantize_csi(&h, spec)?;
    let gain = beamforming_gain(&h, q.beamformer.weights());
    Ok(format!(
        "g_h={} g_v={} bits={} gain={}",
        join(q.beamformer.g_h()),
        join(q.beamformer.g_v()),
        q.bits,
        gain
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m_th: usize, m_tv: usize, n: u32) -> CodebookSpec {
        CodebookSpec {
            n_h: n,
            n_v: n,
            m_th,
            m_tv,
        }
    }

    #[test]
    fn parses_comments_and_blanks() {
        let h = parse_channel("# h\n1,0\n\n 0.5 , -2\n").unwrap();
        assert_eq!(h, vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -2.0)]);
    }

    #[test]
    fn rejects_bad_files() {
        for text in ["", "# only\n", "1\n", "1,x\n", "nan,0\n"] {
            assert_eq!(parse_channel(text).unwrap_err().exit_code(), 2, "{text:?}");
        }
    }

    #[test]
    fn all_ones_binary() {
        let line = cmd_quantize(vec![Complex64::new(1.0, 0.0); 4], &spec(2, 2, 2)).unwrap();
        assert!(line.starts_with("g_h=0,0 g_v=0,0 bits=2 gain="), "{line}");
        let gain: f64 = line.rsplit('=').next().unwrap().parse().unwrap();
        assert!((gain - 4.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_a_usage_error() {
        let err = cmd_quantize(vec![Complex64::new(1.0, 0.0); 3], &spec(2, 2, 4)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
