//! Flat `key = value` run configuration and its manifest echo.

use std::fmt::Write as _;

use crate::linklevel_sim::{calibrate_scenario, Scheme, SimConfig};

use super::CliError;

/// Keys accepted in a config file, in manifest order.
pub const KEYS: [&str; 19] = [
    "m_th",
    "m_tv",
    "d_h",
    "d_v",
    "i_mpc",
    "mean_azimuth",
    "mean_elevation",
    "angular_spread",
    "target_rho",
    "n_h",
    "n_v",
    "schemes",
    "snr_db",
    "iterations",
    "symbols_per_iteration",
    "dft_oversample",
    "normalize_channel",
    "random_mean_aod",
    "seed",
];

/// Angular spread search used by `target_rho`.
const MAX_SPREAD: f64 = 1.5;
const CALIBRATION_SAMPLES: usize = 500;

/// A parsed simulation request: one base config run once per scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub schemes: Vec<Scheme>,
    /// If set, the angular spread is calibrated to this correlation before
    /// running.
    pub target_rho: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::new(8, 8, Scheme::Psk3d),
            schemes: vec![Scheme::Psk3d],
            target_rho: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("line {line}: invalid value `{value}` for `{key}`")))
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, CliError> {
    let x: f64 = parse_num(key, value, line)?;
    if !x.is_finite() {
        return Err(CliError::Usage(format!("line {line}: `{key}` must be finite")));
    }
    Ok(x)
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, CliError> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!(
            "line {line}: `{key}` expects true or false, got `{value}`"
        ))),
    }
}

fn parse_list<T>(value: &str, mut item: impl FnMut(&str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    value.split(',').map(|s| item(s.trim())).collect()
}

impl RunConfig {
    /// Parses config text. Blank lines and lines starting with `#` are
    /// skipped; unknown or repeated keys are rejected with their line number.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {line}: expected `key = value`, got `{trimmed}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
                return Err(CliError::Usage(format!("line {line}: unknown key `{key}`")));
            };
            if seen.contains(&key) {
                return Err(CliError::Usage(format!("line {line}: key `{key}` given twice")));
            }
            seen.push(key);
            cfg.set(key, value, line)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), CliError> {
        let sim = &mut self.sim;
        match key {
            "m_th" => {
                sim.channel.m_th = parse_num(key, value, line)?;
                sim.codebook.m_th = sim.channel.m_th;
            }
            "m_tv" => {
                sim.channel.m_tv = parse_num(key, value, line)?;
                sim.codebook.m_tv = sim.channel.m_tv;
            }
            "d_h" => sim.channel.d_h = parse_f64(key, value, line)?,
            "d_v" => sim.channel.d_v = parse_f64(key, value, line)?,
            "i_mpc" => sim.channel.i_mpc = parse_num(key, value, line)?,
            "mean_azimuth" => sim.channel.mean_azimuth = parse_f64(key, value, line)?,
            "mean_elevation" => sim.channel.mean_elevation = parse_f64(key, value, line)?,
            "angular_spread" => sim.channel.angular_spread = parse_f64(key, value, line)?,
            "target_rho" => self.target_rho = Some(parse_f64(key, value, line)?),
            "n_h" => sim.codebook.n_h = parse_num(key, value, line)?,
            "n_v" => sim.codebook.n_v = parse_num(key, value, line)?,
            "schemes" => {
                self.schemes = parse_list(value, |s| {
                    s.parse()
                        .map_err(|_| CliError::Usage(format!("line {line}: unknown scheme `{s}`")))
                })?
            }
            "snr_db" => sim.snr_db_list = parse_list(value, |s| parse_f64(key, s, line))?,
            "iterations" => sim.iterations = parse_num(key, value, line)?,
            "symbols_per_iteration" => sim.symbols_per_iteration = parse_num(key, value, line)?,
            "dft_oversample" => sim.dft_oversample = parse_num(key, value, line)?,
            "normalize_channel" => sim.normalize_channel = parse_bool(key, value, line)?,
            "random_mean_aod" => sim.random_mean_aod = parse_bool(key, value, line)?,
            "seed" => self.set_seed(parse_num(key, value, line)?),
            _ => unreachable!("key list and setter out of sync: {key}"),
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.sim.seed = seed;
        self.sim.channel.seed = seed;
    }

    /// Validates every scheme's config and resolves `target_rho` into an
    /// angular spread.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.schemes.is_empty() {
            return Err(CliError::Usage("no schemes given".into()));
        }
        for &scheme in &self.schemes {
            SimConfig {
                scheme,
                ..self.sim.clone()
            }
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(target) = self.target_rho.take() {
            self.sim.channel.angular_spread = calibrate_scenario(&self.sim, target, CALIBRATION_SAMPLES, MAX_SPREAD)
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(self)
    }

    /// Config text that parses back to `self`. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let sim = &self.sim;
        let ch = &sim.channel;
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("m_th", ch.m_th.to_string());
        put("m_tv", ch.m_tv.to_string());
        put("d_h", ch.d_h.to_string());
        put("d_v", ch.d_v.to_string());
        put("i_mpc", ch.i_mpc.to_string());
        put("mean_azimuth", ch.mean_azimuth.to_string());
        put("mean_elevation", ch.mean_elevation.to_string());
        put("angular_spread", ch.angular_spread.to_string());
        if let Some(t) = self.target_rho {
            put("target_rho", t.to_string());
        }
        put("n_h", sim.codebook.n_h.to_string());
        put("n_v", sim.codebook.n_v.to_string());
        put("schemes", join(self.schemes.iter().map(|s| s.to_string()).collect()));
        put("snr_db", join(sim.snr_db_list.iter().map(|s| s.to_string()).collect()));
        put("iterations", sim.iterations.to_string());
        put("symbols_per_iteration", sim.symbols_per_iteration.to_string());
        put("dft_oversample", sim.dft_oversample.to_string());
        put("normalize_channel", sim.normalize_channel.to_string());
        put("random_mean_aod", sim.random_mean_aod.to_string());
        put("seed", sim.seed.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_an_empty_file() {
        assert_eq!(RunConfig::parse("\n# nothing\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = RunConfig::parse("m_th = 2\n\nfoo=1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("foo") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn malformed_lines_are_rejected() {
        for text in [
            "m_th 4",
            "m_th = four",
            "snr_db = 1,x",
            "schemes = 4d",
            "seed = 1\nseed = 2",
            "d_h = inf",
        ] {
            assert_eq!(RunConfig::parse(text).unwrap_err().exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn lists_and_flags_parse() {
        let cfg =
            RunConfig::parse("schemes = 3d-psk, 2d-dft\nsnr_db = -2,0.5\nnormalize_channel = true\nm_th = 2").unwrap();
        assert_eq!(cfg.schemes, vec![Scheme::Psk3d, Scheme::Dft2d]);
        assert_eq!(cfg.sim.snr_db_list, vec![-2.0, 0.5]);
        assert!(cfg.sim.normalize_channel);
        assert_eq!(cfg.sim.codebook.m_th, 2);
    }

    #[test]
    fn text_round_trips() {
        let mut cfg = RunConfig::parse(
            "m_th = 2\nm_tv = 4\nsnr_db = 0.1,2\nangular_spread = 0.1234567890123\nschemes = 3d-dft,3d-psk",
        )
        .unwrap();
        cfg.set_seed(77);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn resolve_rejects_inconsistent_configs() {
        let cfg = RunConfig::parse("n_h = 3").unwrap();
        assert_eq!(cfg.resolve().unwrap_err().exit_code(), 2);
        let cfg = RunConfig::parse("iterations = 0").unwrap();
        assert_eq!(cfg.resolve().unwrap_err().exit_code(), 2);
    }
}
