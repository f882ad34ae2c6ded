//! Run configuration: an optional `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crpoint::levi::ModelKind;
use crpoint::tol::{CERTIFY_TOL, DEGENERATE_REL, SAMPLES_PER_SEGMENT};

use crate::error::{CliError, CliResult};
use crate::Flags;

pub const MIN_SAMPLES: usize = 101;
pub const DEFAULT_LEVI_N: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Absolute threshold: certification margin and the floor of the
    /// degenerate band.
    pub tol_abs: f64,
    /// Relative degenerate band, `σ_min ≤ tol_rel·σ_max` on the block matrix.
    pub tol_rel: f64,
    pub samples_per_segment: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub input_path: Option<PathBuf>,
    pub grid: Option<usize>,
    pub epsilon: Option<f64>,
    pub radius: Option<f64>,
    pub model: ModelKind,
    pub n: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol_abs: CERTIFY_TOL,
            tol_rel: DEGENERATE_REL,
            samples_per_segment: SAMPLES_PER_SEGMENT,
            seed: 0,
            output_path: None,
            input_path: None,
            grid: None,
            epsilon: None,
            radius: None,
            model: ModelKind::AllSquares,
            n: None,
        }
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// keys may use `-` or `_`.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", lineno + 1)))?;
        let value = value.trim().trim_matches('"');
        out.insert(key.trim().replace('_', "-"), value.to_string());
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Input(format!("config key {key}: cannot parse {value:?}: {e}")))
}

impl RunConfig {
    fn apply(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "tol-abs" => self.tol_abs = parse_value(key, value)?,
            "tol-rel" => self.tol_rel = parse_value(key, value)?,
            "samples" => self.samples_per_segment = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "output" => self.output_path = Some(PathBuf::from(value)),
            "input" => self.input_path = Some(PathBuf::from(value)),
            "grid" => self.grid = Some(parse_value(key, value)?),
            "epsilon" => self.epsilon = Some(parse_value(key, value)?),
            "radius" => self.radius = Some(parse_value(key, value)?),
            "model" => self.model = parse_value(key, value)?,
            "n" => self.n = Some(parse_value(key, value)?),
            other => return Err(CliError::Input(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Defaults, then the config file (if any), then flags.
    pub fn resolve(flags: &Flags) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &flags.config {
            let text = read_file(path)?;
            for (k, v) in parse_config_text(&text)? {
                cfg.apply(&k, &v)?;
            }
        }
        if let Some(v) = flags.tol_abs {
            cfg.tol_abs = v;
        }
        if let Some(v) = flags.tol_rel {
            cfg.tol_rel = v;
        }
        if let Some(v) = flags.samples {
            cfg.samples_per_segment = v;
        }
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = &flags.output {
            cfg.output_path = Some(v.clone());
        }
        if let Some(v) = &flags.input {
            cfg.input_path = Some(v.clone());
        }
        cfg.grid = flags.grid.or(cfg.grid);
        cfg.epsilon = flags.epsilon.or(cfg.epsilon);
        cfg.radius = flags.radius.or(cfg.radius);
        cfg.n = flags.n.or(cfg.n);
        if let Some(m) = flags.model {
            cfg.model = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Input(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tol-abs", self.tol_abs)?;
        positive("tol-rel", self.tol_rel)?;
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        if let Some(r) = self.radius {
            positive("radius", r)?;
        }
        if self.samples_per_segment < MIN_SAMPLES {
            return Err(CliError::Input(format!(
                "samples must be at least {MIN_SAMPLES}, got {}",
                self.samples_per_segment
            )));
        }
        if self.grid == Some(0) || self.n == Some(0) {
            return Err(CliError::Input("grid and n must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_value_text() {
        let map = parse_config_text("# defaults\nseed = 7\ntol_abs=1e-8  # inline\n\nmodel = \"mixed\"\n").unwrap();
        assert_eq!(map["seed"], "7");
        assert_eq!(map["tol-abs"], "1e-8");
        assert_eq!(map["model"], "mixed");
        assert!(parse_config_text("seed 7").is_err());
    }

    #[test]
    fn rejects_small_sample_counts() {
        let cfg = RunConfig {
            samples_per_segment: 100,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply("colour", "red").is_err());
        cfg.apply("samples", "501").unwrap();
        assert_eq!(cfg.samples_per_segment, 501);
    }
}
