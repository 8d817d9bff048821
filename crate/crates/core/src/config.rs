//! Run configuration shared by the command-line tool.
//!
//! Values come from three layers, highest first: command-line flags, a
//! `key=value` config file, built-in defaults.

use std::path::Path;

use crate::annotate::{AnnotateConfig, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::rasterizer::{Grid, Rasterizer, RenderParams};
use crate::reprlearn::NceConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub height: usize,
    pub width: usize,
    pub theta: f64,
    /// Line half-width in pixels.
    pub w: f64,
    pub lambda: [f64; 5],
    pub tau: f64,
    pub threshold: f64,
    pub include_connections: bool,
    pub seed: u64,
    pub steps: usize,
    pub lr: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            theta: 100.0,
            w: 2.0,
            lambda: [1.0; 5],
            tau: 10.0,
            threshold: DEFAULT_THRESHOLD,
            include_connections: false,
            seed: 0,
            steps: 200,
            lr: 1e-3,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidParameter(format!(
            "{key}: expected a boolean, got {value:?}"
        ))),
    }
}

/// Split `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::MalformedLine {
                line: i + 1,
                reason: "expected key=value".into(),
            });
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "height" => self.height = parse_num(key, value)?,
            "width" => self.width = parse_num(key, value)?,
            "theta" => self.theta = parse_num(key, value)?,
            "w" => self.w = parse_num(key, value)?,
            "tau" => self.tau = parse_num(key, value)?,
            "threshold" => self.threshold = parse_num(key, value)?,
            "include_connections" => self.include_connections = parse_bool(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "lr" => self.lr = parse_num(key, value)?,
            _ => match key
                .strip_prefix("lambda")
                .and_then(|n| n.parse::<usize>().ok())
            {
                Some(n @ 1..=5) => self.lambda[n - 1] = parse_num(key, value)?,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown config key {key:?}"
                    )))
                }
            },
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text).map_err(|e| Error::in_file(path, e))?;
        Ok(cfg)
    }

    /// Check every numeric range by building the typed configs.
    pub fn validate(&self) -> Result<()> {
        self.rasterizer()?;
        self.loss_weights()?;
        self.nce()?;
        self.annotate()?;
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lr must be non-negative, got {}",
                self.lr
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn rasterizer(&self) -> Result<Rasterizer> {
        Ok(Rasterizer::new(
            Grid::new(self.height, self.width)?,
            RenderParams::new(self.theta, self.w)?,
        )
        .with_connections(self.include_connections))
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.lambda)
    }

    pub fn nce(&self) -> Result<NceConfig> {
        NceConfig::new(self.tau)
    }

    pub fn annotate(&self) -> Result<AnnotateConfig> {
        AnnotateConfig::new(self.threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.height, c.width, c.theta, c.w), (128, 128, 100.0, 2.0));
        assert_eq!(c.lambda, [1.0; 5]);
        assert_eq!((c.tau, c.threshold), (10.0, 0.1));
        assert!(!c.include_connections);
        c.validate().unwrap();
    }

    #[test]
    fn file_values_override_defaults() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\ntheta = 5\nlambda3=0.25\ninclude_connections=true\n\n")
            .unwrap();
        assert_eq!(c.theta, 5.0);
        assert_eq!(c.lambda, [1.0, 1.0, 0.25, 1.0, 1.0]);
        assert!(c.include_connections);
    }

    #[test]
    fn bad_entries() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("nonsense\n").is_err());
        assert!(c.apply_text("lambda6=1\n").is_err());
        assert!(c.apply_text("theta=abc\n").is_err());
        c.apply_text("theta=-1\n").unwrap();
        assert!(c.validate().is_err());
    }
}
