//! Ranking weights from a `key=value` file (`alpha`, `beta`, `gamma`,
//! `delta`, `lambda`). `#` starts a comment.

use std::path::Path;

use scholarlib_core::RankWeights;

use crate::error::{GatewayError, Result};

pub fn parse_weights(text: &str) -> Result<RankWeights> {
    let mut w = RankWeights::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| GatewayError::Config(format!("line {}: {m}", n + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key=value"))?;
        let value: f64 = value.trim().parse().map_err(|_| err("value is not a number"))?;
        if !value.is_finite() || value < 0.0 {
            return Err(err("weights must be finite and non-negative"));
        }
        match key.trim() {
            "alpha" => w.alpha = value,
            "beta" => w.beta = value,
            "gamma" => w.gamma = value,
            "delta" => w.delta = value,
            "lambda" => w.lambda = value,
            other => return Err(err(&format!("unknown key {other:?}"))),
        }
    }
    Ok(w)
}

pub fn load_weights(path: &Path) -> Result<RankWeights> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
    parse_weights(&text)
}

/// Command-line overrides applied on top of a file or the defaults.
#[derive(Debug, Clone, Default)]
pub struct WeightOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
}

impl WeightOverrides {
    pub fn apply(&self, mut w: RankWeights) -> Result<RankWeights> {
        let fields = [
            (&mut w.alpha, self.alpha),
            (&mut w.beta, self.beta),
            (&mut w.gamma, self.gamma),
            (&mut w.delta, self.delta),
            (&mut w.lambda, self.lambda),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if !w.is_valid() {
            return Err(GatewayError::Config("weights must be finite and non-negative".into()));
        }
        Ok(w)
    }
}
