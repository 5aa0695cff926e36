//! `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::inference::{EvalConfig, ScoreConfig};
use crate::objectives::Lambdas;
use crate::training::{BackboneConfig, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub train: TrainConfig,
    pub window: usize,
    pub stride: usize,
    pub sigma: f64,
    pub threshold: f64,
    pub train_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            train: TrainConfig::default(),
            window: 6,
            stride: 3,
            sigma: 2.0,
            threshold: 0.5,
            train_data: None,
            test_data: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "segments",
    "clips_per_segment",
    "clip_interval",
    "batch_size",
    "lr",
    "epochs",
    "dropout",
    "flip_prob",
    "k",
    "p",
    "lambda1",
    "lambda2",
    "lambda3",
    "seed",
    "width",
    "height",
    "channels",
    "signature_offset",
    "window",
    "stride",
    "sigma",
    "threshold",
    "train_data",
    "test_data",
    "output_dir",
];

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text, &path.display().to_string())
    }

    /// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
    /// Unknown or repeated keys are rejected with the offending line number.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut assigned: Vec<(usize, &str, &str)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let diag = |message: String| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| diag(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| diag(format!("unknown key `{key}`")))?;
            if seen.contains(known) {
                return Err(diag(format!("key `{key}` given twice")));
            }
            seen.push(known);
            cfg.set(key, value).map_err(|m| diag(m))?;
            assigned.push((n + 1, key, value));
        }
        cfg.validate().map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: blame(&assigned),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Assigns one key; the error string names what was wrong with the value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("`{key}` expects a number, got `{v}`"))
        }
        fn auto(key: &str, v: &str) -> std::result::Result<Option<usize>, String> {
            if v == "auto" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        let t = &mut self.train;
        match key {
            "segments" => t.segments = num(key, value)?,
            "clips_per_segment" => t.clips_per_segment = num(key, value)?,
            "clip_interval" => t.clip_interval = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "dropout" => t.dropout = num(key, value)?,
            "flip_prob" => t.flip_prob = num(key, value)?,
            "k" => t.k = auto(key, value)?,
            "p" => t.p = auto(key, value)?,
            "lambda1" => t.lambdas.segment_overall = num(key, value)?,
            "lambda2" => t.lambdas.video_overall = num(key, value)?,
            "lambda3" => t.lambdas.sparsity = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "width" => t.backbone.width = num(key, value)?,
            "height" => t.backbone.height = num(key, value)?,
            "channels" => t.backbone.channels = num(key, value)?,
            "signature_offset" => t.backbone.signature_offset = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "stride" => self.stride = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "train_data" => self.train_data = Some(PathBuf::from(value)),
            "test_data" => self.test_data = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.window == 0 || self.stride == 0 {
            return Err(Error::config("window and stride must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::config("threshold must be finite"));
        }
        Ok(())
    }

    pub fn backbone(&self) -> BackboneConfig {
        self.train.backbone
    }

    pub fn lambdas(&self) -> Lambdas {
        self.train.lambdas
    }

    pub fn score_config(&self, k: usize) -> ScoreConfig {
        ScoreConfig {
            window: self.window,
            stride: self.stride,
            clips: self.window,
            clip_interval: 1,
            k,
            backbone: self.train.backbone,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            sigma: self.sigma,
            threshold: self.threshold,
        }
    }

    /// Every key with its resolved value, in [`KEYS`] order. Parses back to `self`.
    pub fn render(&self) -> String {
        let t = &self.train;
        let b = &t.backbone;
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let values: Vec<(&str, Option<String>)> = vec![
            ("segments", Some(t.segments.to_string())),
            ("clips_per_segment", Some(t.clips_per_segment.to_string())),
            ("clip_interval", Some(t.clip_interval.to_string())),
            ("batch_size", Some(t.batch_size.to_string())),
            ("lr", Some(t.lr.to_string())),
            ("epochs", Some(t.epochs.to_string())),
            ("dropout", Some(t.dropout.to_string())),
            ("flip_prob", Some(t.flip_prob.to_string())),
            ("k", Some(t.resolved_k().to_string())),
            ("p", Some(t.resolved_p().to_string())),
            ("lambda1", Some(t.lambdas.segment_overall.to_string())),
            ("lambda2", Some(t.lambdas.video_overall.to_string())),
            ("lambda3", Some(t.lambdas.sparsity.to_string())),
            ("seed", Some(t.seed.to_string())),
            ("width", Some(b.width.to_string())),
            ("height", Some(b.height.to_string())),
            ("channels", Some(b.channels.to_string())),
            ("signature_offset", Some(b.signature_offset.to_string())),
            ("window", Some(self.window.to_string())),
            ("stride", Some(self.stride.to_string())),
            ("sigma", Some(self.sigma.to_string())),
            ("threshold", Some(self.threshold.to_string())),
            ("train_data", opt(&self.train_data)),
            ("test_data", opt(&self.test_data)),
            ("output_dir", Some(self.output_dir.display().to_string())),
        ];
        let mut out = String::new();
        for (k, v) in values {
            match v {
                Some(v) => writeln!(out, "{k} = {v}").unwrap(),
                None => writeln!(out, "# {k} unset").unwrap(),
            }
        }
        out
    }
}

/// Line of the assignment after which the config last turned invalid.
fn blame(assigned: &[(usize, &str, &str)]) -> usize {
    let mut cfg = Config::default();
    let mut line = assigned.last().map_or(1, |a| a.0);
    let mut valid = true;
    for &(n, key, value) in assigned {
        // every value already parsed once
        let _ = cfg.set(key, value);
        let now = cfg.validate().is_ok();
        if valid && !now {
            line = n;
        }
        valid = now;
    }
    line
}
