//! Deterministic stand-in for a pretrained video backbone.
//!
//! Background features are standard normal noise. Each anomaly class owns a
//! block of channels and one spatial cell; a segment whose clips fall inside a
//! span of that class gets `offset × (fraction of such clips)` added on that
//! block at that cell.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gig::FeatureMaps;
use crate::numerics::Tensor;
use crate::rng::{derive_seed, stream, tag};
use crate::training::dataset::VideoSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackboneConfig {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub signature_offset: f64,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig {
            width: 4,
            height: 4,
            channels: 32,
            signature_offset: 3.0,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.channels == 0 {
            return Err(Error::config(format!(
                "feature extents must be positive, got {}x{}x{}",
                self.width, self.height, self.channels
            )));
        }
        if !self.signature_offset.is_finite() {
            return Err(Error::config("signature offset must be finite"));
        }
        Ok(())
    }

    /// Channel block owned by anomaly class `class` (1-based).
    pub fn signature_channels(&self, class: usize, classes: usize) -> Vec<usize> {
        let block = (self.channels / (classes + 1)).max(1);
        (0..block)
            .map(|j| ((class - 1) * block + j) % self.channels)
            .collect()
    }

    /// Row-major spatial cell owned by anomaly class `class` (1-based).
    pub fn signature_cell(&self, class: usize, classes: usize) -> usize {
        ((class - 1) * self.width * self.height) / classes
    }
}

/// Features `(T, w, h, d)` for one video given the clip start frames of each segment.
pub fn synthetic_backbone(
    clip_starts: &[Vec<usize>],
    video: &VideoSpec,
    cfg: &BackboneConfig,
    seed: u64,
) -> Result<FeatureMaps> {
    cfg.validate()?;
    if clip_starts.is_empty() || clip_starts.iter().any(Vec::is_empty) {
        return Err(Error::config("every segment needs at least one clip"));
    }
    let classes = video.labels.classes();
    let (w, h, d) = (cfg.width, cfg.height, cfg.channels);
    let per_segment = w * h * d;
    let mut data = Vec::with_capacity(clip_starts.len() * per_segment);
    for clips in clip_starts {
        let clip_key = clips
            .iter()
            .fold(clips.len() as u64, |acc, &f| derive_seed(acc, &[f as u64]));
        let mut rng = stream(seed, &[tag::BACKBONE, video.id as u64, clip_key]);
        let base = data.len();
        data.extend((0..per_segment).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));

        let mut hits = vec![0usize; classes];
        for &frame in clips {
            for c in video.active_classes(frame) {
                hits[c - 1] += 1;
            }
        }
        for (ci, &n) in hits.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let class = ci + 1;
            let amount = cfg.signature_offset * n as f64 / clips.len() as f64;
            let cell = cfg.signature_cell(class, classes);
            for ch in cfg.signature_channels(class, classes) {
                data[base + cell * d + ch] += amount;
            }
        }
    }
    FeatureMaps::new(Tensor::new(vec![clip_starts.len(), w, h, d], data)?)
}
