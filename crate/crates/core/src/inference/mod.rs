//! Windowed frame scoring of untrimmed videos and the evaluation pipeline.

pub mod metrics;
pub mod smoothing;

use crate::error::{Error, Result};
use crate::gig::{max_anomaly, HeadParams};
use crate::head;
use crate::rng::{stream, tag};
use crate::training::{sample_segments, synthetic_backbone, BackboneConfig, DatasetSpec, VideoSpec};

pub use metrics::{f1_metrics, roc_auc, F1Report};
pub use smoothing::{gaussian_kernel, gaussian_smooth};

/// Per-frame `1+C` channel scores.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameScoreSeries {
    channels: usize,
    scores: Vec<f64>,
}

impl FrameScoreSeries {
    pub fn new(channels: usize, scores: Vec<f64>) -> Result<Self> {
        if channels < 2 || scores.is_empty() || scores.len() % channels != 0 {
            return Err(Error::dim(format!(
                "{} scores do not form frames of {channels} channels",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Evaluation("frame score outside [0, 1]".into()));
        }
        Ok(FrameScoreSeries { channels, scores })
    }

    pub fn frames(&self) -> usize {
        self.scores.len() / self.channels
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        &self.scores[f * self.channels..(f + 1) * self.channels]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.scores.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// Per-frame max over anomaly channels.
    pub fn overall(&self) -> Vec<f64> {
        self.scores.chunks_exact(self.channels).map(max_anomaly).collect()
    }

    /// Smooths every channel independently.
    pub fn smoothed(&self, sigma: f64) -> Result<Self> {
        let cols = (0..self.channels)
            .map(|c| gaussian_smooth(&self.channel(c), sigma))
            .collect::<Result<Vec<_>>>()?;
        let mut scores = Vec::with_capacity(self.scores.len());
        for f in 0..self.frames() {
            // Convex combinations of [0, 1] values; clamp only absorbs rounding.
            scores.extend(cols.iter().map(|col| col[f].clamp(0.0, 1.0)));
        }
        FrameScoreSeries::new(self.channels, scores)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreConfig {
    pub window: usize,
    pub stride: usize,
    /// Clips drawn per window; one per frame of a full window.
    pub clips: usize,
    pub clip_interval: usize,
    pub k: usize,
    pub backbone: BackboneConfig,
}

impl ScoreConfig {
    pub fn new(k: usize, backbone: BackboneConfig) -> Self {
        ScoreConfig {
            window: 6,
            stride: 3,
            clips: 6,
            clip_interval: 1,
            k,
            backbone,
        }
    }
}

/// Inclusive frame ranges of the scoring windows. The last window is shifted
/// back to end on the final frame when the stride does not land there.
pub fn window_ranges(frame_count: usize, window: usize, stride: usize) -> Vec<(usize, usize)> {
    if frame_count <= window {
        return vec![(0, frame_count.saturating_sub(1))];
    }
    let mut out: Vec<(usize, usize)> = (0..)
        .map(|i| i * stride)
        .take_while(|s| s + window <= frame_count)
        .map(|s| (s, s + window - 1))
        .collect();
    if out.last().map(|w| w.1) != Some(frame_count - 1) {
        out.push((frame_count - window, frame_count - 1));
    }
    out
}

/// Scores every frame of `video` as the mean over the windows covering it;
/// each window is evaluated as a single segment.
pub fn score_video(
    video: &VideoSpec,
    params: &HeadParams,
    dataset_seed: u64,
    cfg: &ScoreConfig,
) -> Result<FrameScoreSeries> {
    if cfg.window == 0 || cfg.stride == 0 || cfg.clips == 0 {
        return Err(Error::config("window, stride and clip count must be positive"));
    }
    if params.classes() != video.labels.classes() {
        return Err(Error::dim(format!(
            "head scores {} classes, video has {}",
            params.classes(),
            video.labels.classes()
        )));
    }
    let channels = params.classes() + 1;
    let mut sums = vec![0.0; video.frame_count * channels];
    let mut counts = vec![0usize; video.frame_count];
    for (start, end) in window_ranges(video.frame_count, cfg.window, cfg.stride) {
        let mut rng = stream(dataset_seed, &[tag::WINDOW, video.id as u64, start as u64]);
        let clips: Vec<Vec<usize>> = sample_segments(end - start + 1, 1, cfg.clips, cfg.clip_interval, &mut rng)
            .into_iter()
            .map(|seg| seg.into_iter().map(|f| f + start).collect())
            .collect();
        let x = synthetic_backbone(&clips, video, &cfg.backbone, dataset_seed)?;
        let pred = head::predict(params, &x, cfg.k, 1)?;
        let row = pred.consensus.s_t.data();
        for f in start..=end {
            counts[f] += 1;
            for (s, v) in sums[f * channels..(f + 1) * channels].iter_mut().zip(row) {
                *s += v;
            }
        }
    }
    for (f, &n) in counts.iter().enumerate() {
        for s in &mut sums[f * channels..(f + 1) * channels] {
            *s /= n as f64;
        }
    }
    FrameScoreSeries::new(channels, sums)
}

/// Arg-max anomaly channel where the overall score reaches `threshold`, else 0.
pub fn classify_frames(series: &FrameScoreSeries, threshold: f64) -> Vec<usize> {
    (0..series.frames())
        .map(|f| {
            let row = series.frame(f);
            let mut best = 1;
            for c in 2..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            if row[best] >= threshold {
                best
            } else {
                0
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub auc: f64,
    pub f1: F1Report,
    pub frames: usize,
    pub videos: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub sigma: f64,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            sigma: 2.0,
            threshold: 0.5,
        }
    }
}

/// Pools smoothed per-frame scores over all videos, in dataset order.
pub fn evaluate_series(
    dataset: &DatasetSpec,
    series: &[FrameScoreSeries],
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    if series.len() != dataset.len() {
        return Err(Error::dim(format!(
            "{} score series for {} videos",
            series.len(),
            dataset.len()
        )));
    }
    let mut overall = Vec::new();
    let mut binary = Vec::new();
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for (video, raw) in dataset.videos.iter().zip(series) {
        if raw.frames() != video.frame_count {
            return Err(Error::dim(format!(
                "video {} has {} frames but {} scores",
                video.id,
                video.frame_count,
                raw.frames()
            )));
        }
        let smooth = raw.smoothed(cfg.sigma)?;
        let labels = video.frame_labels();
        overall.extend(smooth.overall());
        binary.extend(labels.iter().map(|&l| l != 0));
        pred.extend(classify_frames(&smooth, cfg.threshold));
        truth.extend(labels);
    }
    Ok(MetricsReport {
        auc: roc_auc(&overall, &binary)?,
        f1: f1_metrics(&pred, &truth, dataset.classes)?,
        frames: overall.len(),
        videos: dataset.len(),
    })
}

pub fn score_dataset(
    dataset: &DatasetSpec,
    params: &HeadParams,
    cfg: &ScoreConfig,
) -> Result<Vec<FrameScoreSeries>> {
    dataset
        .videos
        .iter()
        .map(|v| score_video(v, params, dataset.seed, cfg))
        .collect()
}

pub fn evaluate(
    dataset: &DatasetSpec,
    params: &HeadParams,
    score_cfg: &ScoreConfig,
    eval_cfg: &EvalConfig,
) -> Result<MetricsReport> {
    let series = score_dataset(dataset, params, score_cfg)?;
    evaluate_series(dataset, &series, eval_cfg)
}
