//! Video descriptors and the planted-anomaly dataset generator.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gig::VideoLabels;
use crate::rng::{stream, tag};

/// Frames `start..=end` of a video showing anomaly class `class` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnomalySpan {
    pub class: usize,
    pub start: usize,
    pub end: usize,
}

impl AnomalySpan {
    pub fn contains(&self, frame: usize) -> bool {
        (self.start..=self.end).contains(&frame)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoSpec {
    pub id: usize,
    pub frame_count: usize,
    pub labels: VideoLabels,
    pub spans: Vec<AnomalySpan>,
}

impl VideoSpec {
    pub fn new(
        id: usize,
        frame_count: usize,
        labels: VideoLabels,
        spans: Vec<AnomalySpan>,
    ) -> Result<Self> {
        if frame_count == 0 {
            return Err(Error::config(format!("video {id} has no frames")));
        }
        let classes = labels.classes();
        let mut seen = vec![false; classes];
        for s in &spans {
            if s.class == 0 || s.class > classes {
                return Err(Error::config(format!(
                    "video {id}: span class {} outside 1..={classes}",
                    s.class
                )));
            }
            if s.start > s.end || s.end >= frame_count {
                return Err(Error::config(format!(
                    "video {id}: span {}-{} outside 0..{frame_count}",
                    s.start, s.end
                )));
            }
            seen[s.class - 1] = true;
        }
        if seen.as_slice() != labels.multi_hot() {
            return Err(Error::config(format!(
                "video {id}: labels do not match the classes of its spans"
            )));
        }
        Ok(VideoSpec {
            id,
            frame_count,
            labels,
            spans,
        })
    }

    pub fn is_normal(&self) -> bool {
        !self.labels.y_star()
    }

    /// Ground-truth class per frame: 0 for normal, else the class of the covering span.
    pub fn frame_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.frame_count];
        for s in &self.spans {
            for l in &mut labels[s.start..=s.end] {
                *l = s.class;
            }
        }
        labels
    }

    /// Classes active at `frame`.
    pub fn active_classes(&self, frame: usize) -> impl Iterator<Item = usize> + '_ {
        self.spans
            .iter()
            .filter(move |s| s.contains(frame))
            .map(|s| s.class)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub classes: usize,
    pub seed: u64,
    pub videos: Vec<VideoSpec>,
}

impl DatasetSpec {
    pub fn new(classes: usize, seed: u64, videos: Vec<VideoSpec>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::config("dataset needs at least one anomaly class"));
        }
        for v in &videos {
            if v.labels.classes() != classes {
                return Err(Error::config(format!(
                    "video {} has {} label classes, dataset has {classes}",
                    v.id,
                    v.labels.classes()
                )));
            }
        }
        Ok(DatasetSpec {
            classes,
            seed,
            videos,
        })
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn video(&self, id: usize) -> Option<&VideoSpec> {
        self.videos.iter().find(|v| v.id == id)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub videos: usize,
    pub normal: usize,
    pub classes: usize,
    pub seed: u64,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Span length as a fraction of the video, drawn uniformly from this range.
    pub span_fraction: (f64, f64),
    /// Chance that an anomalous video holds two distinct classes.
    pub two_class_prob: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            videos: 200,
            normal: 80,
            classes: 3,
            seed: 7,
            min_frames: 200,
            max_frames: 320,
            span_fraction: (0.2, 0.4),
            two_class_prob: 0.3,
        }
    }
}

/// Generates video descriptors. Anomalous videos get one span per class,
/// placed in disjoint equal parts of the video so spans never overlap.
pub fn generate(params: &GeneratorParams) -> Result<DatasetSpec> {
    let GeneratorParams {
        videos,
        normal,
        classes,
        seed,
        min_frames,
        max_frames,
        span_fraction: (lo, hi),
        two_class_prob,
    } = *params;
    if normal > videos {
        return Err(Error::config(format!("{normal} normal videos requested out of {videos}")));
    }
    if classes == 0 {
        return Err(Error::config("generator needs at least one anomaly class"));
    }
    if min_frames == 0 || min_frames > max_frames {
        return Err(Error::config(format!(
            "frame range {min_frames}..={max_frames} is empty"
        )));
    }
    if !(0.0 < lo && lo <= hi && hi <= 0.5) {
        return Err(Error::config(format!(
            "span fraction range ({lo}, {hi}) must lie in (0, 0.5]"
        )));
    }
    let mut rng = stream(seed, &[tag::GENERATE]);
    let mut is_normal: Vec<bool> = (0..videos).map(|i| i < normal).collect();
    is_normal.shuffle(&mut rng);

    let mut out = Vec::with_capacity(videos);
    for (id, &normal_video) in is_normal.iter().enumerate() {
        let frame_count = rng.random_range(min_frames..=max_frames);
        if normal_video {
            out.push(VideoSpec::new(id, frame_count, VideoLabels::normal(classes)?, Vec::new())?);
            continue;
        }
        let n_c = if classes >= 2 && rng.random::<f64>() < two_class_prob {
            2
        } else {
            1
        };
        let mut pool: Vec<usize> = (1..=classes).collect();
        pool.shuffle(&mut rng);
        let chosen = &pool[..n_c];
        let part = frame_count / n_c;
        let mut spans = Vec::with_capacity(n_c);
        for (slot, &class) in chosen.iter().enumerate() {
            let frac = rng.random_range(lo..=hi);
            let len = ((frac * frame_count as f64).round() as usize).clamp(1, part);
            let part_start = slot * part;
            let start = part_start + rng.random_range(0..=part - len);
            spans.push(AnomalySpan {
                class,
                start,
                end: start + len - 1,
            });
        }
        let labels = VideoLabels::from_classes(classes, chosen)?;
        out.push(VideoSpec::new(id, frame_count, labels, spans)?);
    }
    DatasetSpec::new(classes, seed, out)
}
