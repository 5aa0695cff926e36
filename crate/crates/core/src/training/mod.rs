//! Segment sampling, the synthetic backbone, augmentation, Adagrad, and the epoch loop.

pub mod augment;
pub mod backbone;
pub mod dataset;
pub mod optim;
pub mod sampling;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::gig::HeadParams;
use crate::head::{self, DropoutMasks, HeadConfig, ParamVars};
use crate::numerics::{GradTape, Tensor};
use crate::objectives::{self, Lambdas, LossBreakdown};
use crate::rng::{stream, tag};
use crate::spatial::{default_k, default_p};

pub use augment::{dropout, dropout_mask, hflip, hflip_augment, Mode};
pub use backbone::{synthetic_backbone, BackboneConfig};
pub use dataset::{generate, AnomalySpan, DatasetSpec, GeneratorParams, VideoSpec};
pub use optim::{adagrad_step, ADAGRAD_EPS};
pub use sampling::{sample_segments, segment_bounds};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub segments: usize,
    pub clips_per_segment: usize,
    pub clip_interval: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub flip_prob: f64,
    /// Top-k spatial vectors per segment; `None` means `max(1, ⌊w·h/4⌋)`.
    pub k: Option<usize>,
    /// Top-p segments in the consensus; `None` means `max(1, ⌊T/4⌋)`.
    pub p: Option<usize>,
    pub lambdas: Lambdas,
    pub seed: u64,
    pub backbone: BackboneConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            segments: 8,
            clips_per_segment: 6,
            clip_interval: 5,
            batch_size: 8,
            lr: 0.001,
            epochs: 100,
            dropout: 0.5,
            flip_prob: 0.5,
            k: None,
            p: None,
            lambdas: Lambdas::default(),
            seed: 7,
            backbone: BackboneConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn resolved_k(&self) -> usize {
        self.k
            .unwrap_or_else(|| default_k(self.backbone.width, self.backbone.height))
    }

    pub fn resolved_p(&self) -> usize {
        self.p.unwrap_or_else(|| default_p(self.segments))
    }

    pub fn head_config(&self) -> HeadConfig {
        HeadConfig {
            k: self.resolved_k(),
            p: self.resolved_p(),
            lambdas: self.lambdas,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("segments", self.segments),
            ("clips_per_segment", self.clips_per_segment),
            ("clip_interval", self.clip_interval),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::config(format!("flip_prob must lie in [0, 1], got {}", self.flip_prob)));
        }
        self.lambdas.validate()?;
        self.backbone.validate()?;
        let cells = self.backbone.width * self.backbone.height;
        let k = self.resolved_k();
        if k == 0 || k > cells {
            return Err(Error::config(format!("k must lie in 1..={cells}, got {k}")));
        }
        let p = self.resolved_p();
        if p == 0 || p > self.segments {
            return Err(Error::config(format!("p must lie in 1..={}, got {p}", self.segments)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Per-component means over every video seen in the epoch.
    pub losses: LossBreakdown,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: HeadParams,
    pub log: Vec<EpochLog>,
    pub k: usize,
    pub p: usize,
}

/// Initial head parameters for `cfg.seed`.
pub fn init_params(classes: usize, cfg: &TrainConfig) -> Result<HeadParams> {
    let mut rng = stream(cfg.seed, &[tag::INIT]);
    HeadParams::init(classes, cfg.backbone.channels, &mut rng)
}

/// Loss and parameter gradients for one video under training-mode randomness.
pub fn video_step(
    params: &HeadParams,
    video: &VideoSpec,
    dataset_seed: u64,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<(LossBreakdown, [Tensor; 4])> {
    let mut rng = stream(cfg.seed, &[tag::VIDEO, epoch as u64, video.id as u64]);
    let clips = sample_segments(
        video.frame_count,
        cfg.segments,
        cfg.clips_per_segment,
        cfg.clip_interval,
        &mut rng,
    );
    let x = synthetic_backbone(&clips, video, &cfg.backbone, dataset_seed)?;
    let x = hflip_augment(x, cfg.flip_prob, &mut rng);
    let d = x.channels();
    let masks = DropoutMasks {
        gpc: dropout_mask(&[d], cfg.dropout, &mut rng)?,
        pattern: dropout_mask(&[cfg.segments, d], cfg.dropout, &mut rng)?,
    };

    let hc = cfg.head_config();
    let mut tape = GradTape::new();
    let pv = ParamVars::record(&mut tape, params);
    let xv = tape.leaf(x.into_tensor());
    let fail = |e: Error| match e {
        Error::NonFinite(component) => Error::Training {
            component,
            epoch,
            video: video.id,
        },
        other => other,
    };
    let lv = head::record_loss(&mut tape, pv, xv, &video.labels, &hc, Some(&masks)).map_err(fail)?;
    let losses = lv.breakdown(&tape, hc.lambdas).map_err(fail)?;
    let grads = tape.backward(lv.total).map_err(fail)?;
    Ok((losses, pv.grads(&grads, params)))
}

/// Runs `cfg.epochs` epochs of shuffled mini-batches. Batch gradients are the
/// mean over the batch, summed in batch order.
pub fn train(dataset: &DatasetSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    train_from(dataset, cfg, init_params(dataset.classes, cfg)?)
}

pub fn train_from(dataset: &DatasetSpec, cfg: &TrainConfig, mut params: HeadParams) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let normals = dataset.videos.iter().filter(|v| v.is_normal()).count();
    if normals == 0 || normals == dataset.len() {
        return Err(Error::config(
            "training set needs at least one normal and one anomalous video",
        ));
    }
    if params.classes() != dataset.classes || params.channels() != cfg.backbone.channels {
        return Err(Error::dim(format!(
            "head is {}x{} but data needs {} classes over {} channels",
            params.classes() + 1,
            params.channels(),
            dataset.classes,
            cfg.backbone.channels
        )));
    }

    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut stream(cfg.seed, &[tag::SHUFFLE, epoch as u64]));

        let mut sums = [0.0f64; 4];
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Option<[Tensor; 4]> = None;
            for &i in batch {
                let (losses, grads) =
                    video_step(&params, &dataset.videos[i], dataset.seed, cfg, epoch)?;
                sums[0] += losses.l_s;
                sums[1] += losses.l_s_star;
                sums[2] += losses.l_g_star;
                sums[3] += losses.l_sparse;
                match &mut acc {
                    None => acc = Some(grads),
                    Some(a) => a.iter_mut().zip(&grads).for_each(|(a, g)| a.add_assign(g)),
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let mut mean = acc.expect("non-empty batch");
            for g in &mut mean {
                g.data_mut().iter_mut().for_each(|v| *v *= scale);
            }
            params.adagrad_step(&mean, cfg.lr).map_err(|e| match e {
                Error::NonFinite(component) => Error::Training {
                    component,
                    epoch,
                    video: batch[0],
                },
                other => other,
            })?;
        }
        let n = dataset.len() as f64;
        let losses = objectives::total_loss(
            sums[0] / n,
            sums[1] / n,
            sums[2] / n,
            sums[3] / n,
            cfg.lambdas,
        )?;
        log.push(EpochLog { epoch, losses });
    }
    Ok(TrainOutcome {
        params,
        log,
        k: cfg.resolved_k(),
        p: cfg.resolved_p(),
    })
}
