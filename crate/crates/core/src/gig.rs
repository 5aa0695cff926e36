//! Global pattern cue, channel attention, and the video-level anomaly score.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{ops, Tensor};

/// Probability clamp applied before every logarithm.
pub const PROB_EPS: f64 = 1e-7;

/// Spatio-temporal feature block with extents `(T, w, h, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMaps {
    x: Tensor,
    enhanced: bool,
}

impl FeatureMaps {
    pub fn new(x: Tensor) -> Result<Self> {
        if x.rank() != 4 {
            return Err(Error::dim(format!(
                "feature maps need extents (T, w, h, d), got {:?}",
                x.shape()
            )));
        }
        Ok(FeatureMaps { x, enhanced: false })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.x
    }

    pub fn into_tensor(self) -> Tensor {
        self.x
    }

    pub fn is_enhanced(&self) -> bool {
        self.enhanced
    }

    /// `(T, w, h, d)`
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let s = self.x.shape();
        (s[0], s[1], s[2], s[3])
    }

    pub fn segments(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.x.shape()[3]
    }
}

/// The `d`-length global pattern cue.
#[derive(Clone, Debug, PartialEq)]
pub struct GpcVector {
    pub g: Tensor,
}

/// Weak labels of one video: which of the `C` anomaly classes occur anywhere in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoLabels {
    y: Vec<bool>,
}

impl VideoLabels {
    pub fn new(y: Vec<bool>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::config("label vector needs at least one anomaly class"));
        }
        Ok(VideoLabels { y })
    }

    pub fn normal(classes: usize) -> Result<Self> {
        VideoLabels::new(vec![false; classes])
    }

    /// Labels from 1-based anomaly class ids.
    pub fn from_classes(classes: usize, present: &[usize]) -> Result<Self> {
        let mut y = vec![false; classes];
        for &c in present {
            if c == 0 || c > classes {
                return Err(Error::config(format!("anomaly class {c} outside 1..={classes}")));
            }
            y[c - 1] = true;
        }
        VideoLabels::new(y)
    }

    pub fn classes(&self) -> usize {
        self.y.len()
    }

    pub fn multi_hot(&self) -> &[bool] {
        &self.y
    }

    pub fn y_star(&self) -> bool {
        self.y.iter().any(|&b| b)
    }

    /// Number of distinct anomaly classes present.
    pub fn n_c(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }

    /// `[1 − y*, y_1, …, y_C]`, matching the head's channel layout.
    pub fn extended(&self) -> Tensor {
        let mut v = Vec::with_capacity(self.y.len() + 1);
        v.push(if self.y_star() { 0.0 } else { 1.0 });
        v.extend(self.y.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        Tensor::from_parts(vec![v.len()], v)
    }
}

/// Fully connected map `d → 1+C`. Channel 0 is the normal class, 1..=C the anomaly classes.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineHead {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl AffineHead {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        AffineHead {
            weight: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    /// Weights uniform in `[−1/√d, 1/√d]`, biases zero.
    pub fn init<R: Rng + ?Sized>(outputs: usize, inputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let w = (0..outputs * inputs)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        AffineHead {
            weight: Tensor::from_parts(vec![outputs, inputs], w),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        ops::affine(&self.weight, &self.bias, x)
    }
}

/// Both classification heads plus their Adagrad accumulators.
///
/// Accumulators are stored in the order `[φ1.weight, φ1.bias, φ2.weight, φ2.bias]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub phi1: AffineHead,
    pub phi2: AffineHead,
    pub accumulators: [Tensor; 4],
}

impl HeadParams {
    pub fn new(phi1: AffineHead, phi2: AffineHead) -> Result<Self> {
        if phi1.weight.shape() != phi2.weight.shape() {
            return Err(Error::dim(format!(
                "heads disagree: {:?} vs {:?}",
                phi1.weight.shape(),
                phi2.weight.shape()
            )));
        }
        if phi1.outputs() < 2 {
            return Err(Error::config("heads need at least one anomaly channel"));
        }
        let accumulators = [
            Tensor::zeros(phi1.weight.shape()),
            Tensor::zeros(phi1.bias.shape()),
            Tensor::zeros(phi2.weight.shape()),
            Tensor::zeros(phi2.bias.shape()),
        ];
        Ok(HeadParams {
            phi1,
            phi2,
            accumulators,
        })
    }

    pub fn init<R: Rng + ?Sized>(classes: usize, channels: usize, rng: &mut R) -> Result<Self> {
        let phi1 = AffineHead::init(classes + 1, channels, rng);
        let phi2 = AffineHead::init(classes + 1, channels, rng);
        HeadParams::new(phi1, phi2)
    }

    pub fn classes(&self) -> usize {
        self.phi1.outputs() - 1
    }

    pub fn channels(&self) -> usize {
        self.phi1.inputs()
    }

    pub fn tensors(&self) -> [&Tensor; 4] {
        [
            &self.phi1.weight,
            &self.phi1.bias,
            &self.phi2.weight,
            &self.phi2.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 4] {
        [
            &mut self.phi1.weight,
            &mut self.phi1.bias,
            &mut self.phi2.weight,
            &mut self.phi2.bias,
        ]
    }
}

/// Max over all `(t, i, j)` positions, per channel.
pub fn global_pattern(x: &FeatureMaps) -> GpcVector {
    let r = ops::reduce_max(x.tensor(), &[0, 1, 2]).expect("rank-4 feature maps");
    GpcVector { g: r.values }
}

/// `X̂ = σ(g) ⊙ X + X` with the gate broadcast over channels.
pub fn enhance(x: &FeatureMaps, g: &GpcVector) -> Result<FeatureMaps> {
    let gate = ops::sigmoid(&g.g);
    Ok(FeatureMaps {
        x: ops::channel_gate(x.tensor(), &gate)?,
        enhanced: true,
    })
}

/// Max over the anomaly channels of `σ(φ1(g))`.
pub fn video_overall_score(g: &GpcVector, phi1: &AffineHead, classes: usize) -> Result<f64> {
    if classes == 0 {
        return Err(Error::config("video score needs C >= 1 anomaly classes"));
    }
    if phi1.outputs() != classes + 1 {
        return Err(Error::dim(format!(
            "φ1 has {} outputs, expected 1+C = {}",
            phi1.outputs(),
            classes + 1
        )));
    }
    let probs = ops::sigmoid(&phi1.apply(&g.g)?);
    Ok(max_anomaly(probs.data()))
}

/// The `(normal, abnormal)` pair `(1 − S, S)` for an overall score `S`.
pub fn two_channel(score: f64) -> [f64; 2] {
    [1.0 - score, score]
}

pub fn video_level_loss(score: f64, y_star: bool) -> f64 {
    ops::bce_scalar(score, if y_star { 1.0 } else { 0.0 }, PROB_EPS)
}

/// Max over channels `1..` of a `1+C` probability row.
pub(crate) fn max_anomaly(row: &[f64]) -> f64 {
    row[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
