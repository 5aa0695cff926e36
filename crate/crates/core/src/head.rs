//! The full head: cue → attention → video score, and relation → top-k →
//! segment scores → consensus, recorded on a tape for training or evaluated
//! directly for inference.

use crate::error::{Error, Result};
use crate::gig::{self, FeatureMaps, HeadParams, VideoLabels, PROB_EPS};
use crate::numerics::{GradTape, Gradients, Tensor, Var};
use crate::objectives::{self, Lambdas, LossBreakdown};
use crate::spatial::{self, ConsensusScore, SegmentScores};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadConfig {
    pub k: usize,
    pub p: usize,
    pub lambdas: Lambdas,
}

/// Dropout masks for the two head inputs: the cue `[d]` and the segment patterns `[T, d]`.
#[derive(Clone, Debug)]
pub struct DropoutMasks {
    pub gpc: Tensor,
    pub pattern: Tensor,
}

#[derive(Clone, Copy, Debug)]
pub struct ParamVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl ParamVars {
    pub fn record(tape: &mut GradTape, params: &HeadParams) -> Self {
        ParamVars {
            w1: tape.leaf(params.phi1.weight.clone()),
            b1: tape.leaf(params.phi1.bias.clone()),
            w2: tape.leaf(params.phi2.weight.clone()),
            b2: tape.leaf(params.phi2.bias.clone()),
        }
    }

    /// Gradients in [`HeadParams::tensors`] order.
    pub fn grads(&self, grads: &Gradients, params: &HeadParams) -> [Tensor; 4] {
        let [w1, b1, w2, b2] = params.tensors();
        [
            grads.get_or_zeros(self.w1, w1),
            grads.get_or_zeros(self.b1, b1),
            grads.get_or_zeros(self.w2, w2),
            grads.get_or_zeros(self.b2, b2),
        ]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub l_s: Var,
    pub l_s_star: Var,
    pub l_g_star: Var,
    pub l_sparse: Var,
    pub total: Var,
}

impl LossVars {
    pub fn breakdown(&self, tape: &GradTape, lambdas: Lambdas) -> Result<LossBreakdown> {
        let b = objectives::total_loss(
            tape.value(self.l_s).item(),
            tape.value(self.l_s_star).item(),
            tape.value(self.l_g_star).item(),
            tape.value(self.l_sparse).item(),
            lambdas,
        )?;
        debug_assert_eq!(b.total, tape.value(self.total).item());
        Ok(b)
    }
}

/// Records the total loss for one video. `x` holds `(T, w, h, d)` features.
pub fn record_loss(
    tape: &mut GradTape,
    params: ParamVars,
    x: Var,
    labels: &VideoLabels,
    cfg: &HeadConfig,
    masks: Option<&DropoutMasks>,
) -> Result<LossVars> {
    let classes = labels.classes();
    let y_star = Tensor::scalar(if labels.y_star() { 1.0 } else { 0.0 })?;

    // global cue and channel attention
    let g = tape.reduce_max(x, &[0, 1, 2])?;
    let gate = tape.sigmoid(g)?;
    let xhat = tape.channel_gate(x, gate)?;

    // video-level supervision
    let g_in = match masks {
        Some(m) => tape.mul_const(g, m.gpc.clone())?,
        None => g,
    };
    let logits1 = tape.affine(params.w1, params.b1, g_in)?;
    let probs1 = tape.sigmoid(logits1)?;
    let anomaly1 = narrow_anomaly(tape, probs1, classes)?;
    let s_g = tape.reduce_max(anomaly1, &[0])?;
    let l_g_star = tape.bce(s_g, y_star.clone(), PROB_EPS)?;

    // spatial reasoning
    let r = tape.cosine_relation(g, xhat)?;
    let xs = tape.top_k_mean(xhat, r, cfg.k)?;
    let xs_in = match masks {
        Some(m) => tape.mul_const(xs, m.pattern.clone())?,
        None => xs,
    };
    let logits2 = tape.affine(params.w2, params.b2, xs_in)?;
    let seg = tape.sigmoid(logits2)?;
    let s_t = tape.column_top_p_mean(seg, cfg.p)?;

    // segment-level supervision
    let anomaly_t = narrow_anomaly(tape, s_t, classes)?;
    let s_star = tape.reduce_max(anomaly_t, &[0])?;
    let l_s_star = tape.bce(s_star, y_star, PROB_EPS)?;
    let per_channel = tape.bce(s_t, labels.extended(), PROB_EPS)?;
    let l_s = tape.mean(per_channel)?;

    let seg_anomaly = narrow_anomaly(tape, seg, classes)?;
    let seg_overall = tape.reduce_max(seg_anomaly, &[1])?;
    let l_sparse = tape.sum(seg_overall)?;

    let a = tape.scale(l_s_star, cfg.lambdas.segment_overall)?;
    let b = tape.scale(l_g_star, cfg.lambdas.video_overall)?;
    let c = tape.scale(l_sparse, cfg.lambdas.sparsity)?;
    let vs = tape.add(l_s, a)?;
    let vs = tape.add(vs, b)?;
    let total = tape.add(vs, c)?;
    Ok(LossVars {
        l_s,
        l_s_star,
        l_g_star,
        l_sparse,
        total,
    })
}

fn narrow_anomaly(tape: &mut GradTape, v: Var, classes: usize) -> Result<Var> {
    let last = *tape.value(v).shape().last().unwrap_or(&0);
    if last != classes + 1 {
        return Err(Error::dim(format!(
            "head emits {last} channels but labels have C = {classes}"
        )));
    }
    tape.narrow_last(v, 1, classes)
}

/// Inference-mode outputs for one clip block.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub video_score: f64,
    pub segments: SegmentScores,
    pub consensus: ConsensusScore,
}

/// Evaluates the head without dropout.
pub fn predict(params: &HeadParams, x: &FeatureMaps, k: usize, p: usize) -> Result<Prediction> {
    if x.channels() != params.channels() {
        return Err(Error::dim(format!(
            "features have {} channels, head expects {}",
            x.channels(),
            params.channels()
        )));
    }
    let g = gig::global_pattern(x);
    let xhat = gig::enhance(x, &g)?;
    let video_score = gig::video_overall_score(&g, &params.phi1, params.classes())?;
    let r = spatial::relation_scores(&g, &xhat)?;
    let xs = spatial::spatial_pattern(&xhat, &r, k)?;
    let segments = spatial::segment_scores(&xs, &params.phi2, None)?;
    let consensus = spatial::consensus(&segments, p)?;
    Ok(Prediction {
        video_score,
        segments,
        consensus,
    })
}

/// Loss of one video evaluated through the value-level functions, without dropout.
pub fn evaluate_loss(
    params: &HeadParams,
    x: &FeatureMaps,
    labels: &VideoLabels,
    cfg: &HeadConfig,
) -> Result<LossBreakdown> {
    let pred = predict(params, x, cfg.k, cfg.p)?;
    objectives::total_loss(
        objectives::multiclass_loss(&pred.consensus, labels)?,
        objectives::segment_overall_loss(&pred.consensus, labels.y_star()),
        gig::video_level_loss(pred.video_score, labels.y_star()),
        objectives::sparsity_loss(&pred.segments),
        cfg.lambdas,
    )
}
