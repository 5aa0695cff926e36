//! Video-segment loss and the sparsity term.

use crate::error::{Error, Result};
use crate::gig::{VideoLabels, PROB_EPS};
use crate::numerics::ops;
use crate::spatial::{ConsensusScore, SegmentScores};

/// Loss weights `(λ1, λ2, λ3)` for the segment-overall, video-overall and sparsity terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambdas {
    pub segment_overall: f64,
    pub video_overall: f64,
    pub sparsity: f64,
}

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas {
            segment_overall: 1.0,
            video_overall: 0.5,
            sparsity: 0.1,
        }
    }
}

impl Lambdas {
    pub fn new(segment_overall: f64, video_overall: f64, sparsity: f64) -> Result<Self> {
        let l = Lambdas {
            segment_overall,
            video_overall,
            sparsity,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.segment_overall),
            ("lambda2", self.video_overall),
            ("lambda3", self.sparsity),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub l_s: f64,
    pub l_s_star: f64,
    pub l_g_star: f64,
    pub l_sparse: f64,
    pub l_vs: f64,
    pub total: f64,
    pub lambdas: Lambdas,
}

pub fn segment_overall_loss(cs: &ConsensusScore, y_star: bool) -> f64 {
    ops::bce_scalar(cs.s_star, if y_star { 1.0 } else { 0.0 }, PROB_EPS)
}

/// Mean over the `1+C` channels of BCE against `[1 − y*, y_1, …, y_C]`.
pub fn multiclass_loss(cs: &ConsensusScore, labels: &VideoLabels) -> Result<f64> {
    let target = labels.extended();
    cs.s_t.expect_shape(target.shape())?;
    let per_channel = ops::bce(&cs.s_t, &target, PROB_EPS)?;
    Ok(per_channel.sum() / per_channel.len() as f64)
}

/// Sum over segments of the per-segment overall score (max over anomaly channels).
pub fn sparsity_loss(s: &SegmentScores) -> f64 {
    s.overall().iter().sum()
}

pub fn total_loss(
    l_s: f64,
    l_s_star: f64,
    l_g_star: f64,
    l_sparse: f64,
    lambdas: Lambdas,
) -> Result<LossBreakdown> {
    lambdas.validate()?;
    let l_vs = l_s + lambdas.segment_overall * l_s_star + lambdas.video_overall * l_g_star;
    let total = l_vs + lambdas.sparsity * l_sparse;
    let parts = [
        ("segment multi-class loss", l_s),
        ("segment overall loss", l_s_star),
        ("video overall loss", l_g_star),
        ("sparsity loss", l_sparse),
        ("total loss", total),
    ];
    for (name, v) in parts {
        if !v.is_finite() {
            return Err(Error::NonFinite(name.to_string()));
        }
    }
    Ok(LossBreakdown {
        l_s,
        l_s_star,
        l_g_star,
        l_sparse,
        l_vs,
        total,
        lambdas,
    })
}
