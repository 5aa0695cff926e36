//! Spatial reasoning: cosine relevance to the global cue, per-segment top-k
//! aggregation, segment classification, and top-p segment consensus.

use crate::error::{Error, Result};
use crate::gig::{max_anomaly, AffineHead, FeatureMaps, GpcVector};
use crate::numerics::{ops, Tensor};

/// Relation scores with extents `(T, w, h)`, each in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationMap {
    pub r: Tensor,
}

/// Aggregated spatial pattern per segment, extents `(T, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPatternVector {
    pub xs: Tensor,
    pub k: usize,
}

/// Per-segment class probabilities, extents `(T, 1+C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentScores {
    pub s: Tensor,
}

impl SegmentScores {
    pub fn segments(&self) -> usize {
        self.s.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.s.shape()[1]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let m = self.channels();
        &self.s.data()[t * m..(t + 1) * m]
    }

    /// Max over anomaly channels for each segment.
    pub fn overall(&self) -> Vec<f64> {
        (0..self.segments()).map(|t| max_anomaly(self.row(t))).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusScore {
    /// Per-channel top-p mean, extent `1+C`.
    pub s_t: Tensor,
    /// Max of `s_t` over anomaly channels.
    pub s_star: f64,
    pub p: usize,
}

pub fn relation_scores(g: &GpcVector, xhat: &FeatureMaps) -> Result<RelationMap> {
    Ok(RelationMap {
        r: ops::cosine_relation(&g.g, xhat.tensor())?,
    })
}

/// Mean of the `k` spatial vectors of one segment with the highest relation score.
/// `xhat_t` is `(w, h, d)` and `r_t` is `(w, h)`.
pub fn select_topk(xhat_t: &Tensor, r_t: &Tensor, k: usize) -> Result<Tensor> {
    let mut shape = vec![1];
    shape.extend_from_slice(xhat_t.shape());
    let x = xhat_t.clone().reshape(shape)?;
    let mut rshape = vec![1];
    rshape.extend_from_slice(r_t.shape());
    let r = r_t.clone().reshape(rshape)?;
    let sel = ops::top_k_mean(&x, &r, k)?;
    let d = x.shape()[3];
    sel.values.reshape(vec![d])
}

/// [`select_topk`] applied to every segment.
pub fn spatial_pattern(xhat: &FeatureMaps, r: &RelationMap, k: usize) -> Result<SegmentPatternVector> {
    Ok(SegmentPatternVector {
        xs: ops::top_k_mean(xhat.tensor(), &r.r, k)?.values,
        k,
    })
}

/// `σ(φ2(xs_t))` for every segment. `mask` is a precomputed dropout mask shaped like `xs`.
pub fn segment_scores(
    xs: &SegmentPatternVector,
    phi2: &AffineHead,
    mask: Option<&Tensor>,
) -> Result<SegmentScores> {
    let input = match mask {
        Some(m) => xs.xs.zip_map(m, |a, b| a * b)?,
        None => xs.xs.clone(),
    };
    Ok(SegmentScores {
        s: ops::sigmoid(&phi2.apply(&input)?),
    })
}

pub fn consensus(s: &SegmentScores, p: usize) -> Result<ConsensusScore> {
    if s.channels() < 2 {
        return Err(Error::dim("segment scores need a normal and at least one anomaly channel"));
    }
    let sel = ops::column_top_p_mean(&s.s, p)?;
    let s_star = max_anomaly(sel.values.data());
    Ok(ConsensusScore {
        s_t: sel.values,
        s_star,
        p,
    })
}

/// `max(1, ⌊w·h/4⌋)`
pub fn default_k(w: usize, h: usize) -> usize {
    (w * h / 4).max(1)
}

/// `max(1, ⌊T/4⌋)`
pub fn default_p(segments: usize) -> usize {
    (segments / 4).max(1)
}
