use rand::Rng;

use crate::error::{Error, Result};
use crate::gig::FeatureMaps;
use crate::numerics::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout mask: 0 with probability `rate`, else `1/(1−rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Result<Tensor> {
    check_rate(rate)?;
    let keep = 1.0 / (1.0 - rate);
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    Tensor::new(shape.to_vec(), data)
}

pub fn dropout<R: Rng + ?Sized>(x: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> Result<Tensor> {
    check_rate(rate)?;
    match mode {
        Mode::Eval => Ok(x.clone()),
        Mode::Train => {
            let mask = dropout_mask(x.shape(), rate, rng)?;
            x.zip_map(&mask, |a, m| a * m)
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Reverses the `w` axis of `(T, w, h, d)` feature maps.
pub fn hflip(x: &FeatureMaps) -> FeatureMaps {
    let (t, w, h, d) = x.dims();
    let src = x.tensor().data();
    let row = h * d;
    let mut out = Vec::with_capacity(src.len());
    for seg in 0..t {
        for i in (0..w).rev() {
            let base = (seg * w + i) * row;
            out.extend_from_slice(&src[base..base + row]);
        }
    }
    let shape = x.tensor().shape().to_vec();
    FeatureMaps::new(Tensor::from_parts(shape, out)).expect("rank preserved")
}

/// Flips with probability `prob`. Always consumes exactly one draw.
pub fn hflip_augment<R: Rng + ?Sized>(x: FeatureMaps, prob: f64, rng: &mut R) -> FeatureMaps {
    if rng.random::<f64>() < prob {
        hflip(&x)
    } else {
        x
    }
}
