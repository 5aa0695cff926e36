use crate::error::{Error, Result};
use crate::gig::HeadParams;
use crate::numerics::Tensor;

pub const ADAGRAD_EPS: f64 = 1e-10;

/// One Adagrad update: `G += g²; θ −= lr·g / (√G + eps)`.
///
/// All shapes and gradients are validated before anything is written, so a
/// rejected step leaves parameters and accumulators untouched.
pub fn adagrad_step(
    params: &mut [&mut Tensor],
    accumulators: &mut [Tensor],
    grads: &[Tensor],
    lr: f64,
    eps: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != accumulators.len() {
        return Err(Error::dim(format!(
            "{} parameters, {} accumulators, {} gradients",
            params.len(),
            accumulators.len(),
            grads.len()
        )));
    }
    for ((p, a), g) in params.iter().zip(accumulators.iter()).zip(grads) {
        g.expect_shape(p.shape())?;
        a.expect_shape(p.shape())?;
        if g.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient passed to adagrad".into()));
        }
    }
    for ((p, a), g) in params.iter_mut().zip(accumulators.iter_mut()).zip(grads) {
        for ((theta, acc), &grad) in p
            .data_mut()
            .iter_mut()
            .zip(a.data_mut().iter_mut())
            .zip(g.data())
        {
            *acc += grad * grad;
            *theta -= lr * grad / (acc.sqrt() + eps);
        }
    }
    Ok(())
}

impl HeadParams {
    pub fn adagrad_step(&mut self, grads: &[Tensor; 4], lr: f64) -> Result<()> {
        let HeadParams {
            phi1,
            phi2,
            accumulators,
        } = self;
        let mut params = [
            &mut phi1.weight,
            &mut phi1.bias,
            &mut phi2.weight,
            &mut phi2.bias,
        ];
        adagrad_step(&mut params, accumulators, grads, lr, ADAGRAD_EPS)
    }
}
