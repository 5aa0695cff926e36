//! Central finite-difference check of tape gradients.

use crate::error::{Error, Result};
use crate::numerics::tape::{GradTape, Var};
use crate::numerics::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-4;

/// Points whose max / top-k / top-p selections are closer than this to a tie are rejected.
pub const TIE_GUARD: f64 = 1e-6;

/// Relative errors divide by `max(|analytic|, |numeric|, REL_FLOOR)`, so components
/// whose true gradient is (near) zero are judged against rounding noise of the
/// difference quotient instead of blowing up.
pub const REL_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    /// Smallest selection gap seen at the evaluation point.
    pub selection_margin: f64,
    /// The point sits within [`TIE_GUARD`] of a selection tie; never counts as a pass.
    pub degenerate: bool,
    pub pass: bool,
}

/// Checks a scalar function of one tensor. See [`grad_check_many`].
pub fn grad_check<F>(f: F, x: &Tensor, h: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut GradTape, Var) -> Result<Var>,
{
    grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(x), h, tol)
}

/// Compares the tape gradient of `f` with respect to every input element
/// against `(f(x + h·e_i) − f(x − h·e_i)) / 2h`.
pub fn grad_check_many<F>(f: F, inputs: &[Tensor], h: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut GradTape, &[Var]) -> Result<Var>,
{
    if !(h > 0.0) {
        return Err(Error::config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut tape = GradTape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars).map_err(as_evaluation)?;
    if tape.value(out).len() != 1 {
        return Err(Error::dim(format!(
            "grad_check needs a scalar output, got shape {:?}",
            tape.value(out).shape()
        )));
    }
    let margin = tape.selection_margin();
    let grads = tape.backward(out)?;

    let eval = |perturbed: &[Tensor]| -> Result<f64> {
        let mut t = GradTape::new();
        let vs: Vec<Var> = perturbed.iter().map(|p| t.leaf(p.clone())).collect();
        let o = f(&mut t, &vs).map_err(as_evaluation)?;
        Ok(t.value(o).item())
    };

    let mut work: Vec<Tensor> = inputs.to_vec();
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for (which, input) in inputs.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[which], input);
        for i in 0..input.len() {
            let orig = input.data()[i];
            work[which].data_mut()[i] = orig + h;
            let plus = eval(&work)?;
            work[which].data_mut()[i] = orig - h;
            let minus = eval(&work)?;
            work[which].data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            if !numeric.is_finite() {
                return Err(Error::Evaluation(format!(
                    "non-finite difference quotient at input {which}, element {i}"
                )));
            }
            let a = analytic.data()[i];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
        }
    }
    let degenerate = margin < TIE_GUARD;
    Ok(GradCheckReport {
        max_rel_err: max_rel,
        max_abs_err: max_abs,
        selection_margin: margin,
        degenerate,
        pass: !degenerate && max_rel <= tol,
    })
}

fn as_evaluation(e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::Evaluation(format!("non-finite {what} near check point")),
        other => other,
    }
}
