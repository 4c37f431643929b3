use rayon::prelude::*;

use super::{EngineError, Tape, Tensor, Var};

pub const DEFAULT_EPS: f64 = 1e-5;

/// Compares the tape gradient of a scalar function against central finite
/// differences. Returns `max_i |analytic_i - numeric_i| / max(1, |numeric_i|)`.
pub fn grad_check<F>(f: F, input: &Tensor, eps: f64) -> Result<f64, EngineError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, EngineError> + Sync,
{
    let mut tape = Tape::new();
    let x = tape.input(input.clone());
    let loss = f(&mut tape, x)?;
    let analytic = tape.backward(loss)?.get(x);

    let eval = |values: Tensor| -> Result<f64, EngineError> {
        let mut tape = Tape::new();
        let x = tape.input(values);
        let out = f(&mut tape, x)?;
        let v = tape.value(out);
        v.item().ok_or_else(|| EngineError::NonScalarLoss { shape: v.shape().to_vec() })
    };

    let errors: Result<Vec<f64>, EngineError> = (0..input.len())
        .into_par_iter()
        .map(|i| {
            let mut plus = input.clone();
            plus.data_mut()[i] += eps;
            let mut minus = input.clone();
            minus.data_mut()[i] -= eps;
            let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
            Ok((analytic.data()[i] - numeric).abs() / numeric.abs().max(1.0))
        })
        .collect();
    Ok(errors?.into_iter().fold(0.0, f64::max))
}
