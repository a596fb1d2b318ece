use crate::error::{Error, Result};

/// Warm-up learning rate:
/// `d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)`.
///
/// The rate grows linearly for `step < warmup`, peaks at `step == warmup`
/// and decays with the inverse square root of the step afterwards.
pub fn lr_schedule(step: u64, d_model: usize, warmup: u64) -> Result<f64> {
    if step == 0 || d_model == 0 || warmup == 0 {
        return Err(Error::Parameter(format!(
            "lr_schedule needs positive inputs (step={step}, d_model={d_model}, warmup={warmup})"
        )));
    }
    let s = step as f64;
    let decay = s.powf(-0.5);
    let ramp = s * (warmup as f64).powf(-1.5);
    Ok((d_model as f64).powf(-0.5) * decay.min(ramp))
}
