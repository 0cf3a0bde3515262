use super::model::RewardModel;
use super::{loss, loss_and_grads, ModelError};
use crate::trajectory::LabeledSample;

/// Denominator floor for the relative error, so entries whose true
/// gradient is ~0 are judged on absolute error instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter array name and flat index of the worst entry.
    pub worst: (String, usize),
    pub checked: usize,
    pub step: f64,
}

/// Compares the analytic gradient of the batch loss with central finite
/// differences of the loss, entry by entry.
pub fn gradient_check(
    model: &RewardModel,
    batch: &[LabeledSample],
    step: f64,
) -> Result<GradCheckReport, ModelError> {
    let (_, grads) = loss_and_grads(model, batch)?;
    let analytic: Vec<(String, Vec<f64>)> = grads
        .named()
        .into_iter()
        .map(|(n, a)| (n, a.to_vec()))
        .collect();
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (String::new(), 0),
        checked: 0,
        step,
    };
    for (a, (name, values)) in analytic.iter().enumerate() {
        for (k, &g) in values.iter().enumerate() {
            let original = probe.params.arrays_mut()[a][k];
            probe.params.arrays_mut()[a][k] = original + step;
            let up = loss(&probe, batch)?;
            probe.params.arrays_mut()[a][k] = original - step;
            let down = loss(&probe, batch)?;
            probe.params.arrays_mut()[a][k] = original;
            let numeric = (up - down) / (2.0 * step);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
            if rel > report.max_relative_error || report.checked == 0 {
                report.max_relative_error = rel;
                report.worst = (name.clone(), k);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
