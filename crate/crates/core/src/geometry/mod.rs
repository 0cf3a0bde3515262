//! Geometric metrics: TwoNN intrinsic dimension and PCA projection.

pub mod pca;
pub mod twonn;

pub use pca::{fit_pca, pca_project, PcaError, PcaFit, ProjectedTrajectory};
pub use twonn::{two_nn_estimate, TwoNnError, TwoNnReport};

use crate::spectral::{metric_profile, MetricProfile, SpectralError};
use crate::trajectory::{LatentThought, Trajectory};

/// TwoNN on the L token rows of one thought, viewed as points in d-space.
pub fn thought_intrinsic_dimension(
    thought: &LatentThought,
    trimming_fraction: f64,
) -> Result<TwoNnReport, TwoNnError> {
    let rows: Vec<&[f64]> = thought.rows().collect();
    two_nn_estimate(&rows, trimming_fraction)
}

/// Fills `intrinsic_dimension` for every step. Steps where the estimator
/// is undefined (too few tokens, coinciding rows) are left as `None`.
pub fn fill_intrinsic_dimension(
    profile: &mut MetricProfile,
    trajectory: &Trajectory,
    trimming_fraction: f64,
) {
    for (m, t) in profile.steps.iter_mut().zip(trajectory.thoughts()) {
        m.intrinsic_dimension = thought_intrinsic_dimension(t, trimming_fraction)
            .ok()
            .map(|r| r.estimate);
    }
}

/// Spectral metrics plus intrinsic dimension for each step.
pub fn full_profile(
    trajectory: &Trajectory,
    alpha: f64,
    trimming_fraction: f64,
) -> Result<MetricProfile, SpectralError> {
    let mut profile = metric_profile(trajectory, alpha)?;
    fill_intrinsic_dimension(&mut profile, trajectory, trimming_fraction);
    Ok(profile)
}
