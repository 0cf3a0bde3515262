//! Joint PCA of token-pooled step vectors, for plotting trajectories in 3D.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::trajectory::TrajectorySet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcaError {
    #[error("need at least {needed} pooled step vectors, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("centered data has rank {rank}, fewer than the {components} requested components")]
    RankDeficient { rank: usize, components: usize },
    #[error("cannot project into {components} components of {dim}-dimensional data")]
    TooManyComponents { components: usize, dim: usize },
    #[error("set is empty")]
    EmptySet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// Unit principal directions, one per row.
    pub components: Vec<Vec<f64>>,
    /// Fraction of total variance along each component, descending.
    pub explained_variance: Vec<f64>,
}

impl PcaFit {
    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(point)
                    .zip(&self.mean)
                    .map(|((c, x), m)| c * (x - m))
                    .sum()
            })
            .collect()
    }

    /// Maps coordinates back to the input space (mean included).
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &a) in self.components.iter().zip(coords) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += a * v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedTrajectory {
    pub problem_id: u64,
    pub sample_id: u32,
    /// One row of coordinates per step.
    pub coordinates: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

/// Relative eigenvalue floor below which a centered direction counts as empty.
const RANK_TOLERANCE: f64 = 1e-12;

pub fn fit_pca(points: &[Vec<f64>], components: usize) -> Result<PcaFit, PcaError> {
    let n = points.len();
    if n < components.max(1) {
        return Err(PcaError::TooFewPoints {
            needed: components.max(1),
            got: n,
        });
    }
    let dim = points[0].len();
    if components > dim {
        return Err(PcaError::TooManyComponents { components, dim });
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, dim, |i, j| points[i][j] - mean[j]);
    let scatter = centered.transpose() * &centered;
    let eig = scatter.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let floor = RANK_TOLERANCE * total.max(f64::MIN_POSITIVE);
    let rank = eig.eigenvalues.iter().filter(|&&v| v > floor).count();
    if rank < components {
        return Err(PcaError::RankDeficient { rank, components });
    }

    let mut comps = Vec::with_capacity(components);
    let mut explained = Vec::with_capacity(components);
    for &k in order.iter().take(components) {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        // sign convention: largest-magnitude entry positive
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        comps.push(v.iter().copied().collect());
        explained.push((eig.eigenvalues[k].max(0.0) / total).clamp(0.0, 1.0));
    }
    Ok(PcaFit {
        mean,
        components: comps,
        explained_variance: explained,
    })
}

/// Fits PCA jointly on every token-mean-pooled step vector of `set` and
/// projects each trajectory onto the leading `components` directions.
pub fn pca_project(
    set: &TrajectorySet,
    components: usize,
) -> Result<(PcaFit, Vec<ProjectedTrajectory>), PcaError> {
    if set.is_empty() {
        return Err(PcaError::EmptySet);
    }
    let pooled: Vec<Vec<Vec<f64>>> = set.iter().map(|s| s.trajectory.pooled()).collect();
    let all: Vec<Vec<f64>> = pooled.iter().flatten().cloned().collect();
    let fit = fit_pca(&all, components)?;
    let projected = set
        .iter()
        .zip(&pooled)
        .map(|(s, steps)| ProjectedTrajectory {
            problem_id: s.trajectory.problem_id,
            sample_id: s.trajectory.sample_id,
            coordinates: steps.iter().map(|p| fit.project(p)).collect(),
            explained_variance: fit.explained_variance.clone(),
        })
        .collect();
    Ok((fit, projected))
}
