//! Two-nearest-neighbour intrinsic dimension estimator.
//!
//! For every point the ratio `mu = r2 / r1` of its second- to first-nearest
//! neighbour distance is Pareto distributed with shape equal to the manifold
//! dimension, so `-ln(1 - F(mu))` is linear in `ln(mu)` through the origin
//! and the slope is the estimate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoNnError {
    #[error("need at least 3 points, got {0}")]
    InsufficientData(usize),
    #[error("points {0} and {1} coincide (zero nearest-neighbour distance)")]
    DegenerateDistance(usize, usize),
    #[error("trimming fraction {fraction} keeps {retained} of {total} points, need at least 2")]
    OverTrimmed {
        fraction: f64,
        retained: usize,
        total: usize,
    },
    #[error("trimming fraction must lie in [0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("point {index} has length {got}, expected {expected}")]
    RaggedInput {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("all retained ratios equal 1, slope is undefined")]
    FlatRatios,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoNnReport {
    pub estimate: f64,
    /// `mu_i` in input order.
    pub ratios: Vec<f64>,
    pub retained_count: usize,
    pub trimming_fraction: f64,
    /// `(ln mu_(j), -ln(1 - j/L))` for the retained points, ascending in `mu`.
    pub regression_points: Vec<(f64, f64)>,
}

/// Number of smallest-`mu` points kept for the fit: `floor((1 - f) L)` when
/// `f > 0`. With `f = 0` the largest ratio is still dropped because its
/// empirical CDF value is 1 and `-ln(0)` is infinite.
pub fn retained_count(total: usize, fraction: f64) -> usize {
    if fraction > 0.0 {
        // tolerance keeps e.g. (1 - 0.9) * 10 from flooring to 0
        ((1.0 - fraction) * total as f64 + 1e-9).floor() as usize
    } else {
        total.saturating_sub(1)
    }
}

/// First and second nearest-neighbour distances of every point.
pub fn neighbour_distances<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<(f64, f64)>, TwoNnError> {
    let n = points.len();
    if n < 3 {
        return Err(TwoNnError::InsufficientData(n));
    }
    let dim = points[0].as_ref().len();
    if let Some((index, p)) = points
        .iter()
        .enumerate()
        .find(|(_, p)| p.as_ref().len() != dim)
    {
        return Err(TwoNnError::RaggedInput {
            index,
            expected: dim,
            got: p.as_ref().len(),
        });
    }

    // (r1, r2, index of nearest)
    let mut best = vec![(f64::INFINITY, f64::INFINITY, usize::MAX); n];
    for i in 0..n {
        let a = points[i].as_ref();
        for j in (i + 1)..n {
            let b = points[j].as_ref();
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if d2 == 0.0 {
                return Err(TwoNnError::DegenerateDistance(i, j));
            }
            for (k, other) in [(i, j), (j, i)] {
                let slot = &mut best[k];
                if d2 < slot.0 {
                    *slot = (d2, slot.0, other);
                } else if d2 < slot.1 {
                    slot.1 = d2;
                }
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(r1, r2, _)| (r1.sqrt(), r2.sqrt()))
        .collect())
}

pub fn two_nn_estimate<P: AsRef<[f64]>>(
    points: &[P],
    trimming_fraction: f64,
) -> Result<TwoNnReport, TwoNnError> {
    if !(0.0..1.0).contains(&trimming_fraction) {
        return Err(TwoNnError::InvalidFraction(trimming_fraction));
    }
    let ratios: Vec<f64> = neighbour_distances(points)?
        .iter()
        .map(|(r1, r2)| r2 / r1)
        .collect();
    let total = ratios.len();
    let retained = retained_count(total, trimming_fraction);
    if retained < 2 {
        return Err(TwoNnError::OverTrimmed {
            fraction: trimming_fraction,
            retained,
            total,
        });
    }

    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let regression_points: Vec<(f64, f64)> = sorted[..retained]
        .iter()
        .enumerate()
        .map(|(j, mu)| {
            let cdf = (j + 1) as f64 / total as f64;
            (mu.ln(), -(1.0 - cdf).ln())
        })
        .collect();

    let sxx: f64 = regression_points.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return Err(TwoNnError::FlatRatios);
    }
    let sxy: f64 = regression_points.iter().map(|(x, y)| x * y).sum();

    Ok(TwoNnReport {
        estimate: sxy / sxx,
        ratios,
        retained_count: retained,
        trimming_fraction,
        regression_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            two_nn_estimate(&pts, 0.1).unwrap_err(),
            TwoNnError::InsufficientData(2)
        );
    }

    #[test]
    fn duplicate_points_name_indices() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![1.0, 0.0],
        ];
        assert_eq!(
            two_nn_estimate(&pts, 0.0).unwrap_err(),
            TwoNnError::DegenerateDistance(1, 3)
        );
    }

    #[test]
    fn over_trimming() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![(i * i) as f64]).collect();
        assert!(matches!(
            two_nn_estimate(&pts, 0.7),
            Err(TwoNnError::OverTrimmed { .. })
        ));
        assert!(matches!(
            two_nn_estimate(&pts, 1.0),
            Err(TwoNnError::InvalidFraction(_))
        ));
    }

    #[test]
    fn retained_counts() {
        assert_eq!(retained_count(1000, 0.1), 900);
        assert_eq!(retained_count(10, 0.9), 1);
        assert_eq!(retained_count(10, 0.0), 9);
        assert_eq!(retained_count(7, 0.5), 3);
    }

    #[test]
    fn hand_computed_neighbours() {
        // 1D points 0, 1, 3, 7: (r1, r2) = (1,3), (1,2), (2,3), (4,6)
        let pts = vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
        let nn = neighbour_distances(&pts).unwrap();
        assert_eq!(nn, vec![(1.0, 3.0), (1.0, 2.0), (2.0, 3.0), (4.0, 6.0)]);
        let rep = two_nn_estimate(&pts, 0.0).unwrap();
        assert_eq!(rep.ratios, vec![3.0, 2.0, 1.5, 1.5]);
        assert_eq!(rep.retained_count, 3);
        let (x, y): (Vec<f64>, Vec<f64>) = rep.regression_points.iter().copied().unzip();
        assert_eq!(x, vec![1.5f64.ln(), 1.5f64.ln(), 2f64.ln()]);
        assert_eq!(y, vec![-(0.75f64).ln(), -(0.5f64).ln(), -(0.25f64).ln()]);
    }

    #[test]
    fn slope_matches_scalar_regression() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let rep = two_nn_estimate(&pts, 0.1).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for &(x, y) in &rep.regression_points {
            num += x * y;
            den += x * x;
        }
        assert_eq!(rep.estimate, num / den);
        assert_eq!(rep.regression_points.len(), 180);
        assert!(rep.ratios.iter().all(|&m| m >= 1.0));
    }
}
