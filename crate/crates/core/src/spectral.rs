//! Spectrum-based representation metrics of a single latent thought:
//! matrix entropy of the Gram matrix, effective rank and anisotropy.

use thiserror::Error;

use crate::trajectory::{LatentThought, Trajectory};

/// Singular values below `ZERO_CUTOFF * sigma_1` count as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("degenerate input: all singular values are zero")]
    Degenerate,
    #[error("entropy order alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        source: Box<SpectralError>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Descending, `K = min(L, d)` entries, tiny values already zeroed.
    pub singular_values: Vec<f64>,
    /// Eigenvalues of `K = h hᵀ`, i.e. the squared singular values.
    pub gram_eigenvalues: Vec<f64>,
    pub trace: f64,
}

impl SpectrumResult {
    fn leading(&self) -> Result<f64, SpectralError> {
        match self.singular_values.first() {
            Some(&s) if s > 0.0 => Ok(s),
            _ => Err(SpectralError::Degenerate),
        }
    }
}

pub fn spectrum(thought: &LatentThought) -> SpectrumResult {
    let svd = thought.to_matrix().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sv.first().copied().unwrap_or(0.0) * ZERO_CUTOFF;
    for s in &mut sv {
        if *s <= cutoff {
            *s = 0.0;
        }
    }
    let gram_eigenvalues: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let trace = gram_eigenvalues.iter().sum();
    SpectrumResult {
        singular_values: sv,
        gram_eigenvalues,
        trace,
    }
}

/// Matrix-based Rényi entropy of order `alpha` on the normalized Gram
/// spectrum, natural log. `alpha == 1` is the von Neumann limit.
pub fn entropy(thought: &LatentThought, alpha: f64) -> Result<f64, SpectralError> {
    entropy_of(&spectrum(thought), alpha)
}

pub fn entropy_of(spec: &SpectrumResult, alpha: f64) -> Result<f64, SpectralError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SpectralError::InvalidAlpha(alpha));
    }
    spec.leading()?;
    let probs = spec
        .gram_eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|l| l / spec.trace);
    let h = if alpha == 1.0 {
        -probs.map(|p| p * p.ln()).sum::<f64>()
    } else {
        probs.map(|p| p.powf(alpha)).sum::<f64>().ln() / (1.0 - alpha)
    };
    Ok(h.max(0.0))
}

/// `exp` of the Shannon entropy of the normalized singular values.
pub fn effective_rank(thought: &LatentThought) -> Result<f64, SpectralError> {
    effective_rank_of(&spectrum(thought))
}

pub fn effective_rank_of(spec: &SpectrumResult) -> Result<f64, SpectralError> {
    spec.leading()?;
    let total: f64 = spec.singular_values.iter().sum();
    let h: f64 = spec
        .singular_values
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|s| {
            let q = s / total;
            -q * q.ln()
        })
        .sum();
    Ok(h.exp())
}

/// `sigma_1^2 / sum sigma_i^2`.
pub fn anisotropy(thought: &LatentThought) -> Result<f64, SpectralError> {
    anisotropy_of(&spectrum(thought))
}

pub fn anisotropy_of(spec: &SpectrumResult) -> Result<f64, SpectralError> {
    spec.leading()?;
    Ok(spec.gram_eigenvalues[0] / spec.trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub entropy: f64,
    pub effective_rank: f64,
    pub anisotropy: f64,
    /// Filled in by the TwoNN estimator, `None` when not computed.
    pub intrinsic_dimension: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricProfile {
    pub steps: Vec<StepMetrics>,
}

impl MetricProfile {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn step_metrics(thought: &LatentThought, alpha: f64) -> Result<StepMetrics, SpectralError> {
    let spec = spectrum(thought);
    Ok(StepMetrics {
        entropy: entropy_of(&spec, alpha)?,
        effective_rank: effective_rank_of(&spec)?,
        anisotropy: anisotropy_of(&spec)?,
        intrinsic_dimension: None,
    })
}

/// Spectral metrics for every step of `trajectory`.
pub fn metric_profile(trajectory: &Trajectory, alpha: f64) -> Result<MetricProfile, SpectralError> {
    let steps = trajectory
        .thoughts()
        .iter()
        .enumerate()
        .map(|(step, t)| {
            step_metrics(t, alpha).map_err(|e| SpectralError::AtStep {
                step,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(MetricProfile { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn from_matrix(m: &DMatrix<f64>) -> LatentThought {
        let vals = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        LatentThought::new(m.nrows(), m.ncols(), vals).unwrap()
    }

    /// diag(2, 1, 1) padded to 3x5: sigma = (2, 1, 1).
    fn sigma_211() -> LatentThought {
        let mut m = DMatrix::zeros(3, 5);
        m[(0, 0)] = 2.0;
        m[(1, 2)] = 1.0;
        m[(2, 4)] = -1.0;
        from_matrix(&m)
    }

    fn rank_one() -> LatentThought {
        let u = nalgebra::DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        from_matrix(&(u * v.transpose()))
    }

    fn random(rows: usize, cols: usize, seed: u64) -> LatentThought {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        LatentThought::new(rows, cols, vals).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let s = spectrum(&from_matrix(&DMatrix::identity(4, 4)));
        for (sv, l) in s.singular_values.iter().zip(&s.gram_eigenvalues) {
            assert!((sv - 1.0).abs() < 1e-12 && (l - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_spectrum() {
        let s = spectrum(&rank_one());
        assert!((s.singular_values[0] - 1.0).abs() < 1e-12);
        assert!(s.singular_values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectrum_matches_gram_eigendecomposition() {
        let t = random(8, 16, 11);
        let m = t.to_matrix();
        let gram = &m * m.transpose();
        let mut eig: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let s = spectrum(&t);
        assert_eq!(s.gram_eigenvalues.len(), 8);
        for (a, b) in s.gram_eigenvalues.iter().zip(&eig) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for (sv, l) in s.singular_values.iter().zip(&s.gram_eigenvalues) {
            assert!((sv * sv - l).abs() <= 1e-9 * l.abs());
        }
    }

    #[test]
    fn entropy_examples() {
        let id = from_matrix(&DMatrix::identity(4, 4));
        assert!((entropy(&id, 1.0).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&rank_one(), 1.0).unwrap(), 0.0);
        // p = (4/6, 1/6, 1/6)
        assert!((entropy(&sigma_211(), 1.0).unwrap() - 0.867563).abs() < 1e-6);
    }

    #[test]
    fn renyi_orders() {
        let id = from_matrix(&DMatrix::identity(4, 4));
        for alpha in [0.5, 2.0, 3.0] {
            assert!((entropy(&id, alpha).unwrap() - 4f64.ln()).abs() < 1e-12);
        }
        // alpha = 2: -ln(sum p^2) = -ln(16/36 + 2/36)
        let h2 = entropy(&sigma_211(), 2.0).unwrap();
        assert!((h2 + (18.0f64 / 36.0).ln()).abs() < 1e-12);
        assert!(matches!(
            entropy(&id, 0.0),
            Err(SpectralError::InvalidAlpha(_))
        ));
    }

    #[test]
    fn effective_rank_examples() {
        let id3 = from_matrix(&DMatrix::identity(3, 3));
        assert!((effective_rank(&id3).unwrap() - 3.0).abs() < 1e-12);
        assert!((effective_rank(&rank_one()).unwrap() - 1.0).abs() < 1e-12);
        assert!((effective_rank(&sigma_211()).unwrap() - 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn anisotropy_examples() {
        assert!((anisotropy(&rank_one()).unwrap() - 1.0).abs() < 1e-12);
        let id5 = from_matrix(&DMatrix::identity(5, 5));
        assert!((anisotropy(&id5).unwrap() - 0.2).abs() < 1e-12);
        assert!((anisotropy(&sigma_211()).unwrap() - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let z = LatentThought::new(3, 3, vec![0.0; 9]).unwrap();
        assert_eq!(entropy(&z, 1.0), Err(SpectralError::Degenerate));
        assert_eq!(effective_rank(&z), Err(SpectralError::Degenerate));
        assert_eq!(anisotropy(&z), Err(SpectralError::Degenerate));
    }

    #[test]
    fn profile_composes_per_step_calls() {
        let steps = vec![random(4, 6, 1), random(4, 6, 2), random(4, 6, 3)];
        let traj = Trajectory::new(1, 0, None, steps.clone()).unwrap();
        let profile = metric_profile(&traj, 1.0).unwrap();
        assert_eq!(profile.len(), 3);
        for (m, t) in profile.steps.iter().zip(&steps) {
            assert_eq!(m.entropy.to_bits(), entropy(t, 1.0).unwrap().to_bits());
            assert_eq!(
                m.effective_rank.to_bits(),
                effective_rank(t).unwrap().to_bits()
            );
            assert_eq!(m.anisotropy.to_bits(), anisotropy(t).unwrap().to_bits());
        }
    }

    #[test]
    fn profile_of_identical_steps_is_constant() {
        let t = random(5, 5, 4);
        let traj = Trajectory::new(1, 0, None, vec![t.clone(), t.clone(), t]).unwrap();
        let p = metric_profile(&traj, 1.0).unwrap();
        assert!(p.steps.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn profile_error_names_step() {
        let ok = random(2, 2, 5);
        let zero = LatentThought::new(2, 2, vec![0.0; 4]).unwrap();
        let traj = Trajectory::new(1, 0, None, vec![ok, zero]).unwrap();
        assert!(matches!(
            metric_profile(&traj, 1.0),
            Err(SpectralError::AtStep { step: 1, .. })
        ));
    }

    #[test]
    fn alpha_limit_is_continuous() {
        for seed in 0..20 {
            let t = random(6, 9, 100 + seed);
            let h1 = entropy(&t, 1.0).unwrap();
            for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
                assert!((entropy(&t, alpha).unwrap() - h1).abs() < 1e-3);
            }
        }
    }
}
