//! Latent thinking trajectories: one L×d hidden-state matrix per reasoning
//! step, plus the problem/sample/answer metadata needed to score them.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("latent thought needs at least one token and one feature, got {tokens}x{dim}")]
    EmptyThought { tokens: usize, dim: usize },
    #[error("expected {expected} values for a {tokens}x{dim} thought, got {actual}")]
    LengthMismatch {
        tokens: usize,
        dim: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite entry at token {token}, feature {feature}")]
    NonFinite { token: usize, feature: usize },
    #[error("trajectory has no thoughts")]
    EmptyTrajectory,
    #[error("step {step} has shape {got:?}, expected {expected:?}")]
    StepShape {
        step: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("trajectory set is invalid: {0}")]
    InvalidSet(ValidationReport),
}

/// One reasoning step `h_t`: an L×d matrix stored row-major (token-major).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentThought {
    tokens: usize,
    dim: usize,
    values: Vec<f64>,
}

impl LatentThought {
    pub fn new(tokens: usize, dim: usize, values: Vec<f64>) -> Result<Self, ShapeError> {
        let thought = Self::new_unchecked(tokens, dim, values)?;
        if let Some(pos) = thought.values.iter().position(|v| !v.is_finite()) {
            return Err(ShapeError::NonFinite {
                token: pos / dim,
                feature: pos % dim,
            });
        }
        Ok(thought)
    }

    /// Checks only the shape. Non-finite values are accepted so that
    /// malformed data can be loaded and reported by [`TrajectorySet::validate`].
    pub fn new_unchecked(tokens: usize, dim: usize, values: Vec<f64>) -> Result<Self, ShapeError> {
        if tokens == 0 || dim == 0 {
            return Err(ShapeError::EmptyThought { tokens, dim });
        }
        let expected = tokens * dim;
        if values.len() != expected {
            return Err(ShapeError::LengthMismatch {
                tokens,
                dim,
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            tokens,
            dim,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ShapeError> {
        let tokens = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(ShapeError::LengthMismatch {
                tokens,
                dim,
                expected: tokens * dim,
                actual: tokens * dim - dim + bad.len(),
            });
        }
        Self::new(tokens, dim, rows.concat())
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.tokens, self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, token: usize) -> &[f64] {
        &self.values[token * self.dim..(token + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.tokens, self.dim, &self.values)
    }

    /// Arithmetic mean over the L token rows.
    pub fn mean_pool(&self) -> Vec<f64> {
        mean_pool_tokens(self)
    }
}

/// Token-mean pooling: component k is the mean of column k over all rows.
pub fn mean_pool_tokens(thought: &LatentThought) -> Vec<f64> {
    let mut out = vec![0.0; thought.dim];
    for row in thought.rows() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let n = thought.tokens as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// The ordered sequence `z = (h_1..h_T)` for one sampled attempt at a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub problem_id: u64,
    pub sample_id: u32,
    pub answer_id: Option<u32>,
    thoughts: Vec<LatentThought>,
}

impl Trajectory {
    pub fn new(
        problem_id: u64,
        sample_id: u32,
        answer_id: Option<u32>,
        thoughts: Vec<LatentThought>,
    ) -> Result<Self, ShapeError> {
        let first = thoughts.first().ok_or(ShapeError::EmptyTrajectory)?.shape();
        if let Some((step, t)) = thoughts
            .iter()
            .enumerate()
            .find(|(_, t)| t.shape() != first)
        {
            return Err(ShapeError::StepShape {
                step,
                expected: first,
                got: t.shape(),
            });
        }
        Ok(Self {
            problem_id,
            sample_id,
            answer_id,
            thoughts,
        })
    }

    /// No shape checks; used by the container reader so that broken files
    /// still load and can be reported on.
    pub(crate) fn new_unchecked(
        problem_id: u64,
        sample_id: u32,
        answer_id: Option<u32>,
        thoughts: Vec<LatentThought>,
    ) -> Self {
        Self {
            problem_id,
            sample_id,
            answer_id,
            thoughts,
        }
    }

    pub fn thoughts(&self) -> &[LatentThought] {
        &self.thoughts
    }

    pub fn steps(&self) -> usize {
        self.thoughts.len()
    }

    /// `(L, d)` of the first step.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.thoughts.first().map(LatentThought::shape)
    }

    /// Token-mean pooled step vectors, one row per step.
    pub fn pooled(&self) -> Vec<Vec<f64>> {
        self.thoughts.iter().map(mean_pool_tokens).collect()
    }

    /// The prefix `h_{1:steps}`. Returns a clone when `steps >= T`.
    pub fn truncated(&self, steps: usize) -> Trajectory {
        let keep = steps.clamp(1, self.thoughts.len());
        Trajectory {
            thoughts: self.thoughts[..keep].to_vec(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Incorrect,
    Correct,
    Unlabeled,
}

impl Label {
    pub const UNLABELED_BYTE: u8 = 255;

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Label::Incorrect),
            1 => Some(Label::Correct),
            Self::UNLABELED_BYTE => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            Label::Incorrect => 0,
            Label::Correct => 1,
            Label::Unlabeled => Self::UNLABELED_BYTE,
        }
    }

    /// 1.0 / 0.0 for labeled samples.
    pub fn target(self) -> Option<f64> {
        match self {
            Label::Correct => Some(1.0),
            Label::Incorrect => Some(0.0),
            Label::Unlabeled => None,
        }
    }

    pub fn from_bool(correct: bool) -> Self {
        if correct {
            Label::Correct
        } else {
            Label::Incorrect
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Incorrect => f.write_str("0"),
            Label::Correct => f.write_str("1"),
            Label::Unlabeled => f.write_str(""),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub trajectory: Trajectory,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(trajectory: Trajectory, label: Label) -> Self {
        Self { trajectory, label }
    }
}

/// A collection of samples sharing `(L, d)`. `T` may differ per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySet {
    pub samples: Vec<LabeledSample>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    EmptySet,
    EmptyTrajectory,
    NonFiniteEntry {
        step: usize,
        token: usize,
        feature: usize,
    },
    /// Steps inside one trajectory disagree on `(L, d)`.
    InconsistentStepShape {
        step: usize,
    },
    HeterogeneousTokens {
        expected: usize,
        got: usize,
    },
    HeterogeneousDimensionality {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::EmptySet => f.write_str("empty set"),
            ViolationKind::EmptyTrajectory => f.write_str("empty trajectory"),
            ViolationKind::NonFiniteEntry {
                step,
                token,
                feature,
            } => {
                write!(
                    f,
                    "non-finite entry at step {step}, token {token}, feature {feature}"
                )
            }
            ViolationKind::InconsistentStepShape { step } => {
                write!(f, "inconsistent step shape at step {step}")
            }
            ViolationKind::HeterogeneousTokens { expected, got } => {
                write!(
                    f,
                    "heterogeneous token count (expected {expected}, got {got})"
                )
            }
            ViolationKind::HeterogeneousDimensionality { expected, got } => {
                write!(
                    f,
                    "heterogeneous dimensionality (expected {expected}, got {got})"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `None` for set-level violations.
    pub sample: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sample {
            Some(i) => write!(f, "sample {i}: {}", self.kind),
            None => write!(f, "set: {}", self.kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl TrajectorySet {
    pub fn new(samples: Vec<LabeledSample>) -> Self {
        Self { samples }
    }

    /// Builds the set and rejects it unless [`validate`](Self::validate) is clean.
    pub fn checked(samples: Vec<LabeledSample>) -> Result<Self, ShapeError> {
        let set = Self::new(samples);
        let report = set.validate();
        if report.is_valid() {
            Ok(set)
        } else {
            Err(ShapeError::InvalidSet(report))
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter()
    }

    /// Common `(L, d)`, taken from the first sample's first step.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.samples.iter().find_map(|s| s.trajectory.shape())
    }

    pub fn labeled_count(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.label != Label::Unlabeled)
            .count()
    }

    /// Sample indices grouped by `problem_id`, groups in order of first
    /// appearance, members in set order.
    pub fn problem_groups(&self) -> Vec<(u64, Vec<usize>)> {
        let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            let pid = s.trajectory.problem_id;
            let g = *index.entry(pid).or_insert_with(|| {
                groups.push((pid, Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push(i);
        }
        groups
    }

    pub fn subset(&self, indices: &[usize]) -> TrajectorySet {
        TrajectorySet::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    pub fn extend(&mut self, other: TrajectorySet) {
        self.samples.extend(other.samples);
    }

    /// Lists every invariant violation. Empty iff the set is well formed.
    pub fn validate(&self) -> ValidationReport {
        validate_set(self)
    }
}

pub fn validate_set(set: &TrajectorySet) -> ValidationReport {
    let mut violations = Vec::new();
    if set.samples.is_empty() {
        violations.push(Violation {
            sample: None,
            kind: ViolationKind::EmptySet,
        });
    }
    let reference = set.shape();
    for (i, sample) in set.samples.iter().enumerate() {
        let traj = &sample.trajectory;
        let mut push = |kind| {
            violations.push(Violation {
                sample: Some(i),
                kind,
            })
        };
        let Some(own) = traj.shape() else {
            push(ViolationKind::EmptyTrajectory);
            continue;
        };
        if let Some((step, _)) = traj
            .thoughts
            .iter()
            .enumerate()
            .find(|(_, t)| t.shape() != own)
        {
            push(ViolationKind::InconsistentStepShape { step });
        }
        if let Some((l, d)) = reference {
            if own.0 != l {
                push(ViolationKind::HeterogeneousTokens {
                    expected: l,
                    got: own.0,
                });
            }
            if own.1 != d {
                push(ViolationKind::HeterogeneousDimensionality {
                    expected: d,
                    got: own.1,
                });
            }
        }
        for (step, thought) in traj.thoughts.iter().enumerate() {
            if let Some(pos) = thought.values.iter().position(|v| !v.is_finite()) {
                push(ViolationKind::NonFiniteEntry {
                    step,
                    token: pos / thought.dim,
                    feature: pos % thought.dim,
                });
                break;
            }
        }
    }
    ValidationReport { violations }
}
