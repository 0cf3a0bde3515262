//! Python bindings. Matrices cross the boundary as nested lists of floats;
//! a trajectory is `steps x tokens x dim`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lttk_core::geometry::{fit_pca, full_profile, two_nn_estimate};
use lttk_core::reward::{
    evaluate, gradient_check, init_model, load_model, roc_auc as core_roc_auc, save_model, train,
    ModelConfig, RewardModel, TrainConfig,
};
use lttk_core::sampler::{self, CandidateSet, SamplerConfig, VoteWeighting};
use lttk_core::selection::{compare_selectors as core_compare, score_set};
use lttk_core::spectral;
use lttk_core::synth::{generate, SyntheticConfig};
use lttk_core::{
    read_container, write_container, Label, LabeledSample, LatentThought, Trajectory, TrajectorySet,
};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn thought(rows: &[Vec<f64>]) -> PyResult<LatentThought> {
    LatentThought::from_rows(rows).map_err(value_err)
}

type StepMetrics = (f64, f64, f64, Option<f64>);

fn label_of(label: Option<bool>) -> Label {
    label.map(Label::from_bool).unwrap_or(Label::Unlabeled)
}

fn label_to_py(label: Label) -> Option<bool> {
    match label {
        Label::Correct => Some(true),
        Label::Incorrect => Some(false),
        Label::Unlabeled => None,
    }
}

/// One sampled latent-thinking trajectory with its correctness label.
#[pyclass(name = "Trajectory", module = "lttk", from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    sample: LabeledSample,
}

#[pymethods]
impl PyTrajectory {
    #[new]
    #[pyo3(signature = (problem_id, sample_id, steps, answer_id=None, label=None))]
    fn new(
        problem_id: u64,
        sample_id: u32,
        steps: Vec<Vec<Vec<f64>>>,
        answer_id: Option<u32>,
        label: Option<bool>,
    ) -> PyResult<Self> {
        let thoughts = steps
            .iter()
            .map(|s| thought(s))
            .collect::<PyResult<Vec<_>>>()?;
        let trajectory =
            Trajectory::new(problem_id, sample_id, answer_id, thoughts).map_err(value_err)?;
        Ok(Self {
            sample: LabeledSample::new(trajectory, label_of(label)),
        })
    }

    #[getter]
    fn problem_id(&self) -> u64 {
        self.sample.trajectory.problem_id
    }

    #[getter]
    fn sample_id(&self) -> u32 {
        self.sample.trajectory.sample_id
    }

    #[getter]
    fn answer_id(&self) -> Option<u32> {
        self.sample.trajectory.answer_id
    }

    /// `True`, `False`, or `None` when unlabeled.
    #[getter]
    fn label(&self) -> Option<bool> {
        label_to_py(self.sample.label)
    }

    #[getter]
    fn num_steps(&self) -> usize {
        self.sample.trajectory.steps()
    }

    /// `(tokens, dim)` of every step.
    #[getter]
    fn shape(&self) -> Option<(usize, usize)> {
        self.sample.trajectory.shape()
    }

    fn steps(&self) -> Vec<Vec<Vec<f64>>> {
        self.sample
            .trajectory
            .thoughts()
            .iter()
            .map(|t| t.rows().map(<[f64]>::to_vec).collect())
            .collect()
    }

    /// Token-mean-pooled step vectors, `steps x dim`.
    fn pooled(&self) -> Vec<Vec<f64>> {
        self.sample.trajectory.pooled()
    }

    /// Per-step `(entropy, effective_rank, anisotropy, intrinsic_dim)`;
    /// `intrinsic_dim` is `None` where TwoNN is undefined.
    #[pyo3(signature = (alpha=1.0, trim=0.1))]
    fn metrics(&self, alpha: f64, trim: f64) -> PyResult<Vec<StepMetrics>> {
        let profile = full_profile(&self.sample.trajectory, alpha, trim).map_err(value_err)?;
        Ok(profile
            .steps
            .iter()
            .map(|m| {
                (
                    m.entropy,
                    m.effective_rank,
                    m.anisotropy,
                    m.intrinsic_dimension,
                )
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        let t = &self.sample.trajectory;
        format!(
            "Trajectory(problem_id={}, sample_id={}, steps={}, label={:?})",
            t.problem_id,
            t.sample_id,
            t.steps(),
            label_to_py(self.sample.label)
        )
    }
}

/// A collection of trajectories, read from and written to `.lttk` files.
#[pyclass(name = "TrajectorySet", module = "lttk", from_py_object)]
#[derive(Clone, Default)]
struct PyTrajectorySet {
    inner: TrajectorySet,
}

#[pymethods]
impl PyTrajectorySet {
    #[new]
    #[pyo3(signature = (trajectories=Vec::new()))]
    fn new(trajectories: Vec<PyTrajectory>) -> Self {
        Self {
            inner: TrajectorySet::new(trajectories.into_iter().map(|t| t.sample).collect()),
        }
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let inner = read_container(BufReader::new(file)).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Returns the number of bytes written.
    fn write(&self, path: &str) -> PyResult<u64> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let mut sink = BufWriter::new(file);
        let n = write_container(&self.inner, &mut sink).map_err(value_err)?;
        sink.flush()
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(n)
    }

    fn append(&mut self, trajectory: PyTrajectory) {
        self.inner.samples.push(trajectory.sample);
    }

    /// Violation messages; empty when the set is valid.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn labels(&self) -> Vec<Option<bool>> {
        self.inner.iter().map(|s| label_to_py(s.label)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __getitem__(&self, index: isize) -> PyResult<PyTrajectory> {
        let n = self.inner.len() as isize;
        let i = if index < 0 { index + n } else { index };
        if !(0..n).contains(&i) {
            return Err(PyIndexError::new_err("trajectory index out of range"));
        }
        Ok(PyTrajectory {
            sample: self.inner.samples[i as usize].clone(),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "TrajectorySet(len={}, shape={:?})",
            self.inner.len(),
            self.inner.shape()
        )
    }
}

/// Transformer classifier scoring trajectories by predicted correctness.
#[pyclass(name = "RewardModel", module = "lttk")]
struct PyRewardModel {
    inner: RewardModel,
}

#[pymethods]
impl PyRewardModel {
    #[new]
    #[pyo3(signature = (
        input_dim, model_dim=64, blocks=1, heads=2, ffn_multiplier=4, head_hidden=64,
        positional_encoding=true, seed=0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        input_dim: usize,
        model_dim: usize,
        blocks: usize,
        heads: usize,
        ffn_multiplier: usize,
        head_hidden: usize,
        positional_encoding: bool,
        seed: u64,
    ) -> PyResult<Self> {
        let config = ModelConfig {
            model_dim,
            blocks,
            heads,
            ffn_multiplier,
            head_hidden,
            positional_encoding,
            seed,
            ..ModelConfig::new(input_dim)
        };
        Ok(Self {
            inner: init_model(config).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_model(path).map_err(value_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<u64> {
        save_model(&self.inner, path).map_err(value_err)
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.config.input_dim
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    /// Probability that the trajectory ends in a correct answer.
    fn forward(&self, trajectory: &PyTrajectory) -> PyResult<f64> {
        self.inner
            .forward(&trajectory.sample.trajectory)
            .map_err(value_err)
    }

    fn score(&self, py: Python<'_>, data: &PyTrajectorySet) -> PyResult<Vec<f64>> {
        py.detach(|| score_set(&self.inner, &data.inner))
            .map_err(value_err)
    }

    /// Trains in place with Adam and returns the per-epoch mean loss.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (data, epochs=10, lr=1e-3, batch_size=32, seed=0, prefix_steps=None))]
    fn train(
        &mut self,
        py: Python<'_>,
        data: &PyTrajectorySet,
        epochs: usize,
        lr: f64,
        batch_size: usize,
        seed: u64,
        prefix_steps: Option<usize>,
    ) -> PyResult<Vec<f64>> {
        let cfg = TrainConfig {
            epochs,
            learning_rate: lr,
            batch_size,
            shuffle_seed: seed,
            prefix_steps,
            ..Default::default()
        };
        let (model, history) = py
            .detach(|| train(&self.inner, &data.inner, &cfg))
            .map_err(value_err)?;
        self.inner = model;
        Ok(history)
    }

    /// `{"accuracy", "roc_auc", "count"}`; `roc_auc` is `None` with one class.
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        data: &PyTrajectorySet,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = py
            .detach(|| evaluate(&self.inner, &data.inner))
            .map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("accuracy", r.accuracy)?;
        d.set_item("roc_auc", r.roc_auc)?;
        d.set_item("count", r.count)?;
        Ok(d)
    }

    /// `(max_relative_error, worst_parameter, index)` against central
    /// differences of the loss on `data`.
    #[pyo3(signature = (data, step=1e-4))]
    fn gradient_check(&self, data: &PyTrajectorySet, step: f64) -> PyResult<(f64, String, usize)> {
        let r = gradient_check(&self.inner, &data.inner.samples, step).map_err(value_err)?;
        Ok((r.max_relative_error, r.worst.0, r.worst.1))
    }
}

#[pyfunction]
#[pyo3(signature = (rows, alpha=1.0))]
fn entropy(rows: Vec<Vec<f64>>, alpha: f64) -> PyResult<f64> {
    spectral::entropy(&thought(&rows)?, alpha).map_err(value_err)
}

#[pyfunction]
fn effective_rank(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    spectral::effective_rank(&thought(&rows)?).map_err(value_err)
}

#[pyfunction]
fn anisotropy(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    spectral::anisotropy(&thought(&rows)?).map_err(value_err)
}

/// TwoNN intrinsic-dimension estimate of a point cloud.
#[pyfunction]
#[pyo3(signature = (points, trim=0.1))]
fn two_nn(py: Python<'_>, points: Vec<Vec<f64>>, trim: f64) -> PyResult<f64> {
    py.detach(|| two_nn_estimate(&points, trim))
        .map(|r| r.estimate)
        .map_err(value_err)
}

/// `(components, explained_variance, projections)` of a point cloud.
#[pyfunction]
#[pyo3(signature = (points, components=3))]
#[allow(clippy::type_complexity)]
fn pca(
    points: Vec<Vec<f64>>,
    components: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let fit = fit_pca(&points, components).map_err(value_err)?;
    let projected = points.iter().map(|p| fit.project(p)).collect();
    Ok((fit.components, fit.explained_variance, projected))
}

fn candidates(rewards: &[f64], ref_weights: Option<Vec<f64>>) -> PyResult<CandidateSet> {
    match ref_weights {
        None => CandidateSet::from_rewards(rewards),
        Some(w) => {
            let set = CandidateSet::from_rewards(rewards).map_err(value_err)?;
            CandidateSet::with_ref_weights(set.candidates().to_vec(), w)
        }
    }
    .map_err(value_err)
}

/// `ref_i exp(r_i / beta)`, normalized.
#[pyfunction]
#[pyo3(signature = (rewards, beta, ref_weights=None))]
fn closed_form_policy(
    rewards: Vec<f64>,
    beta: f64,
    ref_weights: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let set = candidates(&rewards, ref_weights)?;
    Ok(sampler::closed_form_policy(&set, beta)
        .map_err(value_err)?
        .probabilities)
}

#[pyfunction]
fn acceptance_probabilities(rewards: Vec<f64>, beta: f64) -> PyResult<Vec<f64>> {
    sampler::policy::check_beta(beta).map_err(value_err)?;
    Ok(sampler::acceptance_probabilities(
        &candidates(&rewards, None)?,
        beta,
    ))
}

/// Rejection sampling with uniform proposals. Returns the accepted indices
/// and the number of proposals drawn.
#[pyfunction]
#[pyo3(signature = (rewards, beta=1e-3, required=1, seed=0, max_iterations=1_000_000))]
fn lto_sample(
    py: Python<'_>,
    rewards: Vec<f64>,
    beta: f64,
    required: usize,
    seed: u64,
    max_iterations: u64,
) -> PyResult<(Vec<usize>, u64)> {
    let set = candidates(&rewards, None)?;
    let cfg = SamplerConfig {
        budget: rewards.len(),
        required,
        beta,
        max_iterations,
        seed,
    };
    let (picks, trace) = py
        .detach(|| sampler::lto_sample(&set, &cfg))
        .map_err(value_err)?;
    Ok((picks, trace.total_draws))
}

#[pyfunction]
fn majority_vote(answers: Vec<u32>) -> PyResult<u32> {
    sampler::majority_vote(&answers).map_err(value_err)
}

/// Sum of rewards per answer, or of `exp(r / beta)` when `beta` is given.
#[pyfunction]
#[pyo3(signature = (answers, rewards, beta=None))]
fn weighted_majority_vote(
    answers: Vec<u32>,
    rewards: Vec<f64>,
    beta: Option<f64>,
) -> PyResult<u32> {
    let weighting = beta
        .map(|beta| VoteWeighting::Exponential { beta })
        .unwrap_or_default();
    sampler::weighted_majority_vote(&answers, &rewards, weighting).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (rewards_true, rewards_approx, beta, ref_weights=None))]
fn verify_performance_bound<'py>(
    py: Python<'py>,
    rewards_true: Vec<f64>,
    rewards_approx: Vec<f64>,
    beta: f64,
    ref_weights: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sampler::verify_performance_bound(
        &rewards_true,
        &rewards_approx,
        ref_weights.as_deref(),
        beta,
    )
    .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("gap", r.gap)?;
    d.set_item("bound", r.bound)?;
    d.set_item("holds", r.holds)?;
    d.set_item("vacuous", r.is_vacuous())?;
    Ok(d)
}

/// Runs the sampler for `draws` acceptances and compares the histogram
/// with the closed form.
#[pyfunction]
fn sampler_equivalence<'py>(
    py: Python<'py>,
    rewards: Vec<f64>,
    beta: f64,
    draws: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| sampler::sampler_equivalence(&rewards, beta, draws, seed))
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("target", r.target)?;
    d.set_item("empirical", r.empirical)?;
    d.set_item("total_variation", r.total_variation)?;
    d.set_item("chi_square", r.chi_square.statistic)?;
    d.set_item("p_value", r.chi_square.p_value)?;
    d.set_item("proposals", r.proposals)?;
    Ok(d)
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    core_roc_auc(&scores, &labels).map_err(value_err)
}

/// Per-problem comparison of sampling against the base rate and votes.
#[pyfunction]
#[pyo3(signature = (data, rewards, budget=20, required=1, beta=1e-3, seed=0))]
fn compare_selectors<'py>(
    py: Python<'py>,
    data: &PyTrajectorySet,
    rewards: Vec<f64>,
    budget: usize,
    required: usize,
    beta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SamplerConfig {
        budget,
        required,
        beta,
        seed,
        ..Default::default()
    };
    let r = core_compare(&data.inner, &rewards, &cfg, VoteWeighting::Sum).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("problems", r.problems.len())?;
    d.set_item("base_rate", r.base_rate)?;
    d.set_item("lto_rate", r.lto_rate)?;
    d.set_item("majority_rate", r.majority_rate)?;
    d.set_item("weighted_rate", r.weighted_rate)?;
    Ok(d)
}

/// Labeled synthetic trajectories. `config` is TOML text; keyword
/// arguments override it.
#[pyfunction]
#[pyo3(signature = (
    seed, config=None, problems=None, samples_per_problem=None, steps=None, tokens=None, dim=None,
    correct_rate=None, separation=None, dispersion_ratio=None, first_problem_id=None
))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    seed: u64,
    config: Option<&str>,
    problems: Option<usize>,
    samples_per_problem: Option<usize>,
    steps: Option<usize>,
    tokens: Option<usize>,
    dim: Option<usize>,
    correct_rate: Option<f64>,
    separation: Option<f64>,
    dispersion_ratio: Option<f64>,
    first_problem_id: Option<u64>,
) -> PyResult<PyTrajectorySet> {
    let mut cfg = match config {
        Some(text) => SyntheticConfig::from_toml(text).map_err(value_err)?,
        None => SyntheticConfig::default(),
    };
    cfg.seed = seed;
    cfg.problems = problems.unwrap_or(cfg.problems);
    cfg.samples_per_problem = samples_per_problem.unwrap_or(cfg.samples_per_problem);
    cfg.steps = steps.unwrap_or(cfg.steps);
    cfg.tokens = tokens.unwrap_or(cfg.tokens);
    cfg.dim = dim.unwrap_or(cfg.dim);
    cfg.correct_rate = correct_rate.unwrap_or(cfg.correct_rate);
    cfg.separation = separation.unwrap_or(cfg.separation);
    cfg.dispersion_ratio = dispersion_ratio.unwrap_or(cfg.dispersion_ratio);
    cfg.first_problem_id = first_problem_id.unwrap_or(cfg.first_problem_id);
    Ok(PyTrajectorySet {
        inner: generate(&cfg).map_err(value_err)?,
    })
}

#[pymodule]
fn lttk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", lttk_core::VERSION)?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyTrajectorySet>()?;
    m.add_class::<PyRewardModel>()?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(effective_rank, m)?)?;
    m.add_function(wrap_pyfunction!(anisotropy, m)?)?;
    m.add_function(wrap_pyfunction!(two_nn, m)?)?;
    m.add_function(wrap_pyfunction!(pca, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_policy, m)?)?;
    m.add_function(wrap_pyfunction!(acceptance_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(lto_sample, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_majority_vote, m)?)?;
    m.add_function(wrap_pyfunction!(verify_performance_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sampler_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(compare_selectors, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
