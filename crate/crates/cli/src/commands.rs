use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lttk_core::geometry::{full_profile, pca_project};
use lttk_core::reward::{
    evaluate, gradient_check, init_model, load_model, save_model, train, ModelConfig, RewardModel,
    TrainConfig,
};
use lttk_core::sampler::stats::uniform_rewards;
use lttk_core::sampler::{
    bound_sweep, majority_vote, sampler_equivalence, weighted_majority_vote, SamplerConfig,
    VoteWeighting,
};
use lttk_core::selection::{sample_problems, SelectionError};
use lttk_core::synth::{generate, SyntheticConfig};
use lttk_core::{
    read_container, write_container, Label, LabeledSample, LatentThought, Trajectory, TrajectorySet,
};

use crate::args::*;
use crate::report::{emit_report, opt_sig9, sig9, Provenance, Report, ReportFormat, Table};
use crate::CliError;

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl ToString) -> CliError {
    CliError::Usage(msg.to_string())
}

fn data(msg: impl ToString) -> CliError {
    CliError::Data(msg.to_string())
}

pub(crate) fn dispatch(
    command: Command,
    prov: Provenance,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    match command {
        Command::Synth(a) => synth(a, prov, stdout),
        Command::Validate(a) => validate(a, prov, stdout),
        Command::Metrics(a) => metrics(a, prov, stdout),
        Command::Pca(a) => pca(a, prov, stdout),
        Command::TrainLrm(a) => train_lrm(a, prov, stdout),
        Command::EvalLrm(a) => eval_lrm(a, prov, stdout),
        Command::Lto(a) => lto(a, prov, stdout),
        Command::Vote(a) => vote(a, prov, stdout),
        Command::Verify(VerifyCommand::Theorem2(a)) => theorem2(a, prov, stdout),
        Command::Verify(VerifyCommand::Theorem3(a)) => theorem3(a, prov, stdout),
        Command::Verify(VerifyCommand::Gradcheck(a)) => gradcheck(a, prov, stdout),
    }
}

fn load_raw(path: &Path) -> CliResult<TrajectorySet> {
    let file = File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    read_container(BufReader::new(file)).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> CliResult<TrajectorySet> {
    let set = load_raw(path)?;
    let report = set.validate();
    if !report.is_valid() {
        return Err(data(format!("{}: {report}", path.display())));
    }
    Ok(set)
}

fn load_merged(paths: &[std::path::PathBuf]) -> CliResult<TrajectorySet> {
    let mut merged = TrajectorySet::default();
    for p in paths {
        merged.extend(load(p)?);
    }
    let report = merged.validate();
    if !report.is_valid() {
        return Err(data(format!("merged inputs: {report}")));
    }
    Ok(merged)
}

fn load_lrm(path: &Path) -> CliResult<RewardModel> {
    load_model(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn check_model_dim(model: &RewardModel, set: &TrajectorySet) -> CliResult<()> {
    match set.shape() {
        Some((_, d)) if d != model.config.input_dim => Err(data(format!(
            "trajectories have dimensionality {d}, the model expects {}",
            model.config.input_dim
        ))),
        _ => Ok(()),
    }
}

/// Writes the table to `out` as CSV when given; otherwise the table stays
/// in the text report on stdout.
fn finish(mut report: Report, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    if let Some(path) = out {
        let file = File::create(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        let bytes = emit_report(&report, ReportFormat::Csv, BufWriter::new(file))
            .map_err(|e| data(format!("{}: {e}", path.display())))?;
        report.line("wrote", format!("{} ({bytes} bytes)", path.display()));
        report.table = None;
    }
    match emit_report(&report, ReportFormat::Text, stdout) {
        // a closed pipe (`| head`) is the reader's choice, not a failure
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(data(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn synth(a: SynthArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            SyntheticConfig::from_toml(&text).map_err(usage)?
        }
        None => SyntheticConfig::default(),
    };
    cfg.seed = a.seed;
    macro_rules! set_opt {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set_opt!(
        problems,
        samples_per_problem,
        steps,
        tokens,
        dim,
        correct_rate,
        noise_std,
        separation,
        dispersion_ratio,
        answer_vocab,
        first_problem_id
    );
    let set = generate(&cfg).map_err(usage)?;
    let file = File::create(&a.out).map_err(|e| data(format!("{}: {e}", a.out.display())))?;
    let mut sink = BufWriter::new(file);
    let bytes = write_container(&set, &mut sink).map_err(data)?;
    sink.flush()
        .map_err(|e| data(format!("{}: {e}", a.out.display())))?;

    let mut report = Report::new(prov);
    report.line("trajectories", set.len());
    report.line("problems", cfg.problems);
    report.line(
        "shape",
        format!("T={} L={} d={}", cfg.steps, cfg.tokens, cfg.dim),
    );
    let correct = set.iter().filter(|s| s.label == Label::Correct).count();
    report.line("correct_fraction", sig9(correct as f64 / set.len() as f64));
    report.line("separation", sig9(cfg.separation));
    report.line("dispersion_ratio", sig9(cfg.dispersion_ratio));
    report.line("wrote", format!("{} ({bytes} bytes)", a.out.display()));
    finish(report, None, stdout)
}

fn validate(a: ValidateArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    let set = load_raw(&a.input)?;
    let result = set.validate();
    let mut report = Report::new(prov);
    report.line("trajectories", set.len());
    if let Some((l, d)) = set.shape() {
        report.line("shape", format!("L={l} d={d}"));
    }
    report.line("labeled", set.labeled_count());
    report.line("violations", result.violations.len());
    let mut table = Table::new(&["sample", "violation"]);
    for v in &result.violations {
        table.push(vec![
            v.sample.map(|s| s.to_string()).unwrap_or_default(),
            v.kind.to_string(),
        ]);
    }
    report.table = Some(table);
    finish(report, None, stdout)?;
    if result.is_valid() {
        Ok(())
    } else {
        Err(data(format!("{}: {result}", a.input.display())))
    }
}

fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(e.to_string()))
}

fn metrics(a: MetricsArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    if !(a.alpha > 0.0 && a.alpha.is_finite()) {
        return Err(usage("--alpha must be positive"));
    }
    if !(0.0..1.0).contains(&a.trim) {
        return Err(usage("--trim must lie in [0, 1)"));
    }
    let set = load(&a.input)?;
    let pool = thread_pool(a.threads)?;
    // collect keeps input order regardless of which worker finishes first
    let profiles: Vec<_> = pool.install(|| {
        set.samples
            .par_iter()
            .map(|s| full_profile(&s.trajectory, a.alpha, a.trim))
            .collect()
    });

    let mut table = Table::new(&[
        "problem_id",
        "sample_id",
        "label",
        "step",
        "entropy",
        "effective_rank",
        "anisotropy",
        "intrinsic_dim",
    ]);
    let mut undefined_id = 0;
    for (s, profile) in set.iter().zip(profiles) {
        let t = &s.trajectory;
        let profile = profile.map_err(|e| {
            data(format!(
                "problem {} sample {}: {e}",
                t.problem_id, t.sample_id
            ))
        })?;
        for (step, m) in profile.steps.iter().enumerate() {
            undefined_id += m.intrinsic_dimension.is_none() as usize;
            table.push(vec![
                t.problem_id.to_string(),
                t.sample_id.to_string(),
                s.label.to_string(),
                (step + 1).to_string(),
                sig9(m.entropy),
                sig9(m.effective_rank),
                sig9(m.anisotropy),
                opt_sig9(m.intrinsic_dimension),
            ]);
        }
    }
    let mut report = Report::new(prov);
    report.line("trajectories", set.len());
    report.line("rows", table.rows.len());
    report.line("intrinsic_dim_undefined", undefined_id);
    report.table = Some(table);
    finish(report, a.out.as_deref(), stdout)
}

fn pca(a: PcaArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    if a.components == 0 {
        return Err(usage("--components must be at least 1"));
    }
    let set = load(&a.input)?;
    let groups: Vec<(String, Vec<usize>)> = if a.joint {
        vec![("all".to_string(), (0..set.len()).collect())]
    } else {
        set.problem_groups()
            .into_iter()
            .map(|(p, m)| (p.to_string(), m))
            .collect()
    };
    let mut header = vec!["problem_id", "sample_id", "label", "step"];
    let names: Vec<String> = (1..=a.components).map(|k| format!("pc{k}")).collect();
    header.extend(names.iter().map(String::as_str));
    let mut table = Table::new(&header);
    let mut variance_lines = Vec::new();
    for (name, members) in groups {
        let subset = set.subset(&members);
        let (fit, projected) =
            pca_project(&subset, a.components).map_err(|e| data(format!("problem {name}: {e}")))?;
        let ev: Vec<String> = fit.explained_variance.iter().map(|v| sig9(*v)).collect();
        variance_lines.push((format!("explained_variance[{name}]"), ev.join(" ")));
        for (p, s) in projected.iter().zip(subset.iter()) {
            for (step, coords) in p.coordinates.iter().enumerate() {
                let mut row = vec![
                    p.problem_id.to_string(),
                    p.sample_id.to_string(),
                    s.label.to_string(),
                ];
                row.push((step + 1).to_string());
                row.extend(coords.iter().map(|c| sig9(*c)));
                table.push(row);
            }
        }
    }
    let mut report = Report::new(prov);
    report.line("trajectories", set.len());
    report.line("rows", table.rows.len());
    for (k, v) in variance_lines {
        report.line(&k, v);
    }
    report.table = Some(table);
    finish(report, a.out.as_deref(), stdout)
}

fn train_lrm(a: TrainArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    let tc = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch_size,
        shuffle_seed: a.seed,
        prefix_steps: a.prefix_steps,
        ..Default::default()
    };
    tc.validate().map_err(usage)?;
    let set = load_merged(&a.inputs)?;
    let (_, d) = set.shape().ok_or_else(|| data("empty training set"))?;
    let m = &a.model;
    let config = ModelConfig {
        model_dim: m.model_dim,
        blocks: m.blocks,
        heads: m.heads,
        ffn_multiplier: m.ffn_multiplier,
        head_hidden: m.head_hidden,
        positional_encoding: !m.no_positional_encoding,
        seed: a.seed,
        ..ModelConfig::new(d)
    };
    let model = init_model(config).map_err(usage)?;
    let (model, history) = train(&model, &set, &tc).map_err(data)?;
    let bytes =
        save_model(&model, &a.out).map_err(|e| data(format!("{}: {e}", a.out.display())))?;

    let mut report = Report::new(prov);
    report.line("training_samples", set.labeled_count());
    report.line("parameters", model.parameter_count());
    report.line(
        "final_loss",
        history.last().map(|l| sig9(*l)).unwrap_or_default(),
    );
    report.line("wrote", format!("{} ({bytes} bytes)", a.out.display()));
    let mut table = Table::new(&["epoch", "loss"]);
    for (e, l) in history.iter().enumerate() {
        table.push(vec![(e + 1).to_string(), sig9(*l)]);
    }
    report.table = Some(table);
    finish(report, None, stdout)
}

fn truncate_set(set: TrajectorySet, prefix: Option<usize>) -> CliResult<TrajectorySet> {
    match prefix {
        Some(0) => Err(usage("--prefix-steps must be at least 1")),
        Some(t) => Ok(TrajectorySet::new(
            set.samples
                .into_iter()
                .map(|s| LabeledSample::new(s.trajectory.truncated(t), s.label))
                .collect(),
        )),
        None => Ok(set),
    }
}

fn score(model: &RewardModel, set: &TrajectorySet) -> CliResult<Vec<f64>> {
    set.samples
        .par_iter()
        .map(|s| model.forward(&s.trajectory))
        .collect::<Result<_, _>>()
        .map_err(data)
}

fn eval_lrm(a: EvalArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_lrm(&a.model)?;
    let set = truncate_set(load_merged(&a.inputs)?, a.prefix_steps)?;
    check_model_dim(&model, &set)?;
    let result = evaluate(&model, &set).map_err(data)?;
    let mut report = Report::new(prov);
    report.line("evaluated", result.count);
    report.line("accuracy", sig9(result.accuracy));
    report.line(
        "roc_auc",
        result
            .roc_auc
            .map(sig9)
            .unwrap_or_else(|| "undefined (one class)".into()),
    );
    if a.out.is_some() {
        let rewards = score(&model, &set)?;
        let mut table = Table::new(&["problem_id", "sample_id", "label", "reward"]);
        for (s, r) in set.iter().zip(&rewards) {
            let t = &s.trajectory;
            table.push(vec![
                t.problem_id.to_string(),
                t.sample_id.to_string(),
                s.label.to_string(),
                sig9(*r),
            ]);
        }
        report.table = Some(table);
    }
    finish(report, a.out.as_deref(), stdout)
}

fn selection_error(e: SelectionError) -> CliError {
    match e {
        SelectionError::Sampler(s)
            if matches!(s, lttk_core::sampler::SamplerError::Stall { .. }) =>
        {
            data(s)
        }
        SelectionError::Sampler(s) => usage(s),
        other => data(other),
    }
}

fn lto(a: LtoArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = SamplerConfig {
        budget: a.budget,
        required: a.required,
        beta: a.beta,
        max_iterations: a.max_iterations,
        seed: a.seed,
    };
    cfg.validate().map_err(usage)?;
    let model = load_lrm(&a.model)?;
    let set = load(&a.input)?;
    check_model_dim(&model, &set)?;
    let rewards = score(&model, &set)?;
    let draws = sample_problems(&set, &rewards, &cfg).map_err(selection_error)?;

    let mut table = Table::new(&[
        "problem_id",
        "sample_id",
        "answer_id",
        "label",
        "reward",
        "phi",
        "rejected",
    ]);
    let mut proposals = 0u64;
    let (mut hits, mut picked, mut labeled) = (0usize, 0usize, true);
    let (mut base_hits, mut base_total) = (0usize, 0usize);
    for d in &draws {
        proposals += d.trace.total_draws;
        for (&i, acc) in d.accepted.iter().zip(&d.trace.accepted) {
            let s = &set.samples[i];
            labeled &= s.label != Label::Unlabeled;
            hits += (s.label == Label::Correct) as usize;
            picked += 1;
            table.push(vec![
                s.trajectory.problem_id.to_string(),
                s.trajectory.sample_id.to_string(),
                s.trajectory
                    .answer_id
                    .map(|x| x.to_string())
                    .unwrap_or_default(),
                s.label.to_string(),
                sig9(rewards[i]),
                sig9(acc.phi),
                acc.rejected.to_string(),
            ]);
        }
        for &i in &d.pool {
            labeled &= set.samples[i].label != Label::Unlabeled;
            base_hits += (set.samples[i].label == Label::Correct) as usize;
            base_total += 1;
        }
    }
    let mut report = Report::new(prov);
    report.line("problems", draws.len());
    report.line("accepted", picked);
    report.line("proposals", proposals);
    if labeled && picked > 0 {
        report.line("base_rate", sig9(base_hits as f64 / base_total as f64));
        report.line("lto_rate", sig9(hits as f64 / picked as f64));
    }
    report.table = Some(table);
    finish(report, a.out.as_deref(), stdout)
}

fn vote(a: VoteArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    if a.budget == Some(0) {
        return Err(usage("--budget must be at least 1"));
    }
    let weighting = match a.weighting {
        Weighting::Sum => VoteWeighting::Sum,
        Weighting::Exp => {
            if !(a.beta > 0.0 && a.beta.is_finite()) {
                return Err(usage("--beta must be positive"));
            }
            VoteWeighting::Exponential { beta: a.beta }
        }
    };
    let set = load(&a.input)?;
    let rewards = match &a.model {
        Some(p) => {
            let model = load_lrm(p)?;
            check_model_dim(&model, &set)?;
            Some(score(&model, &set)?)
        }
        None => None,
    };

    let mut table = Table::new(&[
        "problem_id",
        "candidates",
        "majority_answer",
        "majority_correct",
        "weighted_answer",
        "weighted_correct",
    ]);
    let (mut labeled, mut maj_hits, mut w_hits, mut problems) = (true, 0usize, 0usize, 0usize);
    for (problem_id, members) in set.problem_groups() {
        let pool = match a.budget {
            Some(n) if n > members.len() => {
                return Err(data(format!(
                    "problem {problem_id} has {} samples, fewer than --budget {n}",
                    members.len()
                )))
            }
            Some(n) => &members[..n],
            None => &members[..],
        };
        let answers = pool
            .iter()
            .map(|&i| {
                set.samples[i]
                    .trajectory
                    .answer_id
                    .ok_or_else(|| data(format!("sample {i} has no answer id")))
            })
            .collect::<CliResult<Vec<u32>>>()?;
        let problem_labeled = pool
            .iter()
            .all(|&i| set.samples[i].label != Label::Unlabeled);
        labeled &= problem_labeled;
        let correct_answer = |ans: u32| -> String {
            if !problem_labeled {
                return String::new();
            }
            let right = pool
                .iter()
                .zip(&answers)
                .any(|(&i, &x)| x == ans && set.samples[i].label == Label::Correct);
            (right as u8).to_string()
        };
        let majority = majority_vote(&answers).map_err(data)?;
        let weighted = match &rewards {
            Some(r) => {
                let pr: Vec<f64> = pool.iter().map(|&i| r[i]).collect();
                Some(weighted_majority_vote(&answers, &pr, weighting).map_err(data)?)
            }
            None => None,
        };
        let (mc, wc) = (
            correct_answer(majority),
            weighted.map(&correct_answer).unwrap_or_default(),
        );
        maj_hits += (mc == "1") as usize;
        w_hits += (wc == "1") as usize;
        problems += 1;
        table.push(vec![
            problem_id.to_string(),
            pool.len().to_string(),
            majority.to_string(),
            mc,
            weighted.map(|w| w.to_string()).unwrap_or_default(),
            wc,
        ]);
    }
    let mut report = Report::new(prov);
    report.line("problems", problems);
    if labeled && problems > 0 {
        report.line("majority_accuracy", sig9(maj_hits as f64 / problems as f64));
        if rewards.is_some() {
            report.line("weighted_accuracy", sig9(w_hits as f64 / problems as f64));
        }
    }
    report.table = Some(table);
    finish(report, a.out.as_deref(), stdout)
}

fn joined(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| sig9(*v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn theorem2(a: Theorem2Args, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    if a.n == 0 || a.draws == 0 {
        return Err(usage("--n and --draws must be at least 1"));
    }
    // rewards come from a stream separate from the sampler's
    let rewards = uniform_rewards(a.n, a.seed ^ 0x5eed);
    let r = sampler_equivalence(&rewards, a.beta, a.draws, a.seed).map_err(usage)?;
    let pass = r.total_variation < a.tolerance && r.chi_square.passes(a.significance);
    let mut report = Report::new(prov);
    report.line("rewards", joined(&r.rewards));
    report.line("closed_form", joined(&r.target));
    report.line("empirical", joined(&r.empirical));
    report.line("proposals", r.proposals);
    report.line("tv_distance", sig9(r.total_variation));
    report.line("chi_square", sig9(r.chi_square.statistic));
    report.line("degrees_of_freedom", r.chi_square.degrees_of_freedom);
    report.line("p_value", sig9(r.chi_square.p_value));
    report.line("result", if pass { "PASS" } else { "FAIL" });
    finish(report, None, stdout)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "tv {} (tolerance {}), p {} (significance {})",
            sig9(r.total_variation),
            a.tolerance,
            sig9(r.chi_square.p_value),
            a.significance
        )))
    }
}

fn theorem3(a: Theorem3Args, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    if a.max_candidates == 0 || !(a.max_epsilon > 0.0 && a.max_epsilon <= 1.0) {
        return Err(usage(
            "--max-candidates must be positive and --max-epsilon in (0, 1]",
        ));
    }
    if !(a.beta_min > 0.0 && a.beta_min <= a.beta_max && a.beta_max.is_finite()) {
        return Err(usage("need 0 < --beta-min <= --beta-max"));
    }
    let sweep = bound_sweep(
        a.instances,
        a.max_candidates,
        a.max_epsilon,
        (a.beta_min, a.beta_max),
        a.seed,
    )
    .map_err(usage)?;
    let mut report = Report::new(prov);
    report.line("instances", sweep.instances);
    report.line("violations", sweep.violations);
    report.line("vacuous", sweep.vacuous);
    report.line("max_gap_over_bound", sig9(sweep.max_tightness));
    if let Some(w) = &sweep.worst {
        report.line(
            "tightest",
            format!(
                "eps={} gap={} bound={}",
                sig9(w.epsilon),
                sig9(w.gap),
                sig9(w.bound)
            ),
        );
    }
    report.line(
        "result",
        if sweep.violations == 0 {
            "PASS"
        } else {
            "FAIL"
        },
    );
    finish(report, None, stdout)?;
    if sweep.violations == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} instances violate the bound",
            sweep.violations, sweep.instances
        )))
    }
}

fn random_trajectory(
    rng: &mut ChaCha8Rng,
    steps: usize,
    tokens: usize,
    dim: usize,
) -> CliResult<Trajectory> {
    use rand::Rng;
    let thoughts = (0..steps)
        .map(|_| {
            let values = (0..tokens * dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            LatentThought::new(tokens, dim, values).map_err(usage)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Trajectory::new(0, 0, None, thoughts).map_err(usage)
}

fn gradcheck(a: GradcheckArgs, prov: Provenance, stdout: &mut dyn Write) -> CliResult<()> {
    if a.steps == 0 || a.tokens == 0 || a.dim == 0 {
        return Err(usage("--steps, --tokens and --dim must be at least 1"));
    }
    if !(a.step > 0.0 && a.step.is_finite()) {
        return Err(usage("--step must be positive"));
    }
    let config = ModelConfig {
        model_dim: a.model_dim,
        blocks: a.blocks,
        heads: a.heads,
        head_hidden: a.model_dim,
        seed: a.seed,
        ..ModelConfig::new(a.dim)
    };
    let model = init_model(config).map_err(usage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    rng.set_stream(1);
    let batch = [Label::Correct, Label::Incorrect]
        .into_iter()
        .map(|label| {
            Ok(LabeledSample::new(
                random_trajectory(&mut rng, a.steps, a.tokens, a.dim)?,
                label,
            ))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let r = gradient_check(&model, &batch, a.step).map_err(data)?;
    let pass = r.max_relative_error < a.tolerance;
    let mut report = Report::new(prov);
    report.line("parameters_checked", r.checked);
    report.line("max_relative_error", sig9(r.max_relative_error));
    report.line("worst", format!("{}[{}]", r.worst.0, r.worst.1));
    report.line("result", if pass { "PASS" } else { "FAIL" });
    finish(report, None, stdout)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "max relative error {} exceeds {}",
            sig9(r.max_relative_error),
            a.tolerance
        )))
    }
}
