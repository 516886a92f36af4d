//! Experiment execution: dispatches a validated config to the owning
//! module, writes CSV artifacts and a manifest, and collects a
//! plain-text pass/fail report.

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind, OptimizerSection};
use crate::convergence::{race, saddle_escape, sgd_gap_bound, SgdNoiseModel};
use crate::curvature::{check_condition_reduction, estimate_curvature};
use crate::gaf::symmetric_grid;
use crate::hyperparam::{classify_curve, record_grad_stats, suggest_params, suggestion_report};
use crate::optim::{run, OptimizerSpec};
use crate::problems::{
    builtin_problem, make_dataset, mlp_accuracy, mlp_init, mlp_problem, BuiltinProblem, Problem,
};
use crate::surface::{equivalent_surface, flatness_ratio};
use crate::transforms::GradientTransform;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Domain(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Io { .. } => 3,
            ExperimentError::Domain(_) => 1,
        }
    }
}

fn domain(err: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Domain(err.to_string())
}

/// Result of one experiment run: the report text plus whether every
/// asserted line passed.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub passed: bool,
    pub report: String,
    pub artifacts: Vec<PathBuf>,
}

/// Accumulates report lines; a line is either an assertion (PASS/FAIL)
/// or informational.
#[derive(Default)]
struct Report {
    lines: Vec<String>,
    failed: usize,
}

impl Report {
    fn check(&mut self, ok: bool, what: impl std::fmt::Display) {
        if ok {
            self.lines.push(format!("[PASS] {what}"));
        } else {
            self.failed += 1;
            self.lines.push(format!("[FAIL] {what}"));
        }
    }

    fn info(&mut self, what: impl std::fmt::Display) {
        self.lines.push(format!("[INFO] {what}"));
    }

    fn text(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

/// Writes `contents` to `dir/name` atomically (temp file + rename).
fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, ExperimentError> {
    let io_err = |source| ExperimentError::Io {
        path: dir.join(name),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    let path = dir.join(name);
    tmp.persist(&path)
        .map_err(|e| io_err(e.error))?;
    Ok(path)
}

fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, ExperimentError> {
    let section = cfg.problem()?;
    if section.name == "mlp" {
        let data = make_dataset(
            section.dataset_seed.unwrap_or(0),
            section.dataset_size.unwrap_or(32),
        )
        .map_err(domain)?;
        mlp_problem(data, section.width.unwrap_or(4)).map_err(domain)
    } else {
        let which = BuiltinProblem::parse(&section.name).map_err(domain)?;
        builtin_problem(which).map_err(domain)
    }
}

fn build_optimizer(
    section: Option<&OptimizerSection>,
    transform: GradientTransform,
) -> OptimizerSpec {
    match section {
        None => OptimizerSpec::gd(0.1, transform),
        Some(s) => {
            let mut spec = OptimizerSpec::new(s.kind, s.eta, transform);
            if let Some(mu) = s.momentum {
                spec.momentum = mu;
            }
            spec.batch_size = s.batch_size;
            if let Some(p) = s.placement {
                spec.placement = p;
            }
            spec
        }
    }
}

fn primary_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seeds.first().copied().unwrap_or(0)
}

/// Runs one experiment end to end, writing all artifacts under `out`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<ExperimentOutcome, ExperimentError> {
    let started = Instant::now();
    let mut report = Report::default();
    let mut artifacts = Vec::new();

    match cfg.kind {
        ExperimentKind::Validate => run_validate(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Race => run_race(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Saddle => run_saddle(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Curvature => run_curvature(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Surface => run_surface(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Bound => run_bound(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Train => run_train(cfg, out, &mut report, &mut artifacts)?,
        ExperimentKind::Suggest => run_suggest(cfg, out, &mut report, &mut artifacts)?,
    }

    let passed = report.failed == 0;
    report.info(format!(
        "verdict: {}",
        if passed { "all checks passed" } else { "checks failed" }
    ));
    artifacts.push(write_artifact(out, "report.txt", &report.text())?);

    let manifest = serde_json::json!({
        "experiment": cfg.kind.as_str(),
        "config": cfg,
        "seeds": cfg.seeds,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_ms": started.elapsed().as_millis() as u64,
    });
    let manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ExperimentError::Domain(e.to_string()))?;
    artifacts.push(write_artifact(out, "manifest.json", &manifest_text)?);

    Ok(ExperimentOutcome {
        passed,
        report: report.text(),
        artifacts,
    })
}

fn require_gaf(cfg: &ExperimentConfig) -> Result<crate::gaf::GafSpec, ExperimentError> {
    match cfg.transform_or_identity()? {
        GradientTransform::Gaf(spec) => Ok(spec),
        other => Err(ExperimentError::Config(ConfigError::InvalidField {
            field: "transform".into(),
            message: format!("this experiment needs an activation, got {}", other.label()),
        })),
    }
}

fn run_validate(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let spec = require_gaf(cfg)?;
    let half = cfg.run.grid_half_width.unwrap_or(2.0);
    let points = cfg.run.grid_points.unwrap_or(1001);
    let grid = symmetric_grid(half, points);
    let validation = spec.validate(&grid).map_err(domain)?;
    let eps3 = spec.solve_epsilon3();

    report.check(validation.monotone_ok, "derivative positive on the grid");
    report.check(validation.odd_ok, "odd symmetry on the grid");
    report.check(
        validation.dominated_beyond_epsilon.is_some(),
        "output dominated by input beyond a threshold",
    );
    report.check(validation.curvature_sign_ok, "concave toward zero on each side");
    match eps3.value {
        Some(v) => report.info(format!("epsilon3 = {v} (residual {:e})", eps3.residual)),
        None => report.info("no fixed point: slope at origin does not exceed 1"),
    }

    let mut csv = String::from("check,result\n");
    writeln!(csv, "monotone,{}", validation.monotone_ok).unwrap();
    writeln!(csv, "odd,{}", validation.odd_ok).unwrap();
    writeln!(
        csv,
        "dominated,{}",
        validation.dominated_beyond_epsilon.is_some()
    )
    .unwrap();
    writeln!(csv, "curvature_sign,{}", validation.curvature_sign_ok).unwrap();
    if let Some(e) = validation.dominated_beyond_epsilon {
        writeln!(csv, "domination_threshold,{e}").unwrap();
    }
    if let Some(v) = eps3.value {
        writeln!(csv, "epsilon3,{v}").unwrap();
    }
    artifacts.push(write_artifact(out, "validity.csv", &csv)?);
    Ok(())
}

fn run_race(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let problem = build_problem(cfg)?;
    let transform = cfg.transform_or_identity()?;
    let baseline = build_optimizer(cfg.optimizer.as_ref(), GradientTransform::Identity);
    let treatment = build_optimizer(cfg.optimizer.as_ref(), transform);
    let w0 = cfg
        .run
        .w0
        .clone()
        .unwrap_or_else(|| vec![0.05; problem.dim]);
    let target = cfg.run.target_loss.unwrap_or(1e-8);
    let max_iters = cfg.run.max_iters.unwrap_or(100_000);
    let result = race(
        &problem,
        &baseline,
        &treatment,
        &w0,
        target,
        max_iters,
        primary_seed(cfg),
    )
    .map_err(domain)?;

    report.info(format!(
        "baseline iterations to {target}: {:?}",
        result.iterations_baseline
    ));
    report.info(format!(
        "treatment iterations to {target}: {:?}",
        result.iterations_treatment
    ));
    if matches!(treatment.transform, GradientTransform::Identity) {
        report.check(
            result.iterations_baseline == result.iterations_treatment,
            "identical arms tie exactly",
        );
    } else {
        report.check(result.treatment_faster(), "treatment strictly faster");
    }
    artifacts.push(write_artifact(
        out,
        "race_baseline.csv",
        &result.baseline.to_csv_string(),
    )?);
    artifacts.push(write_artifact(
        out,
        "race_treatment.csv",
        &result.treatment.to_csv_string(),
    )?);
    Ok(())
}

fn run_saddle(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let problem = match &cfg.problem {
        Some(_) => build_problem(cfg)?,
        None => builtin_problem(BuiltinProblem::Saddle).map_err(domain)?,
    };
    let transform = cfg.transform_or_identity()?;
    let w0 = cfg.run.w0.clone().unwrap_or_else(|| {
        let mut w = vec![0.0; problem.dim];
        *w.last_mut().expect("positive dimension") = 1e-3;
        w
    });
    let delta = cfg.run.delta.unwrap_or(50);

    let identity_spec = build_optimizer(cfg.optimizer.as_ref(), GradientTransform::Identity);
    let identity = saddle_escape(&problem, &identity_spec, &w0, delta).map_err(domain)?;
    report.info(format!("identity displacement: {}", identity.displacement));
    artifacts.push(write_artifact(
        out,
        "saddle_identity.csv",
        &identity.trajectory.to_csv_string(),
    )?);

    if !matches!(transform, GradientTransform::Identity) {
        let spec = build_optimizer(cfg.optimizer.as_ref(), transform);
        let treated = saddle_escape(&problem, &spec, &w0, delta).map_err(domain)?;
        report.info(format!("transformed displacement: {}", treated.displacement));
        report.check(
            treated.displacement > identity.displacement,
            "transform escapes farther than identity",
        );
        artifacts.push(write_artifact(
            out,
            "saddle_transformed.csv",
            &treated.trajectory.to_csv_string(),
        )?);
    }
    Ok(())
}

fn run_curvature(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let problem = build_problem(cfg)?;
    let transform = cfg.transform_or_identity()?;
    let region = cfg.region()?;
    let cond = check_condition_reduction(&problem, &transform, &region).map_err(domain)?;

    report.info(format!(
        "original: ell = {}, c = {}, zeta = {}",
        cond.original.ell, cond.original.c, cond.zeta_original
    ));
    report.info(format!(
        "transformed: ell = {}, c = {}, zeta = {}",
        cond.transformed.ell, cond.transformed.c, cond.zeta_transformed
    ));
    if let GradientTransform::Gaf(_) = transform {
        for failure in &cond.premise_failures {
            report.check(false, format!("premise: {failure}"));
        }
        if cond.premise_failures.is_empty() {
            report.check(cond.reduced, "condition number strictly reduced");
            if let Some(ok) = cond.low_segment_expansion_ok {
                report.check(ok, "low-segment secants expanded");
            }
            if let Some(ok) = cond.high_segment_contraction_ok {
                report.check(ok, "high-segment secants contracted");
            }
        }
        if let Some(e1) = cond.epsilon1 {
            report.info(format!("epsilon1 (slope crossing) = {e1}"));
        }
    } else {
        report.info(format!(
            "zeta change under {}: {} -> {}",
            transform.label(),
            cond.zeta_original,
            cond.zeta_transformed
        ));
    }

    let mut csv = String::from("quantity,original,transformed\n");
    writeln!(csv, "ell,{},{}", cond.original.ell, cond.transformed.ell).unwrap();
    writeln!(csv, "c,{},{}", cond.original.c, cond.transformed.c).unwrap();
    writeln!(csv, "zeta,{},{}", cond.zeta_original, cond.zeta_transformed).unwrap();
    artifacts.push(write_artifact(out, "curvature.csv", &csv)?);
    Ok(())
}

fn axes_from_region(region: &crate::curvature::RegionSpec) -> Vec<Vec<f64>> {
    region
        .bounds
        .iter()
        .map(|&(lo, hi)| {
            let n = region.points_per_dim;
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        })
        .collect()
}

fn run_surface(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let problem = build_problem(cfg)?;
    let transform = cfg.transform_or_identity()?;
    let region = cfg.region()?;
    let axes = axes_from_region(&region);
    let grid = equivalent_surface(&problem, &transform, &axes).map_err(domain)?;
    report.info(format!(
        "surface over {} points, transform {}",
        grid.values.len(),
        transform.label()
    ));
    if let Some(offset) = cfg.run.offset {
        let ratio = flatness_ratio(&grid, offset).map_err(domain)?;
        report.info(format!("flatness ratio at offset {offset}: {ratio}"));
    }
    let name = format!("surface_{:016x}.csv", grid.grid_fingerprint());
    artifacts.push(write_artifact(out, &name, &grid.to_csv_string())?);
    Ok(())
}

fn run_bound(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let problem = build_problem(cfg)?;
    let region = cfg.region()?;
    let estimate =
        estimate_curvature(|w: &[f64]| problem.grad(w), &region).map_err(domain)?;
    let (ell, c) = (estimate.ell, estimate.c);
    report.info(format!("estimated ell = {ell}, c = {c}"));

    let eta = cfg
        .optimizer
        .as_ref()
        .map(|o| o.eta)
        .unwrap_or(1.0 / ell);
    let w0 = cfg
        .run
        .w0
        .clone()
        .ok_or(ConfigError::MissingSection("run.w0"))?;
    let k_max = cfg.run.k_max.unwrap_or(200);
    let noise = SgdNoiseModel::deterministic();

    let spec = OptimizerSpec::gd(eta, GradientTransform::Identity);
    let trajectory = run(&problem, &spec, &w0, k_max, None, primary_seed(cfg))
        .map_err(domain)?;
    let initial_gap = cfg.run.initial_gap.unwrap_or_else(|| problem.loss(&w0));

    let mut csv = String::from("k,gap,bound\n");
    let mut dominated = true;
    let mut first_exact = false;
    for k in 1..=k_max.min(trajectory.losses.len() - 1) {
        let gap = trajectory.losses[k - 1];
        let bound = sgd_gap_bound(k, ell, c, &noise, initial_gap).map_err(domain)?;
        if k == 1 {
            first_exact = (gap - bound).abs() <= 1e-12 * gap.abs().max(1.0);
        }
        if gap > bound + 1e-12 {
            dominated = false;
        }
        writeln!(csv, "{k},{gap},{bound}").unwrap();
    }
    report.check(first_exact, "bound equals the gap at k = 1");
    report.check(dominated, "empirical gap within the bound for every k");
    artifacts.push(write_artifact(out, "bound.csv", &csv)?);
    Ok(())
}

fn run_train(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let section = cfg.problem()?;
    if section.name != "mlp" {
        return Err(ExperimentError::Config(ConfigError::InvalidField {
            field: "problem.name".into(),
            message: "train experiments use the `mlp` problem".into(),
        }));
    }
    let width = section.width.unwrap_or(4);
    let data = make_dataset(
        section.dataset_seed.unwrap_or(0),
        section.dataset_size.unwrap_or(32),
    )
    .map_err(domain)?;
    artifacts.push(write_artifact(out, "dataset.csv", &data.to_csv_string())?);
    let problem = mlp_problem(data.clone(), width).map_err(domain)?;
    let transform = cfg.transform_or_identity()?;
    let steps = cfg.run.max_iters.unwrap_or(500);

    let mut arms = vec![("baseline", GradientTransform::Identity)];
    if !matches!(transform, GradientTransform::Identity) {
        arms.push(("treatment", transform));
    }

    let mut csv = String::from("seed,arm,final_loss,accuracy\n");
    let mut means = Vec::new();
    for (arm, t) in &arms {
        let mut final_losses = Vec::new();
        for &seed in &cfg.seeds {
            let spec = build_optimizer(cfg.optimizer.as_ref(), *t);
            let w0 = mlp_init(width, seed);
            let trajectory =
                run(&problem, &spec, &w0, steps, None, seed).map_err(domain)?;
            let accuracy = mlp_accuracy(trajectory.final_iterate(), width, &data);
            let loss = trajectory.final_loss();
            writeln!(csv, "{seed},{arm},{loss},{accuracy}").unwrap();
            report.check(
                accuracy > 0.9,
                format!("{arm} seed {seed}: accuracy {accuracy} > 0.9"),
            );
            final_losses.push(loss);
            let name = format!("train_{arm}_seed{seed}.csv");
            artifacts.push(write_artifact(out, &name, &trajectory.to_csv_string())?);
        }
        let mean = final_losses.iter().sum::<f64>() / final_losses.len().max(1) as f64;
        means.push((*arm, mean));
    }
    for (arm, mean) in &means {
        report.info(format!("{arm} mean final loss: {mean}"));
    }
    if means.len() == 2 {
        report.info(format!(
            "treatment - baseline mean final loss: {}",
            means[1].1 - means[0].1
        ));
    }
    artifacts.push(write_artifact(out, "summary.csv", &csv)?);
    Ok(())
}

fn run_suggest(
    cfg: &ExperimentConfig,
    out: &Path,
    report: &mut Report,
    artifacts: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let problem = build_problem(cfg)?;
    let spec = build_optimizer(cfg.optimizer.as_ref(), GradientTransform::Identity);
    let w0 = cfg
        .run
        .w0
        .clone()
        .unwrap_or_else(|| vec![1.0; problem.dim]);
    let steps = cfg.run.max_iters.unwrap_or(200);
    let trajectory =
        run(&problem, &spec, &w0, steps, None, primary_seed(cfg)).map_err(domain)?;
    let stats =
        record_grad_stats(&trajectory, cfg.run.epoch_length.unwrap_or(10)).map_err(domain)?;
    artifacts.push(write_artifact(out, "grad_stats.csv", &stats.to_csv_string())?);

    let half = cfg.run.grid_half_width.unwrap_or(1.0);
    let points = cfg.run.grid_points.unwrap_or(41).max(21) | 1;
    let center = trajectory.final_iterate().to_vec();
    let slice: Vec<(f64, f64)> = symmetric_grid(half, points)
        .into_iter()
        .map(|d| {
            let mut w = center.clone();
            w[0] += d;
            (d, problem.loss(&w))
        })
        .collect();
    let curve = classify_curve(&slice).map_err(domain)?;
    let specs = suggest_params(&stats, &curve).map_err(domain)?;
    report.info(suggestion_report(&stats, &curve, &specs).trim_end());
    report.check(specs.len() >= 2, "at least the two default suggestions");
    Ok(())
}

fn sorted_dir_csvs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    v.sort();
    v
}

/// CSV artifacts of two runs of the same experiment, paired by name.
pub fn csv_artifacts_match(a: &Path, b: &Path) -> bool {
    let left = sorted_dir_csvs(a);
    let right = sorted_dir_csvs(b);
    left.len() == right.len()
        && left.iter().zip(&right).all(|(x, y)| {
            x.file_name() == y.file_name()
                && std::fs::read(x).ok() == std::fs::read(y).ok()
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run_in_temp(text: &str) -> (ExperimentOutcome, tempfile::TempDir) {
        let cfg = parse_config(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&cfg, dir.path()).unwrap();
        (outcome, dir)
    }

    const VALIDATE_CFG: &str = r#"
        kind = "validate"
        [transform]
        variant = "gaf"
        kind = "arctan"
        alpha = 0.1
        beta = 20.0
    "#;

    #[test]
    fn validate_reports_all_four_checks_and_epsilon3() {
        let (outcome, _dir) = run_in_temp(VALIDATE_CFG);
        assert!(outcome.passed, "{}", outcome.report);
        assert_eq!(outcome.report.matches("[PASS]").count(), 4);
        assert!(outcome.report.contains("epsilon3 = 0.11655"), "{}", outcome.report);
    }

    #[test]
    fn race_report_contains_counts_and_verdict() {
        let (outcome, _dir) = run_in_temp(
            r#"
                kind = "race"
                [problem]
                name = "paper_quadratic"
                [optimizer]
                kind = "gd"
                eta = 0.1
                [transform]
                variant = "gaf"
                kind = "arctan"
                alpha = 0.1
                beta = 20.0
                [run]
                w0 = [0.05, 0.05]
                target_loss = 1e-8
            "#,
        );
        assert!(outcome.passed, "{}", outcome.report);
        assert!(outcome.report.contains("baseline iterations"));
        assert!(outcome.report.contains("treatment strictly faster"));
    }

    #[test]
    fn rerun_produces_byte_identical_csv_artifacts() {
        let cfg = parse_config(
            r#"
                kind = "train"
                seeds = [1, 2]
                [problem]
                name = "mlp"
                dataset_size = 16
                [optimizer]
                kind = "sgdm"
                eta = 0.5
                momentum = 0.9
                batch_size = 8
                [transform]
                variant = "gaf"
                kind = "arctan"
                alpha = 0.1
                beta = 20.0
                [run]
                max_iters = 120
            "#,
        )
        .unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&cfg, a.path()).unwrap();
        run_experiment(&cfg, b.path()).unwrap();
        assert!(csv_artifacts_match(a.path(), b.path()));
    }

    #[test]
    fn curvature_identity_is_informational_only() {
        let (outcome, _dir) = run_in_temp(
            r#"
                kind = "curvature"
                [problem]
                name = "paper_quadratic"
                [region]
                bounds = [[-1.0, 1.0], [-1.0, 1.0]]
                points_per_dim = 21
            "#,
        );
        assert!(outcome.passed, "{}", outcome.report);
        assert!(outcome.report.contains("zeta"));
    }

    #[test]
    fn surface_writes_fingerprinted_csv() {
        let (outcome, dir) = run_in_temp(
            r#"
                kind = "surface"
                [problem]
                name = "paper_quadratic"
                [region]
                bounds = [[-1.0, 1.0], [-1.0, 1.0]]
                points_per_dim = 21
                [run]
                offset = 1.0
            "#,
        );
        assert!(outcome.passed, "{}", outcome.report);
        assert!(outcome.report.contains("flatness ratio"));
        assert_eq!(sorted_dir_csvs(dir.path()).len(), 1);
    }

    #[test]
    fn bound_experiment_passes_on_paper_quadratic() {
        let (outcome, _dir) = run_in_temp(
            r#"
                kind = "bound"
                [problem]
                name = "paper_quadratic"
                [region]
                bounds = [[-1.0, 1.0], [-1.0, 1.0]]
                points_per_dim = 21
                [run]
                w0 = [1.0, 1.0]
                k_max = 200
            "#,
        );
        assert!(outcome.passed, "{}", outcome.report);
    }

    #[test]
    fn suggest_emits_the_default_sets_first() {
        let (outcome, _dir) = run_in_temp(
            r#"
                kind = "suggest"
                [problem]
                name = "quartic_well"
                [run]
                w0 = [1.0]
            "#,
        );
        assert!(outcome.passed, "{}", outcome.report);
        assert!(outcome.report.contains("suggestion 1: arctan(alpha=0.1, beta=20"));
    }

    #[test]
    fn saddle_transform_beats_identity() {
        let (outcome, _dir) = run_in_temp(
            r#"
                kind = "saddle"
                [optimizer]
                kind = "gd"
                eta = 0.01
                [transform]
                variant = "gaf"
                kind = "arctan"
                alpha = 0.1
                beta = 20.0
            "#,
        );
        assert!(outcome.passed, "{}", outcome.report);
        assert!(outcome.report.contains("escapes farther"));
    }
}
