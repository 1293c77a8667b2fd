//! The `run`, `compare` and `mvi` commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use zomax_core::diagnostics::{goldstein_surrogate, prox_mvi_sampler, GradientSource, MviReport, MviStudy};
use zomax_core::exec::{Execution, Streams};
use zomax_core::geometry::{JointPoint, MetricMatrix};
use zomax_core::solvers::{run, RunTrace};

use crate::build::{build_problem, build_solver, point, BuiltProblem};
use crate::config::{merge_tables, ExperimentConfig, GradientKind};
use crate::output::{mean_std, num, read_final_point, write_error_marker, write_summary, write_trace, SummaryRow};

pub fn trace_file(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

struct SeedRun {
    seed: u64,
    result: Result<RunTrace, (String, Option<RunTrace>)>,
}

fn run_seeds(cfg: &ExperimentConfig, built: &BuiltProblem) -> Result<Vec<SeedRun>> {
    let solver = cfg.solver()?;
    let oracle = cfg.oracle()?;
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    // Build every config up front so config errors surface before any run.
    let configs = seeds
        .iter()
        .map(|&s| build_solver(cfg, solver, oracle, &built.problem, s))
        .collect::<Result<Vec<_>>>()?;
    let runs = Execution::Parallel.map(seeds.len(), |i| {
        let result = run(&built.problem, &built.start, &configs[i])
            .map_err(|e| (e.to_string(), e.partial_trace().cloned()));
        SeedRun { seed: seeds[i], result }
    });
    Ok(runs)
}

fn write_z(cfg: &ExperimentConfig, built: &BuiltProblem) -> bool {
    cfg.write_z.unwrap_or(built.problem.dim() <= 8)
}

/// Writes one trace per seed; returns the successful traces or the failures.
fn write_traces(dir: &Path, runs: Vec<SeedRun>, write_z: bool) -> Result<Vec<(u64, RunTrace)>> {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for r in runs {
        let path = dir.join(trace_file(r.seed));
        match r.result {
            Ok(trace) => {
                for w in &trace.warnings {
                    log::warn!("seed {}: {w}", r.seed);
                }
                write_trace(&path, &trace, write_z)?;
                ok.push((r.seed, trace));
            }
            Err((msg, partial)) => {
                if let Some(t) = partial {
                    write_trace(&path, &t, write_z)?;
                }
                write_error_marker(&path, &msg)?;
                failures.push(format!("seed {}: {msg}", r.seed));
            }
        }
    }
    if !failures.is_empty() {
        bail!("run failed ({})", failures.join("; "));
    }
    Ok(ok)
}

fn summary_rows(name: &str, built: &BuiltProblem, traces: &[(u64, RunTrace)]) -> Vec<SummaryRow> {
    traces
        .iter()
        .map(|(seed, t)| {
            let first = t.records.first();
            let last = t.last();
            SummaryRow {
                experiment: name.to_string(),
                seed: *seed,
                final_objective: built.problem.value(&t.final_point),
                final_diag_norm: last.map_or(f64::NAN, |r| r.diag_norm),
                iterations: t.iterations,
                function_evals: t.total_evals,
                wall_time_s: last.map_or(0.0, |r| r.wall_time_s),
                initial_objective: first.map_or(f64::NAN, |r| r.f_value),
                accuracy: built.poisoning.as_ref().map(|d| d.accuracy(&t.final_point.y)),
            }
        })
        .collect()
}

fn write_goldstein(cfg: &ExperimentConfig, built: &BuiltProblem, dir: &Path, traces: &[(u64, RunTrace)]) -> Result<()> {
    let Some(g) = &cfg.diagnostics.goldstein else {
        return Ok(());
    };
    let l0 = g
        .l0
        .or(built.problem.metadata.l0)
        .context("diagnostics.goldstein: give `l0`, the problem has none recorded")?;
    let (n, m) = built.problem.dims();
    let mut w = csv::Writer::from_path(dir.join("goldstein.csv"))?;
    w.write_record(["seed", "delta", "epsilon", "gamma", "mu", "estimate", "std_error", "bound"])?;
    for (seed, t) in traces {
        let r = goldstein_surrogate(
            &built.problem,
            &t.final_point,
            g.delta,
            g.epsilon,
            l0,
            g.samples,
            &MetricMatrix::identity(n, m),
            &Streams::new(*seed).fork(2),
            Execution::Parallel,
        )?;
        for warning in &r.warnings {
            log::warn!("seed {seed}: {warning}");
        }
        let c = r.goldstein.expect("certificate present");
        w.write_record([
            seed.to_string(),
            num(c.delta),
            num(g.epsilon),
            num(c.gamma),
            num(c.mu),
            num(c.estimate),
            num(c.std_error),
            num(c.bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Output of `run`.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub rows: Vec<SummaryRow>,
}

pub fn run_experiment(config_path: &Path, root: &Path) -> Result<RunOutcome> {
    let cfg = ExperimentConfig::load(config_path)?;
    run_config(&cfg, root)
}

pub fn run_config(cfg: &ExperimentConfig, root: &Path) -> Result<RunOutcome> {
    let built = build_problem(cfg)?;
    let runs = run_seeds(cfg, &built)?;
    let dir = cfg.output_dir(root);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let traces = write_traces(&dir, runs, write_z(cfg, &built))?;
    let rows = summary_rows(&cfg.name, &built, &traces);
    write_summary(&dir.join("summary.csv"), &rows)?;
    write_goldstein(cfg, &built, &dir, &traces)?;
    Ok(RunOutcome { dir, rows })
}

/// Per-variant mean/std of `f_value` at each recorded iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantCurve {
    pub label: String,
    /// `k -> (cum_evals, mean, std)`.
    pub points: BTreeMap<usize, (f64, f64, f64)>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub dir: PathBuf,
    pub curves: Vec<VariantCurve>,
}

const VARIANT_KEYS: [&str; 5] = ["label", "problem", "solver", "oracle", "diagnostics"];

/// Expands `[[variant]]` entries into full configs.
pub fn expand_variants(config_path: &Path) -> Result<Vec<(String, ExperimentConfig)>> {
    let text = fs::read_to_string(config_path).with_context(|| format!("reading config {}", config_path.display()))?;
    let mut base: toml::Table =
        toml::from_str(&text).with_context(|| format!("invalid config {}", config_path.display()))?;
    let dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let variants = match base.remove("variant") {
        Some(toml::Value::Array(a)) => a,
        Some(_) => bail!("`variant` must be an array of tables ([[variant]])"),
        None => Vec::new(),
    };
    if variants.len() < 2 {
        bail!("compare needs at least two [[variant]] entries, found {}", variants.len());
    }
    let base_problem = base.get("problem").cloned();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, v) in variants.into_iter().enumerate() {
        let toml::Value::Table(mut v) = v else {
            bail!("variant {i} is not a table");
        };
        let label = match v.remove("label") {
            Some(toml::Value::String(s)) if !s.is_empty() => s,
            _ => bail!("variant {i} needs a non-empty string `label`"),
        };
        if label.contains(['/', '\\']) || !seen.insert(label.clone()) {
            bail!("variant label `{label}` is duplicated or contains a path separator");
        }
        if let Some(k) = v.keys().find(|k| !VARIANT_KEYS.contains(&k.as_str())) {
            bail!("variant `{label}`: key `{k}` cannot be overridden");
        }
        let mut merged = base.clone();
        merge_tables(&mut merged, &v);
        if merged.get("problem") != base_problem.as_ref() {
            bail!("variant `{label}`: mismatched problem spec; all variants must share the problem");
        }
        let cfg = ExperimentConfig::from_table(merged, &dir).with_context(|| format!("variant `{label}`"))?;
        out.push((label, cfg));
    }
    Ok(out)
}

pub fn compare_study(config_path: &Path, root: &Path) -> Result<CompareOutcome> {
    let variants = expand_variants(config_path)?;
    let built = build_problem(&variants[0].1)?;
    let dir = variants[0].1.output_dir(root);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut curves = Vec::new();
    for (label, cfg) in &variants {
        let sub = dir.join(label);
        fs::create_dir_all(&sub)?;
        let runs = run_seeds(cfg, &built)?;
        let traces = write_traces(&sub, runs, write_z(cfg, &built)).with_context(|| format!("variant `{label}`"))?;
        let rows = summary_rows(label, &built, &traces);
        write_summary(&sub.join("summary.csv"), &rows)?;
        curves.push(VariantCurve {
            label: label.clone(),
            points: aggregate(&traces),
            rows,
        });
    }
    write_compare(&dir.join("compare.csv"), &curves)?;
    write_compare_summary(&dir.join("compare_summary.csv"), &curves)?;
    Ok(CompareOutcome { dir, curves })
}

fn aggregate(traces: &[(u64, RunTrace)]) -> BTreeMap<usize, (f64, f64, f64)> {
    let mut by_k: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (_, t) in traces {
        for r in &t.records {
            let e = by_k.entry(r.k).or_default();
            e.0.push(r.cum_evals as f64);
            e.1.push(r.f_value);
        }
    }
    by_k.into_iter()
        .map(|(k, (evals, f))| {
            let (m, s) = mean_std(&f);
            (k, (mean_std(&evals).0, m, s))
        })
        .collect()
}

fn write_compare(path: &Path, curves: &[VariantCurve]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    for c in curves {
        header.extend([
            format!("{}_cum_evals", c.label),
            format!("{}_mean", c.label),
            format!("{}_std", c.label),
        ]);
    }
    w.write_record(&header)?;
    let ks: BTreeSet<usize> = curves.iter().flat_map(|c| c.points.keys().copied()).collect();
    for k in ks {
        let mut rec = vec![k.to_string()];
        for c in curves {
            match c.points.get(&k) {
                Some((e, m, s)) => rec.extend([num(*e), num(*m), num(*s)]),
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_compare_summary(path: &Path, curves: &[VariantCurve]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["variant", "seeds", "final_objective_mean", "final_objective_std", "function_evals_mean"])?;
    for c in curves {
        let f: Vec<f64> = c.rows.iter().map(|r| r.final_objective).collect();
        let e: Vec<f64> = c.rows.iter().map(|r| r.function_evals as f64).collect();
        let (m, s) = mean_std(&f);
        w.write_record([
            c.label.clone(),
            c.rows.len().to_string(),
            num(m),
            num(s),
            num(mean_std(&e).0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct MviOutcome {
    pub dir: PathBuf,
    pub candidate: JointPoint,
    pub report: MviReport,
}

fn candidate_point(cfg: &ExperimentConfig, built: &BuiltProblem, dir: &Path) -> Result<JointPoint> {
    let c = cfg
        .candidate
        .as_ref()
        .ok_or_else(|| anyhow!("missing candidate: add a [candidate] section with `point`, `trace` or `run = true`"))?;
    let (n, m) = built.problem.dims();
    match (&c.point, &c.trace, c.run) {
        (Some(p), None, false) => point(p, n, m).context("candidate.point"),
        (None, Some(t), false) => {
            let v = read_final_point(&cfg.resolve(t))?;
            point(&v, n, m).context("candidate.trace")
        }
        (None, None, true) => {
            let seed = cfg.seeds[0];
            let solver = build_solver(cfg, cfg.solver()?, cfg.oracle()?, &built.problem, seed)?;
            let trace = run(&built.problem, &built.start, &solver)?;
            write_trace(&dir.join("candidate_trace.csv"), &trace, true)?;
            Ok(trace.final_point)
        }
        (None, None, false) => bail!("missing candidate: [candidate] sets none of `point`, `trace`, `run`"),
        _ => bail!("candidate: set exactly one of `point`, `trace`, `run`"),
    }
}

pub fn mvi_study(config_path: &Path, root: &Path) -> Result<MviOutcome> {
    let cfg = ExperimentConfig::load(config_path)?;
    let spec = cfg.mvi.as_ref().context("config has no [mvi] section")?;
    let built = build_problem(&cfg)?;
    let d = built.problem.dim();
    let variances = match (&spec.variances, spec.variance, spec.accel_variance, spec.steer_variance) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(v), None, None) => vec![v; d],
        (None, None, Some(a), Some(s)) => built
            .lane
            .as_ref()
            .context("mvi: accel/steer variances apply only to lane_merging")?
            .input_variances(a, s),
        _ => bail!("mvi: give `variances`, `variance`, or both `accel_variance` and `steer_variance`"),
    };
    let gradient = match spec.gradient {
        GradientKind::Analytic => GradientSource::Analytic,
        GradientKind::CentralDifference => GradientSource::CentralDifference { step: spec.fd_step },
    };
    let study = MviStudy::new(spec.count, spec.h, variances)
        .with_rho(spec.rho)
        .with_gradient(gradient)
        .with_bins(spec.bins)
        .with_tolerance(spec.tolerance);
    let dir = cfg.output_dir(root);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let candidate = candidate_point(&cfg, &built, &dir)?;
    let report = prox_mvi_sampler(&built.problem, &candidate, &study, &Streams::new(cfg.seeds[0]))?;
    let file = fs::File::create(dir.join("mvi_histogram.csv"))?;
    report.histogram.write_csv(file)?;
    let mut w = csv::Writer::from_path(dir.join("mvi_summary.csv"))?;
    w.write_record(["samples", "min_value", "violating_fraction", "rho", "tolerance"])?;
    w.write_record([
        report.samples.to_string(),
        num(report.min_value),
        num(report.violating_fraction),
        num(report.rho_used),
        num(report.tolerance),
    ])?;
    w.flush()?;
    Ok(MviOutcome { dir, candidate, report })
}
