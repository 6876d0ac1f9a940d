use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use crate::checks::{self, PropertyOutcome, Suite};
use crate::error::Error;
use crate::feasible_set::BoxBudgetSet;
use crate::solvers::{
    attach_lyapunov, lyapunov_series, run, surrogate_optimum, Algorithm, IterateTrace, RunError, SolverConfig,
    Surrogate,
};
use crate::truss::{build_grid_ground_structure, build_paper_instance, LoadUncertainty, RobustComplianceProblem};

use super::config::{ConfigError, ExperimentConfig};
use super::output::{self, SummaryRow};
use super::{CheckArgs, CompareArgs, ConfigArg, RunOverrides, SolveArgs, EXIT_BREAKDOWN, EXIT_CONFIG, EXIT_OK, EXIT_PROPERTY};

fn config_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn load(arg: &ConfigArg) -> Result<ExperimentConfig, ConfigError> {
    match &arg.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn with_overrides(mut cfg: ExperimentConfig, o: &RunOverrides) -> Result<(ExperimentConfig, PathBuf), ConfigError> {
    if let Some(i) = o.iters {
        cfg.run.iters = i;
    }
    if let Some(s) = o.stride {
        cfg.run.stride = s;
    }
    cfg.validate()?;
    let out = o.out.clone().unwrap_or_else(|| cfg.run.out_dir.clone());
    Ok((cfg, out))
}

fn build(cfg: &ExperimentConfig) -> Result<(RobustComplianceProblem, Vec<f64>), ConfigError> {
    let problem = build_paper_instance(&cfg.instance_config()).map_err(|e| ConfigError(format!("[instance]: {e}")))?;
    let x0 = match &cfg.instance.x0 {
        Some(x) if x.len() != problem.bar_count() => {
            return Err(ConfigError(format!(
                "`instance.x0` has {} entries but the instance has {} bars",
                x.len(),
                problem.bar_count()
            )))
        }
        Some(x) => x.clone(),
        None => problem.uniform_design(),
    };
    Ok((problem, x0))
}

fn prepare(config: &ConfigArg, o: &RunOverrides) -> Result<(ExperimentConfig, PathBuf, RobustComplianceProblem, Vec<f64>), ConfigError> {
    let (cfg, out) = with_overrides(load(config)?, o)?;
    let (problem, x0) = build(&cfg)?;
    std::fs::create_dir_all(&out).map_err(|e| ConfigError(format!("cannot create {}: {e}", out.display())))?;
    Ok((cfg, out, problem, x0))
}

fn split(result: Result<IterateTrace, RunError>) -> (IterateTrace, Option<Error>) {
    match result {
        Ok(t) => (t, None),
        Err(e) => (*e.trace, Some(e.error)),
    }
}

fn trace_path(dir: &Path, alg: Algorithm) -> PathBuf {
    dir.join(format!("trace_{alg}.csv"))
}

fn surrogate(cfg: &ExperimentConfig, problem: &RobustComplianceProblem, x0: &[f64]) -> Option<Surrogate> {
    if cfg.run.surrogate_iters == 0 {
        return None;
    }
    let obj = problem.objective();
    match surrogate_optimum(
        &cfg.solver(Algorithm::Sapg),
        &obj,
        problem.feasible(),
        x0,
        cfg.run.surrogate_iters,
        cfg.run.polish_mu,
        cfg.run.polish_steps,
    ) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("reference run failed ({}); using the best value from the runs", e.error);
            None
        }
    }
}

pub fn solve(args: &SolveArgs) -> i32 {
    let (cfg, out, problem, x0) = match prepare(&args.config, &args.run) {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let alg: Algorithm = args.algo.into();
    let lyapunov = cfg.run.lyapunov && alg == Algorithm::Sapg;
    if lyapunov && cfg.run.stride != 1 {
        return config_error("`run.lyapunov` needs `run.stride = 1`");
    }
    let solver = SolverConfig {
        keep_states: lyapunov,
        ..cfg.solver(alg)
    };
    let obj = problem.objective();
    let started = Instant::now();
    let (mut trace, error) = split(run(&solver, &obj, problem.feasible(), &x0));
    let elapsed = started.elapsed().as_secs_f64();

    if lyapunov && error.is_none() {
        let xstar = surrogate(&cfg, &problem, &x0).map_or_else(|| trace.best.1.clone(), |s| s.x);
        match lyapunov_series(&trace, &obj, &solver, &xstar) {
            Ok(report) => {
                attach_lyapunov(&mut trace, &report);
                println!(
                    "lyapunov: {} Lemma 1 violations (worst {:e}), {} modified-Lyapunov increases (worst {:e})",
                    report.lemma_violations.len(),
                    report.worst_lemma_excess(),
                    report.monotone_violations.len(),
                    report.worst_monotone_excess()
                );
            }
            Err(e) => log::warn!("Lyapunov diagnostics unavailable: {e}"),
        }
    }

    let path = trace_path(&out, alg);
    if let Err(e) = output::write_trace_file(&path, &trace) {
        return config_error(format!("cannot write {}: {e}", path.display()));
    }
    let last = trace.final_record();
    println!("algorithm: {alg}");
    println!("iterations: {}", last.k);
    println!("final f: {:e}", last.f_x);
    println!("best f: {:e}", trace.best.0);
    if let Some(f_star) = cfg.run.reference_optimum {
        println!("final relative gap: {:e}", output::relative_gap(last.f_x, f_star));
    }
    println!("wall time: {elapsed:.3} s");
    println!("trace: {}", path.display());
    match error {
        Some(e) => {
            eprintln!("error: {e}");
            EXIT_BREAKDOWN
        }
        None => EXIT_OK,
    }
}

pub fn compare(args: &CompareArgs) -> i32 {
    let (cfg, out, problem, x0) = match prepare(&args.config, &args.run) {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let started = Instant::now();
    let obj = problem.objective();
    let set = problem.feasible();
    let configs: Vec<SolverConfig> = Algorithm::ALL.iter().map(|&a| cfg.solver(a)).collect();
    let (results, reference) = thread::scope(|s| {
        let (obj, x0) = (&obj, &x0);
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run(c, obj, set, x0)))
            .collect();
        let reference = s.spawn(|| surrogate(&cfg, &problem, x0));
        let results: Vec<_> = handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect();
        (results, reference.join().expect("reference thread panicked"))
    });
    let runs: Vec<(IterateTrace, Option<Error>)> = results.into_iter().map(split).collect();

    let mut f_star = runs.iter().map(|(t, _)| t.best.0).fold(f64::INFINITY, f64::min);
    if let Some(s) = &reference {
        f_star = f_star.min(s.f);
    }
    if let Some(r) = cfg.run.reference_optimum {
        f_star = f_star.min(r);
    }

    let mut failed = false;
    let mut rows = Vec::new();
    for (trace, error) in &runs {
        let path = trace_path(&out, trace.algorithm);
        if let Err(e) = output::write_trace_file(&path, trace) {
            return config_error(format!("cannot write {}: {e}", path.display()));
        }
        let last = trace.final_record();
        let gaps = trace.records.iter().map(|r| (r.k, output::relative_gap(r.f_x, f_star)));
        rows.push(SummaryRow {
            algorithm: trace.algorithm.to_string(),
            iterations: last.k,
            final_f: last.f_x,
            best_f: trace.best.0,
            final_gap: output::relative_gap(last.f_x, f_star),
            slope: output::log_log_slope(gaps, 100, cfg.run.iters),
            status: match error {
                Some(e) => format!("breakdown: {e}"),
                None => "ok".into(),
            },
        });
        if let Some(e) = error {
            eprintln!("error: {} stopped: {e}", trace.algorithm);
            failed = true;
        }
    }
    let traces: Vec<&IterateTrace> = runs.iter().map(|(t, _)| t).collect();
    let written = std::fs::File::create(out.join("gaps.csv"))
        .map_err(csv::Error::from)
        .and_then(|f| output::write_gaps(f, &traces, f_star))
        .and_then(|_| std::fs::File::create(out.join("summary.csv")).map_err(csv::Error::from))
        .and_then(|f| output::write_summary(f, f_star, &rows));
    if let Err(e) = written {
        return config_error(format!("cannot write results to {}: {e}", out.display()));
    }
    if args.svg {
        let series: Vec<(&str, Vec<(usize, f64)>)> = traces
            .iter()
            .map(|t| {
                (
                    t.algorithm.name(),
                    t.records.iter().map(|r| (r.k, output::relative_gap(r.f_x, f_star))).collect(),
                )
            })
            .collect();
        if let Err(e) = std::fs::write(out.join("gaps.svg"), output::gap_svg(&series)) {
            return config_error(format!("cannot write gaps.svg: {e}"));
        }
    }

    println!("reference optimum f*: {f_star:e}");
    println!("{:<8} {:>6} {:>14} {:>12} {:>8}  status", "algo", "k", "final f", "rel. gap", "slope");
    for r in &rows {
        println!(
            "{:<8} {:>6} {:>14.6e} {:>12.3e} {:>8}  {}",
            r.algorithm,
            r.iterations,
            r.final_f,
            r.final_gap,
            r.slope.map_or("-".into(), |s| format!("{s:.3}")),
            r.status
        );
    }
    println!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    println!("output: {}", out.display());
    if failed {
        EXIT_BREAKDOWN
    } else {
        EXIT_OK
    }
}

fn suite_outcomes(
    suite: Suite,
    cfg: &ExperimentConfig,
    problem: &RobustComplianceProblem,
    x0: &[f64],
    seed: u64,
) -> crate::Result<Vec<PropertyOutcome>> {
    let obj = problem.objective();
    let set = problem.feasible();
    let all = suite == Suite::All;
    let mut out = Vec::new();
    if all || suite == Suite::Grad {
        out.push(checks::gradient_check(&obj, set, 20, &[1.0, 0.1, 0.01], seed)?);
    }
    if all || suite == Suite::Project {
        out.extend(checks::projection_check(6, 167, 6, seed)?);
    }
    if all || suite == Suite::Smoothing {
        out.push(checks::smoothing_check(&obj, set, 100, &[2.0, 1.0, 0.5, 0.1, 0.01, 0.0], seed)?);
    }
    if all || suite == Suite::Lyapunov {
        out.extend(checks::a_sequence_check(1_000_000));
        out.extend(checks::exact_lyapunov_checks(10_000)?);
        if cfg.run.surrogate_iters > 0 {
            let solver = cfg.solver(Algorithm::Sapg);
            out.extend(checks::truss_lyapunov(problem, &solver, x0, cfg.run.surrogate_iters)?.outcomes());
        }
    }
    Ok(out)
}

pub fn check(args: &CheckArgs) -> i32 {
    let cfg = match load(&args.config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let (problem, x0) = match build(&cfg) {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let suite: Suite = args.suite.into();
    let seed = args.seed.unwrap_or(cfg.run.seed);
    println!("# check suite={} seed={seed}", suite.name());
    match suite_outcomes(suite, &cfg, &problem, &x0, seed) {
        Ok(outcomes) => {
            for o in &outcomes {
                println!("{o}");
            }
            let failures = outcomes.iter().filter(|o| !o.passed).count();
            println!("# {} properties, {failures} failed", outcomes.len());
            if failures == 0 {
                EXIT_OK
            } else {
                EXIT_PROPERTY
            }
        }
        Err(e @ Error::NumericalBreakdown { .. }) => {
            eprintln!("error: {e}");
            EXIT_BREAKDOWN
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_PROPERTY
        }
    }
}

pub fn describe(args: &ConfigArg) -> i32 {
    let cfg = match load(args) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let inst = cfg.instance_config();
    let structure = match build_grid_ground_structure(&inst.grid, inst.young_modulus) {
        Ok(s) => s,
        Err(e) => return config_error(format!("[instance]: {e}")),
    };
    let columns = match inst.load_columns().and_then(|c| LoadUncertainty::new(&structure, &c)) {
        Ok(q) => q.columns(),
        Err(e) => return config_error(format!("[instance]: {e}")),
    };
    let total: f64 = structure.lengths().iter().sum();
    let min_volume = inst.x_min * total;
    println!("grid: {} x {} nodes, spacing {} m, level {}", inst.grid.cols, inst.grid.rows, inst.grid.spacing, inst.grid.level);
    println!("nodes: {}", structure.nodes().len());
    println!("bars (m): {}", structure.bar_count());
    println!("free dofs (d): {}", structure.free_dof_count());
    println!("load columns (n): {columns}");
    println!("loaded nodes: {:?}", inst.load_nodes);
    println!("total bar length: {total}");
    println!("minimum volume x_min*sum(l): {min_volume:e}");
    println!("volume budget V0: {}", inst.volume_budget);
    let feasible = BoxBudgetSet::new(structure.lengths().to_vec(), inst.volume_budget, inst.x_min).is_ok();
    println!("budget feasible: {}", if feasible { "yes" } else { "no" });
    if !feasible {
        println!("warning: the volume budget is below x_min*sum(l); the feasible set is empty");
    }
    EXIT_OK
}
