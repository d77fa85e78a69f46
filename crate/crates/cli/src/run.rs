//! Experiment orchestration: applies CLI overrides, owns the worker
//! pool, dispatches to the estimation modules, and emits the outputs.
//!
//! All estimation runs inside a local thread pool whose size comes from
//! the config (or the machine); results are collected in replica order,
//! so the emitted bytes are a pure function of the config and the
//! artifact version, independent of the worker count. File writing is
//! single-threaded and happens after all estimation is done.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mbpre_core::walk::ConditionParams;
use mbpre_core::{harmonic, survival, verify, walk, Real};
use serde_json::{json, Map, Value};

use crate::config::{self, Prepared};
use crate::report::{self, Csv, OutputFile};

/// A failure, split by exit code: validation problems exit with 1,
/// runtime problems with 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(msg) | CliError::Runtime(msg) => msg,
        }
    }
}

fn runtime(e: mbpre_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Values given on the command line, overriding the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub replicas: Option<u64>,
    pub workers: Option<usize>,
}

impl Overrides {
    fn echo(&self) -> Value {
        let mut map = Map::new();
        if let Some(seed) = self.seed {
            map.insert("seed".into(), json!(seed));
        }
        if let Some(out) = &self.out {
            map.insert("out".into(), json!(out.display().to_string()));
        }
        if let Some(replicas) = self.replicas {
            map.insert("replicas".into(), json!(replicas));
        }
        if let Some(workers) = self.workers {
            map.insert("workers".into(), json!(workers));
        }
        Value::Object(map)
    }
}

/// Runs one subcommand end to end and returns the output directory.
pub fn execute(
    invoked: &'static str,
    config_path: &Path,
    overrides: Overrides,
) -> Result<PathBuf, CliError> {
    let mut cfg = config::load_config(config_path, invoked).map_err(CliError::Validation)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.out = Some(out.clone());
    }
    if let Some(replicas) = overrides.replicas {
        cfg.replicas = replicas;
    }
    if let Some(workers) = overrides.workers {
        cfg.workers = Some(workers);
    }
    cfg.validate(invoked).map_err(CliError::Validation)?;
    let prepared = config::prepare(cfg).map_err(CliError::Validation)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(prepared.config.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))?;

    let started = Instant::now();
    let mut outputs = pool.install(|| dispatch(invoked, &prepared))?;
    if prepared.config.dump_laws {
        outputs.push(OutputFile::new(
            "laws.txt",
            config::law_tables(&prepared.model),
        ));
    }
    let wall_clock = started.elapsed().as_secs_f64();

    let config_echo =
        serde_json::to_value(&prepared.config).expect("config echo serialization cannot fail");
    let manifest = report::manifest(
        invoked,
        config_echo,
        overrides.echo(),
        prepared.config.seed,
        prepared.config.replicas,
        prepared.config.workers,
        wall_clock,
        &outputs,
    );
    let out_dir = prepared
        .config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    report::write_outputs(&out_dir, &outputs, &manifest).map_err(CliError::Runtime)?;
    Ok(out_dir)
}

fn dispatch(invoked: &'static str, prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    match invoked {
        "survival" => run_survival(prepared),
        "tau" => run_tau(prepared),
        "harmonic" => run_harmonic(prepared),
        "lyapunov" => run_lyapunov(prepared),
        "conditions" => run_conditions(prepared),
        "verify" => run_verify(prepared),
        other => Err(CliError::Validation(format!("unknown command '{other}'"))),
    }
}

fn summary_file(invoked: &str, summary: Value) -> OutputFile {
    OutputFile::new(
        format!("{invoked}_summary.json"),
        report::to_json_text(&summary),
    )
}

fn run_survival(prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    let cfg = &prepared.config;
    let estimator = cfg.estimator.as_deref().unwrap_or("gf");
    let scaling = match estimator {
        "population" => survival::population_survival(
            &prepared.model,
            prepared.parent_type,
            &cfg.n_grid,
            cfg.replicas,
            cfg.cap.unwrap_or(survival::DEFAULT_POPULATION_CAP),
            cfg.seed,
        ),
        _ => survival::annealed_survival(
            &prepared.model,
            prepared.parent_type,
            &cfg.n_grid,
            cfg.replicas,
            cfg.seed,
        ),
    }
    .map_err(runtime)?;

    let mut csv = Csv::new(&["type_i", "n", "p_hat", "stderr", "sqrt_n_p", "capped_fraction"]);
    for point in &scaling.points {
        csv.int_cell((scaling.type_index + 1) as u64)
            .int_cell(point.n as u64)
            .float_cell(point.p_hat)
            .float_cell(point.se)
            .float_cell(point.sqrt_n_p)
            .float_cell(point.capped_fraction);
        csv.end_row();
    }

    let mut summary = Map::new();
    summary.insert("command".into(), json!("survival"));
    summary.insert("estimator".into(), json!(estimator));
    summary.insert("type_i".into(), json!(scaling.type_index + 1));
    match survival::fit_beta(&scaling.points) {
        Ok(fit) => {
            summary.insert("slope".into(), json!(fit.slope));
            summary.insert("slope_ci_lo".into(), json!(fit.slope_ci.0));
            summary.insert("slope_ci_hi".into(), json!(fit.slope_ci.1));
            summary.insert("beta_hat".into(), json!(fit.beta_hat));
            summary.insert("beta_ci_lo".into(), json!(fit.beta_ci.0));
            summary.insert("beta_ci_hi".into(), json!(fit.beta_ci.1));
        }
        Err(e) => {
            summary.insert("fit_error".into(), json!(e.to_string()));
        }
    }

    Ok(vec![
        OutputFile::new("survival.csv", csv.finish()),
        summary_file("survival", Value::Object(summary)),
    ])
}

fn run_tau(prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    let cfg = &prepared.config;
    let sigma_replicas = cfg.sigma_replicas.unwrap_or(cfg.replicas);
    let mut reports = Vec::new();
    for (idx, &a) in cfg.start_levels().iter().enumerate() {
        let report = harmonic::tau_tail(
            &prepared.model,
            &prepared.x,
            a,
            &cfg.n_grid,
            cfg.replicas,
            sigma_replicas,
            None,
            cfg.seed.wrapping_add(idx as u64),
        )
        .map_err(runtime)?;
        reports.push(report);
    }

    let mut csv = Csv::new(&["x_id", "a", "n", "estimate", "stderr"]);
    for report in &reports {
        for point in &report.points {
            csv.str_cell(&prepared.x_id)
                .float_cell(report.a)
                .int_cell(point.n as u64)
                .float_cell(point.p_hat)
                .float_cell(point.se);
            csv.end_row();
        }
    }

    let per_a: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "a": r.a,
                "sigma2_hat": r.sigma2_hat,
                "sigma2_se": r.sigma2_se,
            })
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("command".into(), json!("tau"));
    summary.insert("h_hat".into(), Value::Null);
    summary.insert("sigma2_hat".into(), json!(reports[0].sigma2_hat));
    summary.insert("sigma2_se".into(), json!(reports[0].sigma2_se));
    summary.insert("d_hat".into(), Value::Null);
    summary.insert("c_upper".into(), Value::Null);
    match harmonic::fit_envelope(&reports) {
        Ok(fit) => {
            summary.insert("c_hat".into(), json!(fit.c_hat));
        }
        Err(e) => {
            summary.insert("c_hat".into(), Value::Null);
            summary.insert("fit_error".into(), json!(e.to_string()));
        }
    }
    summary.insert("per_a".into(), Value::Array(per_a));

    Ok(vec![
        OutputFile::new("tau.csv", csv.finish()),
        summary_file("tau", Value::Object(summary)),
    ])
}

fn run_harmonic(prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    let cfg = &prepared.config;
    let mut estimates = Vec::new();
    for (idx, &a) in cfg.start_levels().iter().enumerate() {
        let estimate = harmonic::estimate_h(
            &prepared.model,
            &prepared.x,
            a,
            &cfg.n_grid,
            cfg.replicas,
            cfg.seed.wrapping_add(idx as u64),
        )
        .map_err(runtime)?;
        estimates.push(estimate);
    }

    let mut csv = Csv::new(&["x_id", "a", "n", "estimate", "stderr"]);
    for estimate in &estimates {
        for point in &estimate.per_n {
            csv.str_cell(&prepared.x_id)
                .float_cell(estimate.a)
                .int_cell(point.n as u64)
                .float_cell(point.value)
                .float_cell(point.se);
            csv.end_row();
        }
    }

    let per_a: Vec<Value> = estimates
        .iter()
        .map(|e| {
            json!({
                "a": e.a,
                "h_hat": e.h_hat,
                "se": e.se,
                "stable": e.stable,
            })
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("command".into(), json!("harmonic"));
    summary.insert("h_hat".into(), json!(estimates[0].h_hat));
    summary.insert("h_se".into(), json!(estimates[0].se));
    summary.insert("stable".into(), json!(estimates[0].stable));
    summary.insert("sigma2_hat".into(), Value::Null);
    summary.insert("c_hat".into(), Value::Null);
    let points: Vec<(Real, Real)> = estimates.iter().map(|e| (e.a, e.h_hat)).collect();
    match harmonic::fit_h_bounds(&points) {
        Ok(bounds) => {
            summary.insert("d_hat".into(), json!(bounds.d_hat));
            summary.insert("c_upper".into(), json!(bounds.c_upper));
        }
        Err(e) => {
            summary.insert("d_hat".into(), Value::Null);
            summary.insert("c_upper".into(), Value::Null);
            summary.insert("fit_error".into(), json!(e.to_string()));
        }
    }
    summary.insert("per_a".into(), Value::Array(per_a));

    Ok(vec![
        OutputFile::new("harmonic.csv", csv.finish()),
        summary_file("harmonic", Value::Object(summary)),
    ])
}

fn run_lyapunov(prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    let cfg = &prepared.config;
    let n = *cfg.n_grid.last().expect("validated grid is nonempty");
    let estimate =
        walk::lyapunov(&prepared.model, &prepared.x, n, cfg.replicas, cfg.seed).map_err(runtime)?;

    let mut csv = Csv::new(&["quantity", "estimate", "stderr", "n", "replicas"]);
    csv.str_cell("Lyapunov exponent")
        .float_cell(estimate.pi_hat)
        .float_cell(estimate.se)
        .int_cell(estimate.n as u64)
        .int_cell(estimate.replicas);
    csv.end_row();

    let summary = json!({
        "command": "lyapunov",
        "pi_hat": estimate.pi_hat,
        "se": estimate.se,
        "n": estimate.n,
        "replicas": estimate.replicas,
    });

    Ok(vec![
        OutputFile::new("lyapunov.csv", csv.finish()),
        summary_file("lyapunov", summary),
    ])
}

fn run_conditions(prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    let cfg = &prepared.config;
    let defaults = ConditionParams::<Real>::default();
    let params = ConditionParams {
        eps_grid: cfg.eps_grid.clone().unwrap_or(defaults.eps_grid),
        delta_grid: cfg.delta_grid.clone().unwrap_or(defaults.delta_grid),
        lyapunov_n: cfg.lyapunov_n.unwrap_or(defaults.lyapunov_n),
        lyapunov_replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let report = walk::check_conditions(&prepared.model, &params).map_err(runtime)?;

    let mut csv = Csv::new(&["quantity", "estimate", "stderr", "n", "replicas"]);
    for row in &report.rows {
        csv.str_cell(&row.quantity)
            .float_cell(row.estimate)
            .float_cell(row.stderr)
            .int_cell(row.n as u64)
            .int_cell(row.replicas);
        csv.end_row();
    }

    let verdicts: Vec<Value> = report
        .verdicts
        .iter()
        .map(|(name, status)| json!({"condition": name, "status": status.to_string()}))
        .collect();
    let summary = json!({
        "command": "conditions",
        "all_satisfied": report.all_satisfied(),
        "verdicts": verdicts,
    });

    Ok(vec![
        OutputFile::new("conditions.csv", csv.finish()),
        OutputFile::new("conditions_report.txt", format!("{report}")),
        summary_file("conditions", summary),
    ])
}

fn run_verify(prepared: &Prepared) -> Result<Vec<OutputFile>, CliError> {
    let results = verify::run_verification::<Real>(prepared.config.seed);

    let mut csv = Csv::new(&["check_name", "instances", "violations", "max_slack", "worst_seed"]);
    for result in &results {
        csv.str_cell(result.check_name)
            .int_cell(result.instances)
            .int_cell(result.violations)
            .float_cell(result.max_slack)
            .int_cell(result.worst_seed);
        csv.end_row();
    }

    let total_violations: u64 = results.iter().map(|r| r.violations).sum();
    let summary = json!({
        "command": "verify",
        "campaigns": results.len(),
        "total_violations": total_violations,
        "all_passed": results.iter().all(|r| r.passed()),
    });

    Ok(vec![
        OutputFile::new("verify.csv", csv.finish()),
        summary_file("verify", summary),
    ])
}
