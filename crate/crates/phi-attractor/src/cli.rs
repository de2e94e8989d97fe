//! The `phi-lab` command line: configuration loading, dispatch and artifacts.
//!
//! Every subcommand reads an optional TOML file of the form
//!
//! ```toml
//! experiment = "sequence"   # optional, must match the subcommand
//! seed = 0
//! output_dir = "out/sequence"
//! [tolerances]
//! [params]
//! ```
//!
//! Values in the file take precedence over the matching flags. Unknown keys
//! are schema errors (exit 2). A run writes `manifest.json` with the fully
//! resolved configuration, `results.json`, and one CSV per data series. A
//! failed run exits with 1 and records the error in `results.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructor::{build_family, BuildOptions};
use crate::decay::{check_decay_condition, DecayFunction, Family as DecayFamily};
use crate::error::{Error, Result};
use crate::grid;
use crate::hilbert::{equality_witnesses, fuzz_cell, Which};
use crate::metric::{ball_measure_estimate, CoverMethod, NormTag};
use crate::nwe::contraction::{contraction_experiment, ContractionConfig};
use crate::nwe::energy::{energy_experiment, energy_from, parts, Bounds, EnergyExperimentConfig};
use crate::nwe::experiments::{
    absorbing_experiment, c_family, check_c_family, cocycle_check, lipschitz_probe, low_mode_state, mode_doubling,
    rate_experiment, step_halving, AbsorbingConfig, CFamilyConfig, RateConfig,
};
use crate::nwe::f::{validate_f_instance, SampleGrid};
use crate::nwe::{Model, NweConfig};
use crate::poly_rate::{check_sequence, sequence_table, UVSystem};
use crate::process::models::{AffineDiscrete, LinearFlow};
use crate::process::{
    ball_sample, check_eventual_compactness_route, check_positive_invariance, check_uniform_pullback_absorption,
    cube_sample, BallFamily, Process,
};

pub const THREADS_ENV: &str = "PHI_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "phi-lab", version, about = "Decay-rate pullback attractor laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate-ratio condition for the standard decay families.
    DecayCheck(Common),
    /// Covering radii of random ensembles, greedy against exact.
    Cover(Common),
    /// Invariance, absorption and the eventual-compactness route on a model process.
    ProcessCheck(Common),
    /// Discrete covering construction with its seven structural properties.
    AttractorBuild(Common),
    /// The `t_n = v^n(t_0)` sequence and its six items.
    Sequence(Common),
    /// Wave equation experiments.
    NweRun(NweArgs),
    /// Randomized power-map inequality tests.
    IneqTest(Common),
    /// Summarizes finished runs.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NweArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub experiment: Option<NweExperiment>,
    /// Writes the modal coefficients of the reference trajectory to this CSV.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Output directories of earlier runs.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, default_value = "out/report")]
    pub output_dir: PathBuf,
}

/// A CSV series.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub results: Value,
    pub tables: Vec<Table>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    params: Option<toml::Table>,
}

/// The fully resolved configuration echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig<P> {
    pub experiment: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
    pub params: P,
}

pub struct Ctx {
    pub seed: u64,
    pub tol: BTreeMap<String, f64>,
}

impl Ctx {
    fn tol(&self, name: &str) -> f64 {
        self.tol[name]
    }

    /// Module seed shifted by the run seed.
    fn seed(&self, local: u64) -> u64 {
        local.wrapping_add(self.seed)
    }
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Loads and resolves a configuration without running anything.
pub fn load_config<P: DeserializeOwned + Default>(
    name: &str,
    common: &Common,
    tolerance_defaults: &[(&str, f64)],
) -> Result<ExperimentConfig<P>> {
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| schema(e.to_string()))?
        }
        None => FileConfig { experiment: None, seed: None, output_dir: None, tolerances: BTreeMap::new(), params: None },
    };
    if let Some(e) = &file.experiment {
        if e != name {
            return Err(schema(format!("config is for experiment '{e}', not '{name}'")));
        }
    }
    let params: P = match file.params {
        Some(t) => toml::Value::Table(t).try_into().map_err(|e: toml::de::Error| schema(format!("params: {e}")))?,
        None => P::default(),
    };
    let mut tolerances: BTreeMap<String, f64> = tolerance_defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in file.tolerances {
        if !tolerances.contains_key(&k) {
            let known: Vec<&str> = tolerance_defaults.iter().map(|(k, _)| *k).collect();
            return Err(schema(format!("unknown tolerance '{k}' (known: {known:?})")));
        }
        if !(v >= 0.0) {
            return Err(schema(format!("tolerance '{k}' must be nonnegative")));
        }
        tolerances.insert(k, v);
    }
    Ok(ExperimentConfig {
        experiment: name.into(),
        seed: file.seed.or(common.seed).unwrap_or(0),
        output_dir: file.output_dir.or_else(|| common.output_dir.clone()).unwrap_or_else(|| Path::new("out").join(name)),
        tolerances,
        params,
    })
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_table(dir: &Path, t: &Table) -> Result<String> {
    let file = format!("{}.csv", t.name);
    let mut w = csv::Writer::from_path(dir.join(&file))?;
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(file)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::Blowup { .. } => "blowup",
        Error::PropertyViolated { .. } => "property_violated",
        Error::Rejected { .. } => "rejected",
        Error::Schema(_) => "schema",
        Error::Experiment(_) => "experiment",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

/// Runs one experiment body and writes its artifacts; returns the exit code.
fn execute<P, F>(name: &str, common: &Common, tolerance_defaults: &[(&str, f64)], body: F) -> i32
where
    P: DeserializeOwned + Serialize + Default,
    F: FnOnce(&mut P, &Ctx) -> Result<Outcome>,
{
    let mut cfg: ExperimentConfig<P> = match load_config(name, common, tolerance_defaults) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("phi-lab {name}: {e}");
            return 2;
        }
    };
    let dir = cfg.output_dir.clone();
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("phi-lab {name}: cannot create {}: {e}", dir.display());
        return 1;
    }
    let ctx = Ctx { seed: cfg.seed, tol: cfg.tolerances.clone() };
    let outcome = body(&mut cfg.params, &ctx);
    let (code, results, tables) = match outcome {
        Ok(o) => (0, json!({ "experiment": name, "status": "ok", "passed": o.passed, "results": o.results }), o.tables),
        Err(e) => {
            eprintln!("phi-lab {name}: {e}");
            let err = json!({ "kind": error_kind(&e), "message": e.to_string() });
            (1, json!({ "experiment": name, "status": "error", "error": err }), Vec::new())
        }
    };
    let written = (|| -> Result<Vec<String>> {
        let mut files = vec!["manifest.json".to_string(), "results.json".to_string()];
        for t in &tables {
            files.push(write_table(&dir, t)?);
        }
        write_json(&dir.join("results.json"), &results)?;
        let manifest = json!({
            "tool": "phi-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "threads_env": THREADS_ENV,
            "outputs": files,
        });
        write_json(&dir.join("manifest.json"), &manifest)?;
        Ok(files)
    })();
    match written {
        Ok(_) => code,
        Err(e) => {
            eprintln!("phi-lab {name}: cannot write artifacts: {e}");
            1
        }
    }
}

/// Parses arguments, sizes the thread pool and dispatches; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("phi-lab: {THREADS_ENV} must be a positive integer, got '{v}'");
                return 2;
            }
        }
    }
    run(&cli.command)
}

pub fn run(cmd: &Command) -> i32 {
    match cmd {
        Command::DecayCheck(c) => execute("decay-check", c, DECAY_TOLS, decay_check),
        Command::Cover(c) => execute("cover", c, COVER_TOLS, cover),
        Command::ProcessCheck(c) => execute("process-check", c, PROCESS_TOLS, process_check),
        Command::AttractorBuild(c) => execute("attractor-build", c, BUILD_TOLS, attractor_build),
        Command::Sequence(c) => execute("sequence", c, &[], sequence),
        Command::IneqTest(c) => execute("ineq-test", c, INEQ_TOLS, ineq_test),
        Command::NweRun(a) => {
            let flag = a.experiment;
            let dump = a.dump_state.clone();
            execute("nwe-run", &a.common, NWE_TOLS, move |p: &mut NweParams, ctx: &Ctx| {
                let which = *p.experiment.get_or_insert(flag.unwrap_or(NweExperiment::Trajectory));
                let out = nwe_run(which, p, ctx)?;
                if let Some(path) = &dump {
                    dump_state(p, ctx, path)?;
                }
                Ok(out)
            })
        }
        Command::Report(a) => report(a),
    }
}

const DECAY_TOLS: &[(&str, f64)] = &[("vanishing", 1e-6)];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayCheckParams {
    pub families: Vec<DecayFamily>,
    pub c: f64,
    pub beta: f64,
    pub omegas: Vec<f64>,
    pub etas: Vec<f64>,
    /// Shifts at which `t^{-t}` is expected to fail the condition.
    pub self_power_etas: Vec<f64>,
}

impl Default for DecayCheckParams {
    fn default() -> Self {
        DecayCheckParams {
            families: vec![DecayFamily::Exponential, DecayFamily::Polynomial, DecayFamily::Logarithmic],
            c: 1.0,
            beta: 1.0,
            omegas: vec![0.5, 1.0, 2.0],
            etas: vec![-3.0, 0.0, 3.0],
            self_power_etas: vec![-1.0],
        }
    }
}

fn decay_check(p: &mut DecayCheckParams, ctx: &Ctx) -> Result<Outcome> {
    let mut table = Table::new("cells", &["family", "omega", "eta", "bounded", "sup_ratio"]);
    let mut cells = Vec::new();
    let mut invariants = Vec::new();
    let mut bounded = true;
    let mut self_power_unbounded = true;
    let mut run = |label: &str, phi: &DecayFunction, omega: f64, eta: f64| -> Result<bool> {
        let g = phi.default_grid(omega, eta)?;
        let v = check_decay_condition(phi, omega, eta, &g)?;
        table.push(vec![label.into(), num(omega), num(eta), v.bounded.to_string(), num(v.sup_ratio)]);
        let b = v.bounded;
        cells.push(json!({ "family": label, "omega": omega, "eta": eta, "verdict": v }));
        Ok(b)
    };
    for fam in &p.families {
        let phi = DecayFunction::standard(*fam, p.c, p.beta)?;
        let label = serde_json::to_value(fam)?.as_str().unwrap_or("?").to_string();
        let g = grid::geometric(phi.domain_start.max(1.0), 1e6, 256)?;
        invariants.push(json!({ "family": label, "report": phi.check_invariants(&g, ctx.tol("vanishing")) }));
        for &omega in &p.omegas {
            for &eta in &p.etas {
                bounded &= run(&label, &phi, omega, eta)?;
            }
        }
    }
    let sp = DecayFunction::self_power();
    for &omega in &p.omegas {
        for &eta in &p.self_power_etas {
            self_power_unbounded &= !run("self_power", &sp, omega, eta)?;
        }
    }
    Ok(Outcome {
        passed: bounded && self_power_unbounded,
        results: json!({
            "bounded": bounded,
            "self_power_unbounded": self_power_unbounded,
            "invariants": invariants,
            "cells": cells,
        }),
        tables: vec![table],
    })
}

const COVER_TOLS: &[(&str, f64)] = &[("oracle", 1e-12)];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverParams {
    pub dim: usize,
    pub points: usize,
    pub radius: f64,
    pub ensembles: usize,
    pub budgets: Vec<usize>,
    pub size_limit: usize,
    pub seed: u64,
}

impl Default for CoverParams {
    fn default() -> Self {
        CoverParams { dim: 2, points: 12, radius: 1.0, ensembles: 8, budgets: vec![1, 2, 3, 4], size_limit: 12, seed: 1 }
    }
}

fn cover(p: &mut CoverParams, ctx: &Ctx) -> Result<Outcome> {
    let mut table = Table::new("radii", &["ensemble", "budget", "greedy", "exact", "lower", "upper"]);
    let mut worst_gap = f64::INFINITY;
    let mut cells = Vec::new();
    for i in 0..p.ensembles {
        let e = cube_sample(p.dim, p.radius, p.points, ctx.seed(p.seed).wrapping_add(i as u64))?;
        for &b in &p.budgets {
            let g = ball_measure_estimate(&e, CoverMethod::Greedy, b, p.size_limit)?;
            let x = ball_measure_estimate(&e, CoverMethod::Exact, b, p.size_limit)?;
            worst_gap = worst_gap.min(g.radius - x.radius);
            table.push(vec![
                i.to_string(),
                b.to_string(),
                num(g.radius),
                num(x.radius),
                num(x.lower_bracket),
                num(x.upper_bracket),
            ]);
            cells.push(json!({ "ensemble": i, "budget": b, "greedy": g.radius, "exact": x.radius,
                "bracket": [x.lower_bracket, x.upper_bracket] }));
        }
    }
    let passed = worst_gap >= -ctx.tol("oracle");
    Ok(Outcome {
        passed,
        results: json!({ "greedy_dominates_exact": passed, "min_greedy_minus_exact": worst_gap, "cells": cells }),
        tables: vec![table],
    })
}

const PROCESS_TOLS: &[(&str, f64)] = &[("inclusion", 1e-8)];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessModel {
    /// Planar contracting affine map with cosine forcing, discrete time.
    Affine { amp: f64 },
    /// `x' = rate x` in one dimension.
    ScalarFlow { rate: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessCheckParams {
    pub model: ProcessModel,
    pub ball_radius: f64,
    pub ball_points: usize,
    pub d_radius: f64,
    pub d_points: usize,
    pub labels: Vec<f64>,
    pub lag_grid: Vec<f64>,
    pub tau: f64,
    pub sigma_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for ProcessCheckParams {
    fn default() -> Self {
        ProcessCheckParams {
            model: ProcessModel::Affine { amp: 0.3 },
            ball_radius: 5.0,
            ball_points: 32,
            d_radius: 50.0,
            d_points: 16,
            labels: (-5..=0).map(f64::from).collect(),
            lag_grid: (1..=30).map(f64::from).collect(),
            tau: 5.0,
            sigma_grid: (0..=10).map(f64::from).collect(),
            seed: 3,
        }
    }
}

fn process_check(p: &mut ProcessCheckParams, ctx: &Ctx) -> Result<Outcome> {
    let proc: Box<dyn Process> = match p.model {
        ProcessModel::Affine { amp } => Box::new(AffineDiscrete::contracting_2d(amp)),
        ProcessModel::ScalarFlow { rate } => Box::new(LinearFlow::scalar(rate)),
    };
    let dim = match p.model {
        ProcessModel::Affine { .. } => 2,
        ProcessModel::ScalarFlow { .. } => 1,
    };
    let tol = ctx.tol("inclusion");
    let zero = vec![0.0; dim];
    let b = BallFamily::new(zero.clone(), p.ball_radius, NormTag::Euclidean, p.ball_points, ctx.seed(p.seed))?;
    let d = ball_sample(&zero, p.d_radius, &NormTag::Euclidean, p.d_points, ctx.seed(p.seed).wrapping_add(1))?;
    let invariance = check_positive_invariance(proc.as_ref(), &b, &p.labels, tol)?;
    let t = p.labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let absorption = check_uniform_pullback_absorption(proc.as_ref(), &b, &d, t, &p.labels, &p.lag_grid, tol)?;
    let m = check_eventual_compactness_route(proc.as_ref(), &b, &p.labels, p.tau, &p.sigma_grid, p.ball_radius + tol)?;
    let mut table = Table::new("absorption", &["lag", "excess"]);
    for (r, e) in &absorption.excess_by_lag {
        table.push(vec![num(*r), num(*e)]);
    }
    let m_sizes: Vec<Value> = m
        .label_set()
        .iter()
        .zip(m.members())
        .map(|(t, e)| json!({ "t": t, "points": e.len(), "max_norm": e.max_norm() }))
        .collect();
    Ok(Outcome {
        passed: invariance.holds && absorption.t_found.is_some(),
        results: json!({ "invariance": invariance, "absorption": absorption, "compact_route": m_sizes }),
        tables: vec![table],
    })
}

const BUILD_TOLS: &[(&str, f64)] = &[("property", 1e-8)];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttractorBuildParams {
    pub amp: f64,
    pub ball_radius: f64,
    pub ball_points: usize,
    pub k_min: i64,
    pub k_max: i64,
    pub n_cut: usize,
    pub budget: usize,
    /// Contraction rate of the map, `-ln |A|`.
    pub omega: f64,
    pub phi_c: f64,
    pub phi_beta: f64,
    /// Largest probed lag; filled with `2 N_cut + 2` when absent.
    pub m_probe: Option<usize>,
    pub seed: u64,
}

impl Default for AttractorBuildParams {
    fn default() -> Self {
        AttractorBuildParams {
            amp: 0.3,
            ball_radius: 1.0,
            ball_points: 40,
            k_min: -10,
            k_max: 0,
            n_cut: 6,
            budget: 8,
            omega: -(0.5f64 * 1.25f64.sqrt()).ln(),
            phi_c: 1.0,
            phi_beta: 1.0,
            m_probe: None,
            seed: 3,
        }
    }
}

fn attractor_build(p: &mut AttractorBuildParams, ctx: &Ctx) -> Result<Outcome> {
    p.m_probe.get_or_insert(2 * p.n_cut + 2);
    let proc = AffineDiscrete::contracting_2d(p.amp);
    let b = BallFamily::new(vec![0.0, 0.0], p.ball_radius, NormTag::Euclidean, p.ball_points, ctx.seed(p.seed))?;
    let phi = DecayFunction::standard(DecayFamily::Exponential, p.phi_c, p.phi_beta)?;
    let opts = BuildOptions { m_probe: p.m_probe, ..BuildOptions::new(p.k_min, p.k_max, p.n_cut, p.budget, p.omega) };
    let (fam, report) = build_family(&proc, &b, &phi, &opts, ctx.tol("property"))?;
    let mut table = Table::new("members", &["k", "points", "max_norm", "diameter"]);
    for k in fam.k_range() {
        let e = fam.e_set(k)?;
        table.push(vec![k.to_string(), e.len().to_string(), num(e.max_norm()), num(e.diameter())]);
    }
    Ok(Outcome {
        passed: report.all_hold(),
        results: json!({ "c_const": fam.c_const, "total_points": fam.total_points(), "properties": report }),
        tables: vec![table],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceParams {
    /// Values of `3C`.
    pub three_c: Vec<f64>,
    pub betas: Vec<f64>,
    pub t0s: Vec<f64>,
    pub n: usize,
}

impl Default for SequenceParams {
    fn default() -> Self {
        SequenceParams { three_c: vec![1.0, 2.0, 5.0], betas: vec![0.3, 0.5, 0.8], t0s: vec![0.5, 1.0, 10.0], n: 500 }
    }
}

fn sequence(p: &mut SequenceParams, _ctx: &Ctx) -> Result<Outcome> {
    let mut table = Table::new("sequence", &["three_c", "beta", "t0", "n", "t_n", "envelope"]);
    let mut cells = Vec::new();
    let mut all = true;
    for &tc in &p.three_c {
        for &beta in &p.betas {
            let sys = UVSystem::new(tc / 3.0, beta)?;
            for &t0 in &p.t0s {
                let rep = check_sequence(&sys, t0, p.n)?;
                all &= rep.all_hold();
                for (n, t, env) in sequence_table(&sys, t0, p.n)? {
                    table.push(vec![num(tc), num(beta), num(t0), n.to_string(), num(t), num(env)]);
                }
                cells.push(json!({ "three_c": tc, "beta": beta, "t0": t0, "report": rep, "all_hold": rep.all_hold() }));
            }
        }
    }
    Ok(Outcome { passed: all, results: json!({ "all_hold": all, "cells": cells }), tables: vec![table] })
}

const INEQ_TOLS: &[(&str, f64)] = &[("equality", 1e-12)];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IneqParams {
    pub which: Vec<Which>,
    pub dims: Vec<usize>,
    pub ps: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for IneqParams {
    fn default() -> Self {
        IneqParams {
            which: vec![Which::Lipschitz, Which::Monotone],
            dims: vec![1, 2, 3, 10],
            ps: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            samples: 100_000,
            seed: 7,
        }
    }
}

fn ineq_test(p: &mut IneqParams, ctx: &Ctx) -> Result<Outcome> {
    let mut table = Table::new("cells", &["which", "dim", "p", "samples", "violations", "worst_gap"]);
    let mut cells = Vec::new();
    let mut violations = 0;
    for (wi, &which) in p.which.iter().enumerate() {
        for (di, &dim) in p.dims.iter().enumerate() {
            for (pi, &pp) in p.ps.iter().enumerate() {
                let seed = ctx.seed(p.seed).wrapping_add((wi * 10_000 + di * 100 + pi) as u64);
                let c = fuzz_cell(which, dim, pp, p.samples, seed);
                violations += c.violations;
                let name = serde_json::to_value(which)?.as_str().unwrap_or("?").to_string();
                table.push(vec![name, dim.to_string(), num(pp), c.samples.to_string(), c.violations.to_string(), num(c.worst_gap)]);
                cells.push(c);
            }
        }
    }
    let positive: Vec<f64> = p.ps.iter().copied().filter(|&x| x > 0.0).collect();
    let witnesses = equality_witnesses(&p.dims, &positive, ctx.seed(p.seed));
    let worst_witness = witnesses.iter().map(|w| w.residual).fold(0.0, f64::max);
    let passed = violations == 0 && worst_witness <= ctx.tol("equality");
    Ok(Outcome {
        passed,
        results: json!({ "violations": violations, "worst_witness_residual": worst_witness,
            "witnesses": witnesses, "cells": cells }),
        tables: vec![table],
    })
}

const NWE_TOLS: &[(&str, f64)] = &[
    ("cocycle", 1e-6),
    ("halving_ratio", 8.0),
    ("mode_doubling", 0.01),
    ("plateau_spread", 0.1),
    ("absorption", 1e-3),
    ("tail", 1e-3),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NweExperiment {
    ValidateF,
    Trajectory,
    WellPosedness,
    Energy,
    Absorbing,
    Contraction,
    Lipschitz,
    Rate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryParams {
    pub radius: f64,
    pub horizon: f64,
    pub every: f64,
    pub seed: u64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        TrajectoryParams { radius: 5.0, horizon: 20.0, every: 0.5, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WellPosednessParams {
    pub cocycle_triples: usize,
    pub cocycle_radius: f64,
    pub cocycle_dt: f64,
    pub halving_dt: f64,
    pub halving_horizon: f64,
    pub halving_radius: f64,
    /// Number of low modes carrying the initial data of the halving and doubling runs.
    pub excited_modes: usize,
    pub doubling_modes: usize,
    pub doubling_horizon: f64,
    pub doubling_every: f64,
    pub seed: u64,
}

impl Default for WellPosednessParams {
    fn default() -> Self {
        WellPosednessParams {
            cocycle_triples: 16,
            cocycle_radius: 5.0,
            cocycle_dt: 1e-3,
            halving_dt: 0.02,
            halving_horizon: 10.0,
            halving_radius: 1.0,
            excited_modes: 4,
            doubling_modes: 32,
            doubling_horizon: 20.0,
            doubling_every: 0.5,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CFamilyParams {
    pub grid_step: f64,
    pub first_start: f64,
    pub labels: Vec<f64>,
    pub points: usize,
    pub d_radius: f64,
    pub d_points: usize,
    pub lag_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for CFamilyParams {
    fn default() -> Self {
        let c = CFamilyConfig::new(1.0, 1.0);
        CFamilyParams {
            grid_step: c.grid_step,
            first_start: c.first_start,
            labels: c.labels,
            points: c.points,
            d_radius: 20.0,
            d_points: 4,
            lag_grid: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzParams {
    pub s: f64,
    pub tau_max: f64,
    pub radius: f64,
    pub pairs: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for LipschitzParams {
    fn default() -> Self {
        LipschitzParams { s: 0.0, tau_max: 5.0, radius: 1.0, pairs: 16, samples: 20, seed: 9 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NweParams {
    pub experiment: Option<NweExperiment>,
    pub model: NweConfig,
    pub trajectory: TrajectoryParams,
    pub well_posedness: WellPosednessParams,
    pub energy: EnergyExperimentConfig,
    pub absorbing: AbsorbingConfig,
    pub c_family: CFamilyParams,
    pub contraction: ContractionConfig,
    pub lipschitz: LipschitzParams,
    pub rate: RateConfig,
}

fn reference_trajectory(p: &NweParams, ctx: &Ctx) -> Result<(Model, Vec<f64>, Vec<Vec<f64>>)> {
    let tp = &p.trajectory;
    let m = Model::new(&p.model)?;
    let start = ball_sample(&vec![0.0; m.dim()], tp.radius, &m.x_norm_tag(), 2, ctx.seed(tp.seed))?.points[1].clone();
    let steps = (tp.horizon / tp.every).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * tp.every).collect();
    let states = m.trajectory(0.0, &start, &times)?;
    Ok((m, times, states))
}

fn dump_state(p: &NweParams, ctx: &Ctx, path: &Path) -> Result<()> {
    let (m, times, states) = reference_trajectory(p, ctx)?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=m.n).map(|k| format!("a{k}")));
    header.extend((1..=m.n).map(|k| format!("b{k}")));
    w.write_record(&header)?;
    for (t, x) in times.iter().zip(&states) {
        let mut row = vec![num(*t)];
        row.extend(x.iter().map(|v| num(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn nwe_run(which: NweExperiment, p: &NweParams, ctx: &Ctx) -> Result<Outcome> {
    let cfg = &p.model;
    match which {
        NweExperiment::ValidateF => {
            let rep = validate_f_instance(cfg, &SampleGrid::default())?;
            Ok(Outcome { passed: true, results: serde_json::to_value(rep)?, tables: Vec::new() })
        }
        NweExperiment::Trajectory => {
            let (m, times, states) = reference_trajectory(p, ctx)?;
            let c0 = Bounds::from_config(cfg).ok().map(|b| b.f.big_c0);
            let mut table = Table::new("trajectory", &["t", "x_norm", "energy"]);
            for (t, x) in times.iter().zip(&states) {
                let e = c0.map(|c| energy_from(cfg, &parts(&m, *t, x), c));
                table.push(vec![num(*t), num(m.x_norm(x)), e.map(num).unwrap_or_default()]);
            }
            let last = states.last().expect("nonempty trajectory");
            Ok(Outcome {
                passed: true,
                results: json!({ "final_time": times.last(), "final_x_norm": m.x_norm(last), "final_state": last }),
                tables: vec![table],
            })
        }
        NweExperiment::WellPosedness => {
            let w = &p.well_posedness;
            let fine = NweConfig { dt: w.cocycle_dt, ..cfg.clone() };
            let cocycle = cocycle_check(&fine, w.cocycle_triples, w.cocycle_radius, ctx.seed(w.seed))?;
            let m = Model::new(cfg)?;
            let x = low_mode_state(&m, w.excited_modes, w.halving_radius, ctx.seed(w.seed).wrapping_add(1));
            let halving = step_halving(cfg, &x, w.halving_horizon, w.halving_dt)?;
            let small = NweConfig { modes: w.doubling_modes, ..cfg.clone() };
            let ms = Model::new(&small)?;
            let xs = low_mode_state(&ms, w.excited_modes, w.halving_radius, ctx.seed(w.seed).wrapping_add(2));
            let doubling = mode_doubling(&small, &xs, w.doubling_horizon, w.doubling_every)?;
            let mut table = Table::new("mode_doubling", &["t", "energy_n", "energy_2n"]);
            for (t, a, b) in &doubling.samples {
                table.push(vec![num(*t), num(*a), num(*b)]);
            }
            let ok_c = cocycle.worst < ctx.tol("cocycle");
            let ok_h = halving.ratio >= ctx.tol("halving_ratio");
            let ok_d = doubling.worst_relative_change < ctx.tol("mode_doubling");
            Ok(Outcome {
                passed: ok_c && ok_h && ok_d,
                results: json!({
                    "cocycle": { "worst": cocycle.worst, "holds": ok_c, "triples": cocycle.triples },
                    "step_halving": { "report": halving, "holds": ok_h },
                    "mode_doubling": {
                        "modes": doubling.modes,
                        "worst_relative_change": doubling.worst_relative_change,
                        "worst_relative_change_dynamic": doubling.worst_relative_change_dynamic,
                        "holds": ok_d,
                    },
                }),
                tables: vec![table],
            })
        }
        NweExperiment::Energy => {
            let opts = EnergyExperimentConfig { seed: ctx.seed(p.energy.seed), ..p.energy.clone() };
            let r = energy_experiment(cfg, &opts)?;
            let mut table = Table::new("theta", &["sigma", "theta"]);
            for (s, t) in &r.theta_table {
                table.push(vec![num(*s), num(*t)]);
            }
            Ok(Outcome { passed: r.zero_violations(), results: serde_json::to_value(&r)?, tables: vec![table] })
        }
        NweExperiment::Absorbing => {
            let opts = AbsorbingConfig { seed: ctx.seed(p.absorbing.seed), ..p.absorbing.clone() };
            let a = absorbing_experiment(cfg, &opts)?;
            let tau1 = a.runs.iter().filter_map(|r| r.tau0).fold(0.0, f64::max);
            let cp = &p.c_family;
            let copts = CFamilyConfig {
                grid_step: cp.grid_step,
                first_start: cp.first_start,
                labels: cp.labels.clone(),
                points: cp.points,
                seed: ctx.seed(cp.seed),
                ..CFamilyConfig::new(a.r0, tau1)
            };
            let fam = c_family(cfg, &copts)?;
            let tol = ctx.tol("absorption");
            let check = check_c_family(cfg, &fam, a.r0, cp.d_radius, cp.d_points, &cp.lag_grid, tol)?;
            let mut table = Table::new("plateaus", &["radius", "plateau", "tau0"]);
            for r in &a.runs {
                table.push(vec![num(r.radius), num(r.plateau), r.tau0.map(num).unwrap_or_default()]);
            }
            let spread_ok = a.spread < ctx.tol("plateau_spread");
            Ok(Outcome {
                passed: spread_ok && !a.inconclusive && check.all_hold(),
                results: json!({ "plateau": a, "spread_ok": spread_ok, "tau1": tau1, "c_family": check,
                    "c_family_all_hold": check.all_hold() }),
                tables: vec![table],
            })
        }
        NweExperiment::Contraction => {
            let opts = ContractionConfig { seed: ctx.seed(p.contraction.seed), ..p.contraction.clone() };
            let r = contraction_experiment(cfg, &opts)?;
            let tail = ctx.tol("tail");
            let passed = r.inequality_violations == 0
                && r.rho1_axioms.ok()
                && r.rho2_axioms.ok()
                && r.psi1_scan.min_tail_value < tail
                && r.psi2_scan.min_tail_value < tail;
            Ok(Outcome { passed, results: serde_json::to_value(&r)?, tables: Vec::new() })
        }
        NweExperiment::Lipschitz => {
            let l = &p.lipschitz;
            let r = lipschitz_probe(cfg, l.s, l.tau_max, l.radius, l.pairs, l.samples, ctx.seed(l.seed))?;
            let mut table = Table::new("lipschitz", &["tau", "l_tau"]);
            for (t, v) in &r.l_tau {
                table.push(vec![num(*t), num(*v)]);
            }
            Ok(Outcome { passed: true, results: serde_json::to_value(&r)?, tables: vec![table] })
        }
        NweExperiment::Rate => {
            let opts = RateConfig { seed: ctx.seed(p.rate.seed), ..p.rate.clone() };
            let r = rate_experiment(&opts)?;
            let mut table = Table::new("attraction", &["p", "tau", "h"]);
            for run in &r.runs {
                for (tau, h) in &run.certificate.samples {
                    table.push(vec![num(run.p), num(*tau), num(*h)]);
                }
            }
            let p2 = r.runs.iter().find(|x| x.p == 2.0);
            let cert_ok = p2.is_some_and(|x| x.certificate.valid && x.certificate.margin > 0.0);
            Ok(Outcome {
                passed: cert_ok && r.slopes_ordered,
                results: serde_json::to_value(&r)?,
                tables: vec![table],
            })
        }
    }
}

fn report(a: &ReportArgs) -> i32 {
    let mut rows = Vec::new();
    for dir in &a.runs {
        let read = |f: &str| -> std::result::Result<Value, String> {
            let text = fs::read_to_string(dir.join(f)).map_err(|e| format!("{}: {e}", dir.join(f).display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", dir.join(f).display()))
        };
        let (manifest, results) = match (read("manifest.json"), read("results.json")) {
            (Ok(m), Ok(r)) => (m, r),
            (Err(e), _) | (_, Err(e)) => {
                eprintln!("phi-lab report: {e}");
                return 2;
            }
        };
        rows.push(json!({
            "run": dir.display().to_string(),
            "experiment": results["experiment"],
            "status": results["status"],
            "passed": results["passed"],
            "seed": manifest["config"]["seed"],
            "outputs": manifest["outputs"],
        }));
    }
    let written = (|| -> Result<()> {
        fs::create_dir_all(&a.output_dir)?;
        let mut t = Table::new("report", &["run", "experiment", "status", "passed"]);
        for r in &rows {
            let s = |k: &str| match &r[k] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                v => v.to_string(),
            };
            t.push(vec![s("run"), s("experiment"), s("status"), s("passed")]);
        }
        write_table(&a.output_dir, &t)?;
        let all = rows.iter().all(|r| r["status"] == "ok" && r["passed"] == true);
        write_json(&a.output_dir.join("report.json"), &json!({ "runs": rows, "all_passed": all }))
    })();
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("phi-lab report: {e}");
            1
        }
    }
}
