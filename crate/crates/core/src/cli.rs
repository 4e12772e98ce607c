//! `zeno` command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed or the computation errored,
//! 2 the configuration or command line could not be used.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ComplexMatrixRepr};
use crate::models::{DecompositionPattern, ModelFamily, ModelSpec};
use crate::propagate::{
    default_probe_time, task_seed, write_transition_csv, MeasurementDesign, RateMode,
    DEFAULT_T_NORM,
};
use crate::superop::{
    compatibility_threshold, spectral_spread, verify_noise_compatibility, QuantumModel,
    ZenoDecomposition,
};
use crate::witness::{
    constraint_residuals, design_measurement, modulation_matrix, oracle_report, pseudoinverse_w,
    run_pipeline, run_pipeline_detailed, singular_range, WitnessReport,
};

/// Shots used in sampled mode when neither the config nor `--shots` sets them.
pub const DEFAULT_SHOTS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "zeno",
    version,
    about = "Coherence witnesses from Zeno-driven population rates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for output files (stdout when absent).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Rate estimation mode.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,

    /// Shots per preparation in sampled mode.
    #[arg(long, global = true)]
    pub shots: Option<u64>,

    /// Base seed for sampled mode.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check noise compatibility and design conditioning.
    Verify,
    /// Simulate the protocol and extract the witness.
    Run,
    /// Ground-truth report computed from the Hamiltonian.
    Oracle,
    /// Evaluate a parameter grid and write one CSV row per point.
    Sweep {
        /// Grid axis as KEY=v1,v2,... (repeatable).
        #[arg(long = "grid", value_name = "KEY=V1,V2,...")]
        grid: Vec<String>,
        /// Skip the simulated pipeline and report oracle values only.
        #[arg(long)]
        oracle_only: bool,
    },
    /// Emit plot data for one of the standard figures.
    Figure {
        #[arg(value_enum)]
        name: FigureName,
        /// Add a simulated-pipeline Ω series next to the oracle one.
        #[arg(long)]
        overlay: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Fd,
    Smalltime,
    Sampled,
}

impl From<ModeArg> for RateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => RateMode::Exact,
            ModeArg::Fd => RateMode::FiniteDifference,
            ModeArg::Smalltime => RateMode::Smalltime,
            ModeArg::Sampled => RateMode::Sampled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Spec(ModelSpec),
    Inline(QuantumModel),
}

/// Automatic or explicit measurement design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignConfig {
    Auto {
        /// Probe time; `t_norm/‖𝓛‖₂` when absent.
        #[serde(default)]
        t: Option<f64>,
        #[serde(default)]
        k_span: Option<[f64; 2]>,
    },
    Explicit(MeasurementDesign),
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig::Auto {
            t: None,
            k_span: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSource,
    /// Required for inline models; overrides the family's pattern otherwise.
    #[serde(default)]
    pub decomposition: Option<ZenoDecomposition>,
    /// Basis change applied to the model before measuring (`H → U†HU`).
    #[serde(default)]
    pub unitary: Option<ComplexMatrixRepr>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub rate_mode: Option<RateMode>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub fd_step: Option<f64>,
    /// Probe time in units of `1/‖𝓛‖₂` for automatic designs.
    #[serde(default)]
    pub t_norm: Option<f64>,
}

impl RunConfig {
    pub fn from_spec(spec: ModelSpec) -> Self {
        RunConfig {
            model: ModelSource::Spec(spec),
            decomposition: None,
            unitary: None,
            design: DesignConfig::default(),
            rate_mode: None,
            seed: None,
            shots: None,
            fd_step: None,
            t_norm: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Model (conjugated by `unitary` if given) and decomposition.
    pub fn problem(&self) -> Result<(QuantumModel, ZenoDecomposition)> {
        let (model, decomp) = match &self.model {
            ModelSource::Spec(spec) => {
                let model = spec.build_model()?;
                let decomp = match &self.decomposition {
                    Some(d) => d.clone(),
                    None => spec.build_decomposition()?,
                };
                (model, decomp)
            }
            ModelSource::Inline(model) => {
                let decomp = self.decomposition.clone().ok_or_else(|| {
                    Error::Config("inline models need an explicit decomposition".into())
                })?;
                (model.clone(), decomp)
            }
        };
        decomp.check_dim(model.dim())?;
        let model = match &self.unitary {
            Some(u) => model.conjugated(&CMatrix::try_from(u.clone())?)?,
            None => model,
        };
        Ok((model, decomp))
    }

    /// Measurement design with command-line overrides applied.
    pub fn design(
        &self,
        model: &QuantumModel,
        decomp: &ZenoDecomposition,
        ov: &Overrides,
    ) -> Result<MeasurementDesign> {
        let mut design = match &self.design {
            DesignConfig::Explicit(d) => d.clone(),
            DesignConfig::Auto { t, k_span } => {
                let t = match t {
                    Some(t) => *t,
                    None => default_probe_time(model, Some(self.t_norm.unwrap_or(DEFAULT_T_NORM)))?,
                };
                design_measurement(decomp.n(), t, k_span.map(|[a, b]| (a, b)))?
            }
        };
        if let Some(mode) = ov.mode.or(self.rate_mode) {
            design.rate_mode = mode;
        }
        if let Some(seed) = ov.seed.or(self.seed) {
            design.seed = seed;
        }
        if let Some(shots) = ov.shots.or(self.shots) {
            design.shots = shots;
        }
        if let Some(h) = self.fd_step {
            design.fd_step = Some(h);
        }
        if design.rate_mode == RateMode::Sampled {
            if design.shots == 0 {
                design.shots = DEFAULT_SHOTS;
            }
            // sampling noise scales like 1/h, so sampled runs default to a wide stencil
            if design.fd_step.is_none() {
                design.fd_step = Some(0.5 * design.t);
            }
        }
        design.validate()?;
        Ok(design)
    }
}

/// Settings given on the command line that take precedence over the config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<RateMode>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode.map(Into::into),
            seed: self.seed,
            shots: self.shots,
        }
    }
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

/// Run a parsed command line, writing human-readable output to `stdout`.
/// Returns the process exit code.
pub fn execute<W: Write>(cli: &Cli, stdout: &mut W) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    let mut buf = Vec::new();
    let outcome = pool.install(|| dispatch(cli, &mut buf));
    if let Err(e) = stdout.write_all(&buf).and_then(|_| stdout.flush()) {
        eprintln!("error: cannot write output: {e}");
        return 1;
    }
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch<W: Write>(cli: &Cli, stdout: &mut W) -> std::result::Result<i32, Failure> {
    match &cli.command {
        Command::Verify => {
            let config = require_config(cli)?;
            let (code, text) = verify(&config, &cli.overrides())?;
            emit(cli, stdout, "verify.txt", text.as_bytes())?;
            Ok(code)
        }
        Command::Run => {
            let config = require_config(cli)?;
            let (model, decomp) = config.problem()?;
            let design = config.design(&model, &decomp, &cli.overrides())?;
            info!(
                "running {} mode with |K| = {}",
                design.rate_mode,
                design.k_set.len()
            );
            let run = run_pipeline_detailed(&model, &decomp, &design)?;
            let mut report = run.report;
            report.ground_truth = oracle_report(&model, &decomp)?.ground_truth;
            write_report(cli, stdout, "report", &report)?;
            if let Some(dir) = &cli.out {
                let mut buf = Vec::new();
                write_transition_csv(&run.transitions, &mut buf)?;
                write_file(dir, "transitions.csv", &buf)?;
                writeln!(stdout, "{}", summary(&report)).map_err(Error::from)?;
            }
            Ok(0)
        }
        Command::Oracle => {
            let config = require_config(cli)?;
            let (model, decomp) = config.problem()?;
            let report = oracle_report(&model, &decomp)?;
            write_report(cli, stdout, "oracle", &report)?;
            if cli.out.is_some() {
                writeln!(stdout, "{}", summary(&report)).map_err(Error::from)?;
            }
            Ok(0)
        }
        Command::Sweep { grid, oracle_only } => {
            let config = require_config(cli)?;
            let axes = parse_grid(grid)?;
            let csv = sweep(&config, &axes, &cli.overrides(), *oracle_only)?;
            emit(cli, stdout, "sweep.csv", csv.as_bytes())?;
            Ok(0)
        }
        Command::Figure { name, overlay } => {
            let base = match &cli.config {
                Some(path) => match RunConfig::load(path)?.model {
                    ModelSource::Spec(spec) => Some(spec),
                    ModelSource::Inline(_) => {
                        return Err(Failure::Usage(
                            "figures need a model spec, not an inline model".into(),
                        ))
                    }
                },
                None => None,
            };
            let overlay = overlay.then(|| cli.overrides());
            let csv = figure(*name, base.as_ref(), overlay)?;
            let file = format!("{}.csv", format!("{name:?}").to_lowercase());
            emit(cli, stdout, &file, csv.as_bytes())?;
            Ok(0)
        }
    }
}

fn require_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs --config PATH".into()))?;
    Ok(RunConfig::load(path)?)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn emit<W: Write>(cli: &Cli, stdout: &mut W, name: &str, bytes: &[u8]) -> Result<()> {
    match &cli.out {
        Some(dir) => write_file(dir, name, bytes),
        None => Ok(stdout.write_all(bytes)?),
    }
}

fn write_report<W: Write>(
    cli: &Cli,
    stdout: &mut W,
    stem: &str,
    report: &WitnessReport,
) -> Result<()> {
    let mut json = report.to_json()?;
    json.push('\n');
    match &cli.out {
        Some(dir) => {
            write_file(dir, &format!("{stem}.json"), json.as_bytes())?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            write_file(dir, &format!("{stem}.csv"), &buf)
        }
        None => Ok(stdout.write_all(json.as_bytes())?),
    }
}

fn summary(report: &WitnessReport) -> String {
    let mut s = format!("omega = {:.6e}", report.omega);
    if let Some(se) = report.omega_stderr {
        let _ = write!(s, " ± {se:.2e}");
    }
    if let Some(truth) = &report.ground_truth {
        let _ = write!(
            s,
            ", oracle omega = {:.6e}, spectral spread = {:.6e}",
            truth.omega, truth.spectral_spread
        );
    }
    s
}

/// Compatibility and design checks; returns the exit code and the report text.
pub fn verify(config: &RunConfig, ov: &Overrides) -> Result<(i32, String)> {
    let (model, decomp) = config.problem()?;
    let mut ok = true;
    let mut out = String::new();
    let residual = verify_noise_compatibility(&model, &decomp)?;
    let threshold = compatibility_threshold(&model, None);
    let compatible = residual <= threshold;
    ok &= compatible;
    let _ = writeln!(out, "dimension: {}", model.dim());
    let _ = writeln!(out, "blocks: {:?}", decomp.one_based_blocks());
    let _ = writeln!(
        out,
        "noise compatibility residual: {residual:.3e} (threshold {threshold:.3e}) {}",
        if compatible { "ok" } else { "VIOLATED" }
    );
    match config.design(&model, &decomp, ov) {
        Ok(design) => {
            let _ = writeln!(out, "eta: {:?}", design.eta);
            let _ = writeln!(out, "differences: {:?}", design.frequencies());
            let _ = writeln!(
                out,
                "t: {:.6e}, |K| = {}, mode: {}",
                design.t,
                design.k_set.len(),
                design.rate_mode
            );
            let m = modulation_matrix(&design)?;
            let (s_min, s_max) = singular_range(&m);
            let _ = writeln!(
                out,
                "sigma_min(M): {s_min:.3e}, sigma_max(M): {s_max:.3e}, cond: {:.3e}",
                s_max / s_min
            );
            match pseudoinverse_w(&m) {
                Ok(w) => {
                    let (prod, rows) = constraint_residuals(&w, &m);
                    let _ = writeln!(
                        out,
                        "W constraints: |WM - 1| = {prod:.3e}, max row sum = {rows:.3e} ok"
                    );
                }
                Err(e) => {
                    ok = false;
                    let _ = writeln!(out, "W: {e}");
                }
            }
        }
        Err(e @ (Error::InvalidDesign(_) | Error::IllConditioned(_))) => {
            ok = false;
            let _ = writeln!(out, "design: {e}");
            if let DesignConfig::Explicit(d) = &config.design {
                for ((r, s), (u, v)) in d.duplicate_differences() {
                    let _ = writeln!(
                        out,
                        "duplicate difference: eta{r} - eta{s} = eta{u} - eta{v}"
                    );
                }
            }
        }
        Err(e) => return Err(e),
    }
    let _ = writeln!(out, "{}", if ok { "PASS" } else { "FAIL" });
    Ok((if ok { 0 } else { 1 }, out))
}

/// One grid axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Numeric(String, Vec<f64>),
    Pattern(Vec<DecompositionPattern>),
    Family(Vec<ModelFamily>),
}

impl Axis {
    fn key(&self) -> &str {
        match self {
            Axis::Numeric(k, _) => k,
            Axis::Pattern(_) => "pattern",
            Axis::Family(_) => "family",
        }
    }

    fn len(&self) -> usize {
        match self {
            Axis::Numeric(_, v) => v.len(),
            Axis::Pattern(v) => v.len(),
            Axis::Family(v) => v.len(),
        }
    }
}

const NUMERIC_KEYS: [&str; 8] = ["beta", "delta", "e", "gamma", "gamma_z", "j", "n", "theta"];

/// Parse `KEY=v1,v2,...` axes into canonical form: keys sorted, values sorted
/// and deduplicated, so the point order does not depend on how the grid was typed.
pub fn parse_grid(specs: &[String]) -> Result<Vec<Axis>> {
    if specs.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one --grid KEY=v1,v2,...".into(),
        ));
    }
    let mut axes: BTreeMap<String, Axis> = BTreeMap::new();
    for spec in specs {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid axis '{spec}' is not KEY=v1,v2,...")))?;
        let key = key.trim().to_lowercase();
        let items: Vec<&str> = values
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if items.is_empty() {
            return Err(Error::Config(format!("grid axis '{key}' has no values")));
        }
        if axes.contains_key(&key) {
            return Err(Error::Config(format!("grid axis '{key}' given twice")));
        }
        let axis = match key.as_str() {
            "pattern" => {
                let mut v = items
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<DecompositionPattern>>>()?;
                v.sort_by_key(|p| p.name());
                v.dedup();
                Axis::Pattern(v)
            }
            "family" => {
                let mut v = items
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<ModelFamily>>>()?;
                v.sort();
                v.dedup();
                Axis::Family(v)
            }
            k if NUMERIC_KEYS.contains(&k) => {
                let mut v = items
                    .iter()
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| {
                            Error::Config(format!("grid value '{s}' for '{k}' is not a number"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                v.sort_by(f64::total_cmp);
                v.dedup();
                Axis::Numeric(key.clone(), v)
            }
            other => return Err(Error::Config(format!("unknown grid key '{other}'"))),
        };
        axes.insert(key, axis);
    }
    Ok(axes.into_values().collect())
}

/// Grid points in lexicographic order of the (sorted) axes.
fn grid_points(axes: &[Axis]) -> Vec<Vec<usize>> {
    let mut points = vec![vec![]];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..axis.len()).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    points
}

struct SweepRow {
    omega: Option<f64>,
    omega_oracle: f64,
    spread: f64,
    coupling_max: f64,
    coupling_frobenius: f64,
}

/// Long-format sweep CSV: one column per axis, then
/// `omega,omega_oracle,spectral_spread,coupling_max,coupling_frobenius`.
pub fn sweep(
    config: &RunConfig,
    axes: &[Axis],
    ov: &Overrides,
    oracle_only: bool,
) -> Result<String> {
    let ModelSource::Spec(base) = &config.model else {
        return Err(Error::Config(
            "sweeps need a model spec, not an inline model".into(),
        ));
    };
    let points = grid_points(axes);
    let rows: Vec<SweepRow> = points
        .par_iter()
        .enumerate()
        .map(|(idx, point)| {
            let mut spec = base.clone();
            for (axis, &i) in axes.iter().zip(point) {
                match axis {
                    Axis::Numeric(key, v) => spec.params.set(key, v[i])?,
                    Axis::Pattern(v) => spec.decomposition = v[i].clone(),
                    Axis::Family(v) => spec.family = v[i],
                }
            }
            let mut cfg = config.clone();
            cfg.model = ModelSource::Spec(spec);
            // an explicit decomposition cannot follow the grid's pattern or size
            if axes
                .iter()
                .any(|a| matches!(a, Axis::Pattern(_)) || a.key() == "n")
            {
                cfg.decomposition = None;
            }
            let (model, decomp) = cfg.problem()?;
            let oracle = oracle_report(&model, &decomp)?;
            let omega = if oracle_only {
                None
            } else {
                let seed = task_seed(ov.seed.or(cfg.seed).unwrap_or(0), idx as u64, 0, 3);
                let ov = Overrides {
                    seed: Some(seed),
                    ..*ov
                };
                let design = cfg.design(&model, &decomp, &ov)?;
                Some(run_pipeline(&model, &decomp, &design)?.omega)
            };
            let n = decomp.n();
            let mut coupling_max = 0.0_f64;
            let mut sq = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = oracle.coupling_norms[(i, j)];
                    coupling_max = coupling_max.max(v);
                    sq += v * v;
                }
            }
            Ok(SweepRow {
                omega,
                omega_oracle: oracle.omega,
                spread: spectral_spread(model.hamiltonian()),
                coupling_max,
                coupling_frobenius: sq.sqrt(),
            })
        })
        .collect::<Result<_>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = axes.iter().map(|a| a.key().to_string()).collect();
    header.extend(
        [
            "omega",
            "omega_oracle",
            "spectral_spread",
            "coupling_max",
            "coupling_frobenius",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for (point, row) in points.iter().zip(&rows) {
        let mut rec: Vec<String> = axes
            .iter()
            .zip(point)
            .map(|(axis, &i)| match axis {
                Axis::Numeric(_, v) => v[i].to_string(),
                Axis::Pattern(v) => v[i].name().to_string(),
                Axis::Family(v) => format!("{:?}", v[i]).to_lowercase(),
            })
            .collect();
        rec.push(row.omega.map(|o| o.to_string()).unwrap_or_default());
        rec.extend(
            [
                row.omega_oracle,
                row.spread,
                row.coupling_max,
                row.coupling_frobenius,
            ]
            .map(|x| x.to_string()),
        );
        w.write_record(&rec)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

struct FigureRow {
    x: f64,
    y: Option<f64>,
    series: String,
    value: f64,
}

/// Plot data with columns `x,y,series,value`.
///
/// - fig1: qubit, `x = θ` over 17 points in `[0, π]`; series `spectral_spread`, `omega`.
/// - fig2: rollercoaster at `J = 5`, `x = N ∈ 3..=8`; series `omega_single_site`,
///   `omega_sandwich`, `omega_edges`, `spectral_spread`.
/// - fig3/fig4: rollercoaster/ladder, `x = N ∈ 2..=8`, `y = J ∈ {0, 0.5, …, 5}`;
///   series `spectral_spread`, `omega` (single-site).
///
/// `Ω` and `𝔠` come from the oracle. With `overlay`, an `omega_pipeline` series
/// from the simulated protocol is added for every `omega*` series.
pub fn figure(
    name: FigureName,
    base: Option<&ModelSpec>,
    overlay: Option<Overrides>,
) -> Result<String> {
    let params = base.map(|b| b.params.clone()).unwrap_or_default();
    let make = |family: ModelFamily| {
        let mut spec = ModelSpec::new(family);
        spec.params = params.clone();
        spec
    };
    let mut jobs: Vec<(f64, Option<f64>, String, ModelSpec)> = Vec::new();
    match name {
        FigureName::Fig1 => {
            for i in 0..=16 {
                let theta = std::f64::consts::PI * i as f64 / 16.0;
                let mut spec = make(ModelFamily::QubitRabi);
                spec.params.theta = Some(theta);
                jobs.push((theta, None, "omega".into(), spec));
            }
        }
        FigureName::Fig2 => {
            for n in 3..=8usize {
                for pattern in [
                    DecompositionPattern::SingleSite,
                    DecompositionPattern::Sandwich,
                    DecompositionPattern::Edges,
                ] {
                    let mut spec = make(ModelFamily::Rollercoaster).with_pattern(pattern.clone());
                    spec.params.n = Some(n);
                    spec.params.j.get_or_insert(5.0);
                    jobs.push((n as f64, None, format!("omega_{}", pattern.name()), spec));
                }
            }
        }
        FigureName::Fig3 | FigureName::Fig4 => {
            let family = if name == FigureName::Fig3 {
                ModelFamily::Rollercoaster
            } else {
                ModelFamily::Ladder
            };
            for n in 2..=8usize {
                for step in 0..=10 {
                    let j = 0.5 * step as f64;
                    let mut spec = make(family);
                    spec.params.n = Some(n);
                    spec.params.j = Some(j);
                    jobs.push((n as f64, Some(j), "omega".into(), spec));
                }
            }
        }
    }
    let computed: Vec<Vec<FigureRow>> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, (x, y, series, spec))| {
            let model = spec.build_model()?;
            let decomp = spec.build_decomposition()?;
            let oracle = oracle_report(&model, &decomp)?;
            let mut rows = Vec::new();
            let spread_once = series == "omega" || series == "omega_single_site";
            if spread_once {
                rows.push(FigureRow {
                    x: *x,
                    y: *y,
                    series: "spectral_spread".into(),
                    value: spectral_spread(model.hamiltonian()),
                });
            }
            rows.push(FigureRow {
                x: *x,
                y: *y,
                series: series.clone(),
                value: oracle.omega,
            });
            if let Some(ov) = overlay {
                let mut cfg = RunConfig::from_spec(spec.clone());
                cfg.seed = Some(task_seed(ov.seed.unwrap_or(0), idx as u64, 0, 4));
                let ov = Overrides { seed: None, ..ov };
                let design = cfg.design(&model, &decomp, &ov)?;
                rows.push(FigureRow {
                    x: *x,
                    y: *y,
                    series: series.replacen("omega", "omega_pipeline", 1),
                    value: run_pipeline(&model, &decomp, &design)?.omega,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "series", "value"])?;
    for row in computed.into_iter().flatten() {
        w.write_record([
            row.x.to_string(),
            row.y.map(|y| y.to_string()).unwrap_or_default(),
            row.series,
            row.value.to_string(),
        ])?;
    }
    finish_csv(w)
}
