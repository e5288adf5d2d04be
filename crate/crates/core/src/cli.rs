//! Command-line front end: `train`, `analyze`, `prune`, `sweep`, `bench` and
//! `replay`.
//!
//! Exit codes: 0 success, 2 usage, 3 input data, 4 internal consistency.
//! Every command can write a run manifest (`--manifest`) holding the fully
//! resolved arguments and the SHA-256 of each input file; `replay` re-runs
//! a manifest after checking the inputs are unchanged.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{load_csv, Dataset, LabelColumn};
use crate::diversity::{
    classify_interval, critical_points, decompose, estimated_risk, gamma_margin, kappa_of,
    margin_threshold, risk_bound, sweep_curve, write_sweep_csv, RiskParams,
};
use crate::evaluation::{accuracy, cross_validate, ExperimentConfig};
use crate::learners::{train_ensemble, EnsembleKind, EnsembleSpec, LearnerSpec, SavedModel};
use crate::pruning::{prune, PruneConfig, PruneMethod};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_VERSION: &str = "divprune-manifest-v1";

#[derive(Debug, Parser)]
#[command(
    name = "divprune",
    version,
    about = "Diversity analysis and pruning of binary classifier ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Train a bagging or AdaBoost ensemble and save it as JSON.
    Train(TrainArgs),
    /// Error decomposition, margin, risk estimate and critical points of a model on a dataset.
    Analyze(AnalyzeArgs),
    /// Prune a saved model on a dataset and report the kept members.
    Prune(PruneArgs),
    /// Tabulate the estimated risk and its derivatives over a diversity grid.
    Sweep(SweepArgs),
    /// Cross-validated comparison of pruning methods over several datasets.
    Bench(BenchArgs),
    /// Re-run a command from a manifest after checking its input digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Label value mapped to +1; the other value becomes -1.
    #[arg(long, default_value = "1")]
    pub positive: String,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let column: LabelColumn = self.label_column.parse().expect("infallible");
        load_csv(&self.data, &column, &self.positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Stump,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "bagging")]
    pub ensemble: EnsembleKind,
    #[arg(long, value_enum, default_value = "stump")]
    pub base: BaseKind,
    /// Depth limit for tree base learners.
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    /// Number of members (AdaBoost may stop early).
    #[arg(long, default_value_t = 21)]
    pub size: usize,
}

impl EnsembleArgs {
    fn spec(&self) -> Result<EnsembleSpec> {
        if self.size == 0 {
            return Err(Error::InvalidArgument("--size must be at least 1".into()));
        }
        let base = match self.base {
            BaseKind::Stump => LearnerSpec::Stump,
            BaseKind::Tree if self.max_depth == 0 => {
                return Err(Error::InvalidArgument(
                    "--max-depth must be at least 1".into(),
                ))
            }
            BaseKind::Tree => LearnerSpec::Tree {
                max_depth: self.max_depth,
            },
        };
        Ok(EnsembleSpec {
            kind: self.ensemble,
            base,
            size: self.size,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a run manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RiskArgs {
    /// Radius of the feature map.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Label-noise rate.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Confidence parameter of the bound.
    #[arg(long, default_value_t = 0.05)]
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub risk: RiskArgs,
    /// JSON report to write; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PruneParams {
    /// Kept fraction of the ensemble.
    #[arg(long, default_value_t = crate::pruning::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Weight of diversity against accuracy in EPBD.
    #[arg(long, default_value_t = crate::pruning::DEFAULT_BETA)]
    pub beta: f64,
    /// Candidate fraction for DREP.
    #[arg(long, default_value_t = crate::pruning::DEFAULT_RHO)]
    pub rho: f64,
    /// Label-noise rate used by EPBD.
    #[arg(long, default_value_t = crate::pruning::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

impl PruneParams {
    fn config(&self, method: PruneMethod) -> Result<PruneConfig> {
        let cfg = PruneConfig {
            method,
            alpha: self.alpha,
            beta: self.beta,
            rho: self.rho,
            epsilon: self.epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PruneArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "epbd")]
    pub method: PruneMethod,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: PruneParams,
    /// JSON result to write; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaArg {
    /// Sign of each grid point.
    Auto,
    #[value(name = "1")]
    #[serde(rename = "1")]
    Plus,
    #[value(name = "-1")]
    #[serde(rename = "-1")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Sample size |S|.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Diversity values: `lo:hi:count` or a comma-separated list.
    #[arg(long, default_value = "-0.49:0.49:99", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum, default_value = "auto", allow_hyphen_values = true)]
    pub lambda: LambdaArg,
    /// CSV file to write; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// CSV datasets, space-separated or repeated.
    #[arg(long = "data", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, default_value = "1")]
    pub positive: String,
    /// Methods to compare.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "none,epbd,es,kl,kp,oo,drep"
    )]
    pub methods: Vec<PruneMethod>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: PruneParams,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Significance level of the paired t-tests.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// Directory for results.csv and report.json; the CSV goes to stdout if omitted.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written with `--manifest`.
    pub manifest: PathBuf,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub manifest_version: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: Command,
    /// SHA-256 of each input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
}

impl Command {
    fn seed(&self) -> Option<u64> {
        match self {
            Command::Train(a) => Some(a.seed),
            Command::Bench(a) => Some(a.seed),
            _ => None,
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        match self {
            Command::Train(a) => vec![&a.data.data],
            Command::Analyze(a) => vec![&a.model, &a.data.data],
            Command::Prune(a) => vec![&a.model, &a.data.data],
            Command::Bench(a) => a.data.iter().map(PathBuf::as_path).collect(),
            Command::Sweep(_) | Command::Replay(_) => Vec::new(),
        }
    }

    fn manifest_path(&self) -> Option<&Path> {
        match self {
            Command::Train(a) => a.manifest.as_deref(),
            Command::Analyze(a) => a.manifest.as_deref(),
            Command::Prune(a) => a.manifest.as_deref(),
            Command::Sweep(a) => a.manifest.as_deref(),
            Command::Bench(a) => a.manifest.as_deref(),
            Command::Replay(_) => None,
        }
    }

    fn without_manifest(&self) -> Command {
        let mut c = self.clone();
        match &mut c {
            Command::Train(a) => a.manifest = None,
            Command::Analyze(a) => a.manifest = None,
            Command::Prune(a) => a.manifest = None,
            Command::Sweep(a) => a.manifest = None,
            Command::Bench(a) => a.manifest = None,
            Command::Replay(_) => {}
        }
        c
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn for_command(command: &Command) -> Result<Self> {
        let mut inputs = BTreeMap::new();
        for p in command.inputs() {
            inputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        Ok(Self {
            manifest_version: MANIFEST_VERSION.into(),
            tool_version: VERSION.into(),
            seed: command.seed(),
            config: command.without_manifest(),
            inputs,
        })
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let m: RunManifest = serde_json::from_slice(bytes)
            .map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(Error::InvalidArgument(format!(
                "manifest version '{}' is not '{MANIFEST_VERSION}'",
                m.manifest_version
            )));
        }
        if matches!(m.config, Command::Replay(_)) {
            return Err(Error::InvalidArgument(
                "a manifest cannot replay another manifest".into(),
            ));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }
}

/// Parses `lo:hi:count` (evenly spaced, endpoints included) or a
/// comma-separated list of numbers.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidArgument(format!("grid '{spec}': {why}"));
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| bad(&format!("'{}' is not a number", s.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad("values must be finite"))
        }
    };
    let spec_t = spec.trim();
    if spec_t.is_empty() {
        return Err(bad("empty"));
    }
    if spec_t.contains(':') {
        let parts: Vec<&str> = spec_t.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:count"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad("count must be a positive integer"))?;
        if count == 0 || count > 1_000_000 {
            return Err(bad("count must be between 1 and 1000000"));
        }
        if lo > hi {
            return Err(bad("lo exceeds hi"));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        return Ok((0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else {
                    lo + step * k as f64
                }
            })
            .collect());
    }
    spec_t.split(',').map(num).collect()
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    SavedModel::from_json_slice(&bytes)
}

fn check_features(model: &SavedModel, d: &Dataset) -> Result<()> {
    if model.n_features != d.n_features() {
        return Err(Error::InvalidDataset(format!(
            "model expects {} features, data has {}",
            model.n_features,
            d.n_features()
        )));
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let spec = a.ensemble.spec()?;
    let d = a.data.load()?;
    d.ensure_trainable()?;
    let e = train_ensemble(&d, &spec, a.seed)?;
    let model = SavedModel::new(
        &e,
        spec.kind,
        spec.base,
        spec.size,
        a.seed,
        d.feature_names().to_vec(),
    );
    write_output(a.out.as_deref(), &model.to_json())
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    data: String,
    n_instances: usize,
    members: usize,
    accuracy: f64,
    decomposition: Decomposition,
    margin: Option<MarginReport>,
    critical_points: BTreeMap<String, f64>,
    implied_condition_ok: bool,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Decomposition {
    g_bar: f64,
    a_bar: f64,
    d_bar: f64,
    tie_count: usize,
}

#[derive(Debug, Serialize)]
struct MarginReport {
    gamma: f64,
    x_star: usize,
    div_star: f64,
    lambda: i8,
    ties_excluded: usize,
    kappa: Option<u64>,
    risk_estimate: Option<f64>,
    margin_threshold: f64,
    risk_bound: Option<f64>,
    interval: Option<String>,
    diversity_helps: Option<bool>,
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let d = a.data.load()?;
    check_features(&model, &d)?;
    let e = model.ensemble()?;
    let params = RiskParams::new(a.risk.delta, a.risk.epsilon, d.len(), a.risk.xi)
        .map_err(|err| Error::InvalidArgument(err.to_string()))?;
    let pm = e.predictions(&d);
    let profile = decompose(&pm, e.weights())?;
    let cp = critical_points(&params)?;
    let mut warnings = Vec::new();
    if !cp.implied_condition_ok {
        warnings.push(
            "the sample size violates the implied condition; intervals are not classified".into(),
        );
    }
    if profile.tie_count > 0 {
        warnings.push(format!(
            "{} tied votes excluded from the margin",
            profile.tie_count
        ));
    }

    let margin = match gamma_margin(&pm, e.weights(), &params) {
        Ok(g) => {
            let kappa = kappa_of(g.gamma, params.delta).ok();
            let risk_estimate = match estimated_risk(g.div_at_argmin, g.lambda_at_argmin, &params) {
                Ok(r) => Some(round6(r)),
                Err(err) => {
                    warnings.push(format!("risk estimate: {err}"));
                    None
                }
            };
            let risk_bound = match risk_bound(g.gamma, &params) {
                Ok(b) => Some(round6(b)),
                Err(err) => {
                    warnings.push(format!("risk bound: {err}"));
                    None
                }
            };
            if kappa.is_none() {
                warnings.push(format!(
                    "margin {:.6} is not positive; kappa is undefined",
                    g.gamma
                ));
            }
            let interval = match classify_interval(g.div_at_argmin, &cp) {
                Ok(i) => Some(i),
                Err(err) => {
                    warnings.push(format!("interval: {err}"));
                    None
                }
            };
            Some(MarginReport {
                gamma: round6(g.gamma),
                x_star: g.argmin_index,
                div_star: round6(g.div_at_argmin),
                lambda: g.lambda_at_argmin,
                ties_excluded: g.ties_excluded,
                kappa,
                risk_estimate,
                margin_threshold: round6(margin_threshold(&params)),
                risk_bound,
                interval: interval.map(|i| i.label().to_string()),
                diversity_helps: interval.map(|i| i.diversity_helps()),
            })
        }
        Err(err) => {
            warnings.push(format!("margin: {err}"));
            None
        }
    };

    let report = AnalyzeReport {
        data: d.name().to_string(),
        n_instances: d.len(),
        members: e.len(),
        accuracy: round6(accuracy(&e, &d)),
        decomposition: Decomposition {
            g_bar: round6(profile.g_bar),
            a_bar: round6(profile.a_bar),
            d_bar: round6(profile.d_bar),
            tie_count: profile.tie_count,
        },
        margin,
        critical_points: [
            ("q1", cp.q1),
            ("q2", cp.q2),
            ("q3", cp.q3),
            ("q4", cp.q4),
            ("q5", cp.q5),
            ("q6", cp.q6),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), round6(v)))
        .collect(),
        implied_condition_ok: cp.implied_condition_ok,
        warnings,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    write_output(a.out.as_deref(), &text)
}

fn cmd_prune(a: &PruneArgs) -> Result<()> {
    let cfg = a.params.config(a.method)?;
    let model = load_model(&a.model)?;
    let d = a.data.load()?;
    check_features(&model, &d)?;
    let result = prune(&model.ensemble()?, &d, &cfg)?;
    let mut v = serde_json::to_value(&result).expect("result serialises");
    round_json(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("value serialises");
    text.push('\n');
    write_output(a.out.as_deref(), &text)
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round6(x)))
            {
                *n = x;
            }
        }
        serde_json::Value::Array(xs) => xs.iter_mut().for_each(round_json),
        serde_json::Value::Object(m) => m.values_mut().for_each(round_json),
        _ => {}
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let grid = parse_grid(&a.grid)?;
    let params = RiskParams::new(a.delta, a.epsilon, a.samples, 0.05)
        .map_err(|err| Error::InvalidArgument(err.to_string()))?;
    let lambda = match a.lambda {
        LambdaArg::Auto => None,
        LambdaArg::Plus => Some(1),
        LambdaArg::Minus => Some(-1),
    };
    let rows = sweep_curve(&params, &grid, lambda)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).map_err(|e| Error::io("<memory>", e))?;
    write_output(
        a.out.as_deref(),
        &String::from_utf8(buf).expect("CSV is UTF-8"),
    )
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let spec = a.ensemble.spec()?;
    let mut methods = a.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    let methods = methods
        .into_iter()
        .map(|m| a.params.config(m))
        .collect::<Result<Vec<_>>>()?;
    let column: LabelColumn = a.label_column.parse().expect("infallible");
    let datasets = a
        .data
        .iter()
        .map(|p| load_csv(p, &column, &a.positive))
        .collect::<Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        datasets,
        ensemble: spec,
        methods,
        folds: a.folds,
        seed: a.seed,
        level: a.level,
    };
    let table = cross_validate(&cfg)?;
    if table.cells.iter().flatten().all(Option::is_none) {
        return Err(Error::InvalidDataset(format!(
            "every cell failed: {}",
            table.failures.values().next().cloned().unwrap_or_default()
        )));
    }
    let csv = table.to_csv();
    match &a.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let report = table.report(a.level)?;
            let mut json = serde_json::to_string_pretty(&report).expect("report serialises");
            json.push('\n');
            write_output(Some(&dir.join("results.csv")), &csv)?;
            write_output(Some(&dir.join("report.json")), &json)?;
            for f in &report.failures {
                eprintln!("warning: {f}");
            }
            Ok(())
        }
        None => write_output(None, &csv),
    }
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let bytes = fs::read(&a.manifest).map_err(|e| Error::io(&a.manifest, e))?;
    let manifest = RunManifest::from_json_slice(&bytes)?;
    for (path, digest) in &manifest.inputs {
        let now = sha256_file(Path::new(path))?;
        if &now != digest {
            return Err(Error::InvalidDataset(format!(
                "input {path} changed since the manifest was written"
            )));
        }
    }
    execute(&manifest.config)
}

fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Consistency(_) => 4,
        Error::InvalidArgument(_) | Error::Domain(_) => 2,
        _ => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = (|| {
        if let Some(path) = cli.command.manifest_path() {
            let m = RunManifest::for_command(&cli.command)?;
            write_output(Some(path), &m.to_json())?;
        }
        execute(&cli.command)
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
