//! Command-line front end.
//!
//! Every command that writes files also writes a run manifest next to its
//! first output (`<output>.manifest.json`) with the configuration, the seed,
//! SHA-256 digests of inputs and outputs, and per-stage timings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::datagen::{self, LoadProfile, Mode, Sampling, ScenarioConfig};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, Trainer};
use crate::grid::{compute_shift_factors, NetworkCase};
use crate::learn::{
    posterior_multiclass, predict, project_features, relabel_by_bus, train_ovo, train_ovo_cll, LabeledDataset, OvoModel,
};
use crate::mpr::{enumerate_sprs, locate, LoadBox, SprReport};
use crate::sced::{apply_dlr, build_sced, compute_lmp, solve_lp, Overrides};

#[derive(Debug, Parser)]
#[command(name = "sprlab", version, about = "System pattern regions and price forecasting for DC markets")]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Monte-Carlo load/price dataset.
    Gen(GenArgs),
    /// Solve one dispatch and print prices.
    Solve(SolveArgs),
    /// Enumerate all price regions inside a load box.
    Enumerate(EnumerateArgs),
    /// Train a one-vs-one price classifier.
    Train(TrainArgs),
    /// Predict prices with a trained model.
    Predict(PredictArgs),
    /// k-fold cross validation.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Slr,
    Dlr,
    Ramp,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingArg {
    Uniform,
    Profile,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Svm,
    Cll,
}

#[derive(Debug, Args, Serialize)]
pub struct CaseArg {
    /// Case file, or one of the built-in cases `fig1`, `fig11`, `fig13`.
    #[arg(long)]
    pub case: String,
}

#[derive(Debug, Args, Serialize)]
pub struct BoxArgs {
    /// Same bounds on every load bus, as `LO,HI`.
    #[arg(long = "box", value_name = "LO,HI", allow_hyphen_values = true, conflicts_with_all = ["lower", "upper"])]
    pub uniform_box: Option<String>,
    /// Per-load-bus lower bounds, comma separated.
    #[arg(long, requires = "upper", allow_hyphen_values = true)]
    pub lower: Option<String>,
    /// Per-load-bus upper bounds, comma separated.
    #[arg(long, requires = "lower", allow_hyphen_values = true)]
    pub upper: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub case: CaseArg,
    #[arg(long, value_enum, default_value = "slr")]
    pub mode: ModeArg,
    /// Number of samples.
    #[arg(long = "n", default_value_t = 1440)]
    pub n_samples: usize,
    #[arg(long, env = "SPRLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub sampling: SamplingArg,
    #[command(flatten)]
    pub bounds: BoxArgs,
    /// Profile CSV (one column per load bus); a synthetic daily curve otherwise.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Load standard deviation as a fraction of the profile mean.
    #[arg(long, default_value_t = 0.10)]
    pub sigma_frac: f64,
    /// Standard deviation of the line-rating factor.
    #[arg(long, default_value_t = 0.10)]
    pub xi_sigma: f64,
    /// Ramp rates relative to reaching full range in 15 minutes.
    #[arg(long, default_value_t = 1.0)]
    pub ramp_scale: f64,
    /// Interval length in minutes.
    #[arg(long, default_value_t = 5.0)]
    pub dt: f64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub case: CaseArg,
    /// Loads, either one per bus or one per load bus, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub loads: String,
    /// Line-rating factor; ratings become `(1 + xi)·F`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub case: CaseArg,
    #[command(flatten)]
    pub bounds: BoxArgs,
    /// Line-rating factor applied before enumeration.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi: f64,
    /// Region JSON (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Polygon vertices of every region (two load buses only).
    #[arg(long)]
    pub vertices: Option<PathBuf>,
    /// Points per axis of a labeled lattice over the box.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Where to write the lattice CSV.
    #[arg(long, requires = "grid")]
    pub grid_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FeatureArgs {
    /// Visible features, e.g. `buses=2,3,total` or `total`.
    #[arg(long)]
    pub features: Option<String>,
    /// Classify by the price at this bus only (1-based).
    #[arg(long)]
    pub label_bus: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset CSV produced by `gen`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "svm")]
    pub method: MethodArg,
    /// Penalty; defaults to 1000 for static-rating data and 1 otherwise.
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset CSV whose PD columns are classified.
    #[arg(long)]
    pub data: PathBuf,
    /// Append class probabilities.
    #[arg(long)]
    pub posterior: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, env = "SPRLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "svm")]
    pub method: MethodArg,
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Fold table as CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Full report with per-bus detail.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Provenance of one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub versions: BTreeMap<String, String>,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("sprlab".into(), env!("CARGO_PKG_VERSION").into());
        RunManifest {
            command: command.into(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            versions,
            timings: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord { path: path.to_path_buf(), sha256: sha256_file(path)? });
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileRecord { path: path.to_path_buf(), sha256: sha256_file(path)? });
        Ok(())
    }

    fn time(&mut self, stage: &str, since: Instant) {
        self.timings.push(StageTiming { stage: stage.into(), seconds: since.elapsed().as_secs_f64() });
    }

    /// Writes `<first output>.manifest.json`.
    fn write(&self) -> Result<PathBuf> {
        let Some(first) = self.outputs.first() else {
            return Err(Error::InvalidArgument("manifest without outputs".into()));
        };
        let mut name = first.path.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_text(&path, &text)?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Process exit status for an error: 3 for infeasible or degenerate
/// problems, 2 for everything else the user can fix.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible
        | Error::Unbounded
        | Error::Degenerate(_)
        | Error::LowFeasibility { .. }
        | Error::NoFeasibleSeed { .. }
        | Error::EmptyRegion { .. } => 3,
        _ => 2,
    }
}

const BUILTIN_CASES: [(&str, &str); 3] = [
    ("fig1", include_str!("../fixtures/fig1.json")),
    ("fig11", include_str!("../fixtures/fig11.json")),
    ("fig13", include_str!("../fixtures/fig13.json")),
];

/// Loads a case from a path, falling back to the built-in names.
pub fn resolve_case(arg: &str) -> Result<NetworkCase> {
    let path = Path::new(arg);
    if path.exists() {
        return crate::grid::load_case(path);
    }
    match BUILTIN_CASES.iter().find(|(name, _)| *name == arg) {
        Some((name, text)) => NetworkCase::from_json(text, name),
        None => Err(Error::InvalidArgument(format!("no case file or built-in case named {arg:?}"))),
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("{what}: {v:?}: {e}"))))
        .collect()
}

fn resolve_box(args: &BoxArgs, case: &NetworkCase) -> Result<LoadBox> {
    let d = case.load_buses.len();
    if let Some(u) = &args.uniform_box {
        let v = parse_list(u, "--box")?;
        if v.len() != 2 {
            return Err(Error::InvalidArgument("--box takes LO,HI".into()));
        }
        return LoadBox::uniform(d, v[0], v[1]);
    }
    match (&args.lower, &args.upper) {
        (Some(l), Some(u)) => LoadBox::new(parse_list(l, "--lower")?, parse_list(u, "--upper")?),
        _ => Ok(LoadBox::default_for(case)),
    }
}

/// Parses `buses=2,3,total`, `2,3` or `total` into 0-based buses and a total flag.
pub fn parse_features(text: &str) -> Result<(Vec<usize>, bool)> {
    let body = text.strip_prefix("buses=").unwrap_or(text);
    let mut buses = Vec::new();
    let mut total = false;
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("total") {
            total = true;
        } else {
            let b: usize = item.parse().map_err(|_| Error::InvalidArgument(format!("bad feature {item:?}")))?;
            if b == 0 {
                return Err(Error::InvalidArgument("buses are numbered from 1".into()));
            }
            buses.push(b - 1);
        }
    }
    Ok((buses, total))
}

fn load_dataset(path: &Path, feats: &FeatureArgs) -> Result<(LabeledDataset, bool)> {
    let rows = datagen::read_csv(path)?;
    let all_slr = rows.iter().all(|r| r.scenario == "slr");
    let mut ds = datagen::dataset_from_rows(&rows)?;
    if let Some(b) = feats.label_bus {
        if b == 0 {
            return Err(Error::InvalidArgument("buses are numbered from 1".into()));
        }
        ds = relabel_by_bus(&ds, b - 1)?;
    }
    if let Some(f) = &feats.features {
        let (buses, total) = parse_features(f)?;
        ds = project_features(&ds, &buses, total)?;
    }
    Ok((ds, all_slr))
}

fn default_c(explicit: Option<f64>, all_slr: bool) -> f64 {
    explicit.unwrap_or(if all_slr { 1000.0 } else { 1.0 })
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let t0 = Instant::now();
    let case = resolve_case(&a.case.case)?;
    let mut manifest = RunManifest::new("gen", a, Some(a.seed));
    if Path::new(&a.case.case).exists() {
        manifest.input(Path::new(&a.case.case))?;
    }
    let sampling = match a.sampling {
        SamplingArg::Uniform => Sampling::UniformBox(resolve_box(&a.bounds, &case)?),
        SamplingArg::Profile => match &a.profile {
            Some(p) => {
                manifest.input(p)?;
                Sampling::NormalProfile(LoadProfile::from_csv(p)?)
            }
            None => Sampling::NormalProfile(LoadProfile::synthetic_daily(&case, a.n_samples, a.dt)),
        },
    };
    let mode = match a.mode {
        ModeArg::Slr => Mode::Slr,
        ModeArg::Dlr => Mode::Dlr,
        ModeArg::Ramp => Mode::Ramp,
    };
    let mut cfg = ScenarioConfig::new(mode, a.n_samples, a.seed, sampling);
    cfg.sigma_frac = a.sigma_frac;
    cfg.xi_sigma = a.xi_sigma;
    cfg.ramp_scale = a.ramp_scale;
    cfg.dt_minutes = a.dt;
    manifest.time("setup", t0);
    let t1 = Instant::now();
    let data = datagen::generate_dataset(&case, &cfg)?;
    manifest.time("generate", t1);
    let t2 = Instant::now();
    datagen::write_csv(&data.rows, &a.out)?;
    manifest.time("write", t2);
    manifest.output(&a.out)?;
    manifest.write()?;
    log::info!(
        "{} rows, {} classes, {} draws, {} degenerate{}",
        data.rows.len(),
        data.dataset.n_classes(),
        data.attempts,
        data.degenerate,
        if data.truncated { ", chain truncated" } else { "" }
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    case: String,
    loads: Vec<f64>,
    pg: Vec<f64>,
    objective: f64,
    lmp: Vec<f64>,
    binding: Vec<String>,
    degenerate: bool,
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let case = resolve_case(&a.case.case)?;
    let sf = compute_shift_factors(&case)?;
    let ratings = apply_dlr(&case, a.xi)?.ratings();
    let lp = build_sced(&case, &sf, &Overrides { ratings: Some(ratings), ..Default::default() })?;
    let v = parse_list(&a.loads, "--loads")?;
    let pd = if v.len() == case.n_buses {
        v
    } else if v.len() == case.load_buses.len() {
        lp.full_load(&v)
    } else {
        return Err(Error::Dimension(format!(
            "{} loads given; expected {} (per bus) or {} (per load bus)",
            v.len(),
            case.n_buses,
            case.load_buses.len()
        )));
    };
    let sol = solve_lp(&lp, &pd)?;
    let lmp = compute_lmp(&sol, &sf)?;
    let out = SolveOutput {
        case: case.name.clone(),
        loads: pd,
        pg: sol.pg.clone(),
        objective: sol.objective,
        lmp: lmp.lambda,
        binding: sol.binding.iter().map(|&r| lp.rows[r].to_string()).collect(),
        degenerate: sol.degenerate,
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    Ok(())
}

fn cmd_enumerate(a: &EnumerateArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut case = resolve_case(&a.case.case)?;
    case = apply_dlr(&case, a.xi)?;
    let bx = resolve_box(&a.bounds, &case)?;
    let mut manifest = RunManifest::new("enumerate", a, None);
    if Path::new(&a.case.case).exists() {
        manifest.input(Path::new(&a.case.case))?;
    }
    let regions = enumerate_sprs(&case, &bx)?;
    manifest.time("enumerate", t0);
    log::info!("{} regions", regions.len());
    let report = SprReport::new(&case, &bx, regions);
    let json = serde_json::to_string_pretty(&report).expect("serializable");
    match &a.out {
        Some(p) => {
            write_text(p, &json)?;
            manifest.output(p)?;
        }
        None => println!("{json}"),
    }
    if let Some(p) = &a.vertices {
        if bx.dim() != 2 {
            return Err(Error::InvalidArgument("vertex export needs exactly two load buses".into()));
        }
        let mut s = String::from("region,vertex,x,y\n");
        for (k, r) in report.regions.iter().enumerate() {
            for (v, [x, y]) in r.vertices_in(&bx).iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", k + 1, v + 1, datagen::fmt_sig9(*x), datagen::fmt_sig9(*y));
            }
        }
        write_text(p, &s)?;
        manifest.output(p)?;
    }
    if let (Some(n), Some(p)) = (a.grid, &a.grid_out) {
        let t1 = Instant::now();
        write_text(p, &lattice_csv(&report, &bx, n)?)?;
        manifest.time("lattice", t1);
        manifest.output(p)?;
    }
    if !manifest.outputs.is_empty() {
        manifest.write()?;
    }
    Ok(())
}

/// `n^d` lattice over the box with the 1-based index of the containing region
/// (empty on boundaries and outside every region).
fn lattice_csv(report: &SprReport, bx: &LoadBox, n: usize) -> Result<String> {
    let d = bx.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("--grid needs at least 2 points per axis".into()));
    }
    let total = n.checked_pow(d as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| {
        Error::InvalidArgument(format!("lattice of {n}^{d} points is too large"))
    })?;
    let mut s = String::new();
    let header: Vec<String> = report.load_buses.iter().map(|b| format!("PD_{b}")).collect();
    let _ = writeln!(s, "{},region", header.join(","));
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let x: Vec<f64> = (0..d)
            .map(|k| bx.lower[k] + (bx.upper[k] - bx.lower[k]) * idx[k] as f64 / (n - 1) as f64)
            .collect();
        let label = locate(&report.regions, &x, 0.0).map(|k| (k + 1).to_string()).unwrap_or_default();
        let coords: Vec<String> = x.iter().map(|v| datagen::fmt_sig9(*v)).collect();
        let _ = writeln!(s, "{},{label}", coords.join(","));
        for i in idx.iter_mut() {
            *i += 1;
            if *i < n {
                break;
            }
            *i = 0;
        }
    }
    Ok(s)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("train", a, None);
    manifest.input(&a.data)?;
    let (ds, all_slr) = load_dataset(&a.data, &a.features)?;
    manifest.time("load", t0);
    let c = default_c(a.c, all_slr);
    let t1 = Instant::now();
    let model = match a.method {
        MethodArg::Svm => train_ovo(&ds, c)?,
        MethodArg::Cll => train_ovo_cll(&ds, c)?,
    };
    manifest.time("training", t1);
    model.save(&a.out)?;
    manifest.output(&a.out)?;
    manifest.config["c_effective"] = serde_json::json!(c);
    manifest.write()?;
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("predict", a, None);
    manifest.input(&a.model)?;
    manifest.input(&a.data)?;
    let model = OvoModel::load(&a.model)?;
    let rows = datagen::read_csv(&a.data)?;
    if let Some(&b) = model.schema.buses.iter().find(|&&b| rows.first().is_some_and(|r| b >= r.pd.len())) {
        return Err(Error::Dimension(format!("model reads bus {} but the data has fewer buses", b + 1)));
    }
    manifest.time("load", t0);
    let t1 = Instant::now();
    let nb = model.class_lmps.first().map_or(0, Vec::len);
    let k = model.n_classes();
    let mut s = String::from("idx,class");
    for b in 1..=nb {
        let _ = write!(s, ",LMP_{b}");
    }
    if a.posterior {
        for c in 1..=k {
            let _ = write!(s, ",p_{c}");
        }
    }
    s.push('\n');
    let mut unconverged = 0;
    for (i, r) in rows.iter().enumerate() {
        let x = model.schema.project(&r.pd);
        let (cls, lmp) = predict(&model, &x);
        let _ = write!(s, "{i},{}", cls + 1);
        for v in &lmp {
            let _ = write!(s, ",{}", datagen::fmt_sig9(*v));
        }
        if a.posterior {
            let post = posterior_multiclass(&model, &x);
            unconverged += usize::from(!post.converged);
            for p in post.p {
                let _ = write!(s, ",{}", datagen::fmt_sig9(p));
            }
        }
        s.push('\n');
    }
    if unconverged > 0 {
        log::info!("{unconverged} posterior vectors hit the sweep limit and were averaged");
    }
    manifest.time("predicting", t1);
    write_text(&a.out, &s)?;
    manifest.output(&a.out)?;
    manifest.write()?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("eval", a, Some(a.seed));
    manifest.input(&a.data)?;
    let (ds, all_slr) = load_dataset(&a.data, &a.features)?;
    manifest.time("load", t0);
    let trainer = match a.method {
        MethodArg::Svm => Trainer::Svm { c: default_c(a.c, all_slr) },
        MethodArg::Cll => Trainer::Cll,
    };
    let t1 = Instant::now();
    let report = cross_validate(&ds, a.k, a.seed, trainer)?;
    manifest.time("cross_validation", t1);
    manifest.timings.extend([
        StageTiming { stage: "training".into(), seconds: report.folds.iter().map(|f| f.train_secs).sum() },
        StageTiming { stage: "predicting".into(), seconds: report.folds.iter().map(|f| f.predict_secs).sum() },
        StageTiming { stage: "data_post_processing".into(), seconds: report.folds.iter().map(|f| f.post_secs).sum() },
    ]);
    println!("{:<6} {:>15} {:>13}", "Fold", "Classification", "LMP Forecast");
    for f in &report.folds {
        println!("{:<6} {:>14.3}% {:>12.3}%", f.fold + 1, 100.0 * f.alpha, 100.0 * f.beta);
    }
    println!("{:<6} {:>14.2}% {:>12.2}%", "avg", 100.0 * report.mean_alpha, 100.0 * report.mean_beta);
    write_text(&a.out, &report.to_csv())?;
    manifest.output(&a.out)?;
    if let Some(j) = &a.json {
        write_text(j, &serde_json::to_string_pretty(&report).expect("serializable"))?;
        manifest.output(j)?;
    }
    manifest.write()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_spec_parsing() {
        assert_eq!(parse_features("buses=2,3,total").unwrap(), (vec![1, 2], true));
        assert_eq!(parse_features("total").unwrap(), (vec![], true));
        assert!(parse_features("buses=0").is_err());
    }

    #[test]
    fn builtin_cases_resolve() {
        for name in ["fig1", "fig11", "fig13"] {
            assert_eq!(resolve_case(name).unwrap().n_buses, 3);
        }
        assert!(resolve_case("nope").is_err());
    }
}
