//! Command-line front end: `krflab <command>`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::ansatz::{self, AnsatzError, AnsatzKind, AnsatzModel};
use crate::cohomology::{
    self, format_rational, parse_rational, ClassVector, CohomologyError, ExistenceTime, ManifoldModel,
};
use crate::ghmetric::{self, FiniteMetricSpace, GhError};
use crate::maflow::{self, FlowConfig, FlowError, FlowMode};
use crate::verify::{self, VerifyOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("verification failed")]
    VerificationFailed,
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::VerificationFailed => 4,
        }
    }
}

impl From<CohomologyError> for CliError {
    fn from(e: CohomologyError) -> Self {
        match e {
            CohomologyError::UnknownModel(_) | CohomologyError::Parse(_) | CohomologyError::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            FlowError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<AnsatzError> for CliError {
    fn from(e: AnsatzError) -> Self {
        match e {
            AnsatzError::InvalidModel(_) | AnsatzError::InvalidStep(_) => CliError::Usage(e.to_string()),
            AnsatzError::Cohomology(inner) => inner.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<GhError> for CliError {
    fn from(e: GhError) -> Self {
        match e {
            GhError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "krflab", version, about = "Kähler-Ricci flow laboratory")]
pub struct Cli {
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = "krflab-out")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for randomized parts (verification sampling, GH restarts).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the manifold models.
    Models(ModelsArgs),
    /// Maximal existence time and singularity data of an initial class.
    Maxtime(MaxtimeArgs),
    /// Run the Monge-Ampère flow from a TOML config.
    Flow(FlowArgs),
    /// Integrate a homogeneous or product ansatz.
    Ansatz(AnsatzArgs),
    /// Gromov-Hausdorff experiments.
    #[command(subcommand)]
    Gh(GhCommand),
    /// Run the verification table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ModelsArgs {
    /// Extra models (JSON model file); same-named entries shadow built-ins.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Show a single model, built-in names like `torus-3` included.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct MaxtimeArgs {
    pub model: String,
    /// Initial class in model coordinates, e.g. `4,-1` or `(7/2, -3/2)`.
    #[arg(allow_hyphen_values = true)]
    pub class: String,
    #[arg(long)]
    pub models: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnsatzArgs {
    /// round-p1, product-p1p1 or product-ec.
    pub kind: String,
    /// Initial scales as rationals.
    #[arg(required = true, num_args = 1..=2)]
    pub scales: Vec<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Unnormalized)]
    pub mode: ModeArg,
    /// End time; defaults to 10, or just short of extinction.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Keep every k-th step in the output.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unnormalized,
    Normalized,
}

impl From<ModeArg> for FlowMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unnormalized => FlowMode::Unnormalized,
            ModeArg::Normalized => FlowMode::Normalized,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum GhCommand {
    /// ε_t between the warped torus and its base circle.
    Collapse {
        #[arg(long, default_value_t = 8)]
        nb: usize,
        #[arg(long, default_value_t = 8)]
        nf: usize,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.5)]
        t_step: f64,
    },
    /// Best ε over map pairs between two metric-space JSON files.
    Bound { x: PathBuf, y: PathBuf },
    /// Write a warped-torus sample as a metric-space JSON file.
    Torus {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 8)]
        nb: usize,
        #[arg(long, default_value_t = 8)]
        nf: usize,
    },
    /// Write the small built-in spaces.
    Catalogue,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Model file whose entries replace built-ins in the cohomology checks.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Grid size for the flow checks.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Run only these criteria (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
    /// Random matrices per dimension for the matrix lemma.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

/// Written next to every artifact set.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    pub config: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

struct Context<'a> {
    cli: &'a Cli,
    argv: String,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Context<'_> {
    fn say(&mut self, text: impl AsRef<str>) -> Result<(), CliError> {
        writeln!(self.out, "{}", text.as_ref()).map_err(|e| CliError::Io(e.to_string()))
    }

    fn warn(&mut self, text: impl AsRef<str>) -> Result<(), CliError> {
        writeln!(self.err, "warning: {}", text.as_ref()).map_err(|e| CliError::Io(e.to_string()))
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.cli.output_dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.cli.output_dir).map_err(|e| io_err(&self.cli.output_dir, e))?;
        let path = self.out_path(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn manifest(&mut self, command: &str, config: Option<&Path>) -> Result<(), CliError> {
        let manifest = RunManifest {
            schema: 1,
            command: self.argv.clone(),
            config: config.map(Path::to_path_buf),
            output_dir: self.cli.output_dir.clone(),
            seed: self.cli.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write(&format!("{command}.manifest.json"), &text)?;
        Ok(())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_models(path: Option<&PathBuf>) -> Result<Vec<ManifoldModel>, CliError> {
    match path {
        Some(p) => Ok(cohomology::models_from_json(&read_input(p)?)?),
        None => Ok(Vec::new()),
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let argv = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let mut ctx = Context { cli: &cli, argv, out, err };
    match dispatch(&mut ctx) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(ctx: &mut Context) -> Result<(), CliError> {
    match &ctx.cli.command {
        Command::Models(a) => cmd_models(ctx, a),
        Command::Maxtime(a) => cmd_maxtime(ctx, a),
        Command::Flow(a) => cmd_flow(ctx, a),
        Command::Ansatz(a) => cmd_ansatz(ctx, a),
        Command::Gh(a) => cmd_gh(ctx, a),
        Command::Verify(a) => cmd_verify(ctx, a),
    }
}

fn describe_model(m: &ManifoldModel) -> String {
    let c1: Vec<String> = m.c1twopi.coords().iter().map(format_rational).collect();
    let cone: Vec<&str> = m.cone.constraints.iter().map(|c| c.label.as_str()).collect();
    let curves: Vec<&str> = m.catalogue.iter().map(|s| s.label.as_str()).collect();
    format!(
        "{}\n  n = {}, basis [{}], volume unit {}\n  2πc1 = ({})\n  cone: {}\n  subvarieties: {}\n  kodaira: {}",
        m.name,
        m.n,
        m.basis.join(", "),
        m.volume_unit,
        c1.join(", "),
        cone.join(", "),
        if curves.is_empty() { "-".to_string() } else { curves.join(", ") },
        match m.kodaira {
            cohomology::Kodaira::MinusInfinity => "-inf".to_string(),
            cohomology::Kodaira::Finite(k) => k.to_string(),
        }
    )
}

fn cmd_models(ctx: &mut Context, args: &ModelsArgs) -> Result<(), CliError> {
    let extra = load_models(args.models.as_ref())?;
    let models = match &args.name {
        Some(name) => vec![cohomology::resolve_model(name, &extra)?],
        None => {
            let mut all = cohomology::builtin_models();
            for m in extra {
                match all.iter_mut().find(|b| b.name == m.name) {
                    Some(slot) => *slot = m,
                    None => all.push(m),
                }
            }
            all
        }
    };
    match ctx.cli.format {
        Format::Json => {
            let text = cohomology::models_to_json(&models);
            ctx.say(&text)?;
            ctx.write("models.json", &text)?;
            ctx.manifest("models", args.models.as_deref())?;
        }
        Format::Csv => {
            for m in &models {
                ctx.say(describe_model(m))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MaxtimeReport {
    schema: u32,
    model: String,
    class: ClassVector,
    existence_time: ExistenceTime,
    limiting_class: Option<ClassVector>,
    limit_volume: Option<String>,
    noncollapsed: Option<bool>,
    null_locus: Option<Vec<String>>,
    regime: String,
}

fn cmd_maxtime(ctx: &mut Context, args: &MaxtimeArgs) -> Result<(), CliError> {
    let extra = load_models(args.models.as_ref())?;
    let model = cohomology::resolve_model(&args.model, &extra)?;
    let class: ClassVector = args.class.parse()?;
    class.check_len(model.dim_h11())?;
    let t = cohomology::max_existence_time(&model, &class)?;
    let regime = match cohomology::long_time_regime(&model) {
        Ok(r) => r.to_string(),
        Err(CohomologyError::FiniteTimeRegime) => "finite-time singularity (K_X not nef)".into(),
        Err(e) => return Err(e.into()),
    };
    let mut report = MaxtimeReport {
        schema: 1,
        model: model.name.clone(),
        class: class.clone(),
        existence_time: t.clone(),
        limiting_class: None,
        limit_volume: None,
        noncollapsed: None,
        null_locus: None,
        regime,
    };
    ctx.say(format!("model {}, initial class {class}", model.name))?;
    if t.is_finite() {
        let limit = cohomology::limiting_class(&model, &class)?;
        let vol = cohomology::volume(&model, &limit)?;
        let noncollapsed = cohomology::is_noncollapsed(&model, &class)?;
        let null = cohomology::null_locus(&model, &limit)?;
        let mut labels = null.subvarieties.clone();
        if null.whole_space {
            labels.insert(0, "X".into());
        }
        ctx.say(format!("T = {t}"))?;
        ctx.say(format!("limiting class = {limit}"))?;
        ctx.say(format!("volume at T = {} x {}", format_rational(&vol), model.volume_unit))?;
        ctx.say(format!("noncollapsed = {noncollapsed}"))?;
        ctx.say(format!("null locus = {{{}}} (catalogue-relative)", labels.join(", ")))?;
        report.limiting_class = Some(limit);
        report.limit_volume = Some(format_rational(&vol));
        report.noncollapsed = Some(noncollapsed);
        report.null_locus = Some(labels);
    } else {
        ctx.say("T = infinity")?;
    }
    ctx.say(format!("regime {}", report.regime))?;
    if ctx.cli.format == Format::Json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        ctx.write("maxtime.json", &text)?;
        ctx.manifest("maxtime", args.models.as_deref())?;
    }
    Ok(())
}

fn cmd_flow(ctx: &mut Context, args: &FlowArgs) -> Result<(), CliError> {
    let text = read_input(&args.config)?;
    let config = FlowConfig::from_toml(&text)?;
    let bg = config.background()?;
    if config.mode == FlowMode::Unnormalized && config.twist_has_mean() {
        ctx.warn(format!(
            "f has mean {:.3e}: ∫Ω differs from ∫ω0^n, so volumes drift and no stationary limit exists",
            bg.twist_mean()
        ))?;
    }
    if config.mode == FlowMode::Normalized && config.twist_has_mean() {
        ctx.warn("f has nonzero mean; the normalized limit absorbs it as a constant shift")?;
    }
    let phi0 = config.initial_potential(&bg);
    let out = maflow::run(&bg, phi0, &config.run_config())?;
    let stem = config.output.to_string_lossy().into_owned();
    let series_path = match ctx.cli.format {
        Format::Csv => ctx.write(&format!("{stem}.csv"), &out.series.to_csv_string())?,
        Format::Json => ctx.write(&format!("{stem}.json"), &out.series.to_json())?,
    };
    let field_path = ctx.out_path(&format!("{stem}.phi.bin"));
    maflow::write_field(&field_path, &bg, out.state.phi())?;
    ctx.manifest("flow", Some(&args.config))?;

    ctx.say(format!(
        "{} steps to t = {:.6}; diagnostics in {}",
        out.steps,
        out.state.t(),
        series_path.display()
    ))?;
    if out.converged {
        let rate = maflow::fit_decay(&out.series)
            .map(|f| format!("{:.5}", f.rate))
            .unwrap_or_else(|| "n/a".into());
        ctx.say(format!(
            "converged: sup|phidot| < 1e-10 at t = {:.4}, fitted decay rate {rate}",
            out.state.t()
        ))?;
    }
    let report = maflow::estimate_report(&out.series);
    for v in &report.verdicts {
        ctx.say(format!("[{}] {}: {}", if v.pass { "pass" } else { "FAIL" }, v.name, v.detail))?;
    }
    Ok(())
}

fn cmd_ansatz(ctx: &mut Context, args: &AnsatzArgs) -> Result<(), CliError> {
    let kind: AnsatzKind = args.kind.parse()?;
    let scales = args
        .scales
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>, _>>()?;
    let model = AnsatzModel::new(kind, scales, args.mode.into())?;
    ctx.say(format!("{kind} ({:?}): {}", model.mode, ansatz::reduce(&model)).to_lowercase())?;

    let exact = ansatz::exact_extinction(&AnsatzModel {
        mode: FlowMode::Unnormalized,
        ..model.clone()
    });
    let extinction = ansatz::extinction_time(&model, args.dt)?;
    if let Some(te) = extinction {
        let exact_text = match (&exact, model.mode) {
            (ExistenceTime::Exact(t), FlowMode::Unnormalized) => format_rational(t),
            (ExistenceTime::Exact(t), FlowMode::Normalized) => format!("log(1 + {})", format_rational(t)),
            _ => "-".into(),
        };
        ctx.say(format!("extinction at t = {te:.12} (exact {exact_text})"))?;
    } else {
        ctx.say("no extinction: the flow exists for all time")?;
    }
    let t_end = match (args.t_end, extinction) {
        (Some(t), _) => t,
        (None, Some(te)) => 0.99 * te,
        (None, None) => 10.0,
    };
    let traj = ansatz::integrate(&model, t_end, args.dt)?;
    ctx.say(format!("closed-form deviation {:.2e}", traj.max_closed_form_error()))?;
    if kind == AnsatzKind::ProductEC && model.mode == FlowMode::Normalized {
        let residual = ansatz::einstein_residual(&traj)?;
        let (t, r) = residual.last().copied().unwrap_or((0.0, f64::NAN));
        ctx.say(format!("einstein residual |b - 2| at t = {t}: {r:.6e}"))?;
        let p = ansatz::collapse_profile(&traj)?;
        ctx.say(format!(
            "fiber e^t a drift {:.1e}; base >= {} holds: {}; |b-2| <= {} e^(-t/8) holds: {}",
            p.fiber_drift, p.schwarz_floor, p.schwarz_holds, p.base_constant, p.base_rate_holds
        ))?;
    }
    let thin = traj.thinned(args.every);
    let name = format!("ansatz-{kind}");
    match ctx.cli.format {
        Format::Csv => ctx.write(&format!("{name}.csv"), &ansatz::trajectory_csv(&thin))?,
        Format::Json => ctx.write(&format!("{name}.json"), &ansatz::trajectory_json(&thin))?,
    };
    ctx.manifest("ansatz", None)?;
    Ok(())
}

fn read_space(path: &Path) -> Result<FiniteMetricSpace, CliError> {
    Ok(FiniteMetricSpace::from_json(&read_input(path)?)?)
}

fn cmd_gh(ctx: &mut Context, cmd: &GhCommand) -> Result<(), CliError> {
    match cmd {
        GhCommand::Collapse { nb, nf, t_max, t_step } => {
            if !(*t_step > 0.0) || !(*t_max >= 0.0) {
                return Err(CliError::Usage("need t_step > 0 and t_max >= 0".into()));
            }
            let count = (t_max / t_step + 1e-9).floor() as usize;
            let ts: Vec<f64> = (0..=count).map(|i| i as f64 * t_step).collect();
            let series = ghmetric::collapse_series(&ts, *nb, *nf)?;
            for p in &series.points {
                ctx.say(format!("t = {:<6} epsilon = {:.6e}", p.t, p.epsilon))?;
            }
            ctx.say(format!(
                "nonincreasing: {}; fit epsilon ~ {:.4} e^(-t/2) + {:.3e}/N_b",
                series.is_nonincreasing(1e-9),
                series.c1,
                series.c2
            ))?;
            match ctx.cli.format {
                Format::Csv => ctx.write("gh-collapse.csv", &ghmetric::series_csv(&series))?,
                Format::Json => ctx.write(
                    "gh-collapse.json",
                    &serde_json::to_string_pretty(&serde_json::json!({"schema": 1, "series": series}))
                        .expect("series serializes"),
                )?,
            };
            ctx.manifest("gh", None)?;
        }
        GhCommand::Bound { x, y } => {
            let (sx, sy) = (read_space(x)?, read_space(y)?);
            let bound = ghmetric::gh_upper_bound_seeded(&sx, &sy, ctx.cli.seed);
            ctx.say(format!("epsilon = {:.12e} ({})", bound.epsilon, bound.flag()))?;
            if bound.flag() == "heuristic" {
                ctx.say("upper bound only: local search over maps")?;
            }
            let text = serde_json::to_string_pretty(&serde_json::json!({
                "schema": 1,
                "epsilon": bound.epsilon,
                "flag": bound.flag(),
                "maps": bound.maps,
            }))
            .expect("bound serializes");
            ctx.write("gh-bound.json", &text)?;
            ctx.manifest("gh", None)?;
        }
        GhCommand::Torus { t, nb, nf } => {
            let space = ghmetric::sample_warped_torus(*t, *nb, *nf)?;
            let path = ctx.write(&format!("warped-torus-t{t}.json"), &space.to_json())?;
            ctx.say(format!("{} points, diameter {:.6}, written to {}", space.len(), space.diameter(), path.display()))?;
            ctx.manifest("gh", None)?;
        }
        GhCommand::Catalogue => {
            for (name, space) in ghmetric::catalogue() {
                ctx.write(&format!("space-{name}.json"), &space.to_json())?;
                ctx.say(format!("{name}: {} points, diameter {:.6}", space.len(), space.diameter()))?;
            }
            ctx.manifest("gh", None)?;
        }
    }
    Ok(())
}

fn cmd_verify(ctx: &mut Context, args: &VerifyArgs) -> Result<(), CliError> {
    if args.grid < 4 || !args.grid.is_power_of_two() {
        return Err(CliError::Usage(format!("grid {} must be a power of two >= 4", args.grid)));
    }
    let opts = VerifyOptions {
        grid: args.grid,
        models: load_models(args.models.as_ref())?,
        seed: ctx.cli.seed,
        matrix_samples: args.samples,
    };
    let ids: Vec<u8> = if args.criteria.is_empty() { (1..=8).collect() } else { args.criteria.clone() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=8).contains(&i)) {
        return Err(CliError::Usage(format!("criterion {bad} out of range 1..=8")));
    }
    let mut results = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, &opts);
        ctx.say(verify::format_table(std::slice::from_ref(&r)).lines().nth(1).unwrap_or_default())?;
        results.push(r);
    }
    let text = serde_json::to_string_pretty(&serde_json::json!({"schema": 1, "criteria": results}))
        .expect("results serialize");
    ctx.write("verify.json", &text)?;
    ctx.manifest("verify", args.models.as_deref())?;
    if results.iter().all(|r| r.pass) {
        ctx.say("all criteria pass")?;
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}
