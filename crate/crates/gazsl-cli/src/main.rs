//! Operator entry point: one subcommand per pipeline stage, each reading and
//! writing file artifacts. Every artifact embeds the digest of the fully
//! resolved run configuration so results can be traced back to their exact
//! settings.
//!
//! Exit codes: 0 on success, 2 for configuration or validation problems
//! (including unreadable inputs), 3 when training hits a non-finite loss.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gazsl::artifact::{load_model, save_model, validate_model, ModelArtifact};
use gazsl::autodiff::Tensor;
use gazsl::config::{NnModeChoice, RunConfig};
use gazsl::data::synthetic::generate_synthetic;
use gazsl::data::{load_dataset, DatasetBundle, SyntheticSpec};
use gazsl::eval::{
    calibration_grid, encode_for_model, classify_batch, gzsl_curve, retrieval_map,
    suc_curve_csv, synthesize_bank, top1_accuracy, EvalReport, SynthBank,
    DEFAULT_GRID_POINTS, DENSE_GRID_POINTS,
};
use gazsl::gan::{train_model_with_progress, AblationMode, GanError, GanModel, LossRecord};
use gazsl::ClassId;

/// Default dataset directory when `--data` is not given.
const DATA_ROOT_ENV: &str = "GAZSL_DATA_ROOT";

/// Training progress is reported to stderr once per this many outer loops.
const PROGRESS_EVERY: usize = 50;

#[derive(Parser)]
#[command(
    name = "gazsl",
    version,
    about = "Zero-shot learning laboratory: synthesize a benchmark, train a \
             text-conditioned feature generator, and evaluate it"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset directory
    Synthdata(SynthdataArgs),
    /// Train a model on a dataset directory
    Train(TrainArgs),
    /// Unseen-class recognition accuracy
    Eval(EvalArgs),
    /// Generalized seen/unseen accuracy curve and its area
    Gzsl(GzslArgs),
    /// Per-class retrieval mean average precision
    Retrieve(RetrieveArgs),
}

/// Dataset directory argument shared by every consumer of a dataset.
#[derive(Args)]
struct DataArg {
    /// Dataset directory (default: $GAZSL_DATA_ROOT)
    #[arg(long)]
    data: Option<PathBuf>,
}

impl DataArg {
    fn resolve(&self) -> Result<PathBuf, CliError> {
        self.data
            .clone()
            .or_else(|| std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from))
            .ok_or_else(|| {
                CliError::config(format!(
                    "no dataset directory: pass --data or set {DATA_ROOT_ENV}"
                ))
            })
    }
}

#[derive(Args)]
struct SynthdataArgs {
    /// Output directory for the dataset
    #[arg(long)]
    out: PathBuf,
    /// Generator spec JSON; omitted fields take their defaults
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the spec's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Write into a non-empty directory
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArg,
    /// Model artifact output path
    #[arg(long)]
    out: PathBuf,
    /// Loss history CSV path (default: model path with a .losses.csv extension)
    #[arg(long)]
    losses: Option<PathBuf>,
    /// Run config JSON; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Outer training loops
    #[arg(long)]
    steps: Option<usize>,
    /// Visual-pivot regularizer weight
    #[arg(long)]
    lambda_p: Option<f64>,
    /// Gradient penalty weight
    #[arg(long)]
    gp_coeff: Option<f64>,
    /// Noise input width
    #[arg(long)]
    z_dim: Option<usize>,
    /// Objective ablation: none trains the full model
    #[arg(long, value_enum)]
    ablation: Option<AblationChoice>,
    /// Feed raw text vectors to the generator, skipping the reduction layer
    #[arg(long)]
    no_text_fc: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArg,
    /// Trained model artifact
    #[arg(long)]
    model: PathBuf,
    /// Report JSON output path
    #[arg(long)]
    report: PathBuf,
    /// Run config JSON; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// instance, pivot, or both
    #[arg(long, value_parser = parse_nn_mode)]
    nn_mode: Option<NnModeChoice>,
    /// Synthesized vectors per class in the evaluation bank
    #[arg(long)]
    per_class: Option<usize>,
    /// Seed for the bank's noise streams
    #[arg(long)]
    eval_seed: Option<u64>,
}

#[derive(Args)]
struct GzslArgs {
    #[command(flatten)]
    data: DataArg,
    /// Trained model artifact
    #[arg(long)]
    model: PathBuf,
    /// Report JSON output path
    #[arg(long)]
    report: PathBuf,
    /// Seen/unseen accuracy curve CSV output path
    #[arg(long)]
    curve: PathBuf,
    /// Run config JSON; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep 10001 calibration values instead of the default 201
    #[arg(long)]
    dense_grid: bool,
    /// Synthesized vectors per class in the evaluation bank
    #[arg(long)]
    per_class: Option<usize>,
    /// Seed for the bank's noise streams
    #[arg(long)]
    eval_seed: Option<u64>,
}

#[derive(Args)]
struct RetrieveArgs {
    #[command(flatten)]
    data: DataArg,
    /// Trained model artifact
    #[arg(long)]
    model: PathBuf,
    /// Report JSON output path
    #[arg(long)]
    report: PathBuf,
    /// Retrieval table CSV output path
    #[arg(long)]
    table: PathBuf,
    /// Run config JSON; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Retrieval cutoffs as fractions of each class's gallery count
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Synthesized vectors per class in the evaluation bank
    #[arg(long)]
    per_class: Option<usize>,
    /// Seed for the bank's noise streams
    #[arg(long)]
    eval_seed: Option<u64>,
}

/// `--ablation` keyword set; "none" selects the full objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum AblationChoice {
    None,
    GanOnly,
    VpOnly,
}

impl From<AblationChoice> for AblationMode {
    fn from(choice: AblationChoice) -> AblationMode {
        match choice {
            AblationChoice::None => AblationMode::Full,
            AblationChoice::GanOnly => AblationMode::GanOnly,
            AblationChoice::VpOnly => AblationMode::VpOnly,
        }
    }
}

fn parse_nn_mode(s: &str) -> Result<NnModeChoice, String> {
    s.parse()
}

/// Every failure is either a configuration/validation problem (exit 2) or a
/// numerical one (exit 3). Unreadable files, malformed data, and invariant
/// violations all count as the former.
#[derive(Debug)]
enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn config(message: impl Into<String>) -> CliError {
        CliError::Config(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

/// Anything that is not a non-finite-loss failure maps to exit code 2.
impl From<GanError> for CliError {
    fn from(e: GanError) -> CliError {
        match e {
            GanError::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

macro_rules! config_error_from {
    ($($ty:ty),+) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::Config(e.to_string())
            }
        }
    )+};
}

config_error_from!(
    gazsl::data::DataError,
    gazsl::config::ConfigError,
    gazsl::artifact::ArtifactError,
    gazsl::eval::EvalError
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synthdata(args) => run_synthdata(&args),
        Command::Train(args) => run_train(&args),
        Command::Eval(args) => run_eval(&args),
        Command::Gzsl(args) => run_gzsl(&args),
        Command::Retrieve(args) => run_retrieve(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run_synthdata(args: &SynthdataArgs) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(path) => parse_json_file::<SyntheticSpec>(path)?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;

    if directory_is_nonempty(&args.out)? && !args.force {
        return Err(CliError::config(format!(
            "output directory {} is not empty; pass --force to write anyway",
            args.out.display()
        )));
    }
    let bundle = generate_synthetic(&spec, &args.out)?;
    println!(
        "wrote {} classes ({} seen, {} unseen, {} instances) to {}",
        spec.class_count,
        bundle.split.seen.len(),
        bundle.split.unseen.len(),
        bundle.labels.len(),
        args.out.display()
    );
    Ok(())
}

fn run_train(args: &TrainArgs) -> Result<(), CliError> {
    let mut run = load_run_config(&args.config)?;
    if let Some(seed) = args.seed {
        run.train.seed = seed;
    }
    if let Some(steps) = args.steps {
        run.train.max_loops = steps;
    }
    if let Some(lambda_p) = args.lambda_p {
        run.train.lambda_p = lambda_p;
    }
    if let Some(gp_coeff) = args.gp_coeff {
        run.train.gp_coeff = gp_coeff;
    }
    if let Some(z_dim) = args.z_dim {
        run.train.z_dim = z_dim;
    }
    if let Some(ablation) = args.ablation {
        run.train.ablation = ablation.into();
    }
    if args.no_text_fc {
        run.train.use_text_fc = false;
    }
    run.validate()?;
    let digest = run.digest();

    let bundle = load_dataset(&args.data.resolve()?)?;
    let max_loops = run.train.max_loops;
    let outcome = train_model_with_progress(&bundle, &run.train, |record| {
        if record.step % PROGRESS_EVERY == 0 || record.step == max_loops {
            eprintln!(
                "loop {}/{} L_D {:.4} L_G {:.4} L_e {:.4}",
                record.step, max_loops, record.l_d, record.l_g, record.l_e
            );
        }
    })?;

    ensure_parent(&args.out)?;
    save_model(&args.out, &outcome.model, &digest)?;
    let losses_path = args
        .losses
        .clone()
        .unwrap_or_else(|| default_losses_path(&args.out));
    ensure_parent(&losses_path)?;
    write_file(
        &losses_path,
        &loss_csv(&outcome.history, &digest, run.train.seed),
    )?;
    println!(
        "trained {} loops; model {} losses {} digest {}",
        outcome.history.len(),
        args.out.display(),
        losses_path.display(),
        digest
    );
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let mut run = load_run_config(&args.config)?;
    if let Some(mode) = args.nn_mode {
        run.eval.nn_mode = mode;
    }
    if let Some(per_class) = args.per_class {
        run.eval.per_class = per_class;
    }
    if let Some(seed) = args.eval_seed {
        run.eval.seed = seed;
    }
    let setup = EvalSetup::prepare(&args.model, &args.data, run)?;

    let unseen = setup.sorted_unseen();
    let bank = setup.bank_over(&unseen)?;
    let (queries, truth) = setup.scaled_rows(|c| setup.bundle.split.unseen_set().contains(&c))?;

    let mut top1 = BTreeMap::new();
    for mode in setup.run.eval.nn_mode.modes() {
        let predictions = classify_batch(&queries, &bank, mode)?;
        let accuracy = top1_accuracy(&predictions, &truth)?;
        top1.insert(format!("unseen_{mode}"), accuracy);
    }

    let report = EvalReport {
        top1,
        ausuc: None,
        map_at: BTreeMap::new(),
        config_digest: setup.digest.clone(),
    };
    write_report(&args.report, &report)?;
    for (label, value) in &report.top1 {
        println!("{label} top-1: {value:.4}");
    }
    println!("report {}", args.report.display());
    Ok(())
}

fn run_gzsl(args: &GzslArgs) -> Result<(), CliError> {
    let mut run = load_run_config(&args.config)?;
    if args.dense_grid {
        run.eval.dense_grid = true;
    }
    if let Some(per_class) = args.per_class {
        run.eval.per_class = per_class;
    }
    if let Some(seed) = args.eval_seed {
        run.eval.seed = seed;
    }
    let setup = EvalSetup::prepare(&args.model, &args.data, run)?;

    // The generalized protocol classifies over the union of all classes, so
    // the bank covers both splits and seen-class scores get calibrated.
    let mut all_classes = setup.bundle.split.seen.clone();
    all_classes.extend_from_slice(&setup.bundle.split.unseen);
    all_classes.sort_unstable();
    let bank = setup.bank_over(&all_classes)?;

    let seen_set = setup.bundle.split.seen_set();
    let (seen_queries, seen_truth) = setup.scaled_rows(|c| seen_set.contains(&c))?;
    let (unseen_queries, unseen_truth) = setup.scaled_rows(|c| !seen_set.contains(&c))?;

    let points = if setup.run.eval.dense_grid {
        DENSE_GRID_POINTS
    } else {
        DEFAULT_GRID_POINTS
    };
    let grid = calibration_grid(&seen_queries, &unseen_queries, &bank, points)?;
    let curve = gzsl_curve(
        &seen_queries,
        &seen_truth,
        &unseen_queries,
        &unseen_truth,
        &bank,
        &setup.bundle.split.seen,
        &grid,
    )?;

    // Accuracies at zero calibration: the plain generalized setting.
    let mut top1 = BTreeMap::new();
    if let Some(origin) = curve
        .points
        .iter()
        .min_by(|a, b| a.lambda.abs().total_cmp(&b.lambda.abs()))
    {
        top1.insert("seen_to_union".to_string(), origin.seen_accuracy);
        top1.insert("unseen_to_union".to_string(), origin.unseen_accuracy);
    }

    ensure_parent(&args.curve)?;
    write_file(&args.curve, &suc_curve_csv(&curve))?;
    let report = EvalReport {
        top1,
        ausuc: Some(curve.ausuc),
        map_at: BTreeMap::new(),
        config_digest: setup.digest.clone(),
    };
    write_report(&args.report, &report)?;
    println!("AUSUC: {:.4}", curve.ausuc);
    println!("curve {} report {}", args.curve.display(), args.report.display());
    Ok(())
}

fn run_retrieve(args: &RetrieveArgs) -> Result<(), CliError> {
    let mut run = load_run_config(&args.config)?;
    if let Some(ratios) = &args.ratios {
        run.eval.ratios = ratios.clone();
    }
    if let Some(per_class) = args.per_class {
        run.eval.per_class = per_class;
    }
    if let Some(seed) = args.eval_seed {
        run.eval.seed = seed;
    }
    let setup = EvalSetup::prepare(&args.model, &args.data, run)?;

    let unseen = setup.sorted_unseen();
    let bank = setup.bank_over(&unseen)?;
    let (gallery, labels) = setup.scaled_rows(|c| setup.bundle.split.unseen_set().contains(&c))?;

    let mut map_at = BTreeMap::new();
    for &ratio in &setup.run.eval.ratios {
        let map = retrieval_map(&bank, &gallery, &labels, ratio)?;
        map_at.insert(format!("{ratio}"), map);
    }

    ensure_parent(&args.table)?;
    write_file(&args.table, &retrieval_table_csv(&setup.run.eval.ratios, &map_at))?;
    let report = EvalReport {
        top1: BTreeMap::new(),
        ausuc: None,
        map_at,
        config_digest: setup.digest.clone(),
    };
    write_report(&args.report, &report)?;
    for (ratio, value) in &report.map_at {
        println!("mAP@{ratio}: {value:.4}");
    }
    println!("table {} report {}", args.table.display(), args.report.display());
    Ok(())
}

/// Everything the three evaluation subcommands share: the loaded model, the
/// dataset, the vocabulary-checked text encodings, and the resolved config.
/// The config's training section is replaced by the one embedded in the
/// artifact, so the echoed digest describes the model actually evaluated.
struct EvalSetup {
    run: RunConfig,
    digest: String,
    bundle: DatasetBundle,
    model: GanModel,
    texts: BTreeMap<ClassId, gazsl::text::TfIdfVector>,
}

impl EvalSetup {
    fn prepare(model_path: &Path, data: &DataArg, mut run: RunConfig) -> Result<EvalSetup, CliError> {
        let data_root = data.resolve()?;
        let ModelArtifact { model, .. } = load_model(model_path)?;
        validate_model(&model)?;
        run.train = model.config.clone();
        run.validate()?;
        let digest = run.digest();
        let bundle = load_dataset(&data_root)?;
        let encoded = encode_for_model(&model, &bundle.documents)?;
        if !encoded.zero_vector_classes.is_empty() {
            eprintln!(
                "warning: documents for classes {:?} encode to zero vectors; \
                 their synthesized features are conditioned on nothing",
                encoded.zero_vector_classes
            );
        }
        Ok(EvalSetup {
            run,
            digest,
            bundle,
            model,
            texts: encoded.vectors,
        })
    }

    fn sorted_unseen(&self) -> Vec<ClassId> {
        let mut unseen = self.bundle.split.unseen.clone();
        unseen.sort_unstable();
        unseen
    }

    fn bank_over(&self, classes: &[ClassId]) -> Result<SynthBank, CliError> {
        Ok(synthesize_bank(
            &self.model,
            &self.texts,
            classes,
            self.run.eval.per_class,
            self.run.eval.seed,
        )?)
    }

    /// Rows matching `keep`, mapped through the model's feature scaler. Any
    /// values clamped by the scaler (distribution shift beyond the training
    /// range) are reported to stderr.
    fn scaled_rows(
        &self,
        keep: impl Fn(ClassId) -> bool,
    ) -> Result<(Tensor, Vec<ClassId>), CliError> {
        let (raw, labels) = self.bundle.rows_where(keep);
        if labels.is_empty() {
            return Err(CliError::config(
                "no dataset rows match the requested split".to_string(),
            ));
        }
        let (scaled, clamped) = self.model.scaler.apply(&raw);
        if clamped > 0 {
            eprintln!("note: clamped {clamped} feature values outside the training range");
        }
        Ok((scaled, labels))
    }
}

fn load_run_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn parse_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("parsing {}: {e}", path.display())))
}

fn directory_is_nonempty(path: &Path) -> Result<bool, CliError> {
    match std::fs::read_dir(path) {
        Ok(mut entries) => Ok(entries.next().is_some()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(CliError::config(format!(
            "reading {}: {e}",
            path.display()
        ))),
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::config(format!("creating {}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::config(format!("writing {}: {e}", path.display())))
}

fn write_report(path: &Path, report: &EvalReport) -> Result<(), CliError> {
    ensure_parent(path)?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::config(format!("serializing report: {e}")))?;
    write_file(path, &json)
}

fn default_losses_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("losses.csv")
}

/// Loss history CSV: a provenance comment line, a header, then one row per
/// outer loop. Losses that an ablation disables are recorded as NaN in the
/// history and serialize to empty cells here.
fn loss_csv(history: &[LossRecord], digest: &str, seed: u64) -> String {
    let mut out = format!("# config_digest={digest} seed={seed}\n");
    out.push_str("step,l_d,l_g,l_e,wall_ms\n");
    for record in history {
        let cell = |v: f64| {
            if v.is_nan() {
                String::new()
            } else {
                format!("{v}")
            }
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            record.step,
            cell(record.l_d),
            cell(record.l_g),
            cell(record.l_e),
            record.wall_ms
        ));
    }
    out
}

/// One column per requested ratio, a single data row, mirroring the usual
/// retrieval table layout.
fn retrieval_table_csv(ratios: &[f64], map_at: &BTreeMap<String, f64>) -> String {
    let header: Vec<String> = ratios.iter().map(|r| format!("map@{r}")).collect();
    let row: Vec<String> = ratios
        .iter()
        .map(|r| {
            map_at
                .get(&format!("{r}"))
                .map(|v| format!("{v}"))
                .unwrap_or_default()
        })
        .collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_csv_serializes_nan_as_empty_cell() {
        let history = vec![
            LossRecord {
                step: 1,
                l_d: -0.5,
                l_g: 2.25,
                l_e: f64::NAN,
                wall_ms: 3.0,
            },
            LossRecord {
                step: 2,
                l_d: f64::NAN,
                l_g: f64::NAN,
                l_e: 0.125,
                wall_ms: 4.5,
            },
        ];
        let csv = loss_csv(&history, "abc123", 7);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# config_digest=abc123 seed=7");
        assert_eq!(lines[1], "step,l_d,l_g,l_e,wall_ms");
        assert_eq!(lines[2], "1,-0.5,2.25,,3");
        assert_eq!(lines[3], "2,,,0.125,4.5");
    }

    #[test]
    fn retrieval_table_is_one_row_wide() {
        let mut map_at = BTreeMap::new();
        map_at.insert("0.25".to_string(), 0.875);
        map_at.insert("0.5".to_string(), 0.75);
        map_at.insert("1".to_string(), 0.5);
        let csv = retrieval_table_csv(&[0.25, 0.5, 1.0], &map_at);
        assert_eq!(csv, "map@0.25,map@0.5,map@1\n0.875,0.75,0.5\n");
    }

    #[test]
    fn losses_path_sits_next_to_the_model() {
        assert_eq!(
            default_losses_path(Path::new("runs/model.json")),
            Path::new("runs/model.losses.csv")
        );
        assert_eq!(
            default_losses_path(Path::new("model")),
            Path::new("model.losses.csv")
        );
    }

    #[test]
    fn ablation_keywords_map_to_modes() {
        assert_eq!(AblationMode::from(AblationChoice::None), AblationMode::Full);
        assert_eq!(
            AblationMode::from(AblationChoice::GanOnly),
            AblationMode::GanOnly
        );
        assert_eq!(
            AblationMode::from(AblationChoice::VpOnly),
            AblationMode::VpOnly
        );
    }

    #[test]
    fn numeric_failures_exit_3_everything_else_2() {
        let numerical = CliError::from(GanError::NonFiniteLoss {
            step: 4,
            name: "L_D",
            value: f64::INFINITY,
        });
        assert_eq!(numerical.exit_code(), 3);
        let config = CliError::from(GanError::EmptyBatch("x"));
        assert_eq!(config.exit_code(), 2);
        assert_eq!(CliError::config("bad").exit_code(), 2);
    }
}
