//! Command-line steps: extract labels, format inputs, train, evaluate,
//! simulate, recommend. Each step reads files and writes into `--out`.
//!
//! Exit codes: 0 on success, 1 on validation or data errors, 2 on usage
//! errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::annotation::{
    achievable_levels, agreement_rates, nearest_rate, parse_rate, rate_to_f64, Rate,
};
use crate::applications::{
    flag_for_diverse_pool, recommend_count, write_recommendations_csv, AssignmentPolicy,
    Recommendation,
};
use crate::error::{Error, Result};
use crate::evaluation::{dataset_stats, evaluate, observed_levels, EvalReport};
use crate::formatting::{
    build_group_input, build_personal_inputs, build_text_only_input, DemographicFormat,
    FormattedInstance,
};
use crate::io::{
    ingest, read_instances_file, split, write_instances, write_predictions_csv, Dataset,
    ExternalPredictions, Split, Strictness,
};
use crate::plot::scatter_svg;
use crate::predictor::{train, DisagreementPredictor, Mode, PredictorConfig, PredictorModel};
use crate::simulation::{
    batch_simulate, classify_source, default_grid, sample_targets, simulated_instances,
    write_scatter_csv, GridKind, SimulationTarget, SourceClass, SourceThresholds,
};

#[derive(Debug, Parser)]
#[command(name = "disagree", version, about = "Annotation disagreement toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for every random choice (shuffles, splits, sampling).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Abort on the first malformed dataset line (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip malformed dataset lines and report them.
    #[arg(long, global = true)]
    pub lenient: bool,
}

impl Common {
    fn strictness(&self) -> Strictness {
        if self.lenient {
            Strictness::Lenient
        } else {
            Strictness::Strict
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dataset -> per-record disagreement labels and distribution stats.
    ExtractLabels {
        #[arg(long)]
        input: PathBuf,
    },
    /// Dataset -> model-ready instances.
    FormatInputs {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Demographics::None)]
        demographics: Demographics,
        #[arg(long, value_enum, default_value_t = FormatArg::Templated)]
        format: FormatArg,
    },
    /// Instances -> trained model, split, and training log.
    Train(TrainArgs),
    /// Model (or external predictions) + instances -> F1 / MSE report.
    Evaluate(EvaluateArgs),
    /// Model + dataset -> artificial-annotator simulation scatter.
    Simulate(SimulateArgs),
    /// Model + dataset -> annotator counts and diverse-pool flags.
    Recommend(RecommendArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demographics {
    None,
    Group,
    Personal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Templated,
    Sentence,
}

impl From<FormatArg> for DemographicFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Templated => DemographicFormat::Templated,
            FormatArg::Sentence => DemographicFormat::Sentence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Binary,
    Continuous,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Binary => Mode::Binary,
            ModeArg::Continuous => Mode::Continuous,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Continuous)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 15)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 8)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1 << 18)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub l2: f64,
    /// Fraction of text ids used for training; the rest is held out.
    #[arg(long, default_value_t = 0.8)]
    pub split_ratio: f64,
    /// Disable colon-template one-hot and cross features.
    #[arg(long)]
    pub no_demographic_features: bool,
    /// Binary mode: weight positives by the negative/positive ratio.
    #[arg(long)]
    pub balance_classes: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// Trained model; required unless --predictions is given.
    #[arg(long, required_unless_present = "predictions")]
    pub model: Option<PathBuf>,
    /// External `text_id,annotator_id,prediction` CSV aligned with --instances.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Mode of the external predictions.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Restrict to the test partition of this split file.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// `auto` (distinct true labels) or a comma list such as `0,1/3,2/3`.
    #[arg(long, default_value = "auto")]
    pub levels: String,
    #[arg(long, default_value = "dataset")]
    pub dataset_name: String,
    #[arg(long, default_value = "run")]
    pub setup: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, required_unless_present_any = ["predictions", "emit_instances"])]
    pub model: Option<PathBuf>,
    /// 28 (gender × ethnicity) or 140 (gender × ethnicity × age).
    #[arg(long, default_value_t = 140)]
    pub grid: usize,
    /// Number of texts to sample; defaults to all.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Templated)]
    pub format: FormatArg,
    #[arg(long, default_value_t = 0.01)]
    pub variance_threshold: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta_threshold: f64,
    /// Only write the simulated instances for an external predictor.
    #[arg(long)]
    pub emit_instances: bool,
    /// External predictions for previously emitted simulated instances.
    #[arg(long, conflicts_with = "emit_instances")]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// JSON assignment policy; defaults to bands 0.05→1, 0.2→3, 1.0→5.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// `none` predicts on the bare text; 28 or 140 averages over a grid.
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Templated)]
    pub format: FormatArg,
}

/// Parses `args` and runs the command, mapping errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    fs::create_dir_all(&common.out)?;
    match &cli.command {
        Command::ExtractLabels { input } => extract_labels(common, input),
        Command::FormatInputs {
            input,
            demographics,
            format,
        } => format_inputs(common, input, *demographics, (*format).into()),
        Command::Train(args) => train_cmd(common, args),
        Command::Evaluate(args) => evaluate_cmd(common, args),
        Command::Simulate(args) => simulate_cmd(common, args),
        Command::Recommend(args) => recommend_cmd(common, args),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load_dataset(common: &Common, path: &Path) -> Result<Dataset> {
    let ingested = ingest(path, common.strictness())?;
    for (line, message) in &ingested.skipped {
        eprintln!("skipped line {line}: {message}");
    }
    Ok(ingested.dataset)
}

/// Union of achievable levels over the annotator counts present.
fn dataset_levels(dataset: &Dataset) -> Vec<Rate> {
    let mut counts: Vec<usize> = dataset
        .records
        .iter()
        .map(|r| r.record.n_annotators())
        .collect();
    counts.sort_unstable();
    counts.dedup();
    let mut levels: Vec<Rate> = counts
        .into_iter()
        .flat_map(|n| achievable_levels(n, &dataset.space))
        .collect();
    levels.sort();
    levels.dedup();
    levels
}

fn extract_labels(common: &Common, input: &Path) -> Result<()> {
    let dataset = load_dataset(common, input)?;
    let mut csv = csv::Writer::from_writer(create(&common.out, "labels.csv")?);
    csv.write_record([
        "text_id",
        "n_annotators",
        "majority_index",
        "majority_class",
        "majority_rate",
        "binary",
        "continuous",
        "continuous_exact",
    ])?;
    let mut labels = Vec::with_capacity(dataset.records.len());
    for rec in &dataset.records {
        let profile = agreement_rates(&rec.record, &dataset.space)?;
        let label = crate::annotation::disagreement_label(&profile);
        csv.write_record([
            rec.record.text_id.clone(),
            rec.record.n_annotators().to_string(),
            profile.majority_index.to_string(),
            dataset.space.class_names()[profile.majority_index].clone(),
            rate_to_f64(profile.majority_rate).to_string(),
            label.binary.to_string(),
            label.continuous_f64().to_string(),
            label.continuous.to_string(),
        ])?;
        labels.push(label);
    }
    csv.flush()?;

    let stats = dataset_stats(&labels, &dataset_levels(&dataset))?;
    let mut out = create(&common.out, "stats.txt")?;
    writeln!(out, "n: {}", stats.n)?;
    writeln!(out, "mean: {}", stats.mean)?;
    writeln!(out, "variance: {}", stats.variance)?;
    let binary_rate = labels.iter().filter(|l| l.binary == 1).count() as f64 / stats.n as f64;
    writeln!(out, "binary_positive_rate: {binary_rate}")?;
    for (level, count) in &stats.counts {
        writeln!(out, "level {level}: {count}")?;
    }
    out.flush()?;
    Ok(())
}

fn format_inputs(
    common: &Common,
    input: &Path,
    demographics: Demographics,
    format: DemographicFormat,
) -> Result<()> {
    let dataset = load_dataset(common, input)?;
    let mut instances = Vec::new();
    for rec in &dataset.records {
        match demographics {
            Demographics::None => {
                instances.push(build_text_only_input(&rec.record, &dataset.space)?)
            }
            Demographics::Group => instances.push(build_group_input(
                &rec.record,
                &dataset.space,
                rec.profiles()?,
                &dataset.schema,
                format,
            )?),
            Demographics::Personal => instances.extend(build_personal_inputs(
                &rec.record,
                &dataset.space,
                rec.profiles()?,
                &dataset.schema,
                format,
            )?),
        }
    }
    write_instances(&instances, create(&common.out, "instances.jsonl")?)
}

fn train_cmd(common: &Common, args: &TrainArgs) -> Result<()> {
    let instances = read_instances_file(&args.instances)?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let split = split(
        instances.iter().map(|i| i.text_id.as_str()),
        args.split_ratio,
        common.seed,
    )?;
    let (train_set, _) = split.partition_instances(&instances);
    let config = PredictorConfig {
        mode: args.mode.into(),
        feature_dim: args.feature_dim,
        learning_rate: args.lr,
        batch_size: args.batch_size,
        epochs: args.epochs,
        seed: common.seed,
        l2: args.l2,
        demographic_features: !args.no_demographic_features,
        balance_classes: args.balance_classes,
        ..PredictorConfig::default()
    };
    let model = train(&train_set, &config)?;
    model.save(&common.out.join("model.json"))?;
    split.write_csv(create(&common.out, "split.csv")?)?;

    let mut log = csv::Writer::from_writer(create(&common.out, "training_log.csv")?);
    log.write_record(["epoch", "loss"])?;
    if let Some(initial) = model.initial_loss {
        log.write_record(["0".to_string(), initial.to_string()])?;
    }
    for (epoch, loss) in model.training_log.iter().enumerate() {
        log.write_record([(epoch + 1).to_string(), loss.to_string()])?;
    }
    log.flush()?;
    Ok(())
}

/// Parses `auto` or a comma list of fractions / decimals.
pub fn parse_levels(spec: &str) -> Result<Option<Vec<Rate>>> {
    if spec == "auto" {
        return Ok(None);
    }
    let mut levels = spec
        .split(',')
        .map(|item| {
            let item = item.trim();
            if item.contains('/') {
                parse_rate(item)
            } else {
                item.parse::<f64>()
                    .ok()
                    .and_then(|v| nearest_rate(v, 64))
                    .ok_or_else(|| Error::Config(format!("invalid level `{item}`")))
            }
        })
        .collect::<Result<Vec<Rate>>>()?;
    levels.sort();
    levels.dedup();
    Ok(Some(levels))
}

fn load_predictor(
    model: Option<&Path>,
    predictions: Option<&Path>,
    instances: &[FormattedInstance],
    mode: Option<ModeArg>,
) -> Result<Box<dyn DisagreementPredictor>> {
    match (predictions, model) {
        (Some(path), _) => Ok(Box::new(ExternalPredictions::from_reader(
            instances,
            File::open(path)?,
            mode.map_or(Mode::Continuous, Mode::from),
        )?)),
        (None, Some(path)) => Ok(Box::new(PredictorModel::load(path)?)),
        (None, None) => Err(Error::Config("need --model or --predictions".into())),
    }
}

fn evaluate_cmd(common: &Common, args: &EvaluateArgs) -> Result<()> {
    let mut instances = read_instances_file(&args.instances)?;
    let predictor = load_predictor(
        args.model.as_deref(),
        args.predictions.as_deref(),
        &instances,
        args.mode,
    )?;
    if let Some(path) = &args.split {
        let split = Split::read_csv(File::open(path)?)?;
        instances = split.partition_instances(&instances).1;
    }
    if instances.is_empty() {
        return Err(Error::Evaluation("no instances to evaluate".into()));
    }
    let labels: Vec<_> = instances.iter().map(|i| i.label).collect();
    let levels = parse_levels(&args.levels)?.unwrap_or_else(|| observed_levels(&labels));
    let predictions = instances
        .iter()
        .map(|inst| predictor.predict_instance(inst))
        .collect::<Result<Vec<f64>>>()?;
    let report = evaluate(&predictions, &labels, &levels, predictor.mode())?;

    let mut text = create(&common.out, "report.txt")?;
    writeln!(text, "dataset: {}", args.dataset_name)?;
    writeln!(text, "setup: {}", args.setup)?;
    text.write_all(report.to_key_value().as_bytes())?;
    text.flush()?;

    let mut csv = csv::Writer::from_writer(create(&common.out, "report.csv")?);
    csv.write_record(EvalReport::CSV_HEADER)?;
    csv.write_record(report.csv_row(&args.dataset_name, &args.setup))?;
    csv.flush()?;

    write_predictions_csv(
        &instances,
        &predictions,
        create(&common.out, "predictions.csv")?,
    )
}

fn simulation_targets(dataset: &Dataset) -> Result<Vec<SimulationTarget>> {
    dataset
        .records
        .iter()
        .map(|rec| {
            Ok(SimulationTarget {
                text_id: rec.record.text_id.clone(),
                text: rec.record.text.clone(),
                original: rec.record.disagreement(&dataset.space)?,
            })
        })
        .collect()
}

fn simulate_cmd(common: &Common, args: &SimulateArgs) -> Result<()> {
    let dataset = load_dataset(common, &args.input)?;
    let corpus = simulation_targets(&dataset)?;
    let grid = default_grid(GridKind::from_size(args.grid)?);
    let format = args.format.into();
    let sample = args.sample.unwrap_or(corpus.len());

    if args.emit_instances {
        let targets = sample_targets(&corpus, sample, common.seed)?;
        let instances: Vec<FormattedInstance> = targets
            .iter()
            .flat_map(|t| simulated_instances(t, &grid, format))
            .collect();
        return write_instances(
            &instances,
            create(&common.out, "simulated_instances.jsonl")?,
        );
    }

    let predictor: Box<dyn DisagreementPredictor> = match (&args.predictions, &args.model) {
        (Some(path), _) => {
            let targets = sample_targets(&corpus, sample, common.seed)?;
            let instances: Vec<FormattedInstance> = targets
                .iter()
                .flat_map(|t| simulated_instances(t, &grid, format))
                .collect();
            Box::new(ExternalPredictions::from_reader(
                &instances,
                File::open(path)?,
                Mode::Continuous,
            )?)
        }
        (None, Some(path)) => Box::new(PredictorModel::load(path)?),
        (None, None) => return Err(Error::Config("need --model or --predictions".into())),
    };

    let thresholds = SourceThresholds {
        variance: args.variance_threshold,
        delta: args.delta_threshold,
    };
    if thresholds.variance < 0.0 || thresholds.delta < 0.0 {
        return Err(Error::Config("thresholds must be non-negative".into()));
    }
    let summaries = batch_simulate(
        &corpus,
        sample,
        common.seed,
        &grid,
        predictor.as_ref(),
        format,
    )?;

    write_scatter_csv(&summaries, thresholds, create(&common.out, "scatter.csv")?)?;
    fs::write(
        common.out.join("scatter.svg"),
        scatter_svg(&summaries, &format!("{} artificial annotators", grid.len())),
    )?;

    let mut text = create(&common.out, "simulation.txt")?;
    writeln!(text, "grid: {}", grid.len())?;
    writeln!(text, "texts: {}", summaries.len())?;
    writeln!(text, "predictions: {}", summaries.len() * grid.len())?;
    for class in [
        SourceClass::TextInherent,
        SourceClass::AnnotatorDriven,
        SourceClass::Indeterminate,
    ] {
        let n = summaries
            .iter()
            .filter(|s| classify_source(s, thresholds) == class)
            .count();
        writeln!(text, "{class}: {n}")?;
    }
    text.flush()?;
    Ok(())
}

fn recommend_cmd(common: &Common, args: &RecommendArgs) -> Result<()> {
    let dataset = load_dataset(common, &args.input)?;
    let model = PredictorModel::load(&args.model)?;
    let policy = match &args.policy {
        Some(path) => AssignmentPolicy::from_json(&fs::read_to_string(path)?)?,
        None => AssignmentPolicy::default(),
    };
    let corpus = simulation_targets(&dataset)?;
    let rows: Vec<Recommendation> = if args.grid == "none" {
        corpus
            .iter()
            .map(|t| {
                let predicted = model.predict(&t.text);
                Recommendation {
                    text_id: t.text_id.clone(),
                    predicted,
                    recommended_count: recommend_count(predicted, &policy),
                    diverse_pool_flag: false,
                }
            })
            .collect()
    } else {
        let size: usize = args.grid.parse().map_err(|_| {
            Error::Config(format!(
                "--grid must be none, 28 or 140, got `{}`",
                args.grid
            ))
        })?;
        let grid = default_grid(GridKind::from_size(size)?);
        batch_simulate(
            &corpus,
            corpus.len(),
            common.seed,
            &grid,
            &model,
            args.format.into(),
        )?
        .into_iter()
        .map(|s| Recommendation {
            recommended_count: recommend_count(s.mean, &policy),
            diverse_pool_flag: flag_for_diverse_pool(&s, &policy),
            predicted: s.mean,
            text_id: s.text_id,
        })
        .collect()
    };
    write_recommendations_csv(&rows, create(&common.out, "recommendations.csv")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_lists() {
        assert_eq!(parse_levels("auto").unwrap(), None);
        assert_eq!(
            parse_levels("2/3, 0, 1/3").unwrap().unwrap(),
            vec![Rate::new(0, 1), Rate::new(1, 3), Rate::new(2, 3)]
        );
        assert_eq!(
            parse_levels("0,0.2,0.4,0.6").unwrap().unwrap(),
            vec![
                Rate::new(0, 1),
                Rate::new(1, 5),
                Rate::new(2, 5),
                Rate::new(3, 5)
            ]
        );
        assert!(parse_levels("0,1.5").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let code = main_with_args(["disagree", "format-inputs", "--demographics", "everyone"]);
        assert_eq!(code, ExitCode::from(2));
    }
}
