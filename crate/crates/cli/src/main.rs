//! `weekdbm`: ingest tracker exports, train DBMs, and generate usage patterns.
//!
//! Exit codes: 0 success, 2 user or data error, 1 internal error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use weekdbm::data::{assemble_weeks, load_records};
use weekdbm::dbm::{gibbs_step, load_model, save_model, GibbsParticle, MEAN_FIELD_MAX_ITERS, MEAN_FIELD_TOLERANCE};
use weekdbm::generation::{
    column_frequencies, conditional_samples, usage_heatmap_with_mode, write_samples_csv, Condition,
    GenerationMode,
};
use weekdbm::pipeline::{fit, within_oracle_guard};
use weekdbm::rng::{self, streams};
use weekdbm::{oracle, DbmModel, RunConfig, WeekMatrix};

#[derive(Parser)]
#[command(name = "weekdbm", version, about = "Deep Boltzmann machines for weekly activity-tracker usage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a `subject_id,date,steps` CSV into a binary week matrix.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretrain and train a DBM on a week matrix.
    Train {
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: TrainParams,
    },
    /// Write the on/off usage pattern table (`<out>.csv`) and image (`<out>.pgm`).
    Heatmap {
        model: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pixels per table cell in the PGM image.
        #[arg(long, default_value_t = 32)]
        cell_size: usize,
        #[arg(long, value_enum, default_value_t = Mode::Potential)]
        mode: Mode,
    },
    /// Report exact and variational likelihoods and per-day activation rates.
    Evaluate {
        model: PathBuf,
        matrix: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write raw generated weeks for both top-unit conditions as CSV.
    Generate {
        model: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Potential)]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Deterministic potential propagation, then thresholding.
    Potential,
    /// Clamped Gibbs sampling.
    Gibbs,
}

impl Mode {
    fn generation_mode(self) -> GenerationMode {
        match self {
            Mode::Potential => GenerationMode::Potential,
            Mode::Gibbs => GenerationMode::Gibbs { burn_in: 1000 },
        }
    }
}

#[derive(Args)]
struct TrainParams {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated layer sizes, visible first.
    #[arg(long, value_delimiter = ',', default_value = "7,7,1")]
    layer_dims: Vec<usize>,
    #[arg(long, default_value_t = 0.007)]
    pretrain_lr: f64,
    #[arg(long, default_value_t = 0.008)]
    dbm_lr: f64,
    #[arg(long, default_value_t = 40)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 40)]
    dbm_epochs: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    gibbs_steps: usize,
    /// Train bias terms (off by default).
    #[arg(long, overrides_with = "no_biases")]
    biases: bool,
    #[arg(long)]
    no_biases: bool,
}

impl TrainParams {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            layer_dims: self.layer_dims.clone(),
            pretrain_learning_rate: self.pretrain_lr,
            dbm_learning_rate: self.dbm_lr,
            pretrain_epochs: self.pretrain_epochs,
            dbm_epochs: self.dbm_epochs,
            batch_size: self.batch_size,
            gibbs_steps: self.gibbs_steps,
            seed: self.seed,
            use_biases: self.biases && !self.no_biases,
            sample_count: self.samples,
        }
    }
}

/// Error that maps to exit code 2.
#[derive(Debug)]
struct UserError(anyhow::Error);

impl std::fmt::Display for UserError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UserError {}

fn user<E: Into<anyhow::Error>>(e: E) -> anyhow::Error {
    anyhow::Error::new(UserError(e.into()))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(user)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(user)
}

fn read_matrix(path: &Path) -> anyhow::Result<WeekMatrix> {
    WeekMatrix::read_csv(open(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(user)
}

fn read_model(path: &Path) -> anyhow::Result<DbmModel> {
    load_model(open(path)?)
        .with_context(|| format!("loading model {}", path.display()))
        .map_err(user)
}

fn cmd_ingest(input: &Path, out: &Path) -> anyhow::Result<()> {
    let set = load_records(open(input)?)
        .with_context(|| format!("reading {}", input.display()))
        .map_err(user)?;
    let matrix = assemble_weeks(&set.records).map_err(user)?;
    let before = set.distinct_weeks();
    println!("weeks before empty-week deletion: {before}");
    println!("weeks after empty-week deletion:  {}", matrix.len());
    if matrix.is_empty() {
        eprintln!("warning: no recorded weeks in {}", input.display());
    }
    let mut sink = create(out)?;
    matrix.write_csv(&mut sink).map_err(user)?;
    sink.flush()?;
    Ok(())
}

fn fmt_ll(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

fn cmd_train(matrix: &Path, out: &Path, params: &TrainParams) -> anyhow::Result<()> {
    let config = params.run_config();
    config.validate().map_err(user)?;
    if config.layer_dims[0] != 7 {
        return Err(user(anyhow::anyhow!(
            "the visible layer must have 7 units (one per weekday), got {}",
            config.layer_dims[0]
        )));
    }
    let weeks = read_matrix(matrix)?;
    if weeks.is_empty() {
        return Err(user(anyhow::anyhow!("{} has no rows", matrix.display())));
    }
    let report = fit(&weeks.to_array(), &config).map_err(user)?;
    if within_oracle_guard(&config.layer_dims) {
        println!("exact log-likelihood per week (initial):     {}", fmt_ll(report.loglik_initial));
        println!("exact log-likelihood per week (pretrained):  {}", fmt_ll(report.loglik_pretrained));
        println!("exact log-likelihood per week (trained):     {}", fmt_ll(report.loglik_final));
    }
    let mut sink = create(out)?;
    save_model(&report.model, &mut sink)?;
    sink.flush()?;
    println!("model written to {}", out.display());
    Ok(())
}

fn cmd_heatmap(model: &Path, samples: usize, out: &Path, seed: u64, cell_size: usize, mode: Mode) -> anyhow::Result<()> {
    let model = read_model(model)?;
    let mut r = rng::stream(seed, streams::GENERATION);
    let table = usage_heatmap_with_mode(&model, samples, mode.generation_mode(), &mut r).map_err(user)?;
    let csv_path = out.with_extension("csv");
    let pgm_path = out.with_extension("pgm");
    let mut csv = create(&csv_path)?;
    table.write_csv(&mut csv)?;
    csv.flush()?;
    let mut pgm = create(&pgm_path)?;
    table.write_pgm(&mut pgm, cell_size).map_err(user)?;
    pgm.flush()?;
    for row in &table.rows {
        let cells: Vec<String> = row.frequencies.iter().map(|f| format!("{f:.3}")).collect();
        println!("{:>3}: {}", row.label, cells.join(" "));
    }
    println!("wrote {} and {}", csv_path.display(), pgm_path.display());
    Ok(())
}

fn free_running_frequencies(model: &DbmModel, n: usize, seed: u64) -> anyhow::Result<Vec<f64>> {
    let mut r = rng::stream(seed, streams::EVALUATION);
    let mut particle = GibbsParticle::zeros(model);
    for _ in 0..1000 {
        particle = gibbs_step(model, &particle, &mut r)?;
    }
    let mut samples = Array2::<u8>::zeros((n, model.n_visible()));
    for mut row in samples.outer_iter_mut() {
        particle = gibbs_step(model, &particle, &mut r)?;
        for (x, &v) in row.iter_mut().zip(particle.visible()) {
            *x = v as u8;
        }
    }
    Ok(column_frequencies(&samples))
}

fn cmd_evaluate(model_path: &Path, matrix: &Path, samples: usize, seed: u64) -> anyhow::Result<()> {
    let model = read_model(model_path)?;
    let weeks = read_matrix(matrix)?;
    if weeks.is_empty() {
        return Err(user(anyhow::anyhow!("{} has no rows", matrix.display())));
    }
    if model.n_visible() != 7 {
        return Err(user(anyhow::anyhow!(
            "model has {} visible units but the week matrix has 7 columns",
            model.n_visible()
        )));
    }
    if samples == 0 {
        return Err(user(anyhow::anyhow!("--samples must be at least 1")));
    }
    let data = weeks.to_array();

    if within_oracle_guard(&model.layer_sizes()) {
        let log_z = oracle::partition_function(&model)?;
        let rows = oracle::per_row_loglik(&model, &data)?;
        let mean = rows.iter().sum::<f64>() / rows.len() as f64;
        println!("log partition function: {log_z:.6}");
        println!("exact log-likelihood per week: {mean:.6}");
        println!("subject_id,iso_week,exact_loglik,mean_field_bound");
        for ((row, week), ll) in data.outer_iter().zip(&weeks.rows).zip(&rows) {
            let v = row.to_vec();
            let state = model.mean_field_infer(&v, MEAN_FIELD_TOLERANCE, MEAN_FIELD_MAX_ITERS)?;
            let bound = model.mean_field_lower_bound(&v, &state, log_z)?;
            println!("{},{},{ll:.6},{bound:.6}", week.subject_id, week.week);
        }
    } else {
        println!("notice: model too large for exact enumeration; reporting sample-based metrics only");
    }

    let data_freq: Vec<f64> = (0..7).map(|d| data.column(d).mean().unwrap_or(0.0)).collect();
    let model_freq = free_running_frequencies(&model, samples, seed)?;
    println!("day,data,model");
    for (d, name) in ["mon", "tue", "wed", "thu", "fri", "sat", "sun"].iter().enumerate() {
        println!("{name},{:.4},{:.4}", data_freq[d], model_freq[d]);
    }
    Ok(())
}

fn cmd_generate(model: &Path, samples: usize, out: &Path, seed: u64, mode: Mode) -> anyhow::Result<()> {
    let model = read_model(model)?;
    let mut r = rng::stream(seed, streams::GENERATION);
    let sets = Condition::BOTH
        .iter()
        .map(|&c| conditional_samples(&model, c, samples, mode.generation_mode(), &mut r).map(|s| (c, s)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(user)?;
    let mut sink = create(out)?;
    write_samples_csv(&mut sink, &sets)?;
    sink.flush()?;
    println!("wrote {} samples per condition to {}", samples, out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { input, out } => cmd_ingest(&input, &out),
        Command::Train { matrix, out, params } => cmd_train(&matrix, &out, &params),
        Command::Heatmap { model, samples, out, seed, cell_size, mode } => {
            cmd_heatmap(&model, samples, &out, seed, cell_size, mode)
        }
        Command::Evaluate { model, matrix, samples, seed } => cmd_evaluate(&model, &matrix, samples, seed),
        Command::Generate { model, samples, out, seed, mode } => cmd_generate(&model, samples, &out, seed, mode),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UserError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
