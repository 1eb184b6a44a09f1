use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use qenc_core::bench::{
    emit_report, encode_matrix, prepare, run_experiment, ExperimentConfig, InputSpec, ReportData,
    ReportFormat,
};
use qenc_core::preprocess::{write_matrix_csv, write_synthetic, SynthConfig};
use qenc_core::{Granularity, QencError};

#[derive(Debug, Parser)]
#[command(
    name = "qenc",
    version,
    about = "Redundancy-aware quantum feature encoding benchmarks"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Experiment config (JSON); built-in defaults when omitted
    #[arg(short, long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set preprocess.balance=false (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides output_dir)
    #[arg(short, long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for every seeded stage (overrides seed)
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Report format; bench writes all three when omitted
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Suppress the per-stage log on stderr
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Jsonl,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => ReportFormat::Table,
            Format::Csv => ReportFormat::Csv,
            Format::Jsonl => ReportFormat::Jsonl,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded churn-shaped CSV and its manifest
    Synth {
        /// Number of rows
        #[arg(long)]
        rows: Option<usize>,
        /// Fraction of positive rows
        #[arg(long, value_name = "RATE")]
        churn_rate: Option<f64>,
    },
    /// Run the preprocessing stages and write train/test matrices
    Preprocess,
    /// Encode the prepared matrix with the configured strategy
    Encode,
    /// Run the embedding x strategy grid and write report files
    Bench,
    /// Render a saved CSV or JSON-lines report
    Report {
        /// Report file (.csv or .jsonl)
        path: PathBuf,
    },
}

struct Ctx {
    config: ExperimentConfig,
    out: PathBuf,
    quiet: bool,
    format: Option<Format>,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("qenc: {}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qenc: error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig, QencError> {
    let mut overrides = g.overrides.clone();
    if let Some(seed) = g.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &g.out {
        overrides.push(format!(
            "output_dir={}",
            Value::String(out.display().to_string())
        ));
    }
    match &g.config {
        Some(path) => ExperimentConfig::load(path, &overrides),
        None => ExperimentConfig::resolve(Value::Object(Default::default()), &overrides),
    }
}

fn run(cli: Cli) -> Result<(), QencError> {
    if let Command::Report { path } = &cli.command {
        let data = ReportData::load(path)?;
        let format = cli
            .global
            .format
            .map(ReportFormat::from)
            .unwrap_or(ReportFormat::Table);
        print_stdout(&data.render(format)?);
        return Ok(());
    }
    let config = load_config(&cli.global)?;
    let ctx = Ctx {
        out: config.output_dir.clone(),
        config,
        quiet: cli.global.quiet,
        format: cli.global.format,
    };
    match cli.command {
        Command::Synth { rows, churn_rate } => synth(&ctx, rows, churn_rate),
        Command::Preprocess => preprocess(&ctx),
        Command::Encode => encode(&ctx),
        Command::Bench => bench(&ctx),
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn create_dir(dir: &Path) -> Result<(), QencError> {
    fs::create_dir_all(dir).map_err(|source| QencError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), QencError> {
    fs::write(path, text).map_err(|source| QencError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn synth(ctx: &Ctx, rows: Option<usize>, churn_rate: Option<f64>) -> Result<(), QencError> {
    let mut cfg = SynthConfig {
        seed: ctx.config.seed,
        ..SynthConfig::default()
    };
    if let InputSpec::Synthetic {
        rows,
        churn_rate,
        seed,
    } = &ctx.config.input
    {
        cfg.rows = *rows;
        cfg.churn_rate = *churn_rate;
        cfg.seed = seed.unwrap_or(ctx.config.seed);
    }
    cfg.rows = rows.unwrap_or(cfg.rows);
    cfg.churn_rate = churn_rate.unwrap_or(cfg.churn_rate);
    cfg.validate()?;
    ctx.log(format!("generating {} rows (seed {})", cfg.rows, cfg.seed));
    let (csv, manifest) = write_synthetic(&ctx.out, &cfg)?;
    ctx.log(format!(
        "wrote {} and {}",
        csv.display(),
        manifest.display()
    ));
    print_stdout(&format!(
        "rows={} positives={}\n",
        cfg.rows,
        cfg.positives()
    ));
    Ok(())
}

fn preprocess(ctx: &Ctx) -> Result<(), QencError> {
    ctx.log("preparing data");
    let prepared = prepare(&ctx.config, true)?;
    let s = &prepared.summary;
    for w in &s.warnings {
        ctx.log(format!("warning: {w}"));
    }
    create_dir(&ctx.out)?;
    let train = ctx.out.join("train.csv");
    write_matrix_csv(&prepared.train, &train)?;
    ctx.log(format!("wrote {}", train.display()));
    if s.held_out {
        let test = ctx.out.join("test.csv");
        write_matrix_csv(&prepared.test, &test)?;
        ctx.log(format!("wrote {}", test.display()));
    }
    let summary = ctx.out.join("preprocess.summary.json");
    write_file(&summary, &format!("{}\n", serde_json::to_string_pretty(s)?))?;
    ctx.log(format!("wrote {}", summary.display()));
    print_stdout(&format!(
        "input_rows={} expanded_width={} balanced_rows={} train_rows={} test_rows={} features={}\n",
        s.input_rows,
        s.expanded_width,
        s.rows_after_balance,
        s.train_rows,
        s.test_rows,
        s.feature_columns.len()
    ));
    Ok(())
}

fn encode(ctx: &Ctx) -> Result<(), QencError> {
    ctx.log("preparing data");
    let prepared = prepare(&ctx.config, false)?;
    let spec = ctx.config.encode.spec();
    ctx.log(format!(
        "encoding {} rows with {} / {} at {} granularity",
        prepared.train.n_rows(),
        ctx.config.encode.strategy,
        spec.kind,
        spec.granularity
    ));
    let encoded = encode_matrix(&ctx.config, &prepared.train)?;
    let features = encoded.features(&ctx.config.readout)?;
    create_dir(&ctx.out)?;
    let path = ctx.out.join("encoded.features.csv");
    write_matrix_csv(&features, &path)?;
    ctx.log(format!("wrote {}", path.display()));
    let st = &encoded.stats;
    let size = match encoded.granularity {
        Granularity::Cell => format!("cells={}", st.cells_total),
        Granularity::Row => format!("rows={}", st.rows_total),
    };
    print_stdout(&format!(
        "embed_calls={} cache_hits={} {size}\n",
        st.embed_calls, st.cache_hits
    ));
    Ok(())
}

fn bench(ctx: &Ctx) -> Result<(), QencError> {
    ctx.log(format!("running {} grid cells", ctx.config.grid().len()));
    let report = run_experiment(&ctx.config)?;
    for r in report.data.rows.iter().filter(|r| !r.is_ok()) {
        ctx.log(format!(
            "cell {} {} {} failed: {}",
            r.embedding,
            r.granularity,
            r.strategy,
            r.error.as_deref().unwrap_or("")
        ));
    }
    let formats: Vec<ReportFormat> = match ctx.format {
        Some(f) => vec![f.into()],
        None => ReportFormat::ALL.to_vec(),
    };
    for path in emit_report(&report, &ctx.out, &formats)? {
        ctx.log(format!("wrote {}", path.display()));
    }
    print_stdout(&report.data.to_table());
    Ok(())
}
