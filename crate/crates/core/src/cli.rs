//! Command-line front end: `run`, `compare`, `gen-traces`, `plotdata`.
//!
//! Exit codes: 0 on success, 1 for invalid arguments or configuration,
//! 2 for failures while simulating or writing outputs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{load_config, ConfigError, ExperimentConfig, OutputFormat};
use crate::cost::serialize_capability_file;
use crate::engine::{compare_on_world, Comparison, EngineError, World};
use crate::report::{comparison_csv, render_table, round_log_csv, ExperimentReport, Summary};
use crate::selectors::SelectorKind;
use crate::traces::{serialize_trace_file, NamedTrace};

#[derive(Debug, Parser)]
#[command(name = "fedsel", version, about = "Federated learning client selection simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured selector once per run seed.
    Run(CommonArgs),
    /// Run several selectors on the same scenario and tabulate them.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated selectors; defaults to all five.
        #[arg(long, value_delimiter = ',')]
        selectors: Vec<SelectorKind>,
    },
    /// Write the scenario's client traces and capabilities to files.
    GenTraces(CommonArgs),
    /// Turn report JSON files from `run` or `compare` into an
    /// accuracy-versus-time CSV.
    Plotdata {
        /// `report.json` or `comparison.json` files.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Replace the configured run seeds with this single seed.
    #[arg(long)]
    pub seed_override: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Engine(_) | CliError::Output { .. } => 2,
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => run(args),
        Command::Compare { common, selectors } => compare(common, selectors),
        Command::GenTraces(args) => gen_traces(args),
        Command::Plotdata { reports, out } => plotdata(reports, out),
    }
}

struct Prepared {
    cfg: ExperimentConfig,
    out: PathBuf,
    seeds: Vec<u64>,
}

fn prepare(args: &CommonArgs) -> Result<Prepared, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be >= 1".into()));
    }
    let cfg = load_config(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let seeds = match args.seed_override {
        Some(s) => vec![s],
        None => cfg.seeds.run_seeds.clone(),
    };
    Ok(Prepared { cfg, out, seeds })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    }
    std::fs::write(path, contents).map_err(|e| fail(&e))
}

fn csv_text(path: &Path, r: Result<String, csv::Error>) -> Result<String, CliError> {
    r.map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn json_text<T: Serialize>(path: &Path, value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn selector_list(requested: &[SelectorKind]) -> Result<Vec<SelectorKind>, CliError> {
    if requested.is_empty() {
        return Ok(SelectorKind::ALL.to_vec());
    }
    let mut seen = BTreeSet::new();
    for k in requested {
        if !seen.insert(k.as_str()) {
            return Err(CliError::Usage(format!("selector `{k}` is listed more than once")));
        }
    }
    Ok(requested.to_vec())
}

#[derive(Serialize)]
struct RunOutput<'a> {
    config: &'a ExperimentConfig,
    trace_digest: String,
    summary: Summary,
    runs: &'a [ExperimentReport],
}

fn run(args: &CommonArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let world = World::build(&p.cfg)?;
    let kind = p.cfg.selector.kind;
    let cmp = compare_on_world(&world, &p.cfg, &[kind], &p.seeds, args.jobs)?;
    let result = &cmp.results[0];
    let formats = &p.cfg.output.formats;
    if formats.contains(&OutputFormat::Json) {
        let path = p.out.join("report.json");
        let out = RunOutput {
            config: &p.cfg,
            trace_digest: cmp.trace_digest.clone(),
            summary: result.summary.clone(),
            runs: &result.reports,
        };
        write_file(&path, &json_text(&path, &out)?)?;
    }
    if formats.contains(&OutputFormat::Csv) {
        for rep in &result.reports {
            let path = p.out.join(format!("rounds_seed{}.csv", rep.run_seed));
            write_file(&path, &csv_text(&path, round_log_csv(rep))?)?;
        }
        let path = p.out.join("summary.csv");
        let cols = [(kind.to_string(), &result.summary)];
        write_file(&path, &csv_text(&path, comparison_csv(&cols, None))?)?;
    }
    print!("{}", render_table(&[(kind.to_string(), &result.summary)], None));
    Ok(())
}

fn run_comparison(args: &CommonArgs, selectors: &[SelectorKind]) -> Result<(Prepared, Comparison), CliError> {
    let selectors = selector_list(selectors)?;
    let p = prepare(args)?;
    let world = World::build(&p.cfg)?;
    let cmp = compare_on_world(&world, &p.cfg, &selectors, &p.seeds, args.jobs)?;
    Ok((p, cmp))
}

fn columns(cmp: &Comparison) -> Vec<(String, &Summary)> {
    cmp.results
        .iter()
        .map(|r| (r.selector.to_string(), &r.summary))
        .collect()
}

fn compare(args: &CommonArgs, selectors: &[SelectorKind]) -> Result<(), CliError> {
    let (p, cmp) = run_comparison(args, selectors)?;
    let cols = columns(&cmp);
    let formats = &p.cfg.output.formats;
    if formats.contains(&OutputFormat::Csv) {
        let path = p.out.join("comparison.csv");
        write_file(&path, &csv_text(&path, comparison_csv(&cols, Some(cmp.fastest)))?)?;
    }
    if formats.contains(&OutputFormat::Json) {
        let path = p.out.join("comparison.json");
        #[derive(Serialize)]
        struct Out<'a> {
            config: &'a ExperimentConfig,
            comparison: &'a Comparison,
        }
        let text = json_text(
            &path,
            &Out {
                config: &p.cfg,
                comparison: &cmp,
            },
        )?;
        write_file(&path, &text)?;
    }
    print!("{}", render_table(&cols, Some(cmp.fastest)));
    Ok(())
}

fn gen_traces(args: &CommonArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let world = World::build(&p.cfg)?;
    let named: Vec<NamedTrace> = world
        .traces
        .iter()
        .zip(&world.population.profiles)
        .map(|(t, prof)| NamedTrace {
            id: prof.client_id.clone(),
            trace: t.clone(),
        })
        .collect();
    let traces = serialize_trace_file(&named).map_err(EngineError::from)?;
    let caps = serialize_capability_file(&world.population.profiles);
    write_file(&p.out.join("traces.txt"), &traces)?;
    write_file(&p.out.join("capabilities.txt"), &caps)?;
    println!(
        "wrote {} traces ({} scenario, digest {}) to {}",
        named.len(),
        p.cfg.scenario.kind,
        world.trace_digest(),
        p.out.display()
    );
    Ok(())
}

/// The run list inside either output file kind.
#[derive(Deserialize)]
#[serde(untagged)]
enum ReportFile {
    Run { runs: Vec<ExperimentReport> },
    Compare { comparison: Comparison },
}

fn plotdata(inputs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let file: ReportFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a report file: {e}", path.display())))?;
        let runs = match file {
            ReportFile::Run { runs } => runs,
            ReportFile::Compare { comparison } => comparison.results.into_iter().flat_map(|r| r.reports).collect(),
        };
        for rep in runs {
            let series = format!("{}-seed{}", rep.selector, rep.run_seed);
            for (t, a) in rep.accuracy_series() {
                rows.push([series.clone(), t.to_string(), a.to_string()]);
            }
        }
    }
    let text = (|| -> Result<String, csv::Error> {
        w.write_record(["series", "time_s", "accuracy"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(String::from_utf8(w.get_ref().clone()).expect("csv is utf-8"))
    })();
    write_file(out, &csv_text(out, text)?)?;
    println!("wrote {} points to {}", rows.len(), out.display());
    Ok(())
}
