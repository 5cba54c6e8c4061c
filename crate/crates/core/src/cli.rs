//! Command-line front end: `generate`, `run`, `compare`, `presets`.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PRESETS};
use crate::error::{Error, Result};
use crate::generator::{load_database, save_database, Database, GenerationReport};
use crate::metrics::{self, aggregate, compare, RunSummary};
use crate::storage::Storage;
use crate::workload::{run_protocol, ExperimentLog};

#[derive(Debug, Parser)]
#[command(name = "ocb", version, about = "Object clustering benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an object base and save it.
    Generate(GenerateArgs),
    /// Run the transaction workload under a clustering policy.
    Run(RunArgs),
    /// Compare two run summaries.
    Compare(CompareArgs),
    /// List the built-in presets.
    Presets,
}

/// Settings shared by `generate` and `run`. Precedence, lowest first:
/// preset, `OCB_SEED`, config file, `--set`, named flags.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// File of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub nc: Option<u32>,
    #[arg(long)]
    pub no: Option<u32>,
    #[arg(long, value_name = "N[,N...]")]
    pub maxnref: Option<String>,
    #[arg(long)]
    pub nreft: Option<u32>,
    #[arg(long)]
    pub coldn: Option<u64>,
    #[arg(long)]
    pub hotn: Option<u64>,
    #[arg(long)]
    pub clientn: Option<u32>,
    #[arg(long)]
    pub buffer_pages: Option<usize>,
    /// `none` or `dstc`.
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Previously generated database; generation settings come from the file.
    #[arg(long, value_name = "FILE")]
    pub db: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Run once per seed, each into `DIR/seed-N`.
    #[arg(long, value_delimiter = ',', value_name = "SEED,...")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Compare even if the workload fingerprints differ.
    #[arg(long)]
    pub force: bool,
    /// Also write the comparison as JSON.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    fn flag_pairs(&self) -> Result<Vec<(String, String)>> {
        let mut pairs = Vec::new();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set {item:?}: expected KEY=VALUE")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let named = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("nc", self.nc.map(|v| v.to_string())),
            ("no", self.no.map(|v| v.to_string())),
            ("maxnref", self.maxnref.clone()),
            ("nreft", self.nreft.map(|v| v.to_string())),
            ("coldn", self.coldn.map(|v| v.to_string())),
            ("hotn", self.hotn.map(|v| v.to_string())),
            ("clientn", self.clientn.map(|v| v.to_string())),
            ("buffer_pages", self.buffer_pages.map(|v| v.to_string())),
            ("policy", self.policy.clone()),
        ];
        pairs.extend(
            named
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v))),
        );
        Ok(pairs)
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut text = String::new();
        if let Ok(seed) = std::env::var("OCB_SEED") {
            let _ = writeln!(text, "seed = {seed}");
        }
        if let Some(path) = &self.config {
            text.push_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?);
        }
        ExperimentConfig::resolve(self.preset.as_deref(), Some(&text), &self.flag_pairs()?)
    }
}

/// Everything one run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub generation: GenerationReport,
    pub page_count: u32,
    pub log: ExperimentLog,
    pub summary: RunSummary,
    pub wall_seconds: f64,
}

/// Generates the database (unless given one whose settings `config` has
/// adopted), places it sequentially and runs the workload.
pub fn run_experiment(config: &ExperimentConfig, db: Option<&Database>) -> Result<RunOutcome> {
    let start = Instant::now();
    config.validate()?;
    let generated;
    let db = match db {
        Some(db) => db,
        None => {
            generated = Database::generate(&config.generator_params())?;
            &generated
        }
    };
    let mut storage = Storage::place_sequential(db, config.storage.clone())?;
    let page_count = storage.placement().page_count();
    let mut policy = config.policy.build(&config.dstc)?;
    let log = run_protocol(db, &mut storage, &config.workload_params(), policy.as_mut())?;
    let summary = RunSummary {
        fingerprint: config.fingerprint(),
        policy: config.policy.to_string(),
        seed: config.seed,
        config: config.to_map(),
        metrics: aggregate(&log, config.gain_window),
    };
    Ok(RunOutcome {
        config: config.clone(),
        generation: db.report.clone(),
        page_count,
        log,
        summary,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn render_generation(db: &Database) -> String {
    let r = &db.report;
    let mut s = String::new();
    let _ = writeln!(s, "classes:            {}", db.classes.len());
    let _ = writeln!(s, "objects:            {}", db.len());
    let _ = writeln!(s, "total size (bytes): {}", db.total_size());
    let _ = writeln!(s, "links:              {}", r.links);
    let _ = writeln!(s, "null class draws:   {}", r.null_class_draws);
    let _ = writeln!(s, "cycle-suppressed:   {}", r.cycle_suppressed);
    let _ = writeln!(s, "empty target:       {}", r.empty_target);
    let _ = writeln!(s, "out of range:       {}", r.out_of_range);
    s
}

fn label(config: &ExperimentConfig) -> String {
    format!("{}/{}", config.preset, config.policy)
}

fn render_outcome(o: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "preset {} | policy {} | seed {} | fingerprint {}",
        o.config.preset, o.config.policy, o.config.seed, o.summary.fingerprint
    );
    let _ = writeln!(
        s,
        "{} pages, {} transactions, wall clock {:.2} s\n",
        o.page_count,
        o.log.records.len(),
        o.wall_seconds
    );
    s.push_str(&metrics::render_report(&label(&o.config), &o.summary.metrics));
    s
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `transactions.csv`, `summary.json` and `report.txt` into `dir`.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("transactions.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    metrics::write_csv(&outcome.log, BufWriter::new(file))?;
    let json = serde_json::to_string_pretty(&outcome.summary)
        .map_err(|e| Error::Report(e.to_string()))?;
    write_file(&dir.join("summary.json"), format!("{json}\n").as_bytes())?;
    write_file(&dir.join("report.txt"), render_outcome(outcome).as_bytes())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let start = Instant::now();
    let db = Database::generate(&config.generator_params())?;
    let elapsed = start.elapsed().as_secs_f64();
    save_database(&db, &args.out)?;
    print!("{}", render_generation(&db));
    println!("generated in {elapsed:.2} s, saved to {}", args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let mut config = args.config.resolve()?;
    let db = match &args.db {
        Some(path) => {
            let db = load_database(path)?;
            config.adopt_generator(&db.params);
            Some(db)
        }
        None => None,
    };
    if args.seeds.is_empty() {
        let outcome = run_experiment(&config, db.as_ref())?;
        write_outputs(&args.out_dir, &outcome)?;
        print!("{}", render_outcome(&outcome));
        return Ok(());
    }
    if args.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::Run(e.to_string()))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        args.seeds
            .par_iter()
            .map(|&seed| {
                let mut c = config.clone();
                c.seed = seed;
                if db.is_none() {
                    c.generator_seed = None;
                }
                let outcome = run_experiment(&c, db.as_ref())?;
                write_outputs(&args.out_dir.join(format!("seed-{seed}")), &outcome)?;
                Ok(outcome)
            })
            .collect::<Result<_>>()
    })?;
    println!("{:>10} {:>16} {:>10}", "seed", "hot mean faults", "gain");
    for o in &outcomes {
        let hot = o.summary.metrics.phase(crate::workload::Phase::Hot);
        let gain = o
            .summary
            .metrics
            .gain
            .as_ref()
            .map_or_else(|| "-".to_string(), |g| format!("{:.2}", g.factor));
        println!("{:>10} {:>16.3} {:>10}", o.config.seed, hot.all.mean_faults, gain);
    }
    Ok(())
}

fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let a = read_summary(&args.a)?;
    let b = read_summary(&args.b)?;
    let c = compare(&a, &b, args.force)?;
    print!("{}", metrics::render_comparison(&c));
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&c).map_err(|e| Error::Report(e.to_string()))?;
        write_file(out, format!("{json}\n").as_bytes())?;
    }
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Compare(args) => compare_cmd(args),
        Command::Presets => {
            for (name, about) in PRESETS {
                println!("{name:<10} {about}");
            }
            Ok(())
        }
    }
}

/// Process exit status for a command outcome: 0 on success, 2 for bad
/// parameters or configuration, 3 for anything that failed while running.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_config() => 2,
        Err(_) => 3,
    }
}
