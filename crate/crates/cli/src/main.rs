//! `nsense`: simulate sensor traces, fuse them into minute records, and
//! inspect the resulting record log.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error, 3 query error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use nsense::ingest::{TracePaths, TraceWriter};
use nsense::report::{self, Metric, RunReport, Summary};
use nsense::store::RecordFilter;
use nsense::{scenario, Engine, EngineParams, NodeId, RecordLog, ScenarioConfig};

const SIM_CHUNK_MS: u64 = 3_600_000;

#[derive(Parser)]
#[command(
    name = "nsense",
    version,
    about = "Nearness-context inference over sensor traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate trace CSVs from a scenario file.
    Simulate {
        /// Scenario file, or the name of a bundled scenario (experiment1..3).
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory for sightings.csv, accel.csv and sound.csv.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the pipelines and fusion, writing a record log and a JSON report.
    Run {
        #[command(flatten)]
        source: Source,
        /// Record log to create; the report goes to `<out>.report.json`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock ms subtracted from trace timestamps.
        #[arg(long, default_value_t = 0)]
        epoch: u64,
    },
    /// Print one metric of a pair as a `minute,metric_value` series.
    Analyze {
        /// Record log.
        log: PathBuf,
        #[command(flatten)]
        range: Range,
        #[arg(long, default_value = "si")]
        metric: String,
    },
    /// Export a record log as minute-record CSV.
    Export {
        log: PathBuf,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        range: OptRange,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Directory holding sightings.csv, accel.csv and sound.csv.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args)]
struct Range {
    /// Ordered pair `i,j`.
    #[arg(long)]
    pair: String,
    #[arg(long)]
    from_min: Option<u64>,
    #[arg(long)]
    to_min: Option<u64>,
}

#[derive(Args)]
struct OptRange {
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    from_min: Option<u64>,
    #[arg(long)]
    to_min: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Query(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Input(_) => 2,
            Failure::Query(_) => 3,
        }
    }
}

/// Classifies a library error: anything about the user's files or
/// arguments is an input error.
impl From<nsense::Error> for Failure {
    fn from(e: nsense::Error) -> Self {
        use nsense::Error as E;
        match e {
            E::Io(ref io)
                if io.kind() != io::ErrorKind::NotFound
                    && io.kind() != io::ErrorKind::InvalidData =>
            {
                Failure::Internal(e.into())
            }
            E::Domain(_) | E::WindowTooSmall { .. } | E::UnknownAgent(_) => {
                Failure::Internal(e.into())
            }
            _ => Failure::Input(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<nsense::Error>() {
            Ok(e) => e.into(),
            Err(e) => Failure::Internal(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::from(nsense::Error::from(e))
    }
}

type CmdResult = Result<(), Failure>;

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = scenario::load(path).map_err(|e| {
        Failure::Input(anyhow::Error::new(e).context(format!("scenario {}", path.display())))
    })?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn simulate(scenario: &Path, out: &Path, seed: Option<u64>) -> CmdResult {
    let cfg = load_scenario(scenario, seed)?;
    let sim = nsense::simulator::Simulator::new(cfg)?;
    let mut writer = TraceWriter::create(out)?;
    let mut samples = 0;
    for chunk in sim.chunks(SIM_CHUNK_MS) {
        samples += chunk.len();
        writer.write(&chunk)?;
    }
    let paths = writer.finish()?;
    eprintln!(
        "wrote {samples} samples over {} min to {}",
        sim.config().minutes(),
        paths.sightings.parent().unwrap_or(out).display()
    );
    Ok(())
}

fn report_path(log: &Path) -> PathBuf {
    let mut p = log.as_os_str().to_owned();
    p.push(".report.json");
    PathBuf::from(p)
}

fn run(source: &Source, out: &Path, seed: Option<u64>, epoch: u64) -> CmdResult {
    let started = Instant::now();
    let engine = Engine::new(EngineParams::default())?;
    let mut log = RecordLog::create(out)?;
    let (stats, label, cfg) = match (&source.scenario, &source.traces) {
        (Some(path), _) => {
            let cfg = load_scenario(path, seed)?;
            let sim = nsense::simulator::Simulator::new(cfg.clone())?;
            (
                engine.run_scenario(&sim, &mut log)?,
                cfg.name.clone(),
                Some(cfg),
            )
        }
        (None, Some(dir)) => {
            if !dir.is_dir() {
                return Err(Failure::Input(anyhow::anyhow!(
                    "{}: no such trace directory",
                    dir.display()
                )));
            }
            let paths = TracePaths::in_dir(dir);
            (
                engine.run_files(&paths, epoch, &mut log)?,
                dir.display().to_string(),
                None,
            )
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    log.sync()?;

    let mut rep = RunReport::build(label, cfg.as_ref(), engine.params(), &stats, log.records());
    rep.runtime_ms = started.elapsed().as_secs_f64() * 1000.0;
    let rp = report_path(out);
    let mut w = BufWriter::new(File::create(&rp)?);
    serde_json::to_writer_pretty(&mut w, &rep).context("writing report")?;
    writeln!(w)?;
    w.flush()?;

    eprintln!(
        "{} minutes, {} records, {} pairs in {:.0} ms; log {}, report {}",
        rep.minutes,
        rep.records,
        rep.pairs.len(),
        rep.runtime_ms,
        out.display(),
        rp.display()
    );
    Ok(())
}

fn parse_pair(s: &str) -> Result<(NodeId, NodeId), Failure> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Failure::Query(anyhow::anyhow!("--pair expects `i,j`, got {s:?}")))?;
    let id = |x: &str| NodeId::new(x.trim()).map_err(|e| Failure::Query(e.into()));
    let (a, b) = (id(a)?, id(b)?);
    if a == b {
        return Err(Failure::Query(anyhow::anyhow!(
            "--pair endpoints must differ"
        )));
    }
    Ok((a, b))
}

fn open_log(path: &Path) -> Result<RecordLog, Failure> {
    RecordLog::open_read_only(path).map_err(|e| {
        Failure::Input(anyhow::Error::new(e).context(format!("log {}", path.display())))
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:?}"))
}

fn analyze(log_path: &Path, range: &Range, metric: &str) -> CmdResult {
    let metric: Metric = metric
        .parse()
        .map_err(|e: String| Failure::Query(anyhow::anyhow!(e)))?;
    let log = open_log(log_path)?;
    let (i, j) = parse_pair(&range.pair)?;
    let nodes = log.nodes();
    for n in [&i, &j] {
        if !nodes.contains(n) {
            return Err(Failure::Query(anyhow::anyhow!(
                "unknown node {n} in {}",
                log_path.display()
            )));
        }
    }
    let (from, to) = (
        range.from_min.unwrap_or(0),
        range.to_min.unwrap_or(u64::MAX),
    );
    if from > to {
        return Err(Failure::Query(anyhow::anyhow!(
            "--from-min {from} is after --to-min {to}"
        )));
    }

    let series = report::series(log.records(), &i, &j, from, to, metric);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    writeln!(out, "minute,metric_value")?;
    for (m, v) in &series {
        writeln!(out, "{m},{v:?}")?;
    }
    let values: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
    writeln!(
        out,
        "# pair {i},{j} metric {metric} points {}",
        values.len()
    )?;
    if let Some(s) = Summary::of(&values) {
        writeln!(out, "# mean {:?} min {:?} max {:?}", s.mean, s.min, s.max)?;
    }
    let sym = report::symmetry(log.records(), &i, &j, from, to, metric);
    writeln!(out, "# symmetry_correlation {}", fmt_opt(sym))?;
    out.flush()?;
    Ok(())
}

fn export(log_path: &Path, out: Option<&Path>, range: &OptRange) -> CmdResult {
    let log = open_log(log_path)?;
    let filter = RecordFilter {
        pair: range.pair.as_deref().map(parse_pair).transpose()?,
        from_minute: range.from_min,
        to_minute: range.to_min,
    };
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            log.export_csv(&mut w, &filter)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            log.export_csv(&mut w, &filter)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            scenario,
            out,
            seed,
        } => simulate(scenario, out, *seed),
        Command::Run {
            source,
            out,
            seed,
            epoch,
        } => run(source, out, *seed, *epoch),
        Command::Analyze { log, range, metric } => analyze(log, range, metric),
        Command::Export { log, out, range } => export(log, out.as_deref(), range),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Input(e) | Failure::Query(e) | Failure::Internal(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
