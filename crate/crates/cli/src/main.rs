use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use quadrille::harness::{run_experiment, Experiment, ExperimentConfig, ExperimentReport};

#[derive(Parser)]
#[command(
    name = "quadrille",
    version,
    about = "Random planar quadrangulations: sampling, hulls, geodesics and exact series"
)]
struct Cli {
    /// Master seed; every replica stream is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Print JSON lines (header, samples, summary) instead of a text report.
    #[arg(long, global = true)]
    json: bool,
    /// Write JSON lines to this file and each table to `<out>.<table>.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Does not affect results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample uniform pointed quadrangulations and report basic statistics.
    Sample(Common),
    /// Count rooted maps exhaustively and test sampler uniformity.
    Census(Common),
    /// Check the exact series identities.
    #[command(name = "series-check", alias = "series")]
    SeriesCheck(Series),
    /// Hull cycles and skeleton offspring.
    Hull(Common),
    /// Re-rooting statistics: constancy radius, Schaeffer locality, divergence points.
    Theorem1(Common),
    /// Monte Carlo of the cycle-length chain against the exact kernel.
    #[command(name = "skeleton-stats")]
    SkeletonStats(Common),
    /// Edge-walk stationarity, exact on small maps and by visit counts on large ones.
    #[command(name = "edge-walk")]
    EdgeWalk(Common),
    /// Ball-type laws across map sizes.
    Converge(Common),
    /// Exploratory statistics of the tree seen from far away.
    Conjectures(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Faces per map (exhaustive size for census and edge-walk).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    rmax: Option<u32>,
    /// Series truncation order.
    #[arg(long = "k", visible_alias = "K")]
    k: Option<usize>,
    /// Ball radius or measurement window.
    #[arg(long)]
    radius: Option<u32>,
    /// Comma-separated map sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Random geodesics per root and sample (theorem1).
    #[arg(long)]
    geodesics: Option<usize>,
}

#[derive(Args)]
struct Series {
    /// Run every identity (the default; kept for compatibility).
    #[arg(long)]
    check_all: bool,
    /// Dump the coefficient table as CSV to stdout.
    #[arg(long, value_parser = ["csv"])]
    emit: Option<String>,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(n) = self.n {
            cfg.faces = n;
        }
        if let Some(s) = self.samples {
            cfg.samples = s;
        }
        if let Some(r) = self.rmax {
            cfg.rmax = r;
        }
        if let Some(k) = self.k {
            cfg.truncation = k;
        }
        if let Some(r) = self.radius {
            cfg.radius = r;
        }
        if let Some(s) = &self.sizes {
            cfg.sizes = s.clone();
        }
        if let Some(g) = self.geodesics {
            cfg.geodesics = g;
        }
    }
}

fn print_text(report: &ExperimentReport, out: &mut impl Write) -> io::Result<()> {
    let cfg = &report.config;
    writeln!(out, "{} (seed {})", cfg.experiment.name(), cfg.seed)?;
    for c in &report.checks {
        writeln!(
            out,
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&report.summary).unwrap_or_default()
    )?;
    Ok(())
}

fn table_path(out: &Path, name: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(format!(".{name}.csv"));
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<bool> {
    let (experiment, common, emit_csv) = match &cli.command {
        Command::Sample(c) => (Experiment::Sample, c, false),
        Command::Census(c) => (Experiment::Census, c, false),
        Command::SeriesCheck(s) => (Experiment::SeriesCheck, &s.common, s.emit.is_some()),
        Command::Hull(c) => (Experiment::Hull, c, false),
        Command::Theorem1(c) => (Experiment::Theorem1, c, false),
        Command::SkeletonStats(c) => (Experiment::SkeletonStats, c, false),
        Command::EdgeWalk(c) => (Experiment::EdgeWalk, c, false),
        Command::Converge(c) => (Experiment::Converge, c, false),
        Command::Conjectures(c) => (Experiment::Conjectures, c, false),
    };
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.seed = cli.seed;
    common.apply(&mut cfg);

    let report = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building thread pool")?
            .install(|| run_experiment(&cfg))?,
        None => run_experiment(&cfg)?,
    };

    if let Some(path) = &cli.out {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        report.write_jsonl(BufWriter::new(f))?;
        for t in &report.tables {
            let p = table_path(path, &t.name);
            let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
            t.write_csv(BufWriter::new(f))?;
        }
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if emit_csv {
        report.tables[0].write_csv(&mut out)?;
    } else if cli.json {
        report.write_jsonl(&mut out)?;
    } else {
        print_text(&report, &mut out)?;
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
