//! `slmc`: runs the qualitative, quantitative, limit-case and multi-product
//! experiments and writes CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slmc::experiments::{
    self, write_aggregates_csv, write_density_csv, write_density_json, write_distance_json,
    write_records_csv,
};
use slmc::{BinomialOpinion, Error, ExperimentConfig, ExperimentOutput, Operator, Result, Start};

#[derive(Parser)]
#[command(name = "slmc", version, about = "Monte Carlo checks of subjective-logic operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Densities of every approximant on an even grid for one operand pair.
    Qualitative(Common),
    /// Distances to the KDE reference over a sample-count ladder.
    Quantitative(Common),
    /// Product of two Beta(1, 1) variables against the exact -ln z.
    LimitCase(Common),
    /// Products of L random opinions for each L in --factors.
    MultiProduct(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "product", value_parser = parse_str::<Operator>)]
    operator: Operator,
    #[arg(long, default_value = "opinion", value_parser = parse_str::<Start>)]
    start: Start,
    /// MC sample count, or a comma-separated ladder.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    #[arg(long, default_value_t = experiments::DEFAULT_REPS)]
    reps: usize,
    /// Integration points (grid points for `qualitative`).
    #[arg(long, default_value_t = slmc::distance::DEFAULT_INTEGRATION_POINTS)]
    grid: usize,
    /// Factor range `Lmin..Lmax` for `multi-product`.
    #[arg(long, default_value = "2..5", value_parser = parse_range)]
    factors: (usize, usize),
    #[arg(long, default_value_t = slmc::RngSeed::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = slmc::kde::DEFAULT_EPS_CLAMP)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// First operand `b,d,u,a` for `qualitative`.
    #[arg(long, value_parser = parse_opinion, requires = "y")]
    x: Option<BinomialOpinion>,
    /// Second operand `b,d,u,a` for `qualitative`.
    #[arg(long, value_parser = parse_opinion, requires = "x")]
    y: Option<BinomialOpinion>,
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            operator: self.operator,
            start: self.start,
            n_samples: self.samples.clone(),
            n_reps: self.reps,
            m_integration: self.grid,
            l_factors: self.factors,
            seed: self.seed,
            eps_clamp: self.eps,
            operands: self.x.zip(self.y),
            ..ExperimentConfig::default()
        }
    }
}

fn parse_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected Lmin..Lmax, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn parse_opinion(s: &str) -> std::result::Result<BinomialOpinion, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match v[..] {
        [b, d, u, a] => BinomialOpinion::try_new(b, d, u, a).map_err(|e| e.to_string()),
        _ => Err(format!("expected b,d,u,a, got {} values", v.len())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `runs.csv` → `runs_aggregates.csv`.
fn aggregates_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_aggregates.{ext}"))
}

fn emit_distance(name: &str, args: &Common, cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    match (args.format, &args.out) {
        (Format::Csv, Some(path)) => {
            write_records_csv(&out.records, create(path)?)?;
            write_aggregates_csv(&out.aggregates, create(&aggregates_path(path))?)
        }
        (Format::Csv, None) => write_aggregates_csv(&out.aggregates, io::stdout().lock()),
        (Format::Json, Some(path)) => {
            write_distance_json(name, cfg, &out.notes, &out.records, &out.aggregates, create(path)?)
        }
        (Format::Json, None) => {
            write_distance_json(name, cfg, &out.notes, &out.records, &out.aggregates, io::stdout().lock())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (name, args) = match &cli.command {
        Command::Qualitative(a) => ("qualitative", a),
        Command::Quantitative(a) => ("quantitative", a),
        Command::LimitCase(a) => ("limit-case", a),
        Command::MultiProduct(a) => ("multi-product", a),
    };
    let cfg = args.config();
    let out = match cli.command {
        Command::Qualitative(_) => {
            let table = experiments::run_qualitative(&cfg)?;
            let mut sink: Box<dyn Write> = match &args.out {
                Some(path) => Box::new(create(path)?),
                None => Box::new(io::stdout().lock()),
            };
            match args.format {
                Format::Csv => write_density_csv(&table, &mut sink)?,
                Format::Json => write_density_json(&cfg, &table, &mut sink)?,
            }
            return Ok(sink.flush()?);
        }
        Command::Quantitative(_) => experiments::run_quantitative(&cfg)?,
        Command::LimitCase(_) => experiments::run_limit_case(&cfg)?,
        Command::MultiProduct(_) => experiments::run_multi_product(&cfg)?,
    };
    for note in &out.notes {
        eprintln!("note: {note}");
    }
    emit_distance(name, args, &cfg, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
