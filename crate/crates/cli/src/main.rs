//! `mhd-hdg`: runs manufactured-solution convergence studies and writes the
//! error tables and iteration logs.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use config::{prepare_output, ConfigError, Overrides, RunConfig};
use mhd_hdg::verification::{run_level, ConvergenceReport, StudyEvent};
use mhd_hdg::{Error, OseenOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
    Both,
}

/// Convergence studies for the HDG magnetohydrodynamics solver.
#[derive(Debug, Parser)]
#[command(name = "mhd-hdg", version)]
struct Args {
    /// Built-in manufactured solution: 1 (unit square) or 2 (unit cube).
    #[arg(long, conflicts_with = "params")]
    example: Option<usize>,
    /// key=value file with example, ha, n, re, rm, pr, gr and optionally
    /// k, levels, tol, max_iter. Flags take precedence.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Polynomial degree, at least 1 [default: 1].
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated mesh sizes, each double the previous [default: 4,8,16].
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Oseen stopping tolerance [default: 1e-8].
    #[arg(long)]
    tol: Option<f64>,
    /// Oseen iteration limit [default: 50].
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "mhd-hdg-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NON_CONVERGENCE: u8 = 3;
const EXIT_SINGULAR: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::InvalidArgument(_) | Error::Unsupported(_) => EXIT_CONFIG,
        Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        Error::SingularSystem(_) => EXIT_SINGULAR,
        _ => EXIT_FAILURE,
    }
}

struct Artifacts<'a> {
    dir: &'a Path,
    format: Format,
    cfg: &'a RunConfig,
    hash: String,
}

impl Artifacts<'_> {
    fn csv(&self) -> bool {
        self.format != Format::Table
    }

    fn table(&self) -> bool {
        self.format != Format::Csv
    }

    fn table_text(&self, report: &ConvergenceReport) -> String {
        format!("{}{}", self.cfg.provenance(), report.to_tagged_table(Some(("config_hash", &self.hash))))
    }

    /// Rewrites the tables with the levels finished so far.
    fn write_reports(&self, report: &ConvergenceReport) -> std::io::Result<()> {
        if self.csv() {
            let mut w = BufWriter::new(File::create(self.dir.join("errors.csv"))?);
            report
                .write_csv(&mut w, Some(("config_hash", &self.hash)))
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            w.flush()?;
        }
        if self.table() {
            std::fs::write(self.dir.join("convergence.txt"), self.table_text(report))?;
        }
        Ok(())
    }

    fn level_log(&self, m: usize) -> std::io::Result<BufWriter<File>> {
        let mut w = BufWriter::new(File::create(self.dir.join("levels").join(format!("m{m}.log")))?);
        write!(w, "{}", self.cfg.provenance())?;
        writeln!(w, "# level M={m}")?;
        w.flush()?;
        Ok(w)
    }
}

fn io_failure(e: std::io::Error) -> ExitCode {
    eprintln!("error: writing output failed: {e}");
    ExitCode::from(EXIT_FAILURE)
}

fn run(args: Args) -> ExitCode {
    let overrides = Overrides {
        example: args.example,
        params_file: args.params.clone(),
        k: args.k,
        levels: args.levels.clone(),
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let cfg = match RunConfig::resolve(&overrides).and_then(|c| prepare_output(&args.out).map(|_| c)) {
        Ok(c) => c,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let art = Artifacts { dir: &args.out, format: args.format, cfg: &cfg, hash: cfg.hash() };
    if let Err(e) = std::fs::write(args.out.join("provenance.txt"), cfg.provenance()) {
        return io_failure(e);
    }
    let case = cfg.case();
    let options = OseenOptions { tol: cfg.tol, max_iter: cfg.max_iter, ..Default::default() };
    let mut report = ConvergenceReport { case: case.name.clone(), dim: case.dim, k: cfg.k, levels: Vec::new() };
    for &m in &cfg.levels {
        let mut log = match art.level_log(m) {
            Ok(w) => w,
            Err(e) => return io_failure(e),
        };
        let mut log_error = None;
        let mut on_event = |ev: StudyEvent<'_>| match ev {
            StudyEvent::LevelStart { m, num_dofs } => {
                eprintln!("M={m}: {num_dofs} unknowns");
                if let Err(e) = writeln!(log, "# unknowns={num_dofs}").and_then(|_| log.flush()) {
                    log_error.get_or_insert(e);
                }
            }
            StudyEvent::Iteration { record, .. } => {
                eprintln!("  {record}");
                if let Err(e) = writeln!(log, "{record}").and_then(|_| log.flush()) {
                    log_error.get_or_insert(e);
                }
            }
            StudyEvent::LevelDone { .. } => {}
        };
        let result = run_level(&case, cfg.k, m, options, &mut on_event);
        if let Some(e) = log_error {
            return io_failure(e);
        }
        match result {
            Ok(lv) => {
                report.levels.push(lv);
                if let Err(e) = art.write_reports(&report) {
                    return io_failure(e);
                }
            }
            Err(e) => {
                let e = Error::AtLevel { m, source: Box::new(e) };
                if let Error::NonConvergence { log: records, .. } = e.root() {
                    // The log already holds every iteration; note the outcome.
                    let _ = writeln!(log, "# stopped after {} iterations without converging", records.len());
                } else {
                    let _ = writeln!(log, "# failed: {e}");
                }
                let _ = log.flush();
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e));
            }
        }
    }
    if art.table() {
        print!("{}", report.to_tagged_table(Some(("config_hash", &art.hash))));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    run(Args::parse())
}
