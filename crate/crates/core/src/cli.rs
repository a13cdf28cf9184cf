//! The `rprim` command line.
//!
//! Data goes to stdout as JSON lines (or CSV with `--csv`), summaries to
//! stderr. Exit status: 0 on success, 1 when the computation finished but
//! the property or check failed, 2 on usage or precondition errors.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::chars::{self, KatzReport};
use crate::ff::FieldContext;
use crate::rstruct::{self, RStructure};
use crate::search::{self, Mode, PropertyReport, VerifyOptions, DEFAULT_MAX_EXCEPTIONS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rprim",
    version,
    about = "r-primitive elements on lines of F_{q^n}"
)]
struct Cli {
    /// Worker threads for sweeps; 1 runs serially. Defaults to all cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Emit CSV instead of JSON lines (bound, verify, scan).
    #[arg(long, global = true)]
    csv: bool,
    /// Report elapsed_s as 0 so output is byte-reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Prime partition of q^n-1 relative to r and the sufficient bound.
    Structure(FieldArgs),
    /// Sufficient-condition verdict for every eligible q <= q-max.
    Bound {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        q_max: u64,
    },
    /// Exhaustively check one field.
    Verify {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Check every eligible prime power in [q-lo, q-hi].
    Scan {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        q_lo: u64,
        #[arg(long)]
        q_hi: u64,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Compare the character expansion of the r-primitive indicator with
    /// the direct test at every point.
    GammaSelftest(FieldArgs),
    /// Largest character sum over a translate set relative to (n-1) sqrt(q).
    Katz {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Debug, Args)]
struct FieldArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    r: u64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Mode::Line)]
    mode: Mode,
    /// Count every point on every line so min_count is exact.
    #[arg(long)]
    full_counts: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_EXCEPTIONS)]
    max_exceptions: usize,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

type Outcome = Result<i32, String>;

/// Parses `args` (including the program name) and runs the verb.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "error: usage: {first}");
            return EXIT_USAGE;
        }
    };
    let mut io = Io { out, err };
    match dispatch(&cli, &mut io) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(io.err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, io: &mut Io) -> Outcome {
    if cli.csv
        && !matches!(
            cli.verb,
            Verb::Bound { .. } | Verb::Verify { .. } | Verb::Scan { .. }
        )
    {
        return Err("usage: --csv applies to bound, verify and scan only".into());
    }
    let sequential = cli.threads == Some(1) || cfg!(not(feature = "parallel"));
    let threads = cli.threads;
    match &cli.verb {
        Verb::Structure(f) => structure(f, io),
        Verb::Bound { n, r, q_max } => bound(*n, *r, *q_max, cli.csv, io),
        Verb::Verify { field, sweep } => {
            let ctx = FieldContext::for_prime_power(field.q, field.n).map_err(|e| e.to_string())?;
            let opts = sweep_options(sweep, sequential, cli.no_timing);
            let rep = with_threads(threads, || {
                search::verify_property(&ctx, field.r, sweep.mode, &opts)
            })?
            .map_err(|e| e.to_string())?;
            emit_reports(std::slice::from_ref(&rep), cli.csv, io)?;
            summary(
                io,
                &format!(
                    "q={} n={} r={} mode={}: {} ({} lines, {} exceptions)",
                    rep.q,
                    rep.n,
                    rep.r,
                    rep.mode,
                    if rep.pass { "pass" } else { "FAIL" },
                    rep.lines_checked,
                    rep.exception_count
                ),
            );
            Ok(if rep.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Verb::Scan {
            n,
            r,
            q_lo,
            q_hi,
            sweep,
        } => {
            let opts = sweep_options(sweep, sequential, cli.no_timing);
            let res = with_threads(threads, || {
                search::scan(*n, *r, *q_lo, *q_hi, sweep.mode, &opts)
            })?
            .map_err(|e| e.to_string())?;
            emit_reports(&res.reports, cli.csv, io)?;
            let line = serde_json::to_string(&res.summary).map_err(|e| e.to_string())?;
            summary(io, &line);
            Ok(if res.summary.failing.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Verb::GammaSelftest(f) => {
            let ctx = FieldContext::for_prime_power(f.q, f.n).map_err(|e| e.to_string())?;
            let rep = with_threads(threads, || chars::gamma_selftest(&ctx, f.r, sequential))?
                .map_err(|e| e.to_string())?;
            emit_json(&rep, io)?;
            summary(
                io,
                &format!(
                    "max deviation {:e}: {}",
                    rep.max_deviation,
                    if rep.pass { "pass" } else { "FAIL" }
                ),
            );
            Ok(if rep.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Verb::Katz { q, n } => {
            let ctx = FieldContext::for_prime_power(*q, *n).map_err(|e| e.to_string())?;
            let rep: KatzReport =
                with_threads(threads, || chars::katz_max_ratio(&ctx, sequential))?
                    .map_err(|e| e.to_string())?;
            emit_json(&rep, io)?;
            summary(io, &format!("ratio {:.12}", rep.ratio));
            Ok(if rep.within_bound() {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: Option<u32>, f: impl FnOnce() -> R + Send) -> Result<R, String> {
    match threads {
        Some(t) if t > 1 => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build()
            .map_err(|e| e.to_string())?
            .install(f)),
        _ => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(_threads: Option<u32>, f: impl FnOnce() -> R) -> Result<R, String> {
    Ok(f())
}

fn sweep_options(s: &SweepArgs, sequential: bool, no_timing: bool) -> VerifyOptions {
    VerifyOptions {
        full_counts: s.full_counts,
        max_exceptions: s.max_exceptions,
        sequential,
        timing: !no_timing,
    }
}

fn structure(f: &FieldArgs, io: &mut Io) -> Outcome {
    let st = RStructure::compute(f.q, f.n, f.r).map_err(|e| e.to_string())?;
    emit_json(&st, io)?;
    summary(
        io,
        &format!(
            "bound_rhs_root={} bound_holds={}",
            st.bound_rhs_root,
            st.bound_holds()
        ),
    );
    Ok(EXIT_OK)
}

fn bound(n: u32, r: u64, q_max: u64, csv: bool, io: &mut Io) -> Outcome {
    let rows = rstruct::min_q_satisfying_bound(n, r, q_max).map_err(|e| e.to_string())?;
    if csv {
        write_csv(&rows, io)?;
    } else {
        for row in &rows {
            emit_json(row, io)?;
        }
    }
    let first = rows.iter().find(|row| row.holds).map(|row| row.q);
    summary(
        io,
        &match first {
            Some(q) => format!("{} rows; least q with bound holding: {q}", rows.len()),
            None => format!("{} rows; bound never holds for q <= {q_max}", rows.len()),
        },
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ReportRow<'a> {
    q: u64,
    p: u64,
    k: u32,
    n: u32,
    r: u64,
    mode: Mode,
    pass: bool,
    lines_checked: u64,
    min_count: u64,
    min_count_exact: bool,
    exception_count: u64,
    /// `a:b:theta` triples separated by spaces.
    exceptions: &'a str,
    elapsed_s: f64,
}

fn emit_reports(reports: &[PropertyReport], csv: bool, io: &mut Io) -> Result<(), String> {
    if !csv {
        for rep in reports {
            emit_json(rep, io)?;
        }
        return Ok(());
    }
    let exceptions: Vec<String> = reports
        .iter()
        .map(|rep| {
            rep.exceptions
                .iter()
                .map(|l| format!("{}:{}:{}", l.a(), l.b(), l.theta()))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let rows: Vec<ReportRow> = reports
        .iter()
        .zip(&exceptions)
        .map(|(rep, ex)| ReportRow {
            q: rep.q,
            p: rep.p,
            k: rep.k,
            n: rep.n,
            r: rep.r,
            mode: rep.mode,
            pass: rep.pass,
            lines_checked: rep.lines_checked,
            min_count: rep.min_count,
            min_count_exact: rep.min_count_exact,
            exception_count: rep.exception_count,
            exceptions: ex,
            elapsed_s: rep.elapsed_s,
        })
        .collect();
    write_csv(&rows, io)
}

fn write_csv<T: Serialize>(rows: &[T], io: &mut Io) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(&mut *io.out);
    for row in rows {
        w.serialize(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn emit_json<T: Serialize>(value: &T, io: &mut Io) -> Result<(), String> {
    let line = serde_json::to_string(value).map_err(|e| e.to_string())?;
    writeln!(io.out, "{line}").map_err(|e| e.to_string())
}

fn summary(io: &mut Io, line: &str) {
    let _ = writeln!(io.err, "{line}");
}
