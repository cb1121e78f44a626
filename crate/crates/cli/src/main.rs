#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod input;
mod svg;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use schottky_core::certificate::disjoint_pair;
use schottky_core::dimension::{dimension_bounds, sample_limit_points, DimensionBounds};
use schottky_core::io::Metadata;
use schottky_core::marking::random_marking;
use schottky_core::normalize::{
    search_classical, AnnulusConvention, SearchOptions, SearchStatus, DEFAULT_BOUNDED_TRACE, DEFAULT_SEARCH_BUDGET,
};
use schottky_core::{ExtComplex, HalfSpacePoint, Marking};

use input::{parse_basepoint, read_group, InputError};

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "schottky",
    version,
    about = "Schottky group markings, certificates, normalization and dimension bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct OutputFlags {
    /// Print machine-readable JSON on stdout.
    #[arg(long)]
    json: bool,
    /// Print nothing on stdout; only the exit status reports the result.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a marking is classical: disjoint disks paired by the generators.
    Verify {
        /// Group file with disks, or '-' for stdin.
        path: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Lower bound and series estimate for the critical exponent.
    Dim {
        path: String,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Maximum number of words to enumerate.
        #[arg(long, default_value_t = schottky_core::dimension::default_budget())]
        budget: u64,
        /// Basepoint in upper half-space as re,im,t.
        #[arg(long, value_parser = parse_basepoint)]
        basepoint: Option<HalfSpacePoint>,
        /// Write the shell sums as CSV (n,words,shell_sum).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Disjoint-circle certificate for one generator.
    CertifyPair {
        path: String,
        /// Zero-based generator index.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Search for a classical marking with normalization moves.
    SearchClassical {
        path: String,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: usize,
        #[arg(long, default_value = "sec7")]
        annulus: AnnulusConvention,
        /// Largest |trace| treated as bounded when building disks.
        #[arg(long, default_value_t = DEFAULT_BOUNDED_TRACE)]
        bounded_trace: f64,
        /// Write the move trace as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write the recovered marking as a group file.
        #[arg(long)]
        marking_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Attracting fixed points of all reduced words up to a length, as CSV (re,im,word_len).
    LimitSet {
        path: String,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = schottky_core::dimension::default_budget())]
        budget: u64,
        /// Write a static SVG scatter.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Random classical marking with 2k disjoint circles.
    GenRandom {
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Write the group file here instead of stdout.
        #[arg(long)]
        out_file: Option<PathBuf>,
        #[command(flatten)]
        out: OutputFlags,
    },
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn print_out(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit<T: Serialize>(flags: OutputFlags, value: &T, human: impl FnOnce() -> String) -> Result<()> {
    if flags.quiet {
        return Ok(());
    }
    if flags.json {
        print_out(&(to_json(value) + "\n"))
    } else {
        print_out(&human())
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn verify(path: &str, tol: f64, out: OutputFlags) -> Result<bool> {
    let file = read_group(path)?;
    let marking = Marking::from_group_file(&file).map_err(|e| InputError(e.to_string()))?;
    let report = marking.verify(tol)?;
    emit(out, &report, || {
        let mut s = format!(
            "{}: rank {}, min margin {}, max pairing residual {}\n",
            if report.verified { "verified" } else { "not verified" },
            marking.rank(),
            num(report.min_margin),
            num(report.max_residual)
        );
        for (i, g) in report.generators.iter().enumerate() {
            if !(g.interior_ok && g.exterior_ok) || g.pairing_residual >= tol {
                let _ = writeln!(
                    s,
                    "  generator {i}: residual {}, interior {}, exterior {}",
                    num(g.pairing_residual),
                    g.interior_ok,
                    g.exterior_ok
                );
            }
        }
        for m in report.margins.iter().filter(|m| m.margin <= tol) {
            let _ = writeln!(s, "  disks {} and {} overlap: margin {}", m.i, m.j, num(m.margin));
        }
        s
    })?;
    Ok(report.verified)
}

#[derive(Serialize)]
struct DimReport {
    #[serde(rename = "D_low")]
    d_low: f64,
    #[serde(rename = "D_series")]
    d_series: f64,
    shells: usize,
    diagnostics: DimensionBounds,
}

fn dim(
    path: &str,
    max_len: usize,
    budget: u64,
    basepoint: Option<HalfSpacePoint>,
    csv: Option<PathBuf>,
    out: OutputFlags,
) -> Result<bool> {
    let file = read_group(path)?;
    let x = basepoint.unwrap_or_else(HalfSpacePoint::j);
    let bounds = dimension_bounds(&file.generators, &x, max_len, budget)?;
    if let Some(csv) = csv {
        let mut text = String::from("n,words,shell_sum\n");
        for s in &bounds.series.shell_sums {
            let _ = writeln!(text, "{},{},{}", s.n, s.words, num(s.sum));
        }
        write_file(&csv, &text)?;
    }
    let report = DimReport {
        d_low: bounds.lower.d_low,
        d_series: bounds.series.d_series,
        shells: bounds.series.shells,
        diagnostics: bounds,
    };
    emit(out, &report, || {
        let b = &report.diagnostics;
        let mut s = format!(
            "D_low    = {}{}\nD_series = {} ({} shells, {} words, spread {})\n",
            num(report.d_low),
            if b.lower.rank_too_small { " (rank below 2)" } else { "" },
            num(report.d_series),
            report.shells,
            b.series.words,
            num(b.series.spread)
        );
        if b.series.shells < b.series.requested_max_len {
            let _ =
                writeln!(s, "budget allowed {} of {} requested shells", b.series.shells, b.series.requested_max_len);
        }
        if !b.ordered {
            let _ = writeln!(s, "warning: D_low exceeds D_series by more than {}", num(b.slack));
        }
        s
    })?;
    Ok(true)
}

fn certify_pair(path: &str, index: usize, out: OutputFlags) -> Result<bool> {
    let file = read_group(path)?;
    let Some(g) = file.generators.get(index) else {
        return Err(InputError(format!("generator index {index} out of range (rank {})", file.generators.len())).into());
    };
    let cert = disjoint_pair(g)?;
    emit(out, &cert, || {
        let m = &cert.margins;
        format!(
            "{}: radii {} and {}, gap {}, mapping clearance {}\n",
            if m.verified { "certified" } else { "not certified" },
            num(cert.repelling.radius),
            num(cert.attracting.radius),
            num(m.disjoint),
            num(m.mapping)
        )
    })?;
    Ok(cert.margins.verified)
}

fn search(
    path: &str,
    opts: SearchOptions,
    trace_out: Option<PathBuf>,
    marking_out: Option<PathBuf>,
    out: OutputFlags,
) -> Result<bool> {
    let file = read_group(path)?;
    let outcome = search_classical(&file.generators, opts)?;
    if let Some(p) = trace_out {
        write_file(&p, &to_json(&outcome.trace))?;
    }
    if let (Some(p), Some(m)) = (marking_out, &outcome.marking) {
        write_file(&p, &m.to_group_file().to_json())?;
    }
    let found = outcome.status == SearchStatus::ClassicalFound;
    emit(out, &outcome, || {
        let words: Vec<String> = outcome.words.iter().map(|w| format!("{:?}", w.to_signed())).collect();
        format!(
            "{}: {} moves, best margin {}\nwords {}\n",
            if found { "classical marking found" } else { "budget exhausted" },
            outcome.moves,
            num(outcome.best_margin),
            words.join(" ")
        )
    })?;
    Ok(found)
}

fn limit_set(path: &str, max_len: usize, budget: u64, svg_out: Option<PathBuf>, out: OutputFlags) -> Result<bool> {
    let file = read_group(path)?;
    let sample = sample_limit_points(&file.generators, max_len, budget)?;
    if let Some(p) = svg_out {
        write_file(&p, &svg::scatter(&sample.points, file.disks.as_deref().unwrap_or(&[])))?;
    }
    emit(out, &sample, || {
        let mut s = String::from("re,im,word_len\n");
        for p in &sample.points {
            match p.point {
                ExtComplex::Finite(z) => {
                    let _ = writeln!(s, "{},{},{}", num(z.re), num(z.im), p.word_len);
                }
                ExtComplex::Infinity => {
                    let _ = writeln!(s, "inf,inf,{}", p.word_len);
                }
            }
        }
        s
    })?;
    Ok(true)
}

fn gen_random(rank: usize, seed: u64, radius: f64, out_file: Option<PathBuf>, out: OutputFlags) -> Result<bool> {
    let marking = random_marking(rank, seed, radius).map_err(|e| InputError(e.to_string()))?;
    let mut file = marking.to_group_file();
    file.metadata = Some(Metadata { name: Some(format!("random rank {rank}")), seed: Some(seed) });
    let text = file.to_json();
    match out_file {
        Some(p) => {
            write_file(&p, &text)?;
            if !out.quiet {
                print_out(&format!("wrote rank {rank} marking to {}\n", p.display()))?;
            }
        }
        None if !out.quiet => print_out(&(text + "\n"))?,
        None => {}
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { path, tol, out } => {
            if !(tol >= 0.0) {
                bail!(InputError(format!("tolerance must be non-negative, got {tol}")));
            }
            verify(&path, tol, out)
        }
        Command::Dim { path, max_len, budget, basepoint, csv, out } => dim(&path, max_len, budget, basepoint, csv, out),
        Command::CertifyPair { path, index, out } => certify_pair(&path, index, out),
        Command::SearchClassical { path, budget, annulus, bounded_trace, trace_out, marking_out, out } => {
            let opts = SearchOptions { budget, convention: annulus, bounded_trace };
            search(&path, opts, trace_out, marking_out, out)
        }
        Command::LimitSet { path, max_len, budget, svg, out } => limit_set(&path, max_len, budget, svg, out),
        Command::GenRandom { rank, seed, radius, out_file, out } => gen_random(rank, seed, radius, out_file, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
    }
}
