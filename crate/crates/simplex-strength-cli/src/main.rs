//! Command-line front end: strength records from files, figure data
//! emission, bound tables, and the randomized verification suites.
//!
//! Exit codes: 0 on success, 1 on invalid input or flags, 2 when a
//! verification suite records a violation.

mod io;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use simplex_strength::verify::{run_invariance_suite, run_lemma_suite, run_lipschitz_suite};
use simplex_strength::{
    lemma_bounds, normalized_triangle_strength, section_a_eq_b, section_b_eq_c, signed_strength,
    squared_volume, TrialConfig, TrialReport,
};

use crate::io::{fmt_f64, read_distances, read_points, records_to_json, OutputRecord, CSV_HEADER};

/// Largest dimension whose bound table fits exact 128-bit rencontre numbers.
const MAX_TABLE_DIM: usize = 32;

#[derive(Parser)]
#[command(
    name = "simplex-strength",
    version,
    about = "Strength and signed strength of geometric simplices: computation, figure data, bound tables, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Section {
    /// y = 0 edge: isosceles triangles with the two larger sides equal,
    /// sigma = (2-x) x^2 / (2 (2+x)^2) on x in [0, 1]
    BEqC,
    /// x + y = 1 edge: isosceles triangles with the two smaller sides equal,
    /// sigma = (2x-1) / (2 (2x+1)^2) on x in [1/2, 1]
    AEqB,
}

#[derive(Subcommand)]
enum Command {
    /// Compute strength records from point files (or distance matrices)
    Strength {
        /// Input file; repeat for several simplices. CSV (n+1 rows of n
        /// coordinates) or JSON {"points": [[...], ...]}
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Treat inputs as (n+1)x(n+1) CSV distance matrices; the
        /// orientation sign is unavailable in this mode
        #[arg(long)]
        distances: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Emit the normalized-triangle strength surface over its parameter
    /// region as (x, y, sigma) CSV rows
    Grid {
        /// Lattice points per axis over [0, 1]^2 (cells outside the region
        /// are skipped)
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Emit one closed-form section of the normalized-triangle strength as
    /// (x, sigma) CSV rows
    Curves {
        #[arg(long, value_enum)]
        section: Section,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the per-dimension table of Lipschitz and determinant bounds
    Bounds {
        #[arg(long = "max-dim")]
        max_dim: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the verification suites (perturbation, determinant bounds,
    /// invariance) and write a JSON report
    Verify {
        /// Simplex dimension n
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Coordinate magnitude of the sampled simplices
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Perturbation radius range LO:HI (log-uniform sampling)
        #[arg(long, default_value = "1e-6:1e-1", value_parser = parse_eps)]
        eps: EpsRange,
        /// Fraction of trials using squashed, near-degenerate simplices
        #[arg(long = "near-degenerate-fraction", default_value_t = 0.25)]
        near_degenerate_fraction: f64,
        /// Report path (JSON)
        #[arg(long, default_value = "verify-report.json")]
        report: PathBuf,
    },
}

#[derive(Clone, Copy)]
struct EpsRange(f64, f64);

fn parse_eps(s: &str) -> std::result::Result<EpsRange, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad LO: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad HI: {e}"))?;
    Ok(EpsRange(lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Strength {
            input,
            distances,
            format,
        } => cmd_strength(&input, distances, format),
        Command::Grid { resolution, output } => cmd_grid(resolution, &output),
        Command::Curves {
            section,
            samples,
            output,
        } => cmd_curves(section, samples, &output),
        Command::Bounds { max_dim, format } => cmd_bounds(max_dim, format),
        Command::Verify {
            dim,
            trials,
            seed,
            scale,
            eps,
            near_degenerate_fraction,
            report,
        } => {
            let cfg = TrialConfig {
                dim,
                trials,
                seed,
                scale,
                epsilon_range: (eps.0, eps.1),
                near_degenerate_fraction,
            };
            cmd_verify(&cfg, &report)
        }
    }
}

fn cmd_strength(inputs: &[PathBuf], distances: bool, format: Format) -> Result<ExitCode> {
    let mut records = Vec::with_capacity(inputs.len());
    for path in inputs {
        let record = if distances {
            let d = read_distances(path)?;
            let half_perimeter = d.half_perimeter();
            let volume_squared = squared_volume(&d)
                .with_context(|| format!("{}: strength undefined", path.display()))?;
            let sigma = if half_perimeter == 0.0 {
                0.0
            } else {
                volume_squared / half_perimeter.powi(2 * d.dim() as i32 - 1)
            };
            OutputRecord {
                file: path.display().to_string(),
                dim: d.dim(),
                sigma,
                sign: None,
                signed: None,
                volume_squared,
                half_perimeter,
            }
        } else {
            let s = read_points(path)?;
            let r = signed_strength(&s)
                .with_context(|| format!("{}: strength undefined", path.display()))?;
            OutputRecord {
                file: path.display().to_string(),
                dim: s.dim(),
                sigma: r.sigma,
                sign: Some(r.sign),
                signed: Some(r.signed),
                volume_squared: r.volume_squared,
                half_perimeter: r.half_perimeter,
            }
        };
        records.push(record);
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in &records {
                writeln!(out, "{}", r.to_csv_row())?;
            }
        }
        Format::Json => writeln!(out, "{}", records_to_json(&records))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_grid(resolution: usize, output: &PathBuf) -> Result<ExitCode> {
    if resolution < 2 {
        bail!("grid resolution must be at least 2, got {resolution}");
    }
    let file = File::create(output)
        .with_context(|| format!("cannot write grid file {}", output.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "x,y,sigma")?;
    let last = resolution - 1;
    for i in 0..resolution {
        for j in 0..resolution {
            // Region membership decided in integers: x >= y is i >= j and
            // x + y <= 1 is i + j <= last, exact at every lattice point.
            if j > i || i + j > last {
                continue;
            }
            let x = i as f64 / last as f64;
            let y = j as f64 / last as f64;
            let sigma = normalized_triangle_strength(x, y)
                .expect("lattice points inside the region by construction");
            writeln!(w, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(sigma))?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_curves(section: Section, samples: usize, output: &PathBuf) -> Result<ExitCode> {
    if samples < 2 {
        bail!("curve sampling needs at least 2 samples, got {samples}");
    }
    let (lo, hi, f): (f64, f64, fn(f64) -> f64) = match section {
        Section::BEqC => (0.0, 1.0, section_b_eq_c),
        Section::AEqB => (0.5, 1.0, section_a_eq_b),
    };
    let file = File::create(output)
        .with_context(|| format!("cannot write curve file {}", output.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "x,sigma")?;
    for k in 0..samples {
        let x = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        writeln!(w, "{},{}", fmt_f64(x), fmt_f64(f(x)))?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(max_dim: usize, format: Format) -> Result<ExitCode> {
    if max_dim < 1 {
        bail!("--max-dim must be at least 1");
    }
    if max_dim > MAX_TABLE_DIM {
        bail!(
            "--max-dim {max_dim} exceeds {MAX_TABLE_DIM}: rencontre numbers overflow 128 bits \
             beyond that"
        );
    }
    let rows: Vec<_> = (1..=max_dim)
        .map(|n| lemma_bounds(n).expect("dimension within the rencontre range"))
        .collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Csv => {
            writeln!(
                out,
                "dim,rencontre_n_plus_2,lambda_n,c_n,b_n,edge_ratio_bound,det_ratio_bound,\
                 det_derivative_bound"
            )?;
            for t in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    t.dim,
                    t.rencontre_n_plus_2,
                    fmt_f64(t.lambda_n),
                    t.c_n.map(fmt_f64).unwrap_or_default(),
                    t.b_n.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(t.edge_ratio_bound),
                    fmt_f64(t.det_ratio_bound),
                    fmt_f64(t.det_derivative_bound),
                )?;
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
    }
    Ok(ExitCode::SUCCESS)
}

/// Combined report of the three suites.
#[derive(Serialize)]
struct VerifyReport {
    pass: bool,
    lipschitz: TrialReport,
    lemma: TrialReport,
    invariance: TrialReport,
}

fn cmd_verify(cfg: &TrialConfig, report_path: &PathBuf) -> Result<ExitCode> {
    cfg.validate()?;
    let lipschitz = run_lipschitz_suite(cfg)?;
    let lemma = run_lemma_suite(cfg)?;
    let invariance = run_invariance_suite(cfg)?;
    let report = VerifyReport {
        pass: lipschitz.pass && lemma.pass && invariance.pass,
        lipschitz,
        lemma,
        invariance,
    };

    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(report_path, format!("{json}\n"))
        .with_context(|| format!("cannot write report {}", report_path.display()))?;

    for suite in [&report.lipschitz, &report.lemma, &report.invariance] {
        print_suite_summary(suite);
    }
    println!(
        "overall: {} (report written to {})",
        if report.pass { "pass" } else { "FAIL" },
        report_path.display()
    );
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn print_suite_summary(r: &TrialReport) {
    println!(
        "{} suite: {} ({} trials, dim {})",
        r.suite,
        if r.pass { "pass" } else { "FAIL" },
        r.config.trials,
        r.config.dim
    );
    for c in &r.checks {
        println!(
            "  {:<28} max {:>13.6e} vs bound {:>13.6e}  violations {}",
            c.name, c.max_observed, c.bound, c.violations
        );
    }
    for (name, value) in &r.counters {
        println!("  {name}: {value}");
    }
}
