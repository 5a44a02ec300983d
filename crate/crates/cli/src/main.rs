//! Command-line front end: sharp constants, refinement sweeps and verification suites.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fracsob::experiments::{self as ex, parse_config, parse_levels, write_csv};
use fracsob::Params;

#[derive(Parser, Debug)]
#[command(name = "fracsob", version, about = "Discrete fractional Sobolev constants on P1 elements over the unit ball")]
struct Cli {
    /// Flat key=value file; its entries override command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print S_{N,s}, the rate exponent α and the critical exponent 2*_s.
    Constant(Opts),
    /// Run a refinement sweep and write one CSV row per level.
    Sweep {
        kind: SweepKind,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a verification suite and write its rows as CSV.
    Verify {
        kind: VerifyKind,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepKind {
    /// Deficit of the interpolated balanced bubble.
    Upper,
    /// Minimized discrete quotient.
    Solve,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VerifyKind {
    Interp,
    Covering,
    Minseq,
    Inequalities,
}

#[derive(Args, Debug, Clone, Default)]
struct Opts {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    /// Level range a..b (inclusive).
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lebesgue exponent for the interpolation audit.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed concentration for the interpolation audit.
    #[arg(long)]
    c: Option<f64>,
    /// Sample count (covering and inequalities).
    #[arg(long)]
    samples: Option<usize>,
    /// Single mesh level (minimizing sequence, inequalities, c-sweep).
    #[arg(long)]
    level: Option<usize>,
    /// Comma-separated ε list for the minimizing sequence.
    #[arg(long)]
    eps: Option<String>,
}

impl Opts {
    fn apply_config(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (key, value) in parse_config(&text)? {
            let bad = |e: &dyn std::fmt::Display| anyhow!("config key {key}: {e}");
            match key.replace('-', "_").as_str() {
                "dim" => self.dim = Some(value.parse().map_err(|e| bad(&e))?),
                "s" => self.s = Some(value.parse().map_err(|e| bad(&e))?),
                "levels" => self.levels = Some(value),
                "out" => self.out = Some(PathBuf::from(value)),
                "q" => self.q = Some(value.parse().map_err(|e| bad(&e))?),
                "seed" => self.seed = Some(value.parse().map_err(|e| bad(&e))?),
                "c" => self.c = Some(value.parse().map_err(|e| bad(&e))?),
                "samples" => self.samples = Some(value.parse().map_err(|e| bad(&e))?),
                "level" => self.level = Some(value.parse().map_err(|e| bad(&e))?),
                "eps" => self.eps = Some(value),
                other => bail!("unknown config key {other:?}"),
            }
        }
        Ok(())
    }

    fn dim(&self) -> Result<usize> {
        self.dim.ok_or_else(|| anyhow!("--dim is required"))
    }

    fn s(&self) -> Result<f64> {
        self.s.ok_or_else(|| anyhow!("--s is required"))
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("--out is required"))
    }

    fn levels(&self, default: &str) -> Result<Vec<usize>> {
        Ok(parse_levels(self.levels.as_deref().unwrap_or(default))?)
    }

    fn eps(&self) -> Result<Vec<f64>> {
        self.eps
            .as_deref()
            .unwrap_or("0.2,0.1,0.05")
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("bad ε {t:?}: {e}")))
            .collect()
    }
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

fn print_fit(label: &str, fit: Option<ex::RateFit>, expected: f64) {
    match fit {
        Some(f) => println!("{label}: slope {:.6} (expected {expected:.6}, ratio {:.4}), r² {:.6}, {} points", f.slope, f.slope / expected, f.r2, f.points),
        None => println!("{label}: not enough successful levels for a fit"),
    }
}

fn print_failures(failures: &[ex::LevelFailure]) {
    for f in failures {
        eprintln!("level {} failed: {}", f.level, f.message);
    }
}

fn constant(opts: &Opts) -> Result<()> {
    let p = Params::new(opts.dim()?, opts.s()?)?;
    println!("S_{{N,s}} = {:.15e}", p.sobolev_constant);
    println!("alpha   = {:.15e}", p.alpha);
    println!("2*_s    = {:.15e}", p.two_star);
    Ok(())
}

fn sweep(kind: SweepKind, opts: &Opts) -> Result<()> {
    let (dim, s) = (opts.dim()?, opts.s()?);
    let levels = opts.levels(if dim == 1 { "4..8" } else { "1..3" })?;
    let out = opts.out()?;
    let report = match kind {
        SweepKind::Upper => ex::upper_bound_sweep(dim, s, &levels)?,
        SweepKind::Solve => {
            let r = ex::discrete_constant_sweep(dim, s, &levels)?;
            for d in &r.diagnostics {
                println!(
                    "level {:2}: S_h {:.10} iterations {:3} converged {} c_fit {:.5e} stability {:.4e}",
                    d.level, d.s_h, d.iterations, d.converged, d.c_fit, d.stability_ratio
                );
            }
            print_fit("c_fit vs h", r.concentration_fit, r.expected_concentration_slope);
            r.sweep
        }
    };
    for rec in &report.records {
        println!("level {:2}: h {:.5e} c_h {:.5e} value {:.6e} slack {:.1e} ({:.2} s)", rec.level, rec.h, rec.c_h, rec.value, rec.slack, rec.wall_time);
    }
    print_fit("rate", report.fit, report.alpha);
    print_failures(&report.failures);
    write_rows(out, &report.records)
}

#[derive(Serialize)]
struct InequalityRow {
    check: &'static str,
    side: f64,
    samples: usize,
    max_ratio: f64,
    max_ratio_doubled: f64,
    violations: usize,
}

fn verify(kind: VerifyKind, opts: &Opts) -> Result<()> {
    let (dim, s) = (opts.dim()?, opts.s()?);
    let out = opts.out()?;
    let seed = opts.seed.unwrap_or(0);
    match kind {
        VerifyKind::Interp => {
            let q = opts.q.unwrap_or(2.0);
            let c = opts.c.unwrap_or(0.25);
            let r = ex::verify_interp_error(dim, s, q, c, &opts.levels(if dim == 1 { "4..9" } else { "1..4" })?)?;
            print_fit("L^q error vs h", Some(r.lq_fit), 2.0);
            print_fit("gradient error vs h", Some(r.grad_fit), 1.0);
            let mut rows = r.records;
            let fine = opts.level.unwrap_or(if dim == 1 { 10 } else { 4 });
            match ex::verify_interp_concentration(dim, s, q, fine, &[0.25, 0.125, 0.0625, 0.03125]) {
                Ok(cr) => {
                    print_fit("L^q error vs c", Some(cr.fit), cr.expected_slope);
                    rows.extend(cr.records);
                }
                Err(e) => eprintln!("c-sweep skipped: {e}"),
            }
            write_rows(out, &rows)
        }
        VerifyKind::Covering => {
            let r = ex::verify_covering(dim, s, opts.samples.unwrap_or(10_000), seed)?;
            println!(
                "min ratio {:.6e} ({} samples), {:.6e} ({} samples), change {:.2e}, excluded {}",
                r.min_ratio,
                r.samples,
                r.min_ratio_doubled,
                2 * r.samples,
                r.relative_change(),
                r.excluded
            );
            write_rows(out, &[r])
        }
        VerifyKind::Minseq => {
            let r = ex::verify_minimizing_sequence(dim, s, &opts.eps()?, opts.level.unwrap_or(if dim == 1 { 9 } else { 4 }))?;
            for rec in &r.records {
                println!("ε {:.4}: quotient {:.10} gap {:.6e}", rec.eps, rec.quotient, rec.gap);
            }
            println!("gap ratios {:?} (scaling {:.4})", r.ratios, r.expected_ratio);
            write_rows(out, &r.records)
        }
        VerifyKind::Inequalities => {
            let level = opts.level.unwrap_or(if dim == 1 { 6 } else { 2 });
            let r = ex::verify_functional_inequalities(dim, s, level, 50, opts.samples.unwrap_or(1000), seed)?;
            let mut rows = vec![
                InequalityRow {
                    check: "poincare",
                    side: 0.0,
                    samples: r.poincare.functions,
                    max_ratio: r.poincare.max_ratio,
                    max_ratio_doubled: r.poincare.max_ratio,
                    violations: r.poincare.violations,
                },
                InequalityRow {
                    check: "gagliardo_nirenberg",
                    side: 0.0,
                    samples: r.gagliardo_nirenberg.samples,
                    max_ratio: r.gagliardo_nirenberg.max_ratio,
                    max_ratio_doubled: r.gagliardo_nirenberg.max_ratio_doubled,
                    violations: 0,
                },
            ];
            rows.extend(r.cube.iter().map(|c| InequalityRow {
                check: "cube",
                side: c.side,
                samples: c.constant.samples,
                max_ratio: c.constant.max_ratio,
                max_ratio_doubled: c.constant.max_ratio_doubled,
                violations: 0,
            }));
            for row in &rows {
                println!(
                    "{:20} side {:5} max {:.6e} doubled {:.6e} violations {}",
                    row.check, row.side, row.max_ratio, row.max_ratio_doubled, row.violations
                );
            }
            write_rows(out, &rows)
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (mut opts, run): (Opts, Box<dyn Fn(&Opts) -> Result<()>>) = match cli.command {
        Command::Constant(o) => (o, Box::new(constant)),
        Command::Sweep { kind, opts } => (opts, Box::new(move |o: &Opts| sweep(kind, o))),
        Command::Verify { kind, opts } => (opts, Box::new(move |o: &Opts| verify(kind, o))),
    };
    if let Some(path) = &cli.config {
        opts.apply_config(path)?;
    }
    run(&opts)
}
