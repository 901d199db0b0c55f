//! `hurwitz-lab`: experiments with nearest-integer continued fractions over
//! the five Euclidean imaginary quadratic fields.
//!
//! Every subcommand validates its knobs up front, runs the corresponding
//! library operation, and writes results atomically. With identical flags,
//! seed, and thread count, reruns are byte-identical.
//!
//! Exit codes: 0 success, 2 usage error (bad flag or value), 1 runtime error.

mod parse;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hurwitz_core::cf::{self, CostFunction};
use hurwitz_core::geometry::{build_cells_with_n0, generate_W, verify_markov};
use hurwitz_core::report;
use hurwitz_core::ring::FieldConfig;
use hurwitz_core::stats::{self, OmegaSpec};
use hurwitz_core::transfer;
use hurwitz_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hurwitz-lab",
    version,
    about = "Hurwitz continued fractions over Q(sqrt(-d)), d in {1, 2, 3, 7, 11}"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Worker threads (falls back to HURWITZ_LAB_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for every stochastic choice (sampling, reservoirs)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file (directory for `report`); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format where a choice exists
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Cmd {
    /// Expand an exact field rational into its digit word
    Expand {
        #[arg(long)]
        d: u8,
        /// Field rational, e.g. "2/5-1/5i" or "1/2+1/2w"
        #[arg(long)]
        z: String,
        /// Cost to total alongside: len, logabs, or table:<path>
        #[arg(long, default_value = "len")]
        cost: String,
    },
    /// Certify which digits have empty branch domains
    ScanDigits {
        #[arg(long)]
        d: u8,
        /// Scan digits with qnorm up to this bound
        #[arg(long, default_value_t = 12)]
        digit_norm_bound: i64,
    },
    /// Build the cell partition of the fundamental domain
    Partition {
        #[arg(long)]
        d: u8,
        /// Classification grid resolution per axis
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
    /// Sample digit-cell triples and report Markov violations
    VerifyMarkov {
        #[arg(long)]
        d: u8,
        #[arg(long, default_value_t = 100)]
        digit_norm_bound: i64,
        /// Number of sampled triples
        #[arg(long = "N", default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
    /// Assemble the Ulam operator at (sigma, u) = (1, 0) and report its
    /// leading eigenvalue (json) or eigendensity (csv)
    Spectrum {
        #[arg(long)]
        d: u8,
        /// Ulam boxes per axis
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Digit truncation bound A
        #[arg(long, default_value_t = 800)]
        digit_norm_bound: i64,
    },
    /// Solve s0(w) on a twist grid and fit the pressure curve
    Pressure {
        #[arg(long)]
        d: u8,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 400)]
        digit_norm_bound: i64,
        /// Real twists, comma-separated
        #[arg(long, default_value = "-0.02,-0.01,0,0.01,0.02")]
        w: String,
        #[arg(long, default_value = "len")]
        cost: String,
    },
    /// Stream the full ensemble up to height bound N as expansion records
    Enumerate {
        #[arg(long)]
        d: u8,
        #[arg(long = "N")]
        n: i64,
        #[arg(long, default_value = "len")]
        cost: String,
    },
    /// Moment table (count, mean, variance, KS) at each checkpoint
    Stats {
        #[arg(long)]
        d: u8,
        /// Checkpoints, comma-separated, strictly increasing
        #[arg(long = "N-grid")]
        n_grid: String,
        #[arg(long, default_value_t = 2)]
        q: u32,
        /// Comma list of costs
        #[arg(long, default_value = "len")]
        cost: String,
    },
    /// Residue histogram of an integer cost mod q
    Modq {
        #[arg(long)]
        d: u8,
        #[arg(long = "N")]
        n: i64,
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value = "len")]
        cost: String,
    },
    /// Dirichlet partial sums over the ensemble for each twist
    Dirichlet {
        #[arg(long)]
        d: u8,
        #[arg(long = "N-grid")]
        n_grid: String,
        /// Twists: real like "0.02" or imaginary like "i1.5707"
        #[arg(long, default_value = "0")]
        w: String,
        #[arg(long, default_value = "len")]
        cost: String,
    },
    /// One bundle: digit scan, partition render, spectrum, and statistics
    Report {
        #[arg(long)]
        d: u8,
        #[arg(long = "N", default_value_t = 2048)]
        n: i64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 800)]
        digit_norm_bound: i64,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidField(_) | Error::InvalidArgument(_) | Error::Parse(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("HURWITZ_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<()> {
    let format = cli.format;
    let out = cli.out.clone();
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Expand { d, z, cost } => {
            let cfg = FieldConfig::new(d)?;
            let zq = parse::quadrat(&z, cfg)?;
            let c = parse::cost(&cost)?;
            let mut e = cf::expand(&zq, cfg)?;
            e.cost(&c);
            emit(&out, json_text(&report::expansion_json(&e)))
        }
        Cmd::ScanDigits {
            d,
            digit_norm_bound,
        } => {
            let cfg = FieldConfig::new(d)?;
            let empties = cf::empty_digit_scan(cfg, digit_norm_bound)?;
            let doc = json!({
                "field": d,
                "digit_norm_bound": digit_norm_bound,
                "empty_digits": empties.iter().map(report::quadint_json).collect::<Vec<_>>(),
            });
            emit(&out, json_text(&doc))
        }
        Cmd::Partition { d, resolution } => {
            let cfg = FieldConfig::new(d)?;
            let (curves, n0) = generate_W(cfg, 16)?;
            let complex = build_cells_with_n0(&curves, cfg, resolution, n0)?;
            match format.unwrap_or(Format::Json) {
                Format::Json => emit(&out, json_text(&report::partition_json(&complex))),
                Format::Svg => emit(&out, report::partition_svg(&complex, cfg)),
                Format::Csv => Err(Error::InvalidArgument(
                    "partition supports --format json or svg".into(),
                )),
            }
        }
        Cmd::VerifyMarkov {
            d,
            digit_norm_bound,
            n,
            resolution,
        } => {
            let cfg = FieldConfig::new(d)?;
            let (curves, n0) = generate_W(cfg, 16)?;
            let complex = build_cells_with_n0(&curves, cfg, resolution, n0)?;
            let rep = verify_markov(&complex, cfg, digit_norm_bound, n, seed)?;
            let doc = json!({
                "field": d,
                "digit_norm_bound": digit_norm_bound,
                "triples_tested": rep.triples_tested,
                "membership_violations": rep.membership_violations.len(),
                "image_violations": rep.image_violations.len(),
                "violations": rep.total_violations(),
            });
            emit(&out, json_text(&doc))
        }
        Cmd::Spectrum {
            d,
            grid,
            digit_norm_bound,
        } => {
            let cfg = FieldConfig::new(d)?;
            let cost = CostFunction::ConstantOne;
            let op = transfer::assemble(cfg, grid, digit_norm_bound, 1.0, 0.0, &cost)?;
            let res = transfer::dominant_eigen(&op, 1e-9)?;
            let lam = transfer::lyapunov_integral(&op, &res);
            match format.unwrap_or(Format::Json) {
                Format::Csv => emit(&out, report::density_csv(&op, &res.psi)),
                _ => emit(&out, json_text(&report::spectral_json(&op, &res, lam, None))),
            }
        }
        Cmd::Pressure {
            d,
            grid,
            digit_norm_bound,
            w,
            cost,
        } => {
            let cfg = FieldConfig::new(d)?;
            let c = parse::cost(&cost)?;
            let ws = parse::w_list(&w)?;
            let reals: Vec<f64> = ws
                .iter()
                .map(|&(re, im)| {
                    if im != 0.0 {
                        Err(Error::InvalidArgument(
                            "pressure twists must be real".into(),
                        ))
                    } else {
                        Ok(re)
                    }
                })
                .collect::<Result<_>>()?;
            let pc = transfer::solve_s0(cfg, &c, grid, digit_norm_bound, &reals, 1e-4)?;
            let doc = json!({
                "field": d,
                "cost": c.id(),
                "s0_curve": pc.samples.iter().map(|&(w, s)| vec![w, s]).collect::<Vec<_>>(),
                "mu_hat": pc.mu_hat,
                "delta_hat": pc.delta_hat,
                "fit_residual": pc.fit_residual,
            });
            emit(&out, json_text(&doc))
        }
        Cmd::Enumerate { d, n, cost } => {
            if n > 10_000 {
                return Err(Error::InvalidArgument(format!(
                    "enumerate streams exact records; N = {n} > 10000 (use stats)"
                )));
            }
            let spec = OmegaSpec::new(d, n)?;
            let c = parse::cost(&cost)?;
            let mut items = Vec::new();
            let count = stats::enumerate_omega(&spec, |_, e| {
                let mut e = e.clone();
                e.cost(&c);
                items.push(report::expansion_json(&e));
                Ok(())
            })?;
            emit(
                &out,
                json_text(&json!({"field": d, "N": n, "count": count, "items": items})),
            )
        }
        Cmd::Stats { d, n_grid, q, cost } => {
            let grid = parse::n_grid(&n_grid)?;
            let costs = parse::cost_list(&cost)?;
            let top = *grid.last().ok_or_else(|| {
                Error::InvalidArgument("empty checkpoint grid".into())
            })?;
            let spec = OmegaSpec::new(d, top)?;
            let table = stats::moment_table(&spec, &costs, &grid, q)?;
            match format.unwrap_or(Format::Csv) {
                Format::Json => emit(&out, json_text(&moments_json(&table))),
                _ => emit(&out, report::moments_csv(&table)),
            }
        }
        Cmd::Modq { d, n, q, cost } => {
            let spec = OmegaSpec::new(d, n)?;
            let c = parse::cost(&cost)?;
            let table = stats::modq_table(&spec, &c, q)?;
            match format.unwrap_or(Format::Csv) {
                Format::Json => emit(
                    &out,
                    json_text(&json!({
                        "field": d, "N": n, "q": q, "cost": table.cost_id,
                        "counts": table.counts, "total": table.total,
                        "deviation": table.deviation,
                    })),
                ),
                _ => emit(&out, report::modq_csv(&table)),
            }
        }
        Cmd::Dirichlet {
            d,
            n_grid,
            w,
            cost,
        } => {
            let grid = parse::n_grid(&n_grid)?;
            let ws = parse::w_list(&w)?;
            let c = parse::cost(&cost)?;
            let top = *grid.last().ok_or_else(|| {
                Error::InvalidArgument("empty checkpoint grid".into())
            })?;
            let spec = OmegaSpec::new(d, top)?;
            let series: Vec<_> = ws
                .iter()
                .map(|&w| stats::dirichlet_partial(&spec, &c, w, &grid))
                .collect::<Result<_>>()?;
            match format.unwrap_or(Format::Csv) {
                Format::Json => {
                    let docs: Vec<Value> = series.iter().map(dirichlet_json).collect();
                    emit(&out, json_text(&json!({"field": d, "series": docs})))
                }
                _ => emit(&out, report::dirichlet_csv(&series)),
            }
        }
        Cmd::Report {
            d,
            n,
            grid,
            digit_norm_bound,
            resolution,
        } => run_report(d, n, grid, digit_norm_bound, resolution, &out),
    }
}

fn moments_json(t: &hurwitz_core::stats::MomentTable) -> Value {
    let tables: Vec<Value> = t
        .tables
        .iter()
        .map(|c| {
            json!({
                "cost": c.cost_id,
                "rows": c.rows.iter().map(|r| json!({
                    "N": r.n_max, "count": r.count, "mean": r.mean,
                    "var": r.variance, "ks": r.ks, "modq": r.modq,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({"field": t.d, "q": t.q, "tables": tables})
}

fn dirichlet_json(s: &hurwitz_core::stats::DirichletSeries) -> Value {
    json!({
        "w": [s.w.0, s.w.1],
        "cost": s.cost_id,
        "partials": s.partials.iter().map(|&(n, re, im)| json!([n, re, im])).collect::<Vec<_>>(),
        "fit_slope": s.fit_slope,
        "decay_ratios": s.decay_ratios,
    })
}

/// The consolidated bundle: Table-1 digit scan, partition summary + SVG,
/// spectral constants at (1, 0), and the moment table, all under one
/// directory.
fn run_report(
    d: u8,
    n: i64,
    grid: usize,
    digit_norm_bound: i64,
    resolution: usize,
    out: &Option<PathBuf>,
) -> Result<()> {
    let cfg = FieldConfig::new(d)?;
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("hurwitz-report"));

    let empties = cf::empty_digit_scan(cfg, 12)?;

    let (curves, n0_depth) = generate_W(cfg, 16)?;
    let complex = build_cells_with_n0(&curves, cfg, resolution, n0_depth)?;
    let svg = report::partition_svg(&complex, cfg);
    report::write_atomic(&dir.join("partition.svg"), svg.as_bytes())?;
    let dims: Vec<usize> = (0..3)
        .map(|k| complex.cells.iter().filter(|c| c.dim == k as u8).count())
        .collect();

    let cost = CostFunction::ConstantOne;
    let op = transfer::assemble(cfg, grid, digit_norm_bound, 1.0, 0.0, &cost)?;
    let res = transfer::dominant_eigen(&op, 1e-9)?;
    let lam = transfer::lyapunov_integral(&op, &res);

    let checkpoints: Vec<i64> = [n / 8, n / 4, n / 2, n]
        .iter()
        .copied()
        .filter(|&x| x >= 32)
        .collect();
    let spec = OmegaSpec::new(d, n)?;
    let table = stats::moment_table(&spec, std::slice::from_ref(&cost), &checkpoints, 2)?;
    report::write_atomic(
        &dir.join("moments.csv"),
        report::moments_csv(&table).as_bytes(),
    )?;

    let doc = json!({
        "field": d,
        "empty_digits": empties.iter().map(report::quadint_json).collect::<Vec<_>>(),
        "partition": {
            "curve_count": complex.curves.len(),
            "n0": complex.n0,
            "cells_by_dim": {"2": dims[2], "1": dims[1], "0": dims[0]},
            "svg": "partition.svg",
        },
        "spectral": report::spectral_json(&op, &res, lam, None),
        "lambda_10": res.lambda,
        "stats": moments_json(&table),
        "artifacts": ["report.json", "partition.svg", "moments.csv"],
    });
    report::write_atomic(&dir.join("report.json"), json_text(&doc).as_bytes())?;
    Ok(())
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

fn emit(out: &Option<PathBuf>, content: String) -> Result<()> {
    match out {
        Some(path) => report::write_atomic(Path::new(path), content.as_bytes()),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
