use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use realrad::gif::{gif, CoordPolicy};
use realrad::moment::{build_structure, Representative};
use realrad::numlin::ToleranceConfig;
use realrad::pipeline::{bench_geometric, gif_m, gif_m_per_polynomial, write_bench_csv, PipelineConfig};
use realrad::polysys::{format_polynomial, parse_system, PolySystem};
use realrad::report::{to_json, to_text};
use realrad::solver::{Method, SolverConfig};
use realrad::Result;

#[derive(Parser)]
#[command(name = "realrad", version, about = "Real radical generators for polynomial systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Dr,
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoordArg {
    Auto,
    Always,
    Never,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute generators of the real radical.
    Radical {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "dr")]
        solver: SolverArg,
        #[arg(long, default_value_t = 1e-10)]
        svd_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        residual_tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        restarts: usize,
        #[arg(long, default_value_t = 2)]
        max_fr: usize,
        #[arg(long, value_enum, default_value = "auto")]
        coord_change: CoordArg,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Run each polynomial separately, then the union of the results.
        #[arg(long)]
        per_polynomial: bool,
        #[arg(long, value_enum, default_value = "text")]
        report: ReportArg,
    },
    /// Print the geometric involutive form.
    Gif {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        coord_change: CoordArg,
    },
    /// Dump the moment structure for n variables and degree d.
    Structure {
        #[arg(short)]
        n: usize,
        #[arg(short)]
        d: u32,
    },
    /// Run the loop on 1 + x + ... + x^d for odd d up to dmax.
    BenchGeometric {
        #[arg(long)]
        dmax: u32,
        #[arg(long)]
        csv: PathBuf,
    },
}

fn coord(c: CoordArg) -> CoordPolicy {
    match c {
        CoordArg::Auto => CoordPolicy::Auto,
        CoordArg::Always => CoordPolicy::Always,
        CoordArg::Never => CoordPolicy::Never,
    }
}

fn read_system(path: &PathBuf) -> Result<PolySystem> {
    parse_system(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Radical {
            file,
            solver,
            svd_tol,
            residual_tol,
            max_iter,
            restarts,
            max_fr,
            coord_change,
            seed,
            per_polynomial,
            report,
        } => {
            let p = read_system(&file)?;
            let tol = ToleranceConfig {
                svd_rel_tol: svd_tol,
                residual_tol,
                ..ToleranceConfig::default()
            };
            let cfg = PipelineConfig {
                tol,
                solver: SolverConfig {
                    method: match solver {
                        SolverArg::Dr => Method::Dr,
                        SolverArg::Map => Method::Map,
                    },
                    residual_tol,
                    max_iter,
                    seed,
                    ..SolverConfig::default()
                },
                coord: coord(coord_change),
                restarts,
                max_fr,
                seed,
                ..PipelineConfig::default()
            };
            let reports = if per_polynomial {
                let r = gif_m_per_polynomial(&p, &cfg)?;
                let mut v = r.parts;
                v.push(r.combined);
                v
            } else {
                vec![gif_m(&p, &cfg)?]
            };
            for (i, r) in reports.iter().enumerate() {
                if reports.len() > 1 {
                    let label = if i + 1 == reports.len() {
                        "combined".to_string()
                    } else {
                        format!("polynomial {}", i + 1)
                    };
                    if matches!(report, ReportArg::Text) {
                        println!("== {label}");
                    }
                }
                match report {
                    ReportArg::Json => println!("{}", to_json(r)),
                    ReportArg::Text => print!("{}", to_text(r)),
                }
            }
        }
        Cmd::Gif { file, coord_change } => {
            let p = read_system(&file)?;
            let cfg = PipelineConfig {
                coord: coord(coord_change),
                ..PipelineConfig::default()
            };
            let g = gif(&p, &cfg.gif_config())?;
            println!(
                "k={} l={} degree={} kernel_dim={} candidates={}{}",
                g.prolongations,
                g.projections,
                g.output.degree(),
                g.output.dim(),
                g.candidates_examined(),
                if g.coordinate_change.is_some() { " rotated" } else { "" }
            );
            for q in g.output.generators().polys() {
                println!("{}", format_polynomial(q));
            }
        }
        Cmd::Structure { n, d } => {
            let s = build_structure(n, d)?;
            println!("eta {}", s.eta());
            println!("side {}", s.side);
            for (t, r) in s.reps.iter().enumerate() {
                match *r {
                    Representative::Normalization => println!("{} 1 1 0 0", t + 1),
                    Representative::Tie { i, j, g, h } => {
                        println!("{} {} {} {} {}", t + 1, i + 1, j + 1, g + 1, h + 1)
                    }
                }
            }
        }
        Cmd::BenchGeometric { dmax, csv } => {
            let rows = bench_geometric(dmax, &PipelineConfig::default())?;
            write_bench_csv(&rows, std::fs::File::create(&csv)?)?;
            for r in &rows {
                if let Some(f) = &r.failure {
                    eprintln!("d={}: {f}", r.d);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
