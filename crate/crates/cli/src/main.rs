//! `horlicz`: membership tests for Hardy-Orlicz spaces of quasiconformal maps.
//!
//! Exit codes: 0 success, 1 verdict mismatch or failed suite, 2 invalid
//! input, 3 inconclusive suite, 4 evaluation or I/O error.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "horlicz", version, about = "Numerical membership tests for Hardy-Orlicz spaces of quasiconformal maps")]
struct Cli {
    /// Dimension of the ball (2 or 3).
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra configuration entries, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate every membership criterion for one map and growth function.
    Analyze {
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        psi: Option<String>,
        /// Number of dyadic cutoffs.
        #[arg(long)]
        depth: Option<usize>,
        /// Scan every delta instead of stopping at the first finite one.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Run the three known criterion splits and compare with the expected verdicts.
    Counterexamples,
    /// Run the inequality suites (all of them when none is named).
    Lemmas {
        suites: Vec<String>,
        /// Random interior points per pointwise suite.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Estimate the modulus of a curve family.
    Modulus {
        /// `radial:<alpha>:<r>` or `ring:<r>:<R>[:<centre>]`.
        #[arg(long)]
        generator: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        curves: Option<usize>,
        /// Also compare with the image family under this map.
        #[arg(long)]
        map: Option<String>,
        /// Write the optimal density to rho.csv.
        #[arg(long)]
        rho_dump: bool,
    },
    /// Estimate the Carleson norm of a measure on the ball.
    Carleson {
        /// `lebesgue`, `dyadic:<map>` or `ratio:<map>:<psi>`.
        #[arg(long)]
        measure: String,
        /// Also check the embedding inequality.
        #[arg(long)]
        embed: bool,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        psi: Option<String>,
        #[arg(long)]
        dyadic_levels: Option<u32>,
    },
}

fn entries(cli: &Cli) -> Result<BTreeMap<String, String>, Failure> {
    let mut m = match &cli.config {
        Some(p) => config::read_file(p).map_err(Failure::Usage)?,
        None => BTreeMap::new(),
    };
    for s in &cli.set {
        let line = s.replacen('=', " = ", 1);
        m.extend(config::parse_flat(&line).map_err(|e| Failure::Usage(format!("--set {s}: {e}")))?);
    }
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("dim", cli.dim.map(|v| v.to_string()));
    put("seed", cli.seed.map(|v| v.to_string()));
    put("workers", cli.workers.map(|v| v.to_string()));
    put("out", cli.out.as_ref().map(|v| v.display().to_string()));
    match &cli.command {
        Command::Analyze { map, psi, depth, exhaustive } => {
            put("map", map.clone());
            put("psi", psi.clone());
            put("scan.depth", depth.map(|v| v.to_string()));
            if *exhaustive {
                put("scan.exhaustive", Some("true".into()));
            }
        }
        Command::Lemmas { samples, .. } => put("lemmas.samples", samples.map(|v| v.to_string())),
        Command::Modulus { resolution, max_iterations, curves, map, .. } => {
            put("modulus.resolution", resolution.map(|v| v.to_string()));
            put("modulus.max_iterations", max_iterations.map(|v| v.to_string()));
            put("modulus.curves", curves.map(|v| v.to_string()));
            put("map", map.clone());
        }
        Command::Carleson { map, psi, dyadic_levels, .. } => {
            put("map", map.clone());
            put("psi", psi.clone());
            put("carleson.dyadic_levels", dyadic_levels.map(|v| v.to_string()));
        }
        Command::Counterexamples => {}
    }
    Ok(m)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = RunConfig::build(&entries(cli)?).map_err(Failure::Usage)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| Failure::Runtime(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Analyze { .. } => {
            let r = commands::analyze(&cfg)?;
            for e in &r.entries {
                println!("{:<28} {:<14} {:?}", e.label, format!("{:?}", e.role), e.verdict);
            }
            println!("membership: {:?}", r.verdict);
            for f in &r.flags {
                println!("flag: {f}");
            }
            Ok(())
        }
        Command::Counterexamples => {
            let recs = commands::counterexamples(&cfg)?;
            for r in &recs {
                println!("pair {} ({}, {}): match", r.pair, r.map, r.growth);
            }
            Ok(())
        }
        Command::Lemmas { suites, .. } => {
            let result = commands::lemmas(&cfg, suites);
            if let Ok(reports) = &result {
                for r in reports {
                    println!("{:<8} {:?} ({} cases)", r.suite.as_str(), r.status, r.cases.len());
                }
            }
            result.map(|_| ())
        }
        Command::Modulus { generator, rho_dump, .. } => {
            let o = commands::modulus(&cfg, generator, *rho_dump)?;
            let e = &o.estimate;
            println!("modulus {} in [{}, {}], reference {:?}", o.generator, e.lower_bound, e.value, e.exact_reference);
            if let Some(q) = &o.quasi_invariance {
                println!("quasi-invariance under {}: ratio {} in [{}, {}]: {:?}", q.map, q.ratio, q.lower, q.upper, q.status);
            }
            Ok(())
        }
        Command::Carleson { measure, embed, .. } => {
            let o = commands::carleson(&cfg, measure, *embed)?;
            println!("carleson norm of {}: {} (stable: {})", o.spec, o.estimate.norm_estimate, o.estimate.stable);
            if let Some(e) = &o.embedding {
                println!("embedding: C2 = {}, C1 = {:?}", e.c2, e.c1);
            }
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("horlicz: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
