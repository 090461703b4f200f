use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curl_dg::analysis::eoc;
use curl_dg::config::{run, verify, LevelResult, RunConfig, RunMode};

#[derive(Parser)]
#[command(name = "curl-dg", version, about = "DG solver for magnetic advection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured experiment and write tables and field dumps.
    Run(Common),
    /// Identity batteries, assumption audit and inf-sup diagnostic.
    Verify(Common),
    /// Convergence sweep against the exact solution.
    Eoc(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn print_rates(results: &[LevelResult]) {
    let mut eps_values: Vec<f64> = results.iter().map(|r| r.eps).collect();
    eps_values.dedup();
    for eps in eps_values {
        let errs: Vec<_> = results.iter().filter(|r| r.eps == eps).filter_map(|r| r.errors.as_ref()).collect();
        if errs.len() < 2 {
            continue;
        }
        let energy: Vec<f64> = errs.iter().map(|e| e.energy).collect();
        let l2: Vec<f64> = errs.iter().map(|e| e.l2).collect();
        if let (Ok(re), Ok(rl)) = (eoc(&energy), eoc(&l2)) {
            println!("eps={eps:e} eoc_energy={re:.3?} eoc_l2={rl:.3?}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, name) = match &cli.command {
        Command::Run(c) => (c, "run"),
        Command::Verify(c) => (c, "verify"),
        Command::Eoc(c) => (c, "eoc"),
    };
    let mut cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    println!("{name}: problem={} k={} seed={} out={}", cfg.name(), cfg.k, cfg.seed, common.out.display());
    let outcome = match cli.command {
        Command::Run(_) | Command::Eoc(_) => {
            let mode = if name == "run" { RunMode::Run } else { RunMode::Eoc };
            run(&cfg, &common.out, mode).map(|results| {
                for r in &results {
                    println!("{}", r.summary());
                }
                print_rates(&results);
                true
            })
        }
        Command::Verify(_) => verify(&cfg, &common.out).map(|s| {
            for c in &s.identities {
                println!("identity {:<28} {} max_residual={:.2e}", c.name, if c.passed() { "pass" } else { "FAIL" }, c.max_residual);
            }
            for c in &s.audit.checks {
                println!("assumption {:<18} {}", c.name, if c.pass { "pass" } else { "flag" });
            }
            for (eps, r) in &s.inf_sup {
                println!("inf-sup eps={eps:e} h={:.4} min_ratio={:.4e} max_bound={:.4e}", r.h, r.min_ratio, r.max_bound);
            }
            if let Some(note) = &s.weight_note {
                println!("inf-sup unavailable: {note}");
            }
            println!("report: {}", s.report_path.display());
            s.passed()
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
