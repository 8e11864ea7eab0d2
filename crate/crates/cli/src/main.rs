//! `smf`: run a configured simulation, div-curl certification or sweep.
//!
//! Exit codes: 0 every gate passed, 1 a gate failed, 2 configuration
//! error, 3 solver abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use smf_core::{run, RunConfig, RunSummary, Scenario, SmfError};

#[derive(Parser, Debug)]
#[command(name = "smf", version, about = "Schrödinger map flow simulator and div-curl verifier")]
struct Cli {
    /// Configuration file (`key = value` lines, `#` comments).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `scenario` key: simulate, certify_divcurl or sweep.
    #[arg(long)]
    scenario: Option<String>,
    /// Overrides the `output_dir` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data and random div-curl systems.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(cli: &Cli) -> smf_core::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&cli.config)?;
    if let Some(s) = &cli.scenario {
        cfg.scenario = Scenario::from_key(s)?;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(s: &RunSummary) {
    let c = &s.config;
    println!("scenario {:?}, output {}", c.scenario, c.output_dir.display());
    if let Some(f) = &s.flow {
        println!(
            "flow: {} samples to t = {}, m drift {:.3e}, Q drift {:.3e}, ∫b drift {:.3e}, sup E/(E0+1) {:.6}",
            f.samples, f.terminal.time, f.drift.m, f.drift.q, f.drift.b_integral, f.energy_ratio
        );
        if let Some(e) = f.exact_error {
            println!("flow: L∞ error against the exact spin wave {e:.3e}");
        }
    }
    if let Some(d) = &s.divcurl {
        let ratio = d.empirical_ratio.map_or("n/a".to_string(), |r| format!("{r:.4}"));
        println!("divcurl: lhs {:.9e}, product {:.9e}, mean {:.3e}, ratio {ratio}, route gap {:.2e}", d.lhs, d.rhs_product_term, d.rhs_mean_term, d.route_gap);
        if let Some(why) = &d.invalid_reason {
            println!("divcurl: invalid input: {why}");
        }
    }
    if let Some(t) = &s.sweep {
        print!("{}", t.to_csv());
    }
    for g in &s.gates {
        println!("gate {:<22} {:<4} value {:.3e} (limit {:.1e})", g.name, if g.passed { "PASS" } else { "FAIL" }, g.value, g.tolerance);
    }
    let verdict = match s.exit_code() {
        0 => "passed",
        1 => "gate failure",
        _ => "solver abort",
    };
    println!("{verdict} in {:.2} s", s.wall_time);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(s) => {
            report(&s);
            ExitCode::from(s.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("smf: {e}");
            let code = match e {
                SmfError::NonConvergence { .. } | SmfError::NonFinite(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
