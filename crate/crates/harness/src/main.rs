use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gtphd::filter::FilterVariant;
use gtphd::scenario::ScenarioConfig;
use gtphd::sim::{read_records, write_records};
use gtphd_harness::config::{load_config, to_toml};
use gtphd_harness::experiment::{run_experiment, simulate_run, RunManifest};
use gtphd_harness::{HarnessError, Result};

/// Trajectory PHD filters for coexisting point and extended targets.
#[derive(Parser)]
#[command(name = "gtphd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo comparison of filter variants.
    Run {
        /// Scenario file (TOML); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// g-tphd, g-phd, p-tphd, e-tphd or all.
        #[arg(long, default_value = "all")]
        variant: String,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Master seed; defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// L-scan window (G-PHD always uses 1).
        #[arg(long)]
        lscan: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Write per-step partition and cell weights as JSON lines.
        #[arg(long)]
        emit_diagnostics: bool,
        /// Measurement record to filter instead of simulated scans.
        #[arg(long)]
        measurements: Option<PathBuf>,
    },
    /// Writes one simulated measurement record.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte-Carlo run index (1-based).
        #[arg(long, default_value_t = 1)]
        run: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prints the default scenario as TOML.
    DefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn scenario(path: &Option<PathBuf>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn variants(s: &str) -> Result<Vec<FilterVariant>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(FilterVariant::ALL.to_vec());
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<FilterVariant>()
                .map_err(|e| HarnessError::Config(e.to_string()))
        })
        .collect()
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            variant,
            runs,
            seed,
            lscan,
            out,
            threads,
            emit_diagnostics,
            measurements,
        } => {
            let cfg = scenario(&config)?;
            let scans = match &measurements {
                Some(p) => {
                    let f = File::open(p).map_err(|e| HarnessError::io(p, e))?;
                    Some(
                        read_records(BufReader::new(f), cfg.measurement_dim())
                            .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
                    )
                }
                None => None,
            };
            let mut cfg = cfg;
            if let Some(s) = &scans {
                cfg.duration = s.len();
            }
            let manifest = RunManifest {
                config_path: config,
                variants: variants(&variant)?,
                lscan,
                runs,
                seed: seed.unwrap_or(cfg.seed),
                out_dir: Some(out.clone()),
                threads,
                emit_diagnostics,
            };
            let summary = run_experiment(&cfg, &manifest, scans.as_ref())?;
            print!("{}", summary.table());
            println!(
                "{} runs in {:.1} s; results in {}",
                runs,
                summary.wall_clock.as_secs_f64(),
                out.display()
            );
            Ok(())
        }
        Command::Simulate {
            config,
            seed,
            run,
            out,
        } => {
            let cfg = scenario(&config)?;
            if run == 0 {
                return Err(HarnessError::Config("--run is 1-based".into()));
            }
            let (_, scans) = simulate_run(&cfg, seed.unwrap_or(cfg.seed), run - 1)?;
            let f = File::create(&out).map_err(|e| HarnessError::io(&out, e))?;
            write_records(&scans, BufWriter::new(f)).map_err(|e| HarnessError::io(&out, e))
        }
        Command::DefaultConfig { out } => {
            let text = to_toml(&ScenarioConfig::default());
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| HarnessError::io(&p, e)),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
