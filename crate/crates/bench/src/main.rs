use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use cadchain_bench::calibrate::parse_target;
use cadchain_bench::{calibrate_difficulty, run_benchmark, write_csv, BenchConfig, DEFAULT_TARGET_S};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench", about = "Per-block latency benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick the difficulty whose expected solve time fits a target range.
    Calibrate {
        /// Seconds per block, as LOW..HIGH.
        #[arg(long, default_value = "1.1..2.8")]
        target: String,
        #[arg(long, default_value_t = 1000)]
        probe_ms: u64,
    },
    /// Run the workload and write per-block timings.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `difficulty_bits` from the config.
        #[arg(long)]
        difficulty: Option<u32>,
        /// Keep node data here instead of a temporary directory.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Calibrate { target, probe_ms } => {
            let (low, high) = parse_target(&target).map_err(anyhow::Error::msg)?;
            let c = tokio::task::spawn_blocking(move || calibrate_difficulty(low, high, Duration::from_millis(probe_ms)))
                .await??;
            eprintln!(
                "hash rate {:.0} H/s; difficulty {} bits; expected {:.3} s per block{}",
                c.hash_rate,
                c.difficulty_bits,
                c.expected_s,
                if c.in_range() { "" } else { " (nearest power of two, outside the target)" }
            );
            println!("{}", serde_json::to_string_pretty(&c)?);
        }
        Command::Run {
            config,
            out,
            difficulty,
            data_dir,
        } => {
            let cfg = match config {
                Some(p) => BenchConfig::load(&p)?,
                None => BenchConfig::default(),
            };
            let bits = match difficulty.or(cfg.difficulty_bits) {
                Some(b) => b,
                None => {
                    let (low, high) = DEFAULT_TARGET_S;
                    let c = tokio::task::spawn_blocking(move || calibrate_difficulty(low, high, Duration::from_secs(1)))
                        .await??;
                    eprintln!("calibrated: {} bits, expected {:.3} s per block", c.difficulty_bits, c.expected_s);
                    c.difficulty_bits
                }
            };
            let tmp;
            let base = match data_dir {
                Some(d) => d,
                None => {
                    tmp = tempfile::tempdir()?;
                    tmp.path().to_path_buf()
                }
            };
            let report = run_benchmark(&cfg, bits, &base).await?;
            let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(file, &report.records)?;
            let summary_path = out.with_extension("summary.json");
            std::fs::write(&summary_path, serde_json::to_string_pretty(&report.summary)?)?;
            println!("{}", serde_json::to_string_pretty(&report.summary)?);
            eprintln!(
                "wall time {:.1} s; audit {:?}; csv {}; summary {}",
                report.wall_time.as_secs_f64(),
                report.audit,
                out.display(),
                summary_path.display()
            );
            if !report.completed {
                anyhow::bail!("timed out after {} s; partial results written", cfg.timeout_s);
            }
            if !report.audit.passed() {
                anyhow::bail!("post-run audit failed: {:?}", report.audit);
            }
        }
    }
    Ok(())
}
