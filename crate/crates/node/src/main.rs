use std::path::PathBuf;

use anyhow::Context;
use cadchain_core::{Genesis, Keypair};
use cadchain_node::{Node, NodeConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "node", about = "Run a consortium chain node")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `listen_endpoint`.
    #[arg(long)]
    listen: Option<String>,
    /// Comma-separated peer list; overrides `peers`.
    #[arg(long, value_delimiter = ',')]
    peers: Option<Vec<String>>,
    #[arg(long)]
    mine: Option<bool>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print a fresh Ed25519 keypair as JSON.
    Keygen,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    if let Some(Command::Keygen) = cli.command {
        println!("{}", serde_json::to_string_pretty(&Keypair::generate().export())?);
        return Ok(());
    }

    let path = cli.config.context("--config is required")?;
    let mut config = NodeConfig::load(&path)?;
    if let Some(l) = cli.listen {
        config.listen_endpoint = l;
    }
    if let Some(p) = cli.peers {
        config.peers = p;
    }
    if let Some(m) = cli.mine {
        config.miner_enabled = m;
    }
    if let Some(d) = cli.data_dir {
        config.data_dir = d;
    }
    config.validate()?;

    let genesis_path = if config.genesis_path.is_relative() {
        path.parent().unwrap_or(std::path::Path::new(".")).join(&config.genesis_path)
    } else {
        config.genesis_path.clone()
    };
    let text = std::fs::read_to_string(&genesis_path)
        .with_context(|| format!("reading genesis {}", genesis_path.display()))?;
    let genesis = Genesis::from_json(&text)?;

    let node = Node::start(config, genesis).await?;
    tokio::signal::ctrl_c().await?;
    node.shutdown().await;
    Ok(())
}
