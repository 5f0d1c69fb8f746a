use std::path::PathBuf;

use anyhow::Context;
use cadchain_core::{Address, Genesis};
use cadchain_gateway::keys::KeyDirectory;
use cadchain_gateway::records::RecordStore;
use cadchain_gateway::{router, App};
use cadchain_node::{Node, NodeConfig};
use clap::Parser;

#[derive(Parser)]
#[command(name = "gateway", about = "HTTP gateway in front of a chain node")]
struct Cli {
    /// Peer endpoint (host:port) of the node to follow.
    #[arg(long)]
    node: String,
    /// Directory of patient record JSON files.
    #[arg(long)]
    records: PathBuf,
    /// JSON list of {address, public_key}.
    #[arg(long)]
    keys: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Genesis document of the network being followed.
    #[arg(long)]
    genesis: PathBuf,
    /// Where the embedded follower keeps its block store.
    #[arg(long, default_value = "gateway-data")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    confirmations: u64,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    let text = std::fs::read_to_string(&cli.genesis).with_context(|| format!("reading {}", cli.genesis.display()))?;
    let genesis = Genesis::from_json(&text)?;
    let records = RecordStore::open(&cli.records)?;
    let record_count = records.len();
    let keys = KeyDirectory::load(&cli.keys)?;

    let config = NodeConfig {
        node_name: "gateway".into(),
        listen_endpoint: "127.0.0.1:0".into(),
        peers: vec![cli.node.clone()],
        genesis_path: cli.genesis.clone(),
        miner_enabled: false,
        miner_address: Address([0; 20]),
        max_block_txs: genesis.max_block_txs,
        confirmations: cli.confirmations,
        data_dir: cli.data_dir.clone(),
    };
    config.validate()?;
    let node = Node::start(config, genesis).await?;
    let app = App::new(node.clone(), records, keys);

    let listener = tokio::net::TcpListener::bind(&cli.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, records = record_count, "gateway listening");
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    node.shutdown().await;
    Ok(())
}
