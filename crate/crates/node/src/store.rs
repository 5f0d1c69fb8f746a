//! Append-only block file: one canonical JSON block per line, plus a copy of
//! the genesis document.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use cadchain_core::encoding::{canonical_encode, strict_decode};
use cadchain_core::{Block, Genesis};

pub const BLOCKS_FILE: &str = "blocks.jsonl";
pub const GENESIS_FILE: &str = "genesis.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("block store line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("data dir belongs to a different genesis")]
    GenesisMismatch,
}

pub struct BlockStore {
    path: PathBuf,
    file: File,
}

impl BlockStore {
    /// Opens (creating if needed) the store under `data_dir` and returns the
    /// blocks already on disk, in file order.
    pub fn open(data_dir: &Path, genesis: &Genesis) -> Result<(Self, Vec<Block>), StoreError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        std::fs::create_dir_all(data_dir).map_err(io(data_dir))?;

        let genesis_path = data_dir.join(GENESIS_FILE);
        let genesis_bytes = canonical_encode(genesis);
        if genesis_path.exists() {
            let on_disk = std::fs::read_to_string(&genesis_path).map_err(io(&genesis_path))?;
            let parsed = Genesis::from_json(&on_disk).map_err(|_| StoreError::GenesisMismatch)?;
            if parsed != *genesis {
                return Err(StoreError::GenesisMismatch);
            }
        } else {
            std::fs::write(&genesis_path, &genesis_bytes).map_err(io(&genesis_path))?;
        }

        let path = data_dir.join(BLOCKS_FILE);
        let blocks = if path.exists() { read_blocks(&path)? } else { Vec::new() };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io(&path))?;
        Ok((BlockStore { path, file }, blocks))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, block: &Block) -> Result<(), StoreError> {
        let mut line = canonical_encode(block);
        line.push(b'\n');
        self.file.write_all(&line).map_err(|source| StoreError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

/// Strictly decodes every line; a line that is not the exact canonical
/// encoding of a block is corruption.
pub fn read_blocks(path: &Path) -> Result<Vec<Block>, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).split(b'\n').enumerate() {
        let line = line.map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let block: Block = strict_decode(&line).map_err(|e| StoreError::Corrupt {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(block);
    }
    Ok(out)
}
