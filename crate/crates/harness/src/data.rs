use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use slp_core::graph::{load_snap_edgelist, Graph, LoadStats};

/// Environment variable naming the dataset directory.
pub const DATA_ENV: &str = "SLP_DATA_DIR";
pub const EMAIL_EU_CORE: &str = "email-Eu-core.txt";

/// `$SLP_DATA_DIR`, or `./data` when unset.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Resolves a bare file name against [`data_dir`] when it does not exist as given.
pub fn resolve(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    let alt = data_dir().join(path);
    if alt.exists() {
        alt
    } else {
        path.to_path_buf()
    }
}

/// Loads a SNAP edge list or a binary graph cache (detected by magic bytes).
/// Load statistics are only available for edge lists.
pub fn load_graph(path: &Path, prefix: Option<usize>) -> Result<(Graph, Option<LoadStats>)> {
    let path = resolve(path);
    let mut f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let mut magic = [0u8; 4];
    let is_cache = f.read_exact(&mut magic).is_ok() && &magic == b"SLPG";
    let f = File::open(&path)?;
    if is_cache {
        let g = Graph::read_cache(BufReader::new(f))
            .with_context(|| format!("reading cache {}", path.display()))?;
        return Ok((prefix.map_or_else(|| g.clone(), |k| g.prefix(k)), None));
    }
    let (g, stats) = load_snap_edgelist(BufReader::new(f), prefix)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok((g, Some(stats)))
}
