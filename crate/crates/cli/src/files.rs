use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eee_core::{ConsistentModel, ConvexFamily, GameSpec, Strategy, TableFile};
use serde::Serialize;
use tempfile::NamedTempFile;

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// The game as written in the file.
pub fn load_spec(path: &Path) -> Result<GameSpec> {
    let text = read(path)?;
    GameSpec::from_json_str(&text).with_context(|| format!("loading {}", path.display()))
}

/// The game at coupling `alpha`, or the file as-is without `alpha`.
pub fn load_game(path: &Path, alpha: Option<f64>) -> Result<GameSpec> {
    let spec = load_spec(path)?;
    match alpha {
        None => Ok(spec),
        Some(a) => {
            let family = ConvexFamily::new(spec).context("--alpha needs a game with uncoupled reference kernels")?;
            Ok(family.interpolate(a)?)
        }
    }
}

pub fn load_strategy(path: &Path, spec: &GameSpec) -> Result<Strategy> {
    let file = TableFile::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Strategy::from_rows(spec, &file.agents).with_context(|| format!("strategy in {}", path.display()))
}

pub fn load_model(path: &Path, spec: &GameSpec) -> Result<ConsistentModel> {
    let file = TableFile::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    ConsistentModel::from_rows(spec, &file.agents).with_context(|| format!("model in {}", path.display()))
}

/// `--out` if given, else `./out/<command>-<timestamp>`.
pub fn output_dir(explicit: Option<&Path>, command: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S%.3f");
            PathBuf::from("out").join(format!("{command}-{stamp}"))
        }
    }
}
