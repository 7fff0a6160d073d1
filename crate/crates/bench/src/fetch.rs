//! Dataset download and checksum verification.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{DatasetEntry, ExperimentConfig};
use crate::error::{io_error, BenchError, Result};

const MAX_DOWNLOAD: u64 = 512 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchAction {
    /// File was already on disk with the expected digest.
    AlreadyPresent,
    Downloaded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchReport {
    pub name: String,
    pub path: PathBuf,
    pub sha256: String,
    pub action: FetchAction,
    /// No digest was configured, so nothing was checked.
    pub unpinned: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let read = file.read(&mut buf).map_err(|e| io_error(path, e))?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Where a file with a bad digest is moved.
pub fn quarantine_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".quarantined");
    path.with_file_name(name)
}

fn quarantine(path: &Path) -> Result<PathBuf> {
    let target = quarantine_path(path);
    fs::rename(path, &target).map_err(|e| io_error(path, e))?;
    Ok(target)
}

fn mismatch(entry: &DatasetEntry, expected: &str, actual: &str, moved: &Path) -> BenchError {
    BenchError::Data(format!(
        "{}: checksum mismatch (expected {expected}, got {actual}); file moved to {}",
        entry.name,
        moved.display()
    ))
}

/// Checks a file already on disk against its configured digest. A mismatch
/// quarantines the file.
pub fn verify_dataset(cfg: &ExperimentConfig, entry: &DatasetEntry) -> Result<String> {
    let path = cfg.dataset_path(entry);
    if !path.exists() {
        return Err(BenchError::Data(format!(
            "{}: {} is missing (run `fetch` first)",
            entry.name,
            path.display()
        )));
    }
    let actual = sha256_file(&path)?;
    match &entry.sha256 {
        Some(expected) if *expected != actual => {
            let moved = quarantine(&path)?;
            Err(mismatch(entry, expected, &actual, &moved))
        }
        _ => Ok(actual),
    }
}

fn download(url: &str) -> Result<Vec<u8>> {
    let mut response =
        ureq::get(url).call().map_err(|e| BenchError::Runtime(format!("GET {url}: {e}")))?;
    response
        .body_mut()
        .with_config()
        .limit(MAX_DOWNLOAD)
        .read_to_vec()
        .map_err(|e| BenchError::Runtime(format!("GET {url}: {e}")))
}

/// Makes one dataset available locally. Present files with the right digest
/// are kept; absent ones are downloaded and verified before being moved
/// into place.
pub fn fetch_dataset(cfg: &ExperimentConfig, entry: &DatasetEntry) -> Result<FetchReport> {
    let path = cfg.dataset_path(entry);
    let report = |sha256: String, action| FetchReport {
        name: entry.name.clone(),
        path: path.clone(),
        sha256,
        action,
        unpinned: entry.sha256.is_none(),
    };
    if path.exists() {
        let sha = verify_dataset(cfg, entry)?;
        return Ok(report(sha, FetchAction::AlreadyPresent));
    }
    let Some(url) = &entry.url else {
        return Err(BenchError::Data(format!(
            "{}: {} is missing and no url is configured",
            entry.name,
            path.display()
        )));
    };
    let bytes = download(url)?;
    let actual = sha256_hex(&bytes);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    if let Some(expected) = &entry.sha256 {
        if *expected != actual {
            let moved = quarantine_path(&path);
            fs::write(&moved, &bytes).map_err(|e| io_error(&moved, e))?;
            return Err(mismatch(entry, expected, &actual, &moved));
        }
    }
    let mut partial = path.clone().into_os_string();
    partial.push(".part");
    let partial = PathBuf::from(partial);
    fs::write(&partial, &bytes).map_err(|e| io_error(&partial, e))?;
    fs::rename(&partial, &path).map_err(|e| io_error(&path, e))?;
    Ok(report(actual, FetchAction::Downloaded))
}

/// Fetches every configured dataset, stopping at the first failure.
pub fn fetch_datasets(cfg: &ExperimentConfig) -> Result<Vec<FetchReport>> {
    cfg.datasets.iter().map(|d| fetch_dataset(cfg, d)).collect()
}
