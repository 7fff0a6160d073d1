//! Per-task seeds derived from a hash of the task key.

use sha2::{Digest, Sha256};

/// Seed for one task: the first eight bytes (little endian) of the SHA-256
/// of `master|dataset|fold|k|kn|role`. Absent grid values hash as `-`.
pub fn derive_seed(
    master: u64,
    dataset: &str,
    fold: Option<usize>,
    cell: Option<(usize, usize)>,
    role: &str,
) -> u64 {
    let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    let key = format!(
        "{master}|{dataset}|{}|{}|{}|{role}",
        opt(fold),
        opt(cell.map(|c| c.0)),
        opt(cell.map(|c| c.1)),
    );
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}
