//! Small shared helpers: content fingerprints, derived seeds, and the
//! parallel/sequential map used by the data-parallel stages.

use sha2::{Digest, Sha256};

/// Hex SHA-256 of a byte string. Used for content fingerprints on configs,
/// split descriptors, train histories, and learning objects.
pub fn fingerprint(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex(&h.finalize())
}

/// Short (12 hex char) form of [`fingerprint`], for report columns.
pub fn short_fingerprint(bytes: &[u8]) -> String {
    let mut f = fingerprint(bytes);
    f.truncate(12);
    f
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Derive an independent sub-seed from a base seed and a purpose tag.
///
/// Every randomized stage draws from its own stream so that adding or
/// reordering stages never perturbs the others.
pub fn subseed(seed: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest >= 8 bytes"))
}

/// Indexed map helper: parallel under the `parallel` feature, sequential
/// otherwise. Output order always matches input order, so results are
/// independent of worker count.
#[cfg(feature = "parallel")]
pub fn indexed_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items
        .par_iter()
        .enumerate()
        .map(|(i, t)| f(i, t))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn indexed_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Sequential twin of [`indexed_map`], always available; benches compare the
/// two directly.
pub fn indexed_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}
