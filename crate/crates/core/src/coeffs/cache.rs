use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CACHE_MAGIC: [u8; 4] = *b"LMCF";
pub const CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;
const CHECKSUM_LEN: usize = 32;

/// On-disk store of coefficient blocks: 32-byte header (magic, version,
/// object hash, first index, last index), little-endian `f64` payload,
/// trailing SHA-256 of header and payload.
#[derive(Debug, Clone)]
pub struct CoefficientCache {
    dir: PathBuf,
}

/// One cache file as reported by [`CoefficientCache::stat`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CacheEntry {
    pub path: PathBuf,
    pub object_hash: u64,
    pub start: u64,
    pub end: u64,
    pub checksum: String,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CacheLookup {
    Hit(Vec<f64>),
    Miss,
    /// A covering file existed but failed validation; it has been removed.
    Corrupt(String),
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl CoefficientCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CoefficientCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// First 8 bytes of SHA-256 of the object id, little endian.
    pub fn object_hash(id: &str) -> u64 {
        let d = Sha256::digest(id.as_bytes());
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }

    fn file_name(hash: u64, start: u64, end: u64) -> String {
        format!("{hash:016x}_{start}_{end}.lmcf")
    }

    fn parse_name(name: &str) -> Option<(u64, u64, u64)> {
        let stem = name.strip_suffix(".lmcf")?;
        let mut it = stem.split('_');
        let h = u64::from_str_radix(it.next()?, 16).ok()?;
        let s = it.next()?.parse().ok()?;
        let e = it.next()?.parse().ok()?;
        if it.next().is_some() {
            return None;
        }
        Some((h, s, e))
    }

    /// Writes `values[i]` as the coefficient of index `start + i`.
    pub fn store(&self, id: &str, start: u64, values: &[f64]) -> Result<PathBuf> {
        if values.is_empty() {
            return Err(Error::Cache("refusing to store an empty block".into()));
        }
        let hash = Self::object_hash(id);
        let end = start + values.len() as u64 - 1;
        let mut buf = Vec::with_capacity(HEADER_LEN + 8 * values.len() + CHECKSUM_LEN);
        buf.extend_from_slice(&CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&hash.to_le_bytes());
        buf.extend_from_slice(&start.to_le_bytes());
        buf.extend_from_slice(&end.to_le_bytes());
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let sum = Sha256::digest(&buf);
        buf.extend_from_slice(&sum);
        let path = self.dir.join(Self::file_name(hash, start, end));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&buf)?;
        tmp.persist(&path).map_err(|e| Error::Io(e.to_string()))?;
        Ok(path)
    }

    fn read_file(path: &Path) -> std::result::Result<(u64, u64, u64, Vec<f64>, String), String> {
        let bytes = fs::read(path).map_err(|e| e.to_string())?;
        if bytes.len() < HEADER_LEN + CHECKSUM_LEN || (bytes.len() - HEADER_LEN - CHECKSUM_LEN) % 8 != 0 {
            return Err("truncated file".into());
        }
        let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != sum {
            return Err("checksum mismatch".into());
        }
        if body[..4] != CACHE_MAGIC {
            return Err("bad magic".into());
        }
        let word = |i: usize| u64::from_le_bytes(body[i..i + 8].try_into().expect("8 bytes"));
        let version = u32::from_le_bytes(body[4..8].try_into().expect("4 bytes"));
        if version != CACHE_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let (hash, start, end) = (word(8), word(16), word(24));
        let values: Vec<f64> = body[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if end < start || values.len() as u64 != end - start + 1 {
            return Err("range does not match payload".into());
        }
        Ok((hash, start, end, values, hex(sum)))
    }

    /// Coefficients `start..=end` of `id` from any covering block.
    pub fn load(&self, id: &str, start: u64, end: u64) -> Result<CacheLookup> {
        let hash = Self::object_hash(id);
        let mut candidates = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            let name = entry.file_name();
            if let Some((h, s, e)) = Self::parse_name(&name.to_string_lossy()) {
                if h == hash && s <= start && e >= end {
                    candidates.push((e - s, entry.path()));
                }
            }
        }
        candidates.sort();
        let mut corrupt = None;
        for (_, path) in candidates {
            match Self::read_file(&path) {
                Ok((h, s, _, values, _)) if h == hash => {
                    let lo = (start - s) as usize;
                    let hi = (end - s) as usize;
                    return Ok(CacheLookup::Hit(values[lo..=hi].to_vec()));
                }
                Ok(_) => corrupt = Some(format!("{}: object hash mismatch", path.display())),
                Err(why) => corrupt = Some(format!("{}: {why}", path.display())),
            }
            let _ = fs::remove_file(&path);
        }
        if let Some(why) = corrupt {
            return Ok(CacheLookup::Corrupt(why));
        }
        self.load_merged(hash, start, end)
    }

    /// Assembles `start..=end` from several blocks of one object, e.g. ranges
    /// built by separate processes.
    fn load_merged(&self, hash: u64, start: u64, end: u64) -> Result<CacheLookup> {
        let mut blocks: Vec<(u64, u64, PathBuf)> = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            if let Some((h, s, e)) = Self::parse_name(&entry.file_name().to_string_lossy()) {
                if h == hash && e >= start && s <= end {
                    blocks.push((s, e, entry.path()));
                }
            }
        }
        blocks.sort();
        let mut out = Vec::with_capacity((end - start + 1) as usize);
        let mut next = start;
        while next <= end {
            // The block reaching furthest among those that contain `next`.
            let Some((s, e, path)) = blocks.iter().filter(|b| b.0 <= next && b.1 >= next).max_by_key(|b| b.1) else {
                return Ok(CacheLookup::Miss);
            };
            match Self::read_file(path) {
                Ok((h, _, _, values, _)) if h == hash => {
                    let hi = (*e).min(end);
                    out.extend_from_slice(&values[(next - s) as usize..=(hi - s) as usize]);
                    next = hi + 1;
                }
                _ => return Ok(CacheLookup::Miss),
            }
        }
        Ok(CacheLookup::Hit(out))
    }

    /// Union of the stored index ranges of each object, by object hash.
    pub fn coverage(&self) -> Result<Vec<(u64, Vec<(u64, u64)>)>> {
        let mut by_object: std::collections::BTreeMap<u64, Vec<(u64, u64)>> = Default::default();
        for e in self.stat()?.into_iter().filter(|e| e.valid) {
            by_object.entry(e.object_hash).or_default().push((e.start, e.end));
        }
        Ok(by_object
            .into_iter()
            .map(|(h, mut r)| {
                r.sort();
                let mut merged: Vec<(u64, u64)> = Vec::new();
                for (s, e) in r {
                    match merged.last_mut() {
                        Some(last) if s <= last.1.saturating_add(1) => last.1 = last.1.max(e),
                        _ => merged.push((s, e)),
                    }
                }
                (h, merged)
            })
            .collect())
    }

    /// All cache files, sorted by name.
    pub fn stat(&self) -> Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().map(|n| n.to_string_lossy().into_owned()) else {
                continue;
            };
            let Some((h, s, e)) = Self::parse_name(&name) else { continue };
            let (checksum, valid) = match Self::read_file(&path) {
                Ok((hh, ss, ee, _, sum)) => (sum, hh == h && ss == s && ee == e),
                Err(_) => (String::new(), false),
            };
            out.push(CacheEntry { path, object_hash: h, start: s, end: e, checksum, valid });
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }

    /// Removes every cache file; returns how many were removed.
    pub fn purge(&self) -> Result<usize> {
        let mut n = 0;
        for e in self.stat()? {
            fs::remove_file(&e.path)?;
            n += 1;
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacent_blocks_merge() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CoefficientCache::new(dir.path()).unwrap();
        let vals: Vec<f64> = (0..=300).map(|n| n as f64).collect();
        cache.store("obj", 0, &vals[..=100]).unwrap();
        cache.store("obj", 101, &vals[101..]).unwrap();
        assert_eq!(cache.load("obj", 50, 250).unwrap(), CacheLookup::Hit(vals[50..=250].to_vec()));
        assert_eq!(cache.load("obj", 50, 301).unwrap(), CacheLookup::Miss);
        let cov = cache.coverage().unwrap();
        assert_eq!(cov, vec![(CoefficientCache::object_hash("obj"), vec![(0, 300)])]);
    }

    #[test]
    fn round_trip_and_sub_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CoefficientCache::new(dir.path()).unwrap();
        let vals: Vec<f64> = (1..=1000).map(|n| (n as f64).sqrt().sin()).collect();
        let path = cache.store("obj", 1, &vals).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 32 + 8 * 1000 + 32);
        assert_eq!(&bytes[..4], b"LMCF");
        match cache.load("obj", 1, 1000).unwrap() {
            CacheLookup::Hit(v) => assert!(v.iter().zip(&vals).all(|(a, b)| a.to_bits() == b.to_bits())),
            other => panic!("{other:?}"),
        }
        match cache.load("obj", 10, 20).unwrap() {
            CacheLookup::Hit(v) => assert_eq!(v, vals[9..20].to_vec()),
            other => panic!("{other:?}"),
        }
        assert_eq!(cache.load("other", 1, 10).unwrap(), CacheLookup::Miss);
        assert_eq!(cache.load("obj", 1, 1001).unwrap(), CacheLookup::Miss);
    }

    #[test]
    fn corruption_is_detected_and_removed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CoefficientCache::new(dir.path()).unwrap();
        let path = cache.store("obj", 1, &[1.0, 2.0, 3.0]).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[40] ^= 1;
        fs::write(&path, bytes).unwrap();
        assert!(!cache.stat().unwrap()[0].valid);
        assert!(matches!(cache.load("obj", 1, 3).unwrap(), CacheLookup::Corrupt(_)));
        assert!(!path.exists());
        assert_eq!(cache.load("obj", 1, 3).unwrap(), CacheLookup::Miss);
    }

    #[test]
    fn stat_and_purge() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CoefficientCache::new(dir.path()).unwrap();
        cache.store("a", 1, &[1.0; 10]).unwrap();
        cache.store("a", 11, &[2.0; 10]).unwrap();
        let st = cache.stat().unwrap();
        assert_eq!(st.len(), 2);
        assert!(st.iter().all(|e| e.valid && e.checksum.len() == 64));
        assert_eq!(cache.purge().unwrap(), 2);
        assert!(cache.stat().unwrap().is_empty());
    }
}
