//! On-disk cache of truncated heat-trace values keyed by operator hash and
//! cutoff. Entries store `f64` bit patterns, so a hit reproduces a miss
//! exactly; writes go to a temporary file that is renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use residue_index_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;

pub const CACHE_ENV: &str = "RESIDUE_INDEX_CACHE";
pub const DEFAULT_CACHE_DIR: &str = ".residue-index-cache";

#[derive(Serialize, Deserialize)]
struct Entry {
    operator: String,
    n: usize,
    re: Vec<u64>,
    im: Vec<u64>,
}

#[derive(Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl Cache {
    /// `--cache` wins over the environment variable, which wins over the default.
    pub fn resolve(flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(DEFAULT_CACHE_DIR),
        }
    }

    pub fn new(dir: PathBuf) -> Self {
        Cache { dir: Some(dir), hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn disabled() -> Self {
        Cache { dir: None, hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn operator_hash(description: &str) -> String {
        hex(&Sha256::digest(description.as_bytes()))
    }

    fn path(&self, operator: &str, n: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{operator}-{n}.json")))
    }

    fn read(&self, operator: &str, n: usize) -> Option<Vec<C64>> {
        let text = fs::read_to_string(self.path(operator, n)?).ok()?;
        let e: Entry = serde_json::from_str(&text).ok()?;
        if e.operator != operator || e.n != n || e.re.len() != e.im.len() {
            return None;
        }
        Some(e.re.iter().zip(&e.im).map(|(&r, &i)| C64::new(f64::from_bits(r), f64::from_bits(i))).collect())
    }

    fn write(&self, operator: &str, n: usize, values: &[C64]) -> std::io::Result<()> {
        let Some(path) = self.path(operator, n) else { return Ok(()) };
        let dir = path.parent().expect("cache entries live in a directory");
        fs::create_dir_all(dir)?;
        let entry = Entry {
            operator: operator.into(),
            n,
            re: values.iter().map(|z| z.re.to_bits()).collect(),
            im: values.iter().map(|z| z.im.to_bits()).collect(),
        };
        let tmp = dir.join(format!(".{operator}-{n}.{}.{:?}.tmp", std::process::id(), std::thread::current().id()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string(&entry).expect("entry serializes").as_bytes())?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, &path)
    }

    /// Cached values for `(operator, n)`, computing and storing them on a miss.
    /// Write failures leave the result intact and the cache cold.
    pub fn get_or_compute<E>(&self, operator: &str, n: usize, compute: impl FnOnce() -> Result<Vec<C64>, E>) -> Result<Vec<C64>, E> {
        if let Some(v) = self.read(operator, n) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = compute()?;
        let _ = self.write(operator, n, &v);
        Ok(v)
    }
}
