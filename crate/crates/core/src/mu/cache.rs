//! Content-addressed on-disk cache of group statistics.
//!
//! File layout (little endian): magic `FPRMU`, format version `u16`, record
//! kind `u8`, payload, then the SHA-256 of everything before it. Floats are
//! stored as raw bits so a round trip is exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{GroupMoments, GroupStatistics, Method, MonteCarloConfig, MuFamily, Provenance, UserSplit};
use crate::error::{Error, Result};
use crate::geometry::CellGrid;
use crate::propagation::PropagationModel;

const MAGIC: &[u8; 5] = b"FPRMU";
const VERSION: u16 = 1;
const KIND_SINGLE: u8 = 1;
const KIND_FAMILY: u8 = 2;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn hash_key(tag: &str, parts: &[u64], grid_hash: &str) -> CacheKey {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(grid_hash.as_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let digest = h.finalize();
    CacheKey(digest[..16].iter().map(|b| format!("{b:02x}")).collect())
}

/// Key of a single split; every field is hashed by its exact bits.
pub fn cache_key(
    grid: &CellGrid,
    model: &PropagationModel,
    split: UserSplit,
    config: &MonteCarloConfig,
) -> CacheKey {
    hash_key(
        "single",
        &[
            model.kappa().to_bits(),
            split.users() as u64,
            split.interior() as u64,
            config.min_dist_fraction.to_bits(),
            config.n_samples,
            config.seed,
        ],
        &grid.layout_hash(),
    )
}

pub fn family_cache_key(
    grid: &CellGrid,
    model: &PropagationModel,
    k_min: usize,
    k_max: usize,
    config: &MonteCarloConfig,
) -> CacheKey {
    hash_key(
        "family",
        &[
            model.kappa().to_bits(),
            k_min as u64,
            k_max as u64,
            config.min_dist_fraction.to_bits(),
            config.n_samples,
            config.seed,
        ],
        &grid.layout_hash(),
    )
}

/// Directory of cache records.
#[derive(Debug, Clone)]
pub struct MuCache {
    dir: PathBuf,
}

impl MuCache {
    pub const ENV_VAR: &'static str = "FPR_SIM_CACHE_DIR";

    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$FPR_SIM_CACHE_DIR`, else `fallback`.
    pub fn from_env_or(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(Self::ENV_VAR) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.mu", key.as_str()))
    }

    pub fn store(&self, key: &CacheKey, stats: &GroupStatistics) -> Result<()> {
        let mut w = Writer::new(KIND_SINGLE);
        w.stats(stats);
        self.write(key, w.finish())
    }

    /// `Ok(None)` when absent; corrupt records surface as errors.
    pub fn load(&self, key: &CacheKey) -> Result<Option<GroupStatistics>> {
        let path = self.path_for(key);
        let Some(bytes) = read_if_exists(&path)? else { return Ok(None) };
        let mut r = Reader::open(&path, &bytes, KIND_SINGLE)?;
        let stats = r.stats()?;
        r.done()?;
        Ok(Some(stats))
    }

    pub fn store_family(&self, key: &CacheKey, family: &MuFamily) -> Result<()> {
        let mut w = Writer::new(KIND_FAMILY);
        w.u64(family.k_max() as u64);
        w.provenance(family.provenance());
        let all: Vec<_> = family.iter().collect();
        w.u64(all.len() as u64);
        for s in all {
            w.stats(s);
        }
        self.write(key, w.finish())
    }

    pub fn load_family(&self, key: &CacheKey) -> Result<Option<MuFamily>> {
        let path = self.path_for(key);
        let Some(bytes) = read_if_exists(&path)? else { return Ok(None) };
        let mut r = Reader::open(&path, &bytes, KIND_FAMILY)?;
        let k_max = r.u64()? as usize;
        let provenance = r.provenance()?;
        let count = r.u64()?;
        let mut levels: Vec<Vec<Arc<GroupStatistics>>> = vec![Vec::new(); k_max];
        for _ in 0..count {
            let s = r.stats()?;
            let level = levels
                .get_mut(s.split.users().wrapping_sub(1))
                .ok_or_else(|| r.corrupt("split outside family range"))?;
            if level.len() != s.split.interior() {
                return Err(r.corrupt("splits out of order"));
            }
            level.push(Arc::new(s));
        }
        r.done()?;
        Ok(Some(MuFamily::from_parts(k_max, provenance, levels)))
    }

    fn write(&self, key: &CacheKey, bytes: Vec<u8>) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(key);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn read_if_exists(path: &Path) -> Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: u8) -> Self {
        let mut buf = MAGIC.to_vec();
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(kind);
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn floats(&mut self, v: &[f64]) {
        for &x in v {
            self.f64(x);
        }
    }

    fn provenance(&mut self, p: &Provenance) {
        self.str(&p.grid_hash);
        self.f64(p.kappa);
        self.f64(p.min_dist_fraction);
        match p.method {
            Method::MonteCarlo { seed, n_samples } => {
                self.u8(0);
                self.u64(seed);
                self.u64(n_samples);
            }
            Method::Quadrature { resolution } => {
                self.u8(1);
                self.u64(resolution as u64);
            }
        }
    }

    fn moments(&mut self, g: &GroupMoments) {
        self.floats(&g.mu1);
        self.floats(&g.mu2);
        self.floats(&g.stderr1);
        self.floats(&g.stderr2);
    }

    fn stats(&mut self, s: &GroupStatistics) {
        self.u64(s.split.users() as u64);
        self.u64(s.split.interior() as u64);
        self.provenance(&s.provenance);
        self.u64(s.n_cells() as u64);
        match &s.interior {
            Some(i) => {
                self.u8(1);
                self.moments(i);
            }
            None => self.u8(0),
        }
        self.moments(&s.edge);
    }

    fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

struct Reader<'a> {
    path: &'a Path,
    body: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(path: &'a Path, bytes: &'a [u8], kind: u8) -> Result<Self> {
        let header = MAGIC.len() + 3;
        if bytes.len() < header + DIGEST_LEN {
            return Err(Error::ChecksumMismatch(path.to_path_buf()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::ChecksumMismatch(path.to_path_buf()));
        }
        let mut r = Self { path, body, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(r.corrupt("bad magic"));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(r.corrupt(&format!("unsupported version {version}")));
        }
        if r.u8()? != kind {
            return Err(r.corrupt("unexpected record kind"));
        }
        Ok(r)
    }

    fn corrupt(&self, reason: &str) -> Error {
        Error::CacheCorrupt { path: self.path.to_path_buf(), reason: reason.to_string() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.body.len());
        let Some(end) = end else { return Err(self.corrupt("truncated record")) };
        let out = &self.body[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u64()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("invalid utf-8"))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn provenance(&mut self) -> Result<Provenance> {
        let grid_hash = self.str()?;
        let kappa = self.f64()?;
        let min_dist_fraction = self.f64()?;
        let method = match self.u8()? {
            0 => Method::MonteCarlo { seed: self.u64()?, n_samples: self.u64()? },
            1 => Method::Quadrature { resolution: self.u64()? as usize },
            _ => return Err(self.corrupt("unknown method tag")),
        };
        Ok(Provenance { grid_hash, kappa, min_dist_fraction, method })
    }

    fn moments(&mut self, n: usize) -> Result<GroupMoments> {
        Ok(GroupMoments {
            mu1: self.floats(n)?,
            mu2: self.floats(n)?,
            stderr1: self.floats(n)?,
            stderr2: self.floats(n)?,
        })
    }

    fn stats(&mut self) -> Result<GroupStatistics> {
        let users = self.u64()? as usize;
        let interior_count = self.u64()? as usize;
        let split = UserSplit::new(users, interior_count).map_err(|_| self.corrupt("invalid split"))?;
        let provenance = self.provenance()?;
        let n = self.u64()? as usize;
        if n > self.body.len() {
            return Err(self.corrupt("cell count exceeds record"));
        }
        let interior = match self.u8()? {
            0 => None,
            1 => Some(self.moments(n)?),
            _ => return Err(self.corrupt("bad interior flag")),
        };
        let edge = self.moments(n)?;
        Ok(GroupStatistics { split, interior, edge, provenance })
    }

    fn done(&self) -> Result<()> {
        if self.pos == self.body.len() {
            Ok(())
        } else {
            Err(self.corrupt("trailing bytes"))
        }
    }
}
