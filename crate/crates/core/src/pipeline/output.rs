use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::eigensolver::{EigenPair, Parity, Spectrum};
use crate::error::{Error, Result};
use crate::physics::ScaledSystem;

/// Seventeen significant digits, enough to round-trip an f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Buffered CSV writer with a fixed header.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    /// Trailing `# key,value` line.
    pub fn footer(&mut self, key: &str, value: f64) -> Result<()> {
        writeln!(self.out, "# {key},{}", num(value))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = BufReader::new(File::open(path)?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
    /// Stage name to wall-clock seconds.
    pub timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    pub const FILE: &'static str = "manifest.json";

    /// Existing manifest for the same configuration, or a fresh one.
    pub fn open(dir: &Path, config_hash: &str) -> Self {
        let existing = fs::read_to_string(dir.join(Self::FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
            .filter(|m| m.config_hash == config_hash && m.tool_version == env!("CARGO_PKG_VERSION"));
        existing.unwrap_or_else(|| RunManifest {
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        })
    }

    pub fn record_files(&mut self, dir: &Path, names: &[String]) -> Result<()> {
        for name in names {
            self.files.insert(name.clone(), sha256_file(&dir.join(name))?);
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(Self::FILE), self)
    }
}

const CACHE_MAGIC: &[u8; 8] = b"KDBASIS1";
pub const CACHE_FILE: &str = "basis.bin";

/// Writes the eigenbasis, tagged with `key`, as little-endian binary.
pub fn save_basis(path: &Path, key: &str, spectrum: &Spectrum) -> Result<()> {
    let tmp = path.with_extension("bin.tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        out.write_all(CACHE_MAGIC)?;
        let key = key.as_bytes();
        out.write_all(&(key.len() as u64).to_le_bytes())?;
        out.write_all(key)?;
        out.write_all(&(spectrum.pairs.len() as u64).to_le_bytes())?;
        out.write_all(&(spectrum.system.grid.len() as u64).to_le_bytes())?;
        out.write_all(&(spectrum.extended.len() as u64).to_le_bytes())?;
        for i in &spectrum.extended {
            out.write_all(&(*i as u64).to_le_bytes())?;
        }
        for p in &spectrum.pairs {
            out.write_all(&p.e_prime.to_le_bytes())?;
            for v in &p.psi {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Reads a cached basis if it exists and was written for `key`.
pub fn load_basis(path: &Path, key: &str, system: &ScaledSystem) -> Result<Option<Spectrum>> {
    let Ok(file) = File::open(path) else {
        return Ok(None);
    };
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    if r.read_exact(&mut magic).is_err() || &magic != CACHE_MAGIC {
        return Ok(None);
    }
    let mut word = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let key_len = read_u64(&mut r)? as usize;
    if key_len > 4096 {
        return Ok(None);
    }
    let mut stored = vec![0u8; key_len];
    r.read_exact(&mut stored)?;
    if stored != key.as_bytes() {
        return Ok(None);
    }
    let count = read_u64(&mut r)? as usize;
    let len = read_u64(&mut r)? as usize;
    if len != system.grid.len() {
        return Err(Error::IncompatibleGrid(format!(
            "cached basis has {len} samples, the configured grid {}",
            system.grid.len()
        )));
    }
    let n_ext = read_u64(&mut r)? as usize;
    let mut extended = Vec::with_capacity(n_ext);
    for _ in 0..n_ext {
        extended.push(read_u64(&mut r)? as usize);
    }
    let mut bytes = vec![0u8; 8 * len];
    let mut pairs = Vec::with_capacity(count);
    for n in 0..count {
        r.read_exact(&mut word)?;
        let e_prime = f64::from_le_bytes(word);
        r.read_exact(&mut bytes)?;
        let psi = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        pairs.push(EigenPair {
            n,
            parity: Parity::of_index(n),
            e_prime,
            e_physical_ev: system.physical_energy(e_prime) / crate::constants::EV,
            k_per_m: system.wave_vector(e_prime),
            psi,
        });
    }
    Ok(Some(Spectrum {
        system: system.clone(),
        pairs,
        extended,
    }))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
