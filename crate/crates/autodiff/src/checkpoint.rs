use std::io::{Read, Write};

use crate::{Error, Result, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CADPUCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

const MAX_NAME_LEN: u32 = 1 << 16;
const MAX_META_LEN: u32 = 1 << 24;
const MAX_RANK: u32 = 8;

/// Named tensors plus a step counter and a free-form text header.
///
/// Layout, all integers little-endian:
/// magic `CADPUCKP`, `u32` version, `u64` step, `u32` meta length, meta
/// bytes (UTF-8), `u32` record count, then per record: `u32` name length,
/// name bytes, `u32` rank, `rank` x `u64` extents, and the row-major data as
/// `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub meta: String,
    pub records: Vec<(String, Tensor)>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_string(r: &mut impl Read, len: u32, what: &str) -> Result<String> {
    let mut b = vec![0u8; len as usize];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|_| bad(format!("{what} is not valid UTF-8")))
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.records.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&self.step.to_le_bytes())?;
        w.write_all(&(self.meta.len() as u32).to_le_bytes())?;
        w.write_all(self.meta.as_bytes())?;
        w.write_all(&(self.records.len() as u32).to_le_bytes())?;
        for (name, t) in &self.records {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(t.rank() as u32).to_le_bytes())?;
            for &d in t.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| bad("file too short for a checkpoint header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let step = read_u64(r)?;
        let meta_len = read_u32(r)?;
        if meta_len > MAX_META_LEN {
            return Err(bad("header text too long"));
        }
        let meta = read_string(r, meta_len, "header text")?;
        let count = read_u32(r)?;
        let mut records = Vec::new();
        for _ in 0..count {
            let name_len = read_u32(r)?;
            if name_len > MAX_NAME_LEN {
                return Err(bad("record name too long"));
            }
            let name = read_string(r, name_len, "record name")?;
            let rank = read_u32(r)?;
            if rank > MAX_RANK {
                return Err(bad(format!("record {name}: rank {rank} too large")));
            }
            let mut shape = Vec::with_capacity(rank as usize);
            let mut numel: u64 = 1;
            for _ in 0..rank {
                let d = read_u64(r)?;
                numel = numel
                    .checked_mul(d)
                    .filter(|&n| n <= 1 << 32)
                    .ok_or_else(|| bad(format!("record {name}: tensor too large")))?;
                shape.push(d as usize);
            }
            let mut data = Vec::with_capacity(numel as usize);
            let mut b = [0u8; 8];
            for _ in 0..numel {
                r.read_exact(&mut b)?;
                data.push(f64::from_le_bytes(b));
            }
            records.push((name, Tensor::new(&shape, data)?));
        }
        Ok(Self {
            step,
            meta,
            records,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }
}
