//! Binary checkpoint container: a magic tag, a version, a text metadata
//! block, and named f32 tensors. Compute stays in f64; the conversion to f32
//! happens exactly once, here.
//!
//! Layout (all integers little-endian u32):
//!   "CLNT" | version | meta_len, meta bytes ("key=value\n" lines) |
//!   tensor_count | per tensor: name_len, name bytes | rank | dims... |
//!   values as f32 little-endian, row-major.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use crate::tensor::Tensor;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CLNT";
pub const FORMAT_VERSION: u32 = 1;

/// Tensors keep insertion order so writes are reproducible; metadata is kept
/// sorted by key for the same reason.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    meta: BTreeMap<String, String>,
    tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn new() -> Checkpoint {
        Checkpoint::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(|s| s.as_str())
    }

    pub fn meta_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta(key)
            .ok_or_else(|| Error::Incompatible(format!("checkpoint metadata missing key {key}")))?;
        raw.parse()
            .map_err(|_| Error::Incompatible(format!("checkpoint metadata key {key} unparseable: {raw}")))
    }

    pub fn meta_keys(&self) -> impl Iterator<Item = &str> {
        self.meta.keys().map(|s| s.as_str())
    }

    pub fn add_tensor(&mut self, name: &str, t: Tensor) {
        self.tensors.push((name.to_string(), t));
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn require_tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensor(name)
            .ok_or_else(|| Error::Incompatible(format!("checkpoint missing tensor {name}")))
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|(n, _)| n.as_str())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let mut meta_block = String::new();
        for (k, v) in &self.meta {
            meta_block.push_str(k);
            meta_block.push('=');
            meta_block.push_str(v);
            meta_block.push('\n');
        }
        out.extend_from_slice(&(meta_block.len() as u32).to_le_bytes());
        out.extend_from_slice(meta_block.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.dims().len() as u32).to_le_bytes());
            for &d in t.dims() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in t.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic)
            .map_err(|_| Error::Parse("checkpoint truncated before magic".into()))?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a checkpoint file (bad magic)".into()));
        }
        let version = read_u32(&mut cur)?;
        if version != FORMAT_VERSION {
            return Err(Error::Incompatible(format!(
                "unsupported checkpoint format version {version}"
            )));
        }
        let meta_len = read_u32(&mut cur)? as usize;
        let mut meta_bytes = vec![0u8; meta_len];
        cur.read_exact(&mut meta_bytes)
            .map_err(|_| Error::Parse("checkpoint truncated in metadata".into()))?;
        let meta_str = String::from_utf8(meta_bytes)
            .map_err(|_| Error::Parse("checkpoint metadata is not UTF-8".into()))?;
        let mut meta = BTreeMap::new();
        for line in meta_str.lines() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed metadata line: {line}")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let count = read_u32(&mut cur)? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = read_u32(&mut cur)? as usize;
            let mut name_bytes = vec![0u8; name_len];
            cur.read_exact(&mut name_bytes)
                .map_err(|_| Error::Parse("checkpoint truncated in tensor name".into()))?;
            let name = String::from_utf8(name_bytes)
                .map_err(|_| Error::Parse("tensor name is not UTF-8".into()))?;
            let rank = read_u32(&mut cur)? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(read_u32(&mut cur)? as usize);
            }
            let n: usize = dims.iter().product();
            let mut raw = vec![0u8; n * 4];
            cur.read_exact(&mut raw)
                .map_err(|_| Error::Parse(format!("checkpoint truncated in tensor {name}")))?;
            let data: Vec<f64> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            tensors.push((name, Tensor::from_vec(&dims, data)?));
        }
        if (cur.position() as usize) != bytes.len() {
            return Err(Error::Parse("trailing bytes after checkpoint payload".into()));
        }
        Ok(Checkpoint { meta, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path)?;
        Checkpoint::from_bytes(&bytes)
    }
}

fn read_u32(cur: &mut Cursor<&[u8]>) -> Result<u32> {
    let mut b = [0u8; 4];
    cur.read_exact(&mut b)
        .map_err(|_| Error::Parse("checkpoint truncated".into()))?;
    Ok(u32::from_le_bytes(b))
}
