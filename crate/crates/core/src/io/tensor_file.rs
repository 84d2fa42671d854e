//! Binary tensor files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "TNS1"
//! version u8       1
//! dtype   u8       0 = f32, 1 = f64
//! ndim    u8       1..=3
//! dims    ndim x u64
//! payload product(dims) values, row-major
//! ```
//!
//! f32 files are accepted on input and widened to f64 in memory (lossless
//! for finite values); all newly written files use f64. Parsing followed by
//! serialization reproduces the input bytes exactly.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"TNS1";
pub const VERSION: u8 = 1;

/// Manifest filename used by [`save_params`] / [`load_params`].
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Element type of a tensor file on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// A parsed tensor file: the in-memory f64 tensor plus the dtype it was
/// stored with, so serialization round-trips byte for byte.
#[derive(Debug, Clone)]
pub struct TensorFile {
    pub dtype: Dtype,
    pub tensor: Tensor,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                context,
                need: n,
                have: self.bytes.len() - self.pos,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Parse a tensor file from bytes.
pub fn parse_tensor(bytes: &[u8]) -> Result<TensorFile> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        let mut got = [0u8; 4];
        got.copy_from_slice(magic);
        return Err(Error::BadMagic { got });
    }
    let version = cur.take(1, "version")?[0];
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = Dtype::from_tag(cur.take(1, "dtype")?[0])?;
    let ndim = cur.take(1, "ndim")?[0] as usize;
    if !(1..=3).contains(&ndim) {
        return Err(Error::InvalidShape {
            dims: vec![ndim],
            reason: "ndim must be 1..=3".into(),
        });
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let raw = cur.take(8, "dims")?;
        dims.push(u64::from_le_bytes(raw.try_into().unwrap()) as usize);
    }
    let count: usize = dims.iter().product();
    let payload = cur.take(count * dtype.size(), "payload")?;
    if cur.pos != bytes.len() {
        return Err(Error::TrailingBytes(bytes.len() - cur.pos));
    }
    let mut data = Vec::with_capacity(count);
    match dtype {
        Dtype::F32 => {
            for chunk in payload.chunks_exact(4) {
                data.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
            }
        }
        Dtype::F64 => {
            for chunk in payload.chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
        }
    }
    let tensor = Tensor::new(&dims, data)?;
    Ok(TensorFile { dtype, tensor })
}

/// Serialize a tensor file to bytes in its stored dtype.
pub fn serialize_tensor(file: &TensorFile) -> Vec<u8> {
    let dims = file.tensor.dims();
    let mut out = Vec::with_capacity(7 + dims.len() * 8 + file.tensor.len() * file.dtype.size());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(file.dtype.tag());
    out.push(dims.len() as u8);
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    match file.dtype {
        Dtype::F32 => {
            for &v in file.tensor.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Dtype::F64 => {
            for &v in file.tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Read and parse a tensor file from disk, widening to f64.
pub fn load_tensor(path: &Path) -> Result<Tensor> {
    Ok(read_tensor_file(path)?.tensor)
}

/// Read a tensor file from disk keeping its dtype.
pub fn read_tensor_file(path: &Path) -> Result<TensorFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_tensor(&bytes)
}

/// Write a tensor to disk as f64.
pub fn save_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    let file = TensorFile {
        dtype: Dtype::F64,
        tensor: tensor.clone(),
    };
    std::fs::write(path, serialize_tensor(&file))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Save named tensors into a directory: one `.tns` file per tensor plus a
/// `manifest.txt` with `name=filename` lines in the given order.
pub fn save_params(dir: &Path, named: &[(String, &Tensor)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut manifest = String::new();
    for (name, tensor) in named {
        let filename = format!("{}.tns", sanitize(name));
        save_tensor(&dir.join(&filename), tensor)?;
        manifest.push_str(&format!("{name}={filename}\n"));
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load every tensor listed in a directory's manifest, in manifest order.
pub fn load_params(dir: &Path) -> Result<Vec<(String, Tensor)>> {
    let path = dir.join(MANIFEST_NAME);
    let manifest =
        std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for line in manifest.lines() {
        if line.is_empty() {
            continue;
        }
        let (name, filename) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("malformed manifest line: {line:?}"))
        })?;
        out.push((name.to_string(), load_tensor(&dir.join(filename))?));
    }
    Ok(out)
}
