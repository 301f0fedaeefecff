//! `PUFD` binary tensor files.
//!
//! Layout (all little-endian):
//!
//! | bytes        | content                              |
//! |--------------|--------------------------------------|
//! | 4            | magic `b"PUFD"`                      |
//! | 2            | format version (`u16`, currently 1)  |
//! | 1            | rank `r` (`u8`)                      |
//! | 4·r          | dimensions (`u32` each)              |
//! | 8·∏dims      | payload (`f64`), channel-major, row-major |
//!
//! One tensor per file. Rank-3 tensors are `channels × height × width`,
//! rank-2 tensors are `height × width`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{FeatureField, PlaneField};

pub const MAGIC: &[u8; 4] = b"PUFD";
pub const VERSION: u16 = 1;

/// A tensor of any rank as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        if self.dims.len() > u8::MAX as usize {
            return Err(Error::Format(format!("rank {} too large", self.dims.len())));
        }
        if self.dims.iter().product::<usize>() != self.data.len() {
            return Err(Error::Format("payload length does not match dims".into()));
        }
        let mut buf = Vec::with_capacity(7 + 4 * self.dims.len() + 8 * self.data.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(self.dims.len() as u8);
        for &d in &self.dims {
            let d = u32::try_from(d)
                .map_err(|_| Error::Format(format!("dimension {d} exceeds u32")))?;
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 7];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let rank = head[6] as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            dims.push(u32::from_le_bytes(b) as usize);
        }
        let count: usize = dims.iter().product();
        let mut payload = vec![0u8; count * 8];
        r.read_exact(&mut payload)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

impl From<&FeatureField> for Tensor {
    fn from(f: &FeatureField) -> Self {
        Self {
            dims: vec![f.channels(), f.height(), f.width()],
            data: f.data().to_vec(),
        }
    }
}

impl From<&PlaneField> for Tensor {
    fn from(p: &PlaneField) -> Self {
        Self {
            dims: vec![p.height(), p.width()],
            data: p.data().to_vec(),
        }
    }
}

impl TryFrom<Tensor> for FeatureField {
    type Error = Error;

    fn try_from(t: Tensor) -> Result<Self> {
        match t.dims[..] {
            [c, h, w] => FeatureField::new(c, h, w, t.data),
            _ => Err(Error::Format(format!("expected rank 3, got {}", t.dims.len()))),
        }
    }
}

impl TryFrom<Tensor> for PlaneField {
    type Error = Error;

    fn try_from(t: Tensor) -> Result<Self> {
        match t.dims[..] {
            [h, w] => PlaneField::new(h, w, t.data),
            _ => Err(Error::Format(format!("expected rank 2, got {}", t.dims.len()))),
        }
    }
}
