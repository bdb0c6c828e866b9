//! CEMB: little-endian container for embeddings, token grids and feature sets.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CEMB"
//! 4       2     u16 version (= 1)
//! 6       4     u32 count
//! 10      2     u16 grid_h
//! 12      2     u16 grid_w
//! 14      4     u32 dim
//! 18      ...   count * grid_h * grid_w * dim f32, row-major
//! ```
//!
//! Pooled vectors use `grid_h = grid_w = 1`. The sidecar index (`<stem>.idx`
//! next to the `.cemb` file) is line-oriented UTF-8:
//!
//! ```text
//! # key: value        metadata, e.g. "# preprocessing: resize=224 bicubic"
//! !some_id            gap marker: entry skipped by the exporter, no record
//! some_id             id of the next record, in ordinal order
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::featstats::FeatureSet;
use crate::retrieval::{EmbeddingVector, FeatureGrid};

pub const MAGIC: &[u8; 4] = b"CEMB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;

#[derive(Debug, Clone, PartialEq)]
pub struct CembTensor {
    pub count: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl CembTensor {
    pub fn new(count: usize, grid_h: usize, grid_w: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if grid_h > u16::MAX as usize || grid_w > u16::MAX as usize || count > u32::MAX as usize || dim > u32::MAX as usize {
            return Err(Error::Cemb("header field out of range".into()));
        }
        let expected = count * grid_h * grid_w * dim;
        if data.len() != expected {
            return Err(Error::Cemb(format!("payload has {} values, header implies {expected}", data.len())));
        }
        Ok(Self {
            count,
            grid_h,
            grid_w,
            dim,
            data,
        })
    }

    pub fn record_len(&self) -> usize {
        self.grid_h * self.grid_w * self.dim
    }

    pub fn is_pooled(&self) -> bool {
        self.grid_h == 1 && self.grid_w == 1
    }

    pub fn record(&self, i: usize) -> &[f32] {
        let n = self.record_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn grid(&self, i: usize) -> Result<FeatureGrid> {
        if i >= self.count {
            return Err(Error::Cemb(format!("record {i} out of range (count {})", self.count)));
        }
        FeatureGrid::new(
            self.grid_h,
            self.grid_w,
            self.dim,
            self.record(i).iter().map(|&v| v as f64).collect(),
        )
    }

    pub fn grids(&self) -> Result<Vec<FeatureGrid>> {
        (0..self.count).map(|i| self.grid(i)).collect()
    }

    /// Pooled records as vectors. Requires a 1x1 grid.
    pub fn embeddings(&self) -> Result<Vec<EmbeddingVector>> {
        if !self.is_pooled() {
            return Err(Error::Cemb(format!(
                "expected pooled records (1x1 grid), found {}x{}",
                self.grid_h, self.grid_w
            )));
        }
        Ok((0..self.count)
            .map(|i| EmbeddingVector::new(self.record(i).iter().map(|&v| v as f64).collect()))
            .collect())
    }

    /// Flattens every record into one feature row.
    pub fn to_feature_set(&self) -> Result<FeatureSet> {
        FeatureSet::new(self.count, self.record_len(), self.data.iter().map(|&v| v as f64).collect())
    }

    pub fn from_grids(grids: &[FeatureGrid]) -> Result<Self> {
        let first = grids
            .first()
            .ok_or_else(|| Error::Cemb("cannot write an empty grid list".into()))?;
        let (h, w, d) = (first.grid_h(), first.grid_w(), first.dim());
        let mut data = Vec::with_capacity(grids.len() * h * w * d);
        for g in grids {
            if (g.grid_h(), g.grid_w(), g.dim()) != (h, w, d) {
                return Err(Error::Cemb("grids differ in shape".into()));
            }
            data.extend(g.as_slice().iter().map(|&v| v as f32));
        }
        Self::new(grids.len(), h, w, d, data)
    }

    pub fn from_embeddings(vectors: &[EmbeddingVector]) -> Result<Self> {
        let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::Cemb("vectors differ in dim".into()));
            }
            data.extend(v.as_slice().iter().map(|&x| x as f32));
        }
        Self::new(vectors.len(), 1, 1, dim, data)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(short)?;
        if &magic != MAGIC {
            return Err(Error::Cemb(format!("bad magic {magic:?}")));
        }
        let version = r.read_u16::<LittleEndian>().map_err(short)?;
        if version != VERSION {
            return Err(Error::Cemb(format!("unsupported version {version}")));
        }
        let count = r.read_u32::<LittleEndian>().map_err(short)? as usize;
        let grid_h = r.read_u16::<LittleEndian>().map_err(short)? as usize;
        let grid_w = r.read_u16::<LittleEndian>().map_err(short)? as usize;
        let dim = r.read_u32::<LittleEndian>().map_err(short)? as usize;
        let n = count
            .checked_mul(grid_h)
            .and_then(|v| v.checked_mul(grid_w))
            .and_then(|v| v.checked_mul(dim))
            .ok_or_else(|| Error::Cemb("payload size overflows".into()))?;

        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * 4 {
            return Err(Error::Cemb(format!("payload is {} bytes, header implies {}", bytes.len(), n * 4)));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(count, grid_h, grid_w, dim, data)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u16::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.count as u32)?;
        w.write_u16::<LittleEndian>(self.grid_h as u16)?;
        w.write_u16::<LittleEndian>(self.grid_w as u16)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        for v in &self.data {
            w.write_f32::<LittleEndian>(*v)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

fn short(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Cemb("truncated header".into())
    } else {
        Error::Io(e)
    }
}

/// Record ordinal to sample id mapping stored next to a CEMB file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CembIndex {
    pub ids: Vec<String>,
    pub gaps: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl CembIndex {
    pub fn from_ids<S: Into<String>>(ids: impl IntoIterator<Item = S>) -> Self {
        Self {
            ids: ids.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut index = Self::default();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once(':') {
                    index.metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if let Some(gap) = line.strip_prefix('!') {
                index.gaps.push(gap.to_string());
            } else {
                index.ids.push(line.to_string());
            }
        }
        Ok(index)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        for gap in &self.gaps {
            out.push_str(&format!("!{gap}\n"));
        }
        for id in &self.ids {
            out.push_str(id);
            out.push('\n');
        }
        out
    }

    pub fn sidecar_path(cemb_path: &Path) -> PathBuf {
        cemb_path.with_extension("idx")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }
}

/// A CEMB file with its sidecar index, when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedCemb {
    pub tensor: CembTensor,
    pub index: Option<CembIndex>,
}

impl IndexedCemb {
    pub fn load(path: &Path) -> Result<Self> {
        let tensor = CembTensor::load(path)?;
        let sidecar = CembIndex::sidecar_path(path);
        let index = if sidecar.is_file() {
            let index = CembIndex::load(&sidecar)?;
            if index.ids.len() != tensor.count {
                return Err(Error::Cemb(format!(
                    "sidecar {} lists {} ids for {} records",
                    sidecar.display(),
                    index.ids.len(),
                    tensor.count
                )));
            }
            Some(index)
        } else {
            None
        };
        Ok(Self { tensor, index })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.tensor.save(path)?;
        if let Some(index) = &self.index {
            index.save(&CembIndex::sidecar_path(path))?;
        }
        Ok(())
    }

    /// Ids in ordinal order; ordinals stand in when no sidecar exists.
    pub fn ids(&self) -> Vec<String> {
        match &self.index {
            Some(index) => index.ids.clone(),
            None => (0..self.tensor.count).map(|i| i.to_string()).collect(),
        }
    }
}
