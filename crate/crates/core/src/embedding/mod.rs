//! Per-trial embedding vectors and their on-disk format.
//!
//! Layout (all integers little-endian):
//!
//! | field        | type                                  |
//! |--------------|---------------------------------------|
//! | magic        | `b"CNTR"`                             |
//! | version      | `u16` (currently 1)                   |
//! | dim          | `u32`                                 |
//! | rows         | `u64`                                 |
//! | provenance   | `u32` byte length + UTF-8 bytes       |
//! | trial ids    | per row: `u32` byte length + UTF-8    |
//! | values       | `rows * dim` `f32`, row-major         |
//! | checksum     | `u32` CRC32 of every preceding byte   |

mod scaler;
mod synth;

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use scaler::{apply_scaler, fit_scaler, FeatureScaler, ScalerScope};
pub use synth::{sample_weights, synth_embeddings, Generator};

pub const MAGIC: &[u8; 4] = b"CNTR";
pub const FORMAT_VERSION: u16 = 1;

/// Byte size of a store file with the given shape.
pub fn encoded_len(dim: usize, ids: &[String], provenance: &str) -> u64 {
    let fixed = 4 + 2 + 4 + 8 + 4 + provenance.len() + 4;
    let table: usize = ids.iter().map(|id| 4 + id.len()).sum();
    (fixed + table) as u64 + (ids.len() as u64) * (dim as u64) * 4
}

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f32>,
    provenance: String,
}

impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.ids == other.ids
            && self.provenance == other.provenance
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingStore {
    /// Builds a store from a flat row-major buffer.
    pub fn new(
        dim: usize,
        ids: Vec<String>,
        values: Vec<f32>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("embedding dimension must be positive".into()));
        }
        if dim > u32::MAX as usize {
            return Err(Error::Format(format!("dimension {dim} exceeds the format limit")));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::Format(format!(
                "{} values for {} rows of dimension {dim}",
                values.len(),
                ids.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value in row `{}`",
                ids[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate trial id `{id}`")));
            }
        }
        Ok(Self {
            dim,
            ids,
            index,
            values,
            provenance: provenance.into(),
        })
    }

    /// Builds a store from individual rows, which must all have length `dim`.
    pub fn from_rows(
        dim: usize,
        rows: impl IntoIterator<Item = (String, Vec<f32>)>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for (id, row) in rows {
            if row.len() != dim {
                return Err(Error::Format(format!(
                    "row `{id}` has length {}, expected {dim}",
                    row.len()
                )));
            }
            ids.push(id);
            values.extend_from_slice(&row);
        }
        Self::new(dim, ids, values, provenance)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row_at(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.row_at(i))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Ids from `wanted` that have no row.
    pub fn missing<'a>(&self, wanted: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        wanted
            .into_iter()
            .filter(|id| !self.index.contains_key(*id))
            .map(str::to_string)
            .collect()
    }

    /// Gathers the rows for `ids` in order, promoted to `f64`.
    pub fn matrix<S: AsRef<str>>(&self, ids: &[S]) -> Result<Array2<f64>> {
        let missing = self.missing(ids.iter().map(AsRef::as_ref));
        if !missing.is_empty() {
            return Err(Error::MissingEmbeddings(missing));
        }
        let mut out = Array2::zeros((ids.len(), self.dim));
        for (mut dst, id) in out.rows_mut().into_iter().zip(ids) {
            let src = self.row(id.as_ref()).expect("checked above");
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = f64::from(s);
            }
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut w = ChecksumWriter::new(BufWriter::new(file));
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        write_str(&mut w, &self.provenance)?;
        for id in &self.ids {
            write_str(&mut w, id)?;
        }
        let mut buf = Vec::with_capacity(4 * self.dim);
        for row in self.values.chunks(self.dim) {
            buf.clear();
            for v in row {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        let crc = w.hasher.clone().finalize();
        let mut inner = w.inner;
        inner.write_all(&crc.to_le_bytes())?;
        inner.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        let file_len = file.metadata()?.len();
        if file_len < 4 + 2 + 4 + 8 + 4 + 4 {
            return Err(Error::Integrity(format!("{}: file too short", path.display())));
        }
        let mut r = ChecksumReader::new(BufReader::new(file).take(file_len - 4));

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Integrity(format!(
                "{}: bad magic bytes {magic:?}",
                path.display()
            )));
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let rows = u64::from_le_bytes(read_array(&mut r)?);
        let remaining = file_len - 4 - 18;
        if dim == 0 || rows.saturating_mul(dim as u64).saturating_mul(4) > remaining {
            return Err(Error::Integrity(format!(
                "{}: header declares {rows} rows of dimension {dim}, inconsistent with file size",
                path.display()
            )));
        }
        let provenance = read_str(&mut r, remaining)?;
        let rows = rows as usize;
        let mut ids = Vec::with_capacity(rows);
        for _ in 0..rows {
            ids.push(read_str(&mut r, remaining)?);
        }
        let mut values = vec![0f32; rows * dim];
        let mut buf = vec![0u8; 4 * dim];
        for row in values.chunks_mut(dim) {
            r.read_exact(&mut buf)?;
            for (v, bytes) in row.iter_mut().zip(buf.chunks_exact(4)) {
                *v = f32::from_le_bytes(bytes.try_into().expect("4-byte chunk"));
            }
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Integrity(format!(
                "{}: unexpected bytes before checksum",
                path.display()
            )));
        }
        let computed = r.hasher.clone().finalize();
        let mut inner = r.inner.into_inner();
        let stored = u32::from_le_bytes(read_array(&mut inner)?);
        if stored != computed {
            return Err(Error::Integrity(format!(
                "{}: checksum mismatch (stored {stored:08x}, computed {computed:08x})",
                path.display()
            )));
        }
        Self::new(dim, ids, values, provenance)
    }
}

/// Reads a store, mapping truncation to an integrity error.
pub fn read_store(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    EmbeddingStore::read(path).map_err(|e| match e {
        Error::Io(err) if err.kind() == io::ErrorKind::UnexpectedEof => {
            Error::Integrity("file truncated".into())
        }
        other => other,
    })
}

pub fn write_store(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    store.write(path)
}

struct ChecksumWriter<W> {
    inner: W,
    hasher: crc32fast::Hasher,
}

impl<W: Write> ChecksumWriter<W> {
    fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: crc32fast::Hasher::new(),
        }
    }
}

impl<W: Write> Write for ChecksumWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

struct ChecksumReader<R> {
    inner: R,
    hasher: crc32fast::Hasher,
}

impl<R: Read> ChecksumReader<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            hasher: crc32fast::Hasher::new(),
        }
    }
}

impl<R: Read> Read for ChecksumReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

fn write_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_array<const N: usize>(r: &mut impl Read) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_str(r: &mut impl Read, limit: u64) -> Result<String> {
    let len = u32::from_le_bytes(read_array(r)?) as u64;
    if len > limit {
        return Err(Error::Integrity(format!("string length {len} exceeds file size")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Integrity("string table is not UTF-8".into()))
}
