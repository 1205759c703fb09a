//! Binary index file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "BOOLDRIX"
//! version      u32
//! dim          u32
//! similarity   u8       0 = dot, 1 = cosine
//! reserved     3 bytes  zero
//! count        u64
//! fingerprint  u64      embedder spec digest
//! spec_len     u32
//! spec         spec_len bytes of JSON
//! doc ids      count x (u32 byte length, UTF-8 bytes)
//! matrix       count x dim f32, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Index, IndexError, Similarity};
use crate::embed::{Embedder, EmbedderSpec};

pub const MAGIC: &[u8; 8] = b"BOOLDRIX";
pub const FORMAT_VERSION: u32 = 1;

/// A loaded index plus any non-fatal warnings (e.g. a spec mismatch).
#[derive(Debug)]
pub struct LoadedIndex {
    pub index: Index,
    pub warnings: Vec<String>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IndexError + '_ {
    move |source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn persist(index: &Index, path: impl AsRef<Path>) -> Result<(), IndexError> {
    let path = path.as_ref();
    let err = io_err(path);
    let mut w = BufWriter::new(File::create(path).map_err(&err)?);
    let spec_json = serde_json::to_vec(&index.spec).expect("spec serializes");

    let mut header = Vec::with_capacity(40 + spec_json.len());
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&(index.dim as u32).to_le_bytes());
    header.push(match index.similarity {
        Similarity::Dot => 0,
        Similarity::Cosine => 1,
    });
    header.extend_from_slice(&[0; 3]);
    header.extend_from_slice(&(index.doc_ids.len() as u64).to_le_bytes());
    header.extend_from_slice(&index.spec.fingerprint().to_le_bytes());
    header.extend_from_slice(&(spec_json.len() as u32).to_le_bytes());
    header.extend_from_slice(&spec_json);
    w.write_all(&header).map_err(&err)?;

    for id in &index.doc_ids {
        w.write_all(&(id.len() as u32).to_le_bytes())
            .map_err(&err)?;
        w.write_all(id.as_bytes()).map_err(&err)?;
    }
    for v in &index.matrix {
        w.write_all(&v.to_le_bytes()).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>, IndexError> {
        let mut buf = vec![0; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| IndexError::Format(format!("truncated file while reading {what}")))?;
        Ok(buf)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N], IndexError> {
        let mut buf = [0; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| IndexError::Format(format!("truncated file while reading {what}")))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }
}

struct RawIndex {
    similarity: Similarity,
    spec: EmbedderSpec,
    doc_ids: Vec<String>,
    matrix: Vec<f32>,
}

fn read_raw(path: &Path) -> Result<RawIndex, IndexError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = Reader {
        inner: BufReader::new(file),
    };
    let magic: [u8; 8] = r.array("magic")?;
    if &magic != MAGIC {
        return Err(IndexError::Format("bad magic header".into()));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(IndexError::Version(version));
    }
    let dim = r.u32("dim")? as usize;
    let [sim, ..] = r.array::<4>("similarity")?;
    let similarity = match sim {
        0 => Similarity::Dot,
        1 => Similarity::Cosine,
        other => {
            return Err(IndexError::Format(format!(
                "unknown similarity code {other}"
            )))
        }
    };
    let count = usize::try_from(r.u64("count")?)
        .map_err(|_| IndexError::Format("row count overflows".into()))?;
    let fingerprint = r.u64("fingerprint")?;
    let spec_len = r.u32("spec length")? as usize;
    let spec: EmbedderSpec = serde_json::from_slice(&r.bytes(spec_len, "spec")?)
        .map_err(|e| IndexError::Format(format!("embedder spec: {e}")))?;
    if spec.fingerprint() != fingerprint {
        return Err(IndexError::Fingerprint {
            header: fingerprint,
            stored: spec.fingerprint(),
        });
    }
    if spec.dim != dim {
        return Err(IndexError::Format(format!(
            "header dim {dim} disagrees with spec dim {}",
            spec.dim
        )));
    }

    let mut doc_ids = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len = r.u32("doc id length")? as usize;
        let id = String::from_utf8(r.bytes(len, "doc id")?)
            .map_err(|_| IndexError::Format("doc id is not UTF-8".into()))?;
        doc_ids.push(id);
    }
    let n = count
        .checked_mul(dim)
        .ok_or_else(|| IndexError::Format("matrix size overflows".into()))?;
    let raw = r.bytes(n * 4, "matrix")?;
    let matrix = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing).map_err(io_err(path))? != 0 {
        return Err(IndexError::Format("trailing bytes after matrix".into()));
    }
    Ok(RawIndex {
        similarity,
        spec,
        doc_ids,
        matrix,
    })
}

fn assemble(raw: RawIndex, spec: EmbedderSpec) -> Result<Index, IndexError> {
    let embedder = Embedder::from_spec(&spec)?;
    // rows are written already normalized, so build directly
    Ok(Index {
        dim: spec.dim,
        similarity: raw.similarity,
        doc_ids: raw.doc_ids,
        matrix: raw.matrix,
        spec,
        embedder,
    })
}

/// Loads an index, querying with the embedder spec stored in the file.
pub fn load(path: impl AsRef<Path>) -> Result<LoadedIndex, IndexError> {
    let raw = read_raw(path.as_ref())?;
    let spec = raw.spec.clone();
    Ok(LoadedIndex {
        index: assemble(raw, spec)?,
        warnings: Vec::new(),
    })
}

/// Loads an index to be queried with `current`. A spec that differs from the
/// one the index was built with is reported as a warning; a different
/// dimension is an error.
pub fn load_with_spec(
    path: impl AsRef<Path>,
    current: &EmbedderSpec,
) -> Result<LoadedIndex, IndexError> {
    let raw = read_raw(path.as_ref())?;
    let mut warnings = Vec::new();
    if raw.spec.fingerprint() != current.fingerprint() {
        if raw.spec.dim != current.dim {
            return Err(IndexError::Format(format!(
                "index dimension {} does not match embedder dimension {}",
                raw.spec.dim, current.dim
            )));
        }
        warnings.push(format!(
            "embedder fingerprint mismatch: index built with {:016x}, current spec is {:016x}",
            raw.spec.fingerprint(),
            current.fingerprint()
        ));
    }
    Ok(LoadedIndex {
        index: assemble(raw, current.clone())?,
        warnings,
    })
}
