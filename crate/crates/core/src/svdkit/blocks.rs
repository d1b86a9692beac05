//! Column-partitioned matrices and their on-disk format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BLOCK_MAGIC: &[u8; 4] = b"CUBB";
pub const BLOCK_VERSION: u32 = 1;

/// A matrix `[A_1, A_2, …, A_p]` whose column blocks are loaded on demand.
///
/// `load` must return identical data on every call.
pub trait BlockSource {
    fn nrows(&self) -> usize;
    fn block_count(&self) -> usize;
    fn block_cols(&self, i: usize) -> usize;
    fn load(&self, i: usize) -> Result<DMatrix<f64>>;

    fn total_cols(&self) -> usize {
        (0..self.block_count()).map(|i| self.block_cols(i)).sum()
    }

    /// Concatenate all blocks into one dense matrix.
    fn assemble(&self) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.nrows(), self.total_cols());
        let mut off = 0;
        for i in 0..self.block_count() {
            let b = self.load(i)?;
            out.columns_mut(off, b.ncols()).copy_from(&b);
            off += b.ncols();
        }
        Ok(out)
    }
}

/// Blocks held in memory.
#[derive(Debug, Clone)]
pub struct MemoryBlocks {
    n: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl MemoryBlocks {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        if let Some((i, b)) = blocks.iter().enumerate().find(|(_, b)| b.nrows() != n) {
            return Err(Error::input(format!(
                "block {i} has {} rows, expected {n}",
                b.nrows()
            )));
        }
        Ok(MemoryBlocks { n, blocks })
    }

    /// Split `m` into `p` column blocks of near-equal width.
    pub fn split(m: &DMatrix<f64>, p: usize) -> Self {
        let p = p.clamp(1, m.ncols().max(1));
        let mut blocks = Vec::with_capacity(p);
        let mut off = 0;
        for i in 0..p {
            let w = m.ncols() / p + usize::from(i < m.ncols() % p);
            blocks.push(m.columns(off, w).into_owned());
            off += w;
        }
        MemoryBlocks {
            n: m.nrows(),
            blocks,
        }
    }
}

impl BlockSource for MemoryBlocks {
    fn nrows(&self) -> usize {
        self.n
    }
    fn block_count(&self) -> usize {
        self.blocks.len()
    }
    fn block_cols(&self, i: usize) -> usize {
        self.blocks[i].ncols()
    }
    fn load(&self, i: usize) -> Result<DMatrix<f64>> {
        Ok(self.blocks[i].clone())
    }
}

/// Rows of every block scaled by `sqrt(w)`.
pub struct RowScaled<'a, S: BlockSource + ?Sized> {
    pub inner: &'a S,
    pub scale: Vec<f64>,
}

impl<'a, S: BlockSource + ?Sized> RowScaled<'a, S> {
    pub fn sqrt_weights(inner: &'a S, w: &[f64]) -> Self {
        RowScaled {
            inner,
            scale: w.iter().map(|v| v.sqrt()).collect(),
        }
    }
}

impl<S: BlockSource + ?Sized> BlockSource for RowScaled<'_, S> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn block_count(&self) -> usize {
        self.inner.block_count()
    }
    fn block_cols(&self, i: usize) -> usize {
        self.inner.block_cols(i)
    }
    fn load(&self, i: usize) -> Result<DMatrix<f64>> {
        let mut b = self.inner.load(i)?;
        for (r, s) in self.scale.iter().enumerate() {
            b.row_mut(r).scale_mut(*s);
        }
        Ok(b)
    }
}

/// Manifest listing block files in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub blocks: Vec<String>,
}

/// Blocks stored as `CUBB` files listed in a JSON manifest.
#[derive(Debug, Clone)]
pub struct FileBlocks {
    n: usize,
    paths: Vec<PathBuf>,
    cols: Vec<usize>,
}

impl FileBlocks {
    /// Open a manifest; block paths are relative to the manifest's directory.
    pub fn open(manifest: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest).map_err(|e| io_err(manifest, e))?;
        let man: Manifest = serde_json::from_str(&text)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut paths = Vec::new();
        let mut cols = Vec::new();
        for p in &man.blocks {
            let path = base.join(p);
            let (n, m) = read_block_header(&path)?;
            if n != man.n {
                return Err(Error::input(format!(
                    "{}: block has {n} rows but manifest declares {}",
                    path.display(),
                    man.n
                )));
            }
            paths.push(path);
            cols.push(m);
        }
        Ok(FileBlocks {
            n: man.n,
            paths,
            cols,
        })
    }
}

impl BlockSource for FileBlocks {
    fn nrows(&self) -> usize {
        self.n
    }
    fn block_count(&self) -> usize {
        self.paths.len()
    }
    fn block_cols(&self, i: usize) -> usize {
        self.cols[i]
    }
    fn load(&self, i: usize) -> Result<DMatrix<f64>> {
        read_block(&self.paths[i])
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn fmt_err(path: &Path, offset: u64, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        offset,
        reason: reason.into(),
    }
}

/// Write a matrix as a `CUBB` block file.
pub fn write_block(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    put(BLOCK_MAGIC)?;
    put(&BLOCK_VERSION.to_le_bytes())?;
    put(&(m.nrows() as u64).to_le_bytes())?;
    put(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_header(path: &Path, r: &mut impl Read) -> Result<(usize, usize)> {
    let mut head = [0u8; 24];
    let mut got = 0;
    while got < head.len() {
        let k = r.read(&mut head[got..]).map_err(|e| io_err(path, e))?;
        if k == 0 {
            return Err(fmt_err(path, got as u64, "truncated header"));
        }
        got += k;
    }
    if &head[0..4] != BLOCK_MAGIC {
        return Err(fmt_err(path, 0, "bad magic, expected CUBB"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != BLOCK_VERSION {
        return Err(fmt_err(path, 4, format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let m = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    Ok((n, m))
}

pub fn read_block_header(path: &Path) -> Result<(usize, usize)> {
    let mut f = File::open(path).map_err(|e| io_err(path, e))?;
    let (n, m) = read_header(path, &mut f)?;
    let len = f.metadata().map_err(|e| io_err(path, e))?.len();
    let want = 24 + 8 * (n as u64) * (m as u64);
    if len != want {
        return Err(fmt_err(
            path,
            len.min(want),
            format!("payload size mismatch: file has {len} bytes, header implies {want}"),
        ));
    }
    Ok((n, m))
}

/// Read a `CUBB` block file.
pub fn read_block(path: &Path) -> Result<DMatrix<f64>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(f);
    let (n, m) = read_header(path, &mut r)?;
    let mut data = vec![0f64; n * m];
    let mut buf = [0u8; 8];
    for (i, slot) in data.iter_mut().enumerate() {
        r.read_exact(&mut buf)
            .map_err(|_| fmt_err(path, 24 + 8 * i as u64, "truncated payload"))?;
        *slot = f64::from_le_bytes(buf);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| io_err(path, e))? != 0 {
        return Err(fmt_err(path, 24 + 8 * (n * m) as u64, "trailing bytes after payload"));
    }
    Ok(DMatrix::from_vec(n, m, data))
}

/// Write blocks plus a manifest; block files are named `<stem>_<i>.cubb` next to the manifest.
pub fn write_manifest(manifest: &Path, blocks: &[DMatrix<f64>]) -> Result<()> {
    let n = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let stem = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("block");
    let mut names = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        let name = format!("{stem}_{i}.cubb");
        write_block(&dir.join(&name), b)?;
        names.push(name);
    }
    let man = Manifest { n, blocks: names };
    std::fs::write(manifest, serde_json::to_string_pretty(&man)?).map_err(|e| io_err(manifest, e))
}
