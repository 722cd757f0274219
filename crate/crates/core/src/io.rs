//! Little-endian binary format for an observation matrix plus optional
//! ground truth.
//!
//! ```text
//! magic "JSYN" | version u32 | n u64 | K u64 | d u64
//! block count u64, then per block: i u32, j u32, d·d f64 (row-major), i < j
//! truth flag u32; if 1: n labels u32 (1-based), n transforms d·d f64 (row-major)
//! ```

use std::io::{self, Read, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{OrthogonalMatrix, SquareMatrix};
use crate::model::{GroundTruth, ModelError, SparseBlockMatrix};

const MAGIC: &[u8; 4] = b"JSYN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not an instance file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An observation matrix with the cluster count it was generated for.
#[derive(Debug, Clone)]
pub struct Instance {
    pub k: usize,
    pub a: SparseBlockMatrix,
    pub truth: Option<GroundTruth>,
}

pub fn write_instance<W: Write>(w: &mut W, inst: &Instance) -> Result<(), IoError> {
    let (n, d) = (inst.a.n(), inst.a.d());
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for v in [n as u64, inst.k as u64, d as u64, inst.a.num_blocks() as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (i, j, b) in inst.a.blocks() {
        w.write_all(&(i as u32).to_le_bytes())?;
        w.write_all(&(j as u32).to_le_bytes())?;
        write_block(w, b)?;
    }
    match &inst.truth {
        None => w.write_all(&0u32.to_le_bytes())?,
        Some(gt) => {
            w.write_all(&1u32.to_le_bytes())?;
            for &l in &gt.labels {
                w.write_all(&(l as u32 + 1).to_le_bytes())?;
            }
            for o in &gt.transforms {
                write_block(w, o.as_matrix().as_view())?;
            }
        }
    }
    Ok(())
}

fn write_block<W: Write>(w: &mut W, block: nalgebra::DMatrixView<'_, f64>) -> io::Result<()> {
    // the transpose's column-major storage is the row-major order
    for v in block.transpose().as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_block<R: Read>(r: &mut R, d: usize) -> io::Result<DMatrix<f64>> {
    let mut vals = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        vals.push(f64::from_le_bytes(b));
    }
    Ok(DMatrix::from_row_slice(d, d, &vals))
}

fn checked_usize(v: u64, what: &str) -> Result<usize, IoError> {
    usize::try_from(v).map_err(|_| IoError::Malformed(format!("{what} = {v} too large")))
}

pub fn read_instance<R: Read>(r: &mut R) -> Result<Instance, IoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(IoError::Version(version));
    }
    let n = checked_usize(read_u64(r)?, "n")?;
    let k = checked_usize(read_u64(r)?, "K")?;
    let d = checked_usize(read_u64(r)?, "d")?;
    if d == 0 || k == 0 || k > n {
        return Err(IoError::Malformed(format!("n = {n}, K = {k}, d = {d}")));
    }
    let count = checked_usize(read_u64(r)?, "block count")?;
    if count > n.saturating_mul(n) / 2 {
        return Err(IoError::Malformed(format!("{count} blocks for n = {n}")));
    }
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let i = read_u32(r)? as usize;
        let j = read_u32(r)? as usize;
        blocks.push((i, j, read_block(r, d)?));
    }
    let a = SparseBlockMatrix::from_blocks(n, d, blocks)?;
    let truth = match read_u32(r)? {
        0 => None,
        1 => {
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let l = read_u32(r)? as usize;
                if l == 0 || l > k {
                    return Err(IoError::Malformed(format!("label {l} outside 1..={k}")));
                }
                labels.push(l - 1);
            }
            let mut transforms = Vec::with_capacity(n);
            for _ in 0..n {
                let m = read_block(r, d)?;
                let o = SquareMatrix::new(m)
                    .and_then(OrthogonalMatrix::new)
                    .map_err(|e| IoError::Malformed(format!("transform: {e}")))?;
                transforms.push(o);
            }
            Some(GroundTruth::new(k, d, labels, transforms)?)
        }
        f => return Err(IoError::Malformed(format!("truth flag {f}"))),
    };
    Ok(Instance { k, a, truth })
}

pub fn save_instance(path: &std::path::Path, inst: &Instance) -> Result<(), IoError> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    write_instance(&mut w, inst)?;
    w.flush()?;
    Ok(())
}

pub fn load_instance(path: &std::path::Path) -> Result<Instance, IoError> {
    read_instance(&mut io::BufReader::new(std::fs::File::open(path)?))
}
