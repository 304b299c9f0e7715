//! Embedding persistence.
//!
//! Binary layout (little-endian): the 8-byte magic, `u32` dimension, `u32`
//! vocabulary size, then per word a `u32` byte length, the UTF-8 token, a
//! `u64` frequency and `dim` `f32` components. Words appear in vocabulary
//! order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use semgap_core::embed::{EmbeddingSpace, Vocab};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SGEMBv1\0";

pub fn write_binary(space: &EmbeddingSpace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::with_capacity(1 << 16, file);
    let mut write = || -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(space.dim() as u32).to_le_bytes())?;
        out.write_all(&(space.len() as u32).to_le_bytes())?;
        let vocab = space.vocab();
        for i in 0..space.len() {
            let word = vocab.word(i).as_bytes();
            out.write_all(&(word.len() as u32).to_le_bytes())?;
            out.write_all(word)?;
            out.write_all(&vocab.count(i).to_le_bytes())?;
            for v in space.row(i) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()
    };
    write().map_err(Error::io(path))
}

fn read_exact<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_binary(path: &Path) -> Result<EmbeddingSpace> {
    let file = File::open(path).map_err(Error::io(path))?;
    let mut r = BufReader::with_capacity(1 << 16, file);
    let bad = |what: &str| Error::Data(format!("{}: {what}", path.display()));
    let magic: [u8; 8] = read_exact(&mut r).map_err(Error::io(path))?;
    if &magic != MAGIC {
        return Err(bad("not an embedding file"));
    }
    let dim = u32::from_le_bytes(read_exact(&mut r).map_err(Error::io(path))?) as usize;
    let n = u32::from_le_bytes(read_exact(&mut r).map_err(Error::io(path))?) as usize;
    let mut words = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let len = u32::from_le_bytes(read_exact(&mut r).map_err(Error::io(path))?) as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes).map_err(Error::io(path))?;
        let word = String::from_utf8(bytes).map_err(|_| bad("token is not UTF-8"))?;
        let freq = u64::from_le_bytes(read_exact(&mut r).map_err(Error::io(path))?);
        words.push((word, freq));
        for _ in 0..dim {
            vectors.push(f32::from_le_bytes(read_exact(&mut r).map_err(Error::io(path))?));
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(Error::io(path))? != 0 {
        return Err(bad("trailing bytes"));
    }
    let vocab = Vocab::from_ordered(words).map_err(|e| bad(&e.to_string()))?;
    EmbeddingSpace::from_parts(vocab, dim, vectors).map_err(|e| bad(&e.to_string()))
}

/// One word per line followed by its space-separated components.
pub fn write_text(space: &EmbeddingSpace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for i in 0..space.len() {
            out.write_all(space.vocab().word(i).as_bytes())?;
            for v in space.row(i) {
                write!(out, " {v}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write().map_err(Error::io(path))
}
