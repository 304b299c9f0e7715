//! bzip2 sizes without keeping the compressed bytes.

use std::io::{self, Write};

use bzip2::write::BzEncoder;
use bzip2::Compression;
use semgap_core::gap::{Compressor, CompressorSpec, SizeSink};

/// Discards bytes, remembering how many passed through.
#[derive(Debug, Default)]
pub struct CountingWriter {
    pub count: u64,
}

impl Write for CountingWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.count += buf.len() as u64;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bzip2 {
    level: u32,
}

impl Bzip2 {
    pub fn new(spec: &CompressorSpec) -> io::Result<Self> {
        if spec.format != "bzip2" {
            return Err(io::Error::new(
                io::ErrorKind::Unsupported,
                format!("unsupported compressor format {:?}", spec.format),
            ));
        }
        if !(1..=9).contains(&spec.level) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("bzip2 level must be 1..=9, got {}", spec.level),
            ));
        }
        Ok(Bzip2 { level: spec.level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }
}

impl Default for Bzip2 {
    fn default() -> Self {
        Bzip2 { level: 9 }
    }
}

pub struct Bzip2Sink(BzEncoder<CountingWriter>);

impl SizeSink for Bzip2Sink {
    type Error = io::Error;

    fn write(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.0.write_all(bytes)
    }

    fn finish(self) -> io::Result<u64> {
        Ok(self.0.finish()?.count)
    }
}

impl Compressor for Bzip2 {
    type Error = io::Error;
    type Sink = Bzip2Sink;

    fn sink(&self) -> io::Result<Bzip2Sink> {
        Ok(Bzip2Sink(BzEncoder::new(CountingWriter::default(), Compression::new(self.level))))
    }

    fn identity(&self) -> String {
        format!("bzip2 -{} (bzip2 crate {})", self.level, BZIP2_CRATE_VERSION)
    }
}

const BZIP2_CRATE_VERSION: &str = "0.6";
