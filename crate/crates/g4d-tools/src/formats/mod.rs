//! Binary and text artifact formats. Everything is little-endian f32 on
//! disk; the in-memory model stays f64.

pub mod codebook;
pub mod frame;
pub mod masks;
pub mod ply;
pub mod scene;
pub mod scores;

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::ToolsError;
use crate::Result;

/// Cursor over a byte buffer that reports offsets in format errors.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(ToolsError::format(
                self.pos,
                format!("truncated input: expected {n} bytes for {what}, {} left", self.remaining()),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let offset = self.pos;
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(ToolsError::format(
                offset,
                format!(
                    "bad magic: expected {:?}, got {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16_le(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub fn u32_le(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn f32_le(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn bytes(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        self.take(n, what)
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(ToolsError::format(
                self.pos,
                format!("{} trailing bytes after the payload", self.remaining()),
            ));
        }
        Ok(())
    }
}

pub(crate) fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn push_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Write via a temp file and atomic rename so failed runs leave no partial
/// artifact behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| ToolsError::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = Path::new(&tmp);
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(tmp_path).map_err(|e| ToolsError::io(tmp_path, e))?;
        f.write_all(bytes).map_err(|e| ToolsError::io(tmp_path, e))?;
        f.sync_all().map_err(|e| ToolsError::io(tmp_path, e))?;
        fs::rename(tmp_path, path).map_err(|e| ToolsError::io(path, e))?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(tmp_path);
    }
    result
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| ToolsError::io(path, e))
}
