//! Codebook container (".g4dc").
//!
//! Layout: magic "G4DC", u32 K, u32 dim, u32 n_assignments, u8 index_width
//! (2 when K <= 65536, else 4), u8[3] padding, K x dim f32 entries, then
//! n_assignments indices of the flagged width.

use std::path::Path;

use g4d_core::Codebook;

use super::{push_f32, push_u16, push_u32, read_file, write_atomic, ByteReader};
use crate::error::ToolsError;
use crate::Result;

pub const MAGIC: &[u8; 4] = b"G4DC";

fn index_width(k: usize) -> usize {
    if k <= 65536 {
        2
    } else {
        4
    }
}

pub fn codebook_size(k: usize, dim: usize, n_assignments: usize) -> usize {
    20 + k * dim * 4 + n_assignments * index_width(k)
}

pub fn encode_codebook(cb: &Codebook) -> Vec<u8> {
    let width = index_width(cb.k);
    let mut out = Vec::with_capacity(codebook_size(cb.k, cb.dim, cb.assignments.len()));
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, cb.k as u32);
    push_u32(&mut out, cb.dim as u32);
    push_u32(&mut out, cb.assignments.len() as u32);
    out.push(width as u8);
    out.extend_from_slice(&[0u8; 3]);
    for &e in &cb.entries {
        push_f32(&mut out, e as f32);
    }
    for &a in &cb.assignments {
        if width == 2 {
            push_u16(&mut out, a as u16);
        } else {
            push_u32(&mut out, a);
        }
    }
    out
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    let mut r = ByteReader::new(bytes);
    r.magic(MAGIC)?;
    let k_at = r.pos();
    let k = r.u32_le("K")? as usize;
    let dim = r.u32_le("dim")? as usize;
    if k == 0 || dim == 0 {
        return Err(ToolsError::format(k_at, "K and dim must be positive"));
    }
    let n = r.u32_le("assignment count")? as usize;
    let width_at = r.pos();
    let width = r.u8("index width")? as usize;
    if width != index_width(k) {
        return Err(ToolsError::format(
            width_at,
            format!("index width {width} does not match K = {k}"),
        ));
    }
    r.bytes(3, "padding")?;
    let mut entries = Vec::with_capacity(k * dim);
    for _ in 0..k * dim {
        let at = r.pos();
        let e = r.f32_le("entry")? as f64;
        if !e.is_finite() {
            return Err(ToolsError::format(at, "non-finite codebook entry"));
        }
        entries.push(e);
    }
    let mut assignments = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.pos();
        let a = if width == 2 { r.u16_le("assignment")? as u32 } else { r.u32_le("assignment")? };
        if a as usize >= k {
            return Err(ToolsError::format(at, format!("assignment {a} out of range {k}")));
        }
        assignments.push(a);
    }
    r.finish()?;
    Ok(Codebook { k, dim, entries, assignments })
}

pub fn write_codebook(path: &Path, cb: &Codebook) -> Result<()> {
    write_atomic(path, &encode_codebook(cb))
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    decode_codebook(&read_file(path)?)
}
