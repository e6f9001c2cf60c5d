//! Frame exports: binary PPM (P6, 8-bit) for viewing and a raw f32 planar
//! dump (".frame") for exact comparisons.
//!
//! Dump layout: magic "FRM1", u32 W, u32 H, then the R, G, B planes followed
//! by the transmittance plane, row-major little-endian f32.

use std::path::Path;

use g4d_core::RenderFrame;

use super::{push_f32, push_u32, read_file, write_atomic, ByteReader};
use crate::error::ToolsError;
use crate::Result;

pub const MAGIC: &[u8; 4] = b"FRM1";

pub fn frame_dump_size(width: u32, height: u32) -> usize {
    12 + (width as usize * height as usize) * 4 * 4
}

pub fn encode_frame(frame: &RenderFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame_dump_size(frame.width, frame.height));
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, frame.width);
    push_u32(&mut out, frame.height);
    for channel in 0..3 {
        for px in 0..(frame.width * frame.height) as usize {
            push_f32(&mut out, frame.rgb[3 * px + channel]);
        }
    }
    for &t in &frame.transmittance {
        push_f32(&mut out, t);
    }
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<RenderFrame> {
    let mut r = ByteReader::new(bytes);
    r.magic(MAGIC)?;
    let size_at = r.pos();
    let width = r.u32_le("width")?;
    let height = r.u32_le("height")?;
    let n = width as usize * height as usize;
    if n == 0 || width > 4096 || height > 4096 {
        return Err(ToolsError::format(size_at, format!("bad frame size {width}x{height}")));
    }
    let mut rgb = vec![0.0f32; n * 3];
    for channel in 0..3 {
        for px in 0..n {
            rgb[3 * px + channel] = r.f32_le("pixel")?;
        }
    }
    let mut transmittance = vec![0.0f32; n];
    for t in transmittance.iter_mut() {
        *t = r.f32_le("transmittance")?;
    }
    r.finish()?;
    Ok(RenderFrame { width, height, rgb, transmittance })
}

/// 8-bit binary PPM of the RGB planes.
pub fn encode_ppm(frame: &RenderFrame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    for &v in &frame.rgb {
        out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    out
}

pub fn write_frame(path: &Path, frame: &RenderFrame) -> Result<()> {
    write_atomic(path, &encode_frame(frame))
}

pub fn read_frame(path: &Path) -> Result<RenderFrame> {
    decode_frame(&read_file(path)?)
}

pub fn write_ppm(path: &Path, frame: &RenderFrame) -> Result<()> {
    write_atomic(path, &encode_ppm(frame))
}
