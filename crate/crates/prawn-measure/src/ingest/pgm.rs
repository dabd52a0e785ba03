//! Depth and mask rasters.
//!
//! Depth travels either as binary PGM (`P5`, maxval 65535, big-endian sample
//! order per the PGM spec) or as raw little-endian `.z16` with dimensions
//! supplied out of band. Masks are 8-bit PGM, 0 = background, 255 = instance.

use crate::error::{Error, Result};
use crate::ingest::{BinaryMask, DepthFrame};

/// How a depth payload is encoded on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthEncoding {
    /// `P5` PGM with maxval 65535.
    Pgm16,
    /// Bare little-endian u16 samples, row-major.
    RawZ16,
}

impl DepthEncoding {
    /// Pick the encoding from a file name; `.pgm` is the default.
    pub fn from_path(path: &str) -> DepthEncoding {
        if path.ends_with(".z16") {
            DepthEncoding::RawZ16
        } else {
            DepthEncoding::Pgm16
        }
    }
}

pub fn load_depth(
    bytes: &[u8],
    encoding: DepthEncoding,
    expected_width: u32,
    expected_height: u32,
    depth_scale: f64,
) -> Result<DepthFrame> {
    let n = expected_width as usize * expected_height as usize;
    match encoding {
        DepthEncoding::Pgm16 => {
            let (w, h, maxval, data) = parse_pgm(bytes)?;
            if maxval != 65535 {
                return Err(Error::Format(format!(
                    "depth PGM maxval {maxval}, expected 65535"
                )));
            }
            if (w, h) != (expected_width, expected_height) {
                return Err(Error::Format(format!(
                    "depth PGM is {w}x{h}, expected {expected_width}x{expected_height}"
                )));
            }
            if data.len() != n * 2 {
                return Err(Error::Format(format!(
                    "depth PGM payload is {} bytes, expected {}",
                    data.len(),
                    n * 2
                )));
            }
            let values = data
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]))
                .collect();
            DepthFrame::new(expected_width, expected_height, values, depth_scale)
        }
        DepthEncoding::RawZ16 => {
            if !bytes.len().is_multiple_of(2) {
                return Err(Error::Format(format!(
                    "raw z16 payload has odd length {}",
                    bytes.len()
                )));
            }
            if bytes.len() != n * 2 {
                return Err(Error::Format(format!(
                    "raw z16 payload is {} bytes, expected {}",
                    bytes.len(),
                    n * 2
                )));
            }
            let values = bytes
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .collect();
            DepthFrame::new(expected_width, expected_height, values, depth_scale)
        }
    }
}

/// Encode a depth frame as 16-bit binary PGM.
pub fn write_depth_pgm(frame: &DepthFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", frame.width, frame.height).into_bytes();
    out.reserve(frame.values.len() * 2);
    for v in &frame.values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

/// Load an 8-bit PGM instance mask; any value above 127 counts as set.
pub fn load_mask_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    let (w, h, maxval, data) = parse_pgm(bytes)?;
    if maxval > 255 {
        return Err(Error::Format(format!(
            "mask PGM maxval {maxval}, expected <= 255"
        )));
    }
    if data.len() != w as usize * h as usize {
        return Err(Error::Format(format!(
            "mask PGM payload is {} bytes, expected {}",
            data.len(),
            w as usize * h as usize
        )));
    }
    let mut mask = BinaryMask::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if data[y as usize * w as usize + x as usize] > 127 {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

pub fn write_mask_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.reserve(mask.width as usize * mask.height as usize);
    for y in 0..mask.height {
        for x in 0..mask.width {
            out.push(if mask.get(x, y) { 255 } else { 0 });
        }
    }
    out
}

/// 8-bit constant-gray PGM; used for colour-slot placeholder frames, which
/// the pipeline never decodes beyond the header.
pub fn write_gray_pgm(width: u32, height: u32, level: u8) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(std::iter::repeat_n(level, width as usize * height as usize));
    out
}

/// Parse a binary PGM header; returns (width, height, maxval, payload).
fn parse_pgm(bytes: &[u8]) -> Result<(u32, u32, u32, &[u8])> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::Format("not a binary PGM (missing P5 magic)".into()));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and `#` comment lines.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated PGM header".into())),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(Error::Format("malformed PGM header field".into()));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::Format(format!("PGM header field `{text}` out of range")))?;
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("missing PGM header terminator".into())),
    }
    if fields[0] == 0 || fields[1] == 0 {
        return Err(Error::Format("PGM with zero dimension".into()));
    }
    Ok((fields[0], fields[1], fields[2], &bytes[pos..]))
}
