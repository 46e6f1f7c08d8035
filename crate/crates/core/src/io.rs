//! Binary tensor containers.
//!
//! All three share a little-endian header prefix `magic[4] version:u16 dtype:u8`
//! followed by `u32` extents, a `u32` flags word, and an `f32` LE payload.
//!
//! | magic  | extents            | payload                                      |
//! |--------|--------------------|----------------------------------------------|
//! | `LVFT` | `T, N, d, L_enc`   | patch `(t, n, c)` then cls `(t, layer, c)`   |
//! | `LVPW` | `d_out, d`         | matrix `(d_out, d)` then bias `(d_out)`      |
//! | `LVCR` | `rows, d_out`      | rows `(row, c)`                              |
//!
//! Version is 1 and dtype 0 (`f32`) for every container; flags must be 0.

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result, TensorLocation};
use crate::types::{VideoFeatures, VideoShape};

pub const LVFT_MAGIC: [u8; 4] = *b"LVFT";
pub const LVPW_MAGIC: [u8; 4] = *b"LVPW";
pub const LVCR_MAGIC: [u8; 4] = *b"LVCR";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;

/// Header size of `LVFT`: magic, version, dtype, four extents, flags.
pub const LVFT_HEADER_LEN: usize = 4 + 2 + 1 + 4 * 4 + 4;
/// Header size of `LVPW` and `LVCR`: magic, version, dtype, two extents, flags.
pub const MATRIX_HEADER_LEN: usize = 4 + 2 + 1 + 2 * 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LvftHeader {
    pub version: u16,
    pub dtype: u8,
    pub frames: u32,
    pub patches: u32,
    pub dim: u32,
    pub layers: u32,
    pub flags: u32,
}

impl LvftHeader {
    pub fn for_shape(shape: VideoShape) -> Result<Self> {
        let cast = |x: usize| {
            u32::try_from(x).map_err(|_| Error::InvalidShape(format!("extent {x} exceeds u32")))
        };
        Ok(Self {
            version: VERSION,
            dtype: DTYPE_F32,
            frames: cast(shape.frames)?,
            patches: cast(shape.patches)?,
            dim: cast(shape.dim)?,
            layers: cast(shape.layers)?,
            flags: 0,
        })
    }

    pub fn to_bytes(&self) -> [u8; LVFT_HEADER_LEN] {
        let mut out = [0u8; LVFT_HEADER_LEN];
        out[..4].copy_from_slice(&LVFT_MAGIC);
        out[4..6].copy_from_slice(&self.version.to_le_bytes());
        out[6] = self.dtype;
        for (i, v) in [self.frames, self.patches, self.dim, self.layers, self.flags].iter().enumerate() {
            out[7 + 4 * i..11 + 4 * i].copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn parse(bytes: &[u8; LVFT_HEADER_LEN]) -> Result<Self> {
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&bytes[..4]);
        check_prefix(LVFT_MAGIC, magic, bytes)?;
        let word = |i: usize| u32_at(bytes, 7 + 4 * i);
        let header = Self {
            version: VERSION,
            dtype: DTYPE_F32,
            frames: word(0),
            patches: word(1),
            dim: word(2),
            layers: word(3),
            flags: word(4),
        };
        if header.flags != 0 {
            return Err(Error::ReservedFlags(header.flags));
        }
        Ok(header)
    }

    pub fn shape(&self) -> VideoShape {
        VideoShape {
            frames: self.frames as usize,
            patches: self.patches as usize,
            dim: self.dim as usize,
            layers: self.layers as usize,
        }
    }

    /// `4·(T·N·d + T·L_enc·d)`, computed without overflow.
    pub fn payload_len(&self) -> u128 {
        let (t, n, d, l) =
            (self.frames as u128, self.patches as u128, self.dim as u128, self.layers as u128);
        4 * (t * n * d + t * l * d)
    }
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn check_prefix(expected: [u8; 4], found: [u8; 4], bytes: &[u8]) -> Result<()> {
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    if bytes[6] != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(bytes[6]));
    }
    Ok(())
}

fn read_header<const LEN: usize>(reader: &mut impl Read) -> Result<[u8; LEN]> {
    let mut buf = [0u8; LEN];
    let mut filled = 0;
    while filled < LEN {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::TruncatedPayload { expected: LEN as u128, actual: filled as u128 })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(buf)
}

/// Reads the remaining payload, refusing to buffer more than `expected` bytes.
fn read_payload(reader: &mut impl Read, expected: u128) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    let limit = u64::try_from(expected).unwrap_or(u64::MAX).saturating_add(1);
    reader.take(limit).read_to_end(&mut bytes)?;
    if bytes.len() as u128 != expected {
        // Count what is actually there so the error reports a true length.
        let extra = if bytes.len() as u128 > expected { io::copy(reader, &mut io::sink())? } else { 0 };
        return Err(Error::TruncatedPayload {
            expected,
            actual: bytes.len() as u128 + extra as u128,
        });
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
}

fn write_floats(writer: &mut impl Write, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(4 * 4096);
    for chunk in values.chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        writer.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_features(mut reader: impl Read) -> Result<VideoFeatures> {
    let header = LvftHeader::parse(&read_header::<LVFT_HEADER_LEN>(&mut reader)?)?;
    let shape = header.shape();
    shape.check()?;
    let mut payload = read_payload(&mut reader, header.payload_len())?;
    let cls = payload.split_off(shape.patch_len()?);
    VideoFeatures::new(shape, payload, cls)
}

/// Writes an `LVFT` container and returns the total byte count.
pub fn write_features(features: &VideoFeatures, writer: impl Write) -> Result<u64> {
    let header = LvftHeader::for_shape(features.shape())?;
    let mut w = BufWriter::new(writer);
    w.write_all(&header.to_bytes())?;
    write_floats(&mut w, features.patch_tokens())?;
    write_floats(&mut w, features.cls_tokens())?;
    w.flush()?;
    Ok(LVFT_HEADER_LEN as u64 + header.payload_len() as u64)
}

/// A dense row-major `f32` matrix as carried by `LVCR`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

fn matrix_header(magic: [u8; 4], a: usize, b: usize) -> Result<[u8; MATRIX_HEADER_LEN]> {
    let cast = |x: usize| {
        u32::try_from(x).map_err(|_| Error::InvalidShape(format!("extent {x} exceeds u32")))
    };
    let mut out = [0u8; MATRIX_HEADER_LEN];
    out[..4].copy_from_slice(&magic);
    out[4..6].copy_from_slice(&VERSION.to_le_bytes());
    out[6] = DTYPE_F32;
    out[7..11].copy_from_slice(&cast(a)?.to_le_bytes());
    out[11..15].copy_from_slice(&cast(b)?.to_le_bytes());
    Ok(out)
}

fn parse_matrix_header(magic: [u8; 4], bytes: &[u8; MATRIX_HEADER_LEN]) -> Result<(usize, usize)> {
    check_prefix(magic, bytes[..4].try_into().unwrap(), bytes)?;
    let flags = u32_at(bytes, 15);
    if flags != 0 {
        return Err(Error::ReservedFlags(flags));
    }
    Ok((u32_at(bytes, 7) as usize, u32_at(bytes, 11) as usize))
}

fn check_finite(values: &[f32], cols: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteValue(TensorLocation::Flat { row: i / cols, col: i % cols })),
        None => Ok(()),
    }
}

/// Reads an `LVCR` container of compressed output rows.
pub fn read_compressed(mut reader: impl Read) -> Result<Matrix> {
    let (rows, cols) = parse_matrix_header(LVCR_MAGIC, &read_header(&mut reader)?)?;
    if cols == 0 {
        return Err(Error::InvalidShape("LVCR with zero columns".into()));
    }
    let data = read_payload(&mut reader, 4 * rows as u128 * cols as u128)?;
    check_finite(&data, cols)?;
    Ok(Matrix { rows, cols, data })
}

pub fn write_compressed(matrix: &Matrix, writer: impl Write) -> Result<u64> {
    if matrix.data.len() != matrix.rows * matrix.cols {
        return Err(Error::InvalidShape("matrix data does not match extents".into()));
    }
    let mut w = BufWriter::new(writer);
    w.write_all(&matrix_header(LVCR_MAGIC, matrix.rows, matrix.cols)?)?;
    write_floats(&mut w, &matrix.data)?;
    w.flush()?;
    Ok((MATRIX_HEADER_LEN + 4 * matrix.data.len()) as u64)
}

/// Raw contents of an `LVPW` container: `(d_out, d, matrix, bias)`.
pub fn read_weights(mut reader: impl Read) -> Result<(usize, usize, Vec<f32>, Vec<f32>)> {
    let (d_out, d) = parse_matrix_header(LVPW_MAGIC, &read_header(&mut reader)?)?;
    if d_out == 0 || d == 0 {
        return Err(Error::InvalidShape("LVPW extents must be positive".into()));
    }
    let mut data = read_payload(&mut reader, 4 * (d_out as u128 * d as u128 + d_out as u128))?;
    check_finite(&data, d)?;
    let bias = data.split_off(d_out * d);
    Ok((d_out, d, data, bias))
}

pub fn write_weights(d_out: usize, d: usize, matrix: &[f32], bias: &[f32], writer: impl Write) -> Result<u64> {
    if matrix.len() != d_out * d || bias.len() != d_out {
        return Err(Error::InvalidShape("weights do not match extents".into()));
    }
    let mut w = BufWriter::new(writer);
    w.write_all(&matrix_header(LVPW_MAGIC, d_out, d)?)?;
    write_floats(&mut w, matrix)?;
    write_floats(&mut w, bias)?;
    w.flush()?;
    Ok((MATRIX_HEADER_LEN + 4 * (matrix.len() + bias.len())) as u64)
}

/// Writes `path` via a sibling temp file and a rename, so failures leave no partial file.
pub fn write_file_atomic<F>(path: &Path, write: F) -> Result<u64>
where
    F: FnOnce(&mut fs::File) -> Result<u64>,
{
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp).map_err(Error::from).and_then(|mut file| {
        let n = write(&mut file)?;
        file.sync_all()?;
        Ok(n)
    });
    match result {
        Ok(n) => {
            fs::rename(&tmp, path)?;
            Ok(n)
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}
