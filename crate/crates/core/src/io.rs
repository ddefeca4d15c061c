//! Binary containers for cubes, mask sequences and flow fields.
//!
//! All three share a 32-byte little-endian header:
//!
//! | offset | size | field                                             |
//! |--------|------|---------------------------------------------------|
//! | 0      | 4    | magic (`VCUB`, `MSKS` or `FLOW`)                  |
//! | 4      | 2    | version (1)                                       |
//! | 6      | 2    | dtype: 0 = f32, 1 = f64                           |
//! | 8      | 12   | `n1`, `n2`, `frames` as u32                       |
//! | 20     | 4    | flags (bit 0: measurement cube)                   |
//! | 24     | 8    | reserved: block length as u32, then zero          |
//!
//! `VCUB` payloads are the frames in order, row-major. `MSKS` adds a 40-byte
//! record (family u32, d1 u32, d2 u32, zero u32, seed u64, alpha f64,
//! beta f64), then every mask as f64; dual-scale files append each `sigma_k`
//! as interleaved re/im f64 followed by every `hH_t`. `FLOW` stores, per
//! transition, the `v1` plane then the `v2` plane as f32.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use crate::error::{CakeError, Result};
use crate::fft::Fft2;
use crate::flow::FlowField;
use crate::geometry::SamplingGeometry;
use crate::masks::{replicate_blocks, DsmComponents, MaskFamily, MaskSequence};
use crate::video::{CubeKind, VideoCube};

pub const HEADER_LEN: usize = 32;
const VERSION: u16 = 1;
const MASK_RECORD_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn code(self) -> u16 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    fn from_code(c: u16) -> Result<Self> {
        match c {
            0 => Ok(DType::F32),
            1 => Ok(DType::F64),
            _ => Err(CakeError::Format(format!("unknown dtype code {c}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub magic: [u8; 4],
    pub dtype: DType,
    pub n1: usize,
    pub n2: usize,
    pub frames: usize,
    pub flags: u32,
    pub block_len: usize,
}

impl Header {
    pub fn encode(&self) -> Result<[u8; HEADER_LEN]> {
        let mut h = [0u8; HEADER_LEN];
        h[0..4].copy_from_slice(&self.magic);
        h[4..6].copy_from_slice(&VERSION.to_le_bytes());
        h[6..8].copy_from_slice(&self.dtype.code().to_le_bytes());
        for (k, v) in [self.n1, self.n2, self.frames].into_iter().enumerate() {
            h[8 + 4 * k..12 + 4 * k].copy_from_slice(&to_u32(v)?.to_le_bytes());
        }
        h[20..24].copy_from_slice(&self.flags.to_le_bytes());
        h[24..28].copy_from_slice(&to_u32(self.block_len)?.to_le_bytes());
        Ok(h)
    }

    pub fn decode(bytes: &[u8], magic: &[u8; 4]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(CakeError::Format(format!(
                "truncated header: {} of {HEADER_LEN} bytes",
                bytes.len()
            )));
        }
        if &bytes[0..4] != magic {
            return Err(CakeError::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[0..4]),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(CakeError::Format(format!("unsupported version {version}")));
        }
        let u = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        Ok(Self {
            magic: *magic,
            dtype: DType::from_code(u16::from_le_bytes([bytes[6], bytes[7]]))?,
            n1: u(8),
            n2: u(12),
            frames: u(16),
            flags: u(20) as u32,
            block_len: u(24),
        })
    }

    /// Payload bytes for `frames` planes of `n1 x n2` values.
    pub fn payload_len(&self) -> Result<usize> {
        self.n1
            .checked_mul(self.n2)
            .and_then(|v| v.checked_mul(self.frames))
            .and_then(|v| v.checked_mul(self.dtype.size()))
            .ok_or_else(|| {
                CakeError::Format(format!(
                    "dimension overflow: {} x {} x {}",
                    self.n1, self.n2, self.frames
                ))
            })
    }
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| CakeError::Format(format!("dimension {v} exceeds u32")))
}

fn push_values(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>, dtype: DType) {
    for v in values {
        match dtype {
            DType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            DType::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}

fn read_values(bytes: &[u8], dtype: DType) -> Vec<f64> {
    match dtype {
        DType::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        DType::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    }
}

/// Splits off `len` bytes, failing with a truncation error.
fn take<'a>(bytes: &mut &'a [u8], len: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < len {
        return Err(CakeError::Format(format!(
            "truncated {what}: need {len} bytes, have {}",
            bytes.len()
        )));
    }
    let (head, rest) = bytes.split_at(len);
    *bytes = rest;
    Ok(head)
}

pub fn encode_cube(cube: &VideoCube, dtype: DType) -> Result<Vec<u8>> {
    let (frames, n1, n2) = cube.data.dim();
    let header = Header {
        magic: *b"VCUB",
        dtype,
        n1,
        n2,
        frames,
        flags: u32::from(cube.kind == CubeKind::Measurement),
        block_len: cube.block_len,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len()?);
    out.extend_from_slice(&header.encode()?);
    push_values(&mut out, cube.data.iter().copied(), dtype);
    Ok(out)
}

pub fn decode_cube(bytes: &[u8]) -> Result<VideoCube> {
    let header = Header::decode(bytes, b"VCUB")?;
    let mut rest = &bytes[HEADER_LEN..];
    let payload = take(&mut rest, header.payload_len()?, "cube payload")?;
    if !rest.is_empty() {
        return Err(CakeError::Format(format!("{} trailing bytes", rest.len())));
    }
    let data = Array3::from_shape_vec(
        (header.frames, header.n1, header.n2),
        read_values(payload, header.dtype),
    )
    .map_err(|e| CakeError::Format(e.to_string()))?;
    let kind = if header.flags & 1 == 1 {
        CubeKind::Measurement
    } else {
        CubeKind::Scene
    };
    Ok(VideoCube::new(kind, header.block_len, data))
}

/// Writes a cube as f64, which round-trips bit-exactly.
pub fn write_cube(cube: &VideoCube, path: impl AsRef<Path>) -> Result<()> {
    write_cube_as(cube, path, DType::F64)
}

pub fn write_cube_as(cube: &VideoCube, path: impl AsRef<Path>, dtype: DType) -> Result<()> {
    fs::write(path, encode_cube(cube, dtype)?)?;
    Ok(())
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<VideoCube> {
    decode_cube(&fs::read(path)?)
}

pub fn encode_masks(seq: &MaskSequence) -> Result<Vec<u8>> {
    let g = &seq.geometry;
    let header = Header {
        magic: *b"MSKS",
        dtype: DType::F64,
        n1: g.n1,
        n2: g.n2,
        frames: g.frames,
        flags: 0,
        block_len: g.block_len,
    };
    let mut out = Vec::new();
    out.extend_from_slice(&header.encode()?);
    out.extend_from_slice(&seq.family.code().to_le_bytes());
    out.extend_from_slice(&to_u32(g.d1)?.to_le_bytes());
    out.extend_from_slice(&to_u32(g.d2)?.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&seq.seed.to_le_bytes());
    let (alpha, beta) = seq.dsm.as_ref().map_or((0.0, 0.0), |c| (c.alpha, c.beta));
    out.extend_from_slice(&alpha.to_le_bytes());
    out.extend_from_slice(&beta.to_le_bytes());
    for h in &seq.masks {
        push_values(&mut out, h.iter().copied(), DType::F64);
    }
    if let Some(c) = &seq.dsm {
        for s in &c.spectra {
            push_values(&mut out, s.iter().flat_map(|z| [z.re, z.im]), DType::F64);
        }
        for h in &c.high_res {
            push_values(&mut out, h.iter().copied(), DType::F64);
        }
    }
    Ok(out)
}

pub fn decode_masks(bytes: &[u8]) -> Result<MaskSequence> {
    let header = Header::decode(bytes, b"MSKS")?;
    let mut rest = &bytes[HEADER_LEN..];
    let rec = take(&mut rest, MASK_RECORD_LEN, "mask record")?;
    let u = |o: usize| u32::from_le_bytes(rec[o..o + 4].try_into().unwrap());
    let f = |o: usize| f64::from_le_bytes(rec[o..o + 8].try_into().unwrap());
    let family = MaskFamily::from_code(u(0))
        .ok_or_else(|| CakeError::Format(format!("unknown mask family code {}", u(0))))?;
    let geometry = SamplingGeometry::new(
        header.n1,
        header.n2,
        header.frames,
        u(4) as usize,
        u(8) as usize,
        header.block_len,
    )
    .map_err(|e| CakeError::Format(format!("invalid geometry: {e}")))?;
    let seed = u64::from_le_bytes(rec[16..24].try_into().unwrap());
    let (alpha, beta) = (f(24), f(32));

    let (n1, n2) = (geometry.n1, geometry.n2);
    let plane = n1 * n2 * 8;
    let planes = |count: usize, what: &str, rest: &mut &[u8]| -> Result<Vec<Array2<f64>>> {
        let total = plane
            .checked_mul(count)
            .ok_or_else(|| CakeError::Format("dimension overflow".into()))?;
        let raw = read_values(take(rest, total, what)?, DType::F64);
        Ok(raw
            .chunks_exact(n1 * n2)
            .map(|c| Array2::from_shape_vec((n1, n2), c.to_vec()).unwrap())
            .collect())
    };
    let masks = planes(geometry.frames, "mask payload", &mut rest)?;

    let dsm = if family == MaskFamily::DualScale {
        let (m1, m2) = (geometry.m1(), geometry.m2());
        let raw = read_values(
            take(&mut rest, m1 * m2 * 16 * geometry.blocks(), "spectra")?,
            DType::F64,
        );
        let spectra: Vec<_> = raw
            .chunks_exact(2 * m1 * m2)
            .map(|c| {
                let z = c.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
                Array2::from_shape_vec((m1, m2), z).unwrap()
            })
            .collect();
        let high_res = planes(geometry.frames, "high-resolution masks", &mut rest)?;
        let fft = Fft2::new(m1, m2);
        let low_res = spectra
            .iter()
            .map(|s| replicate_blocks(&fft.inverse_real(s.clone()), geometry.d1, geometry.d2))
            .collect();
        Some(DsmComponents {
            alpha,
            beta,
            spectra,
            low_res,
            high_res,
        })
    } else {
        None
    };
    if !rest.is_empty() {
        return Err(CakeError::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok(MaskSequence {
        geometry,
        family,
        seed,
        masks,
        dsm,
    })
}

pub fn write_masks(seq: &MaskSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_masks(seq)?)?;
    Ok(())
}

pub fn read_masks(path: impl AsRef<Path>) -> Result<MaskSequence> {
    decode_masks(&fs::read(path)?)
}

pub fn encode_flow(flow: &FlowField) -> Result<Vec<u8>> {
    flow.validate()?;
    let (n1, n2) = flow.frame_shape();
    let header = Header {
        magic: *b"FLOW",
        dtype: DType::F32,
        n1,
        n2,
        frames: flow.transitions(),
        flags: 0,
        block_len: 0,
    };
    let mut out = Vec::new();
    out.extend_from_slice(&header.encode()?);
    for t in 0..flow.transitions() {
        push_values(&mut out, flow.v1.index_axis(Axis(0), t).iter().copied(), DType::F32);
        push_values(&mut out, flow.v2.index_axis(Axis(0), t).iter().copied(), DType::F32);
    }
    Ok(out)
}

pub fn decode_flow(bytes: &[u8]) -> Result<FlowField> {
    let header = Header::decode(bytes, b"FLOW")?;
    let mut rest = &bytes[HEADER_LEN..];
    let len = header
        .payload_len()?
        .checked_mul(2)
        .ok_or_else(|| CakeError::Format("dimension overflow".into()))?;
    let raw = read_values(take(&mut rest, len, "flow payload")?, header.dtype);
    let (t, n1, n2) = (header.frames, header.n1, header.n2);
    let mut flow = FlowField::zeros(t, n1, n2);
    for (k, plane) in raw.chunks_exact(n1 * n2).enumerate() {
        let target = if k % 2 == 0 { &mut flow.v1 } else { &mut flow.v2 };
        let view = ndarray::ArrayView2::from_shape((n1, n2), plane).unwrap();
        target.index_axis_mut(Axis(0), k / 2).assign(&view);
    }
    Ok(flow)
}

pub fn write_flow(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_flow(flow)?)?;
    Ok(())
}

pub fn read_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    decode_flow(&fs::read(path)?)
}
