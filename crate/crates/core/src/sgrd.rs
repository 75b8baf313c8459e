//! The SGRD grid file format and a PGM preview writer.
//!
//! Layout (little-endian): `b"SGRD"`, version byte `0x01`, `ncols: u32`,
//! `nrows: u32`, `pixel_size_m: f64`, `origin_lat: f64`, `origin_lon: f64`,
//! then `nrows * ncols` `f32` values in row-major order. Masked pixels are
//! stored as the canonical quiet NaN.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Grid;

pub const MAGIC: &[u8; 4] = b"SGRD";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 8 + 8 + 8;

const QUIET_NAN: u32 = 0x7fc0_0000;

pub fn encode(g: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * g.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(g.ncols() as u32).to_le_bytes());
    out.extend_from_slice(&(g.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&g.pixel_size_m().to_le_bytes());
    let (lat, lon) = g.origin();
    out.extend_from_slice(&lat.to_le_bytes());
    out.extend_from_slice(&lon.to_le_bytes());
    for (&v, &ok) in g.values().iter().zip(g.validity()) {
        let bits = if ok && v.is_finite() {
            (v as f32).to_bits()
        } else {
            QUIET_NAN
        };
        out.extend_from_slice(&bits.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Grid> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("SGRD too short: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad SGRD magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported SGRD version {}", bytes[4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let ncols = u32_at(5) as usize;
    let nrows = u32_at(9) as usize;
    let pixel_size_m = f64_at(13);
    let origin_lat = f64_at(21);
    let origin_lon = f64_at(29);
    let n = ncols
        .checked_mul(nrows)
        .ok_or_else(|| Error::Format("SGRD dimensions overflow".into()))?;
    let expected = HEADER_LEN + 4 * n;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "SGRD {ncols}x{nrows} needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    Grid::new(ncols, nrows, pixel_size_m, origin_lat, origin_lon, values)
}

pub fn read(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write(path: impl AsRef<Path>, g: &Grid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(g)).map_err(|e| Error::io(path, e))
}

/// Linear 8-bit scaling used for PGM previews: `value = gray * scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayScale {
    pub offset: f64,
    pub scale: f64,
}

impl GrayScale {
    /// Maps `[lo, hi]` onto `[0, 255]`.
    pub fn range(lo: f64, hi: f64) -> Self {
        let span = hi - lo;
        GrayScale {
            offset: lo,
            scale: if span > 0.0 { span / 255.0 } else { 1.0 },
        }
    }

    /// Range spanning the valid values of `g`, `[0, 1]` when nothing is valid.
    pub fn fit(g: &Grid) -> Self {
        let (lo, hi) = g
            .values()
            .iter()
            .zip(g.validity())
            .filter(|(_, &ok)| ok)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
                (lo.min(v), hi.max(v))
            });
        if lo.is_finite() {
            Self::range(lo, hi)
        } else {
            Self::range(0.0, 1.0)
        }
    }

    pub fn gray(&self, v: f64) -> u8 {
        ((v - self.offset) / self.scale).round().clamp(0.0, 255.0) as u8
    }
}

/// Binary PGM (P5, maxval 255); masked pixels are written as 0.
pub fn encode_pgm(g: &Grid, scale: GrayScale) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.ncols(), g.nrows()).into_bytes();
    out.extend(
        g.values()
            .iter()
            .zip(g.validity())
            .map(|(&v, &ok)| if ok { scale.gray(v) } else { 0 }),
    );
    out
}

/// Writes `path` and a sidecar `path.txt` documenting the gray-level mapping.
pub fn write_pgm(path: impl AsRef<Path>, g: &Grid, scale: GrayScale) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g, scale)).map_err(|e| Error::io(path, e))?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".txt");
    let mut f = fs::File::create(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    writeln!(
        f,
        "maxval 255\nvalue = gray * {:?} + {:?}\nmasked pixels are gray 0",
        scale.scale, scale.offset
    )
    .map_err(|e| Error::io(&sidecar, e))?;
    Ok(())
}
