//! Binary container for pre-computed cochleagrams.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes   "NSCOCHLG"
//! version    u32       1
//! channels   u32
//! samples    u32
//! per sample:
//!   label    u8
//!   frames   u32
//!   values   frames × channels f32, frame-major
//! ```
//!
//! Values must lie in `[-1, 1]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spatiotemporal::{FrameSequence, ValueMode};

pub const COCHLEAGRAM_MAGIC: &[u8; 8] = b"NSCOCHLG";
pub const COCHLEAGRAM_VERSION: u32 = 1;

const CTX: &str = "cochleagram file";

fn eof_as_truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Truncated {
            context: CTX,
            needed: 0,
            available: 0,
        }
    } else {
        Error::Io(e)
    }
}

/// Writes samples in the container format. Values are stored as `f32`.
pub fn write_cochleagrams<T: Scalar, W: Write>(
    mut w: W,
    n_channels: usize,
    samples: &[FrameSequence<T>],
) -> Result<()> {
    w.write_all(COCHLEAGRAM_MAGIC)?;
    w.write_u32::<LittleEndian>(COCHLEAGRAM_VERSION)?;
    w.write_u32::<LittleEndian>(u32::try_from(n_channels).map_err(|_| {
        Error::InvalidConfig(format!("{n_channels} channels exceed the format limit"))
    })?)?;
    w.write_u32::<LittleEndian>(samples.len() as u32)?;
    for s in samples {
        if s.n_channels() != n_channels {
            return Err(Error::DimensionMismatch {
                context: "cochleagram channels",
                expected: n_channels,
                actual: s.n_channels(),
            });
        }
        let label = u8::try_from(s.label()).map_err(|_| {
            Error::InvalidConfig(format!("label {} does not fit in a byte", s.label()))
        })?;
        w.write_u8(label)?;
        w.write_u32::<LittleEndian>(s.n_frames() as u32)?;
        for &v in s.values() {
            w.write_f32::<LittleEndian>(v.to_f64_lossy() as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a container; returns the channel count and the samples.
pub fn read_cochleagrams<T: Scalar, R: Read>(mut r: R) -> Result<(usize, Vec<FrameSequence<T>>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(eof_as_truncated)?;
    if &magic != COCHLEAGRAM_MAGIC {
        return Err(Error::BadHeader {
            context: CTX,
            detail: format!("magic {:?}", String::from_utf8_lossy(&magic)),
        });
    }
    let version = r.read_u32::<LittleEndian>().map_err(eof_as_truncated)?;
    if version != COCHLEAGRAM_VERSION {
        return Err(Error::UnsupportedVersion {
            context: CTX,
            found: version,
        });
    }
    let n_channels = r.read_u32::<LittleEndian>().map_err(eof_as_truncated)? as usize;
    let n_samples = r.read_u32::<LittleEndian>().map_err(eof_as_truncated)? as usize;
    if n_channels == 0 {
        return Err(Error::BadHeader {
            context: CTX,
            detail: "zero channels".into(),
        });
    }
    let mut samples = Vec::with_capacity(n_samples.min(1 << 16));
    for _ in 0..n_samples {
        let label = r.read_u8().map_err(eof_as_truncated)?;
        let n_frames = r.read_u32::<LittleEndian>().map_err(eof_as_truncated)? as usize;
        let mut values = Vec::with_capacity(n_frames * n_channels);
        for _ in 0..n_frames * n_channels {
            let v = r.read_f32::<LittleEndian>().map_err(eof_as_truncated)?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::ValueOutOfRange {
                    context: CTX,
                    value: f64::from(v),
                    min: -1.0,
                    max: 1.0,
                });
            }
            values.push(T::lit(f64::from(v)));
        }
        samples.push(FrameSequence::new(
            usize::from(label),
            n_channels,
            values,
            ValueMode::Signed,
        )?);
    }
    Ok((n_channels, samples))
}

pub fn load_cochleagram<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<FrameSequence<T>>> {
    let f = File::open(path)?;
    Ok(read_cochleagrams(BufReader::new(f))?.1)
}

pub fn save_cochleagram<T: Scalar>(
    path: impl AsRef<Path>,
    n_channels: usize,
    samples: &[FrameSequence<T>],
) -> Result<()> {
    let f = File::create(path)?;
    write_cochleagrams(BufWriter::new(f), n_channels, samples)
}
