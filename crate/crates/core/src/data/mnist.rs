//! MNIST in the standard IDX layout, presented as 28 sequential frames.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spatiotemporal::{FrameSequence, ValueMode};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// How an image becomes frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Frame `f` is image row `f`; channel `i` is the column.
    #[default]
    Rows,
    /// Frame `f` is image column `f`; channel `i` is the row.
    Columns,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, image after image.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

fn header(cur: &mut Cursor<&[u8]>, context: &'static str, words: usize) -> Result<Vec<u32>> {
    let available = cur.get_ref().len();
    if available < 4 * words {
        return Err(Error::Truncated {
            context,
            needed: 4 * words,
            available,
        });
    }
    (0..words)
        .map(|_| cur.read_u32::<BigEndian>().map_err(Error::from))
        .collect()
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    const CTX: &str = "IDX image file";
    let mut cur = Cursor::new(bytes);
    let h = header(&mut cur, CTX, 4)?;
    if h[0] != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            context: CTX,
            expected: IDX_IMAGES_MAGIC,
            found: h[0],
        });
    }
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let needed = 16 + count * rows * cols;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            context: CTX,
            needed,
            available: bytes.len(),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..needed].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    const CTX: &str = "IDX label file";
    let mut cur = Cursor::new(bytes);
    let h = header(&mut cur, CTX, 2)?;
    if h[0] != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            context: CTX,
            expected: IDX_LABELS_MAGIC,
            found: h[0],
        });
    }
    let count = h[1] as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            context: CTX,
            needed,
            available: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

fn to_samples<T: Scalar>(
    images: &IdxImages,
    labels: &[u8],
    orientation: Orientation,
) -> Result<Vec<FrameSequence<T>>> {
    if images.count != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "MNIST image vs label count",
            expected: images.count,
            actual: labels.len(),
        });
    }
    let scale = |b: u8| T::lit(f64::from(b) / 255.0);
    (0..images.count)
        .map(|i| {
            let img = images.image(i);
            let (values, channels): (Vec<T>, usize) = match orientation {
                Orientation::Rows => (img.iter().map(|&b| scale(b)).collect(), images.cols),
                Orientation::Columns => {
                    let mut v = Vec::with_capacity(img.len());
                    for c in 0..images.cols {
                        for r in 0..images.rows {
                            v.push(scale(img[r * images.cols + c]));
                        }
                    }
                    (v, images.rows)
                }
            };
            FrameSequence::new(usize::from(labels[i]), channels, values, ValueMode::Unit)
        })
        .collect()
}

/// Loads one IDX image/label file pair; pixel bytes are divided by 255.
pub fn load_mnist<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    orientation: Orientation,
) -> Result<Vec<FrameSequence<T>>> {
    let images = parse_idx_images(&fs::read(images_path)?)?;
    let labels = parse_idx_labels(&fs::read(labels_path)?)?;
    to_samples(&images, &labels, orientation)
}

/// Loads the standard four-file MNIST layout from `dir`.
pub fn load_mnist_dir<T: Scalar>(
    dir: impl AsRef<Path>,
    orientation: Orientation,
) -> Result<Dataset<T>> {
    let dir = dir.as_ref();
    let train = load_mnist(dir.join(TRAIN_IMAGES), dir.join(TRAIN_LABELS), orientation)?;
    let test = load_mnist(dir.join(TEST_IMAGES), dir.join(TEST_LABELS), orientation)?;
    Dataset::new(train, test, 10)
}
