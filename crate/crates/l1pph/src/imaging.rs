//! Image ingestion and manipulation: binary PGM/PPM parsing, flattening to
//! pixel vectors, block partitioning, and the brightness/contrast transforms
//! used by the distance experiments.

use crate::error::{Error, Result};
use crate::metrics::PixelVector;

/// A raster image with 8-bit samples: grayscale (1 channel) or RGB (3),
/// stored row-major and channel-interleaved. The alphabet is always q = 256.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(Error::ParseError("bad image dimensions".into()));
        }
        let expect = width as usize * height as usize * channels as usize;
        if data.len() != expect {
            return Err(Error::ParseError(format!(
                "payload holds {} samples, dimensions need {expect}",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Flattened length n = width * height * channels.
    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// Flattens to a vector over Z_256.
    pub fn to_pixel_vector(&self) -> PixelVector {
        PixelVector::new(self.data.iter().map(|&b| b as u32).collect(), 256)
            .expect("image data is a valid Z_256 vector")
    }

    /// Rebuilds an image from a flattened vector with the given shape.
    pub fn from_pixel_vector(
        v: &PixelVector,
        width: u32,
        height: u32,
        channels: u8,
    ) -> Result<Self> {
        if v.q() != 256 {
            return Err(Error::ParseError("vector alphabet must be 256".into()));
        }
        let data = v.values().iter().map(|&x| x as u8).collect();
        Image::new(width, height, channels, data)
    }
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn parse_ascii_u32(bytes: &[u8], pos: usize) -> Result<(u32, usize)> {
    let mut end = pos;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == pos {
        return Err(Error::ParseError("expected an integer in header".into()));
    }
    let s = std::str::from_utf8(&bytes[pos..end]).unwrap();
    let v = s
        .parse::<u32>()
        .map_err(|_| Error::ParseError(format!("integer {s} out of range")))?;
    Ok((v, end))
}

/// Parses a binary PGM (P5, grayscale) or PPM (P6, RGB) image with maxval 255.
pub fn load_image(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::ParseError("truncated header".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1u8,
        b"P6" => 3u8,
        m => {
            return Err(Error::ParseError(format!(
                "bad magic {:?}; only binary P5/P6 supported",
                String::from_utf8_lossy(m)
            )))
        }
    };
    let mut pos = 2;
    pos = skip_whitespace_and_comments(bytes, pos);
    let (width, p) = parse_ascii_u32(bytes, pos)?;
    pos = skip_whitespace_and_comments(bytes, p);
    let (height, p) = parse_ascii_u32(bytes, pos)?;
    pos = skip_whitespace_and_comments(bytes, p);
    let (maxval, p) = parse_ascii_u32(bytes, pos)?;
    if maxval != 255 {
        return Err(Error::ParseError(format!(
            "maxval {maxval} unsupported; must be 255"
        )));
    }
    // exactly one whitespace byte separates header and payload
    if p >= bytes.len() || !bytes[p].is_ascii_whitespace() {
        return Err(Error::ParseError("missing payload separator".into()));
    }
    pos = p + 1;
    let need = width as usize * height as usize * channels as usize;
    if bytes.len() < pos + need {
        return Err(Error::ParseError(format!(
            "truncated payload: need {need} bytes, found {}",
            bytes.len() - pos
        )));
    }
    Image::new(width, height, channels, bytes[pos..pos + need].to_vec())
}

/// Serializes an image as binary PGM/PPM with maxval 255.
pub fn save_image(img: &Image) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

/// Parses the raw vector format used by tests and the CLI: an ASCII header
/// "n q" followed by n space-separated integers.
pub fn load_vector(text: &str) -> Result<PixelVector> {
    let mut it = text.split_ascii_whitespace();
    let n: usize = it
        .next()
        .ok_or_else(|| Error::ParseError("empty vector file".into()))?
        .parse()
        .map_err(|_| Error::ParseError("bad n in vector header".into()))?;
    let q: u32 = it
        .next()
        .ok_or_else(|| Error::ParseError("missing q in vector header".into()))?
        .parse()
        .map_err(|_| Error::ParseError("bad q in vector header".into()))?;
    let values: Vec<u32> = it
        .map(|tok| {
            tok.parse::<u32>()
                .map_err(|_| Error::ParseError(format!("bad value {tok}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != n {
        return Err(Error::ParseError(format!(
            "header says n = {n} but found {} values",
            values.len()
        )));
    }
    PixelVector::new(values, q)
}

pub fn save_vector(v: &PixelVector) -> String {
    let mut out = format!("{} {}\n", v.len(), v.q());
    for (i, val) in v.values().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&val.to_string());
    }
    out.push('\n');
    out
}

/// A partition of a flattened vector into contiguous blocks. The final block
/// is zero-padded to the common length, and the padding length is recorded so
/// both the database and query sides pad identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPlan {
    pub b: usize,
    pub n_b: usize,
    pub t_b: u64,
    pub pad_len: usize,
}

impl BlockPlan {
    /// Plans `b` blocks over a length-n vector with whole-vector threshold t.
    /// The per-block threshold is floor(t/b), lowered to even so it splits
    /// into equal halves; a single block keeps t as-is.
    pub fn new(n: usize, b: usize, t: u64) -> Result<Self> {
        if b == 0 || b > n {
            return Err(Error::BadBlockCount(format!(
                "{b} blocks over a length-{n} vector"
            )));
        }
        if t < b as u64 {
            return Err(Error::ParamsInvalid(format!(
                "t = {t} smaller than block count {b}"
            )));
        }
        let n_b = n.div_ceil(b);
        let pad_len = b * n_b - n;
        let t_b = if b == 1 { t } else { (t / b as u64) & !1 };
        if b > 1 && t_b < 2 {
            return Err(Error::ParamsInvalid(format!(
                "per-block threshold floor({t}/{b}) leaves no even budget"
            )));
        }
        Ok(BlockPlan { b, n_b, t_b, pad_len })
    }

    /// Byte range of block `i` before padding: [start, end) into the data.
    pub fn data_range(&self, i: usize) -> (usize, usize) {
        let n = self.b * self.n_b - self.pad_len;
        let start = i * self.n_b;
        let end = ((i + 1) * self.n_b).min(n);
        (start, end)
    }

    /// Splits a flattened vector into `b` zero-padded blocks of length n_b.
    pub fn split(&self, values: &[u32], q: u32) -> Result<Vec<PixelVector>> {
        let n = self.b * self.n_b - self.pad_len;
        if values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} but plan covers {n}",
                values.len()
            )));
        }
        (0..self.b)
            .map(|i| {
                let (start, end) = self.data_range(i);
                let mut block = values[start..end].to_vec();
                block.resize(self.n_b, 0);
                PixelVector::new(block, q)
            })
            .collect()
    }
}

/// Plans and splits in one step.
pub fn split_blocks(img: &Image, b: usize, t: u64) -> Result<(BlockPlan, Vec<PixelVector>)> {
    let plan = BlockPlan::new(img.n(), b, t)?;
    let v = img.to_pixel_vector();
    let blocks = plan.split(v.values(), v.q())?;
    Ok((plan, blocks))
}

/// Pointwise image transforms controlled by an enhancement factor, with a
/// factor of 1 giving the original image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustKind {
    /// v' = clamp(round(eps * v))
    Brightness,
    /// v' = clamp(round(mu + eps * (v - mu))) with mu the image's mean value
    Contrast,
}

pub fn adjust(img: &Image, kind: AdjustKind, epsilon: f64) -> Image {
    let data = match kind {
        AdjustKind::Brightness => img
            .data
            .iter()
            .map(|&v| (epsilon * v as f64).round().clamp(0.0, 255.0) as u8)
            .collect(),
        AdjustKind::Contrast => {
            let mu = img.data.iter().map(|&v| v as f64).sum::<f64>() / img.data.len() as f64;
            img.data
                .iter()
                .map(|&v| (mu + epsilon * (v as f64 - mu)).round().clamp(0.0, 255.0) as u8)
                .collect()
        }
    };
    Image {
        width: img.width,
        height: img.height,
        channels: img.channels,
        data,
    }
}
