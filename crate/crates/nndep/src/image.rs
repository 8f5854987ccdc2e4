//! Binary PGM (P5) and PPM (P6) images, maxval 255 only.
//!
//! Pixels are stored as f64 in [0, 1], scaled by /255 on read, interleaved in
//! file order (row-major, RGB for PPM). Writing a file that was read back
//! reproduces it byte for byte.

use std::path::Path;

use crate::error::{Error, Result};

/// An in-memory raster; 1 channel (grayscale) or 3 (RGB), values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Image> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidData("image has a zero dimension".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidData(format!(
                "unsupported channel count {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "pixel buffer length {} != {}x{}x{}",
                pixels.len(),
                width,
                height,
                channels
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidData("pixel values outside [0,1]".into()));
        }
        Ok(Image {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn pixel(&self, x: usize, y: usize, c: usize) -> f64 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }
}

/// Reads a binary PGM/PPM file. Pixels are scaled to [0, 1] by /255.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::UnsupportedFormat(msg) => Error::UnsupportedFormat(format!("{}: {msg}", path.display())),
        Error::Parse { line, msg, .. } => Error::parse(path.display().to_string(), line, msg),
        other => other,
    })
}

/// Writes a binary PGM (1 channel) or PPM (3 channels), maxval 255.
pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(image)).map_err(|e| Error::io(path, e))
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::UnsupportedFormat("file shorter than a magic number".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        magic => {
            return Err(Error::UnsupportedFormat(format!(
                "unsupported magic {:?} (binary P5/P6 only)",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let mut pos = 2;
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval} (only 255 supported)"
        )));
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::parse("<image>", 0, "missing whitespace before payload")),
    }
    let expected = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::parse(
            "<image>",
            0,
            format!("truncated payload: expected {expected} bytes, found {}", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(Error::parse(
            "<image>",
            0,
            format!("{} trailing bytes after payload", payload.len() - expected),
        ));
    }
    let pixels = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    Image::new(width, height, channels, pixels)
}

pub(crate) fn encode(image: &Image) -> Vec<u8> {
    let magic = if image.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.pixels.iter().map(|&p| quantize(p)));
    out
}

fn quantize(p: f64) -> u8 {
    (p * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Reads one ASCII integer, skipping whitespace and `#` comments.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while matches!(bytes.get(*pos), Some(b) if b.is_ascii_digit()) {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::parse("<image>", 0, "expected integer in header"));
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).unwrap();
    let value: usize = text
        .parse()
        .map_err(|_| Error::parse("<image>", 0, format!("header value {text} out of range")))?;
    if value == 0 {
        return Err(Error::parse("<image>", 0, "zero header dimension"));
    }
    Ok(value)
}
