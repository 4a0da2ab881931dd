//! Image frames and their on-disk PGM form.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl FrameShape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for FrameShape {
    /// 1×36×64 grayscale.
    fn default() -> Self {
        Self::new(1, 36, 64)
    }
}

/// A C×H×W image with intensities in `[0, 1]`, stored row-major with the
/// channel outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    shape: FrameShape,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(shape: FrameShape, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != shape.len() {
            return Err(Error::Dimension {
                expected: shape.len(),
                actual: pixels.len(),
            });
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Self { shape, pixels })
    }

    /// Builds a frame clamping every value into `[0, 1]`.
    pub fn from_clamped(shape: FrameShape, mut pixels: Vec<f64>) -> Result<Self> {
        for p in &mut pixels {
            *p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
        }
        Self::new(shape, pixels)
    }

    pub fn filled(shape: FrameShape, value: f64) -> Self {
        Self {
            shape,
            pixels: vec![value.clamp(0.0, 1.0); shape.len()],
        }
    }

    pub fn shape(&self) -> FrameShape {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn index(&self, c: usize, row: usize, col: usize) -> usize {
        (c * self.shape.height + row) * self.shape.width + col
    }

    #[inline]
    pub fn get(&self, c: usize, row: usize, col: usize) -> f64 {
        self.pixels[self.index(c, row, col)]
    }

    /// Applies `f` to every pixel, clamping the result back into `[0, 1]`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Frame {
        let pixels = self
            .pixels
            .iter()
            .map(|&p| f(p).clamp(0.0, 1.0))
            .collect();
        Frame {
            shape: self.shape,
            pixels,
        }
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    /// Encodes a single-channel frame as binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Result<Vec<u8>> {
        if self.shape.channels != 1 {
            return Err(Error::Config(format!(
                "PGM holds one channel, frame has {}",
                self.shape.channels
            )));
        }
        let mut out = format!("P5\n{} {}\n255\n", self.shape.width, self.shape.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round() as u8));
        Ok(out)
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Frame> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            // skip whitespace and comments
            while pos < bytes.len() {
                match bytes[pos] {
                    b'#' => {
                        while pos < bytes.len() && bytes[pos] != b'\n' {
                            pos += 1;
                        }
                    }
                    c if c.is_ascii_whitespace() => pos += 1,
                    _ => break,
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Parse("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Parse(format!("expected P5 magic, found {}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad PGM header field {s:?}")))
        };
        let width = parse(&fields[1])?;
        let height = parse(&fields[2])?;
        let maxval = parse(&fields[3])?;
        if maxval != 255 {
            return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let raster = bytes.get(pos..pos + width * height).ok_or_else(|| {
            Error::Parse(format!("PGM raster shorter than {width}x{height}"))
        })?;
        let pixels = raster.iter().map(|&b| f64::from(b) / 255.0).collect();
        Frame::new(FrameShape::new(1, height, width), pixels)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_pgm()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Frame::from_pgm(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_range() {
        let shape = FrameShape::new(1, 2, 2);
        assert!(matches!(
            Frame::new(shape, vec![0.0; 3]),
            Err(Error::Dimension { expected: 4, actual: 3 })
        ));
        assert!(Frame::new(shape, vec![0.0, 0.5, 1.0, 1.5]).is_err());
        assert!(Frame::new(shape, vec![0.0, 0.5, 1.0, 0.25]).is_ok());
    }

    #[test]
    fn pgm_roundtrip_is_exact_on_the_byte_grid() {
        let shape = FrameShape::new(1, 3, 5);
        let pixels = (0..15).map(|i| (i * 17) as f64 / 255.0).collect();
        let frame = Frame::new(shape, pixels).unwrap();
        let back = Frame::from_pgm(&frame.to_pgm().unwrap()).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn pgm_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        let frame = Frame::from_pgm(&bytes).unwrap();
        assert_eq!(frame.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn truncated_pgm_is_a_parse_error() {
        let frame = Frame::filled(FrameShape::new(1, 4, 4), 0.5);
        let bytes = frame.to_pgm().unwrap();
        assert!(matches!(
            Frame::from_pgm(&bytes[..bytes.len() - 3]),
            Err(Error::Parse(_))
        ));
        assert!(matches!(Frame::from_pgm(b"P5\n4"), Err(Error::Parse(_))));
    }
}
