use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::VisionError;

/// Axis-aligned pixel rectangle `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }
}

/// What the renderer knows about a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub knife_mm: f64,
    /// Tissue silhouette size at render time, px.
    pub tissue_pixels: u64,
    /// Pixels removed from the undeformed silhouette, px.
    pub notch_pixels: u64,
    /// Bounding box of the tissue in this frame.
    pub roi: Rect,
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    pub meta: Option<SceneMeta>,
}

impl Frame {
    pub fn filled(width: u32, height: u32, level: u8) -> Result<Self, VisionError> {
        if width == 0 || height == 0 {
            return Err(VisionError::Config(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![level; width as usize * height as usize],
            meta: None,
        })
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, VisionError> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(VisionError::Format(format!(
                "{} pixels do not fill {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            meta: None,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = v;
    }

    pub fn fill_rect(&mut self, r: Rect, v: u8) {
        let x1 = r.right().min(self.width);
        let y1 = r.bottom().min(self.height);
        let w = self.width as usize;
        for y in r.y.min(y1)..y1 {
            let row = y as usize * w;
            self.pixels[row + r.x.min(x1) as usize..row + x1 as usize].fill(v);
        }
    }

    pub fn count_level(&self, level: u8) -> u64 {
        self.pixels.iter().filter(|p| **p == level).count() as u64
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, VisionError> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(VisionError::Format("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(VisionError::Format(format!("not a P5 file: {}", fields[0])));
        }
        let num = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| VisionError::Format(format!("bad PGM header field `{s}`")))
        };
        let (w, h, max) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if max != 255 {
            return Err(VisionError::Format(format!("unsupported maxval {max}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        let data = bytes.get(pos + 1..).unwrap_or(&[]);
        Self::from_pixels(w, h, data.to_vec())
    }

    pub fn to_png(&self) -> Result<Vec<u8>, VisionError> {
        use image::codecs::png::{CompressionType, FilterType, PngEncoder};
        use image::ImageEncoder;
        let mut out = Vec::new();
        PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Sub).write_image(
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::L8,
        )?;
        Ok(out)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, VisionError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.into_luma8();
        let (w, h) = img.dimensions();
        Self::from_pixels(w, h, img.into_raw())
    }

    pub fn encode(&self, format: FrameFormat) -> Result<Vec<u8>, VisionError> {
        match format {
            FrameFormat::Pgm => Ok(self.to_pgm()),
            FrameFormat::Png => self.to_png(),
        }
    }

    pub fn save(&self, path: &Path, format: FrameFormat) -> Result<(), VisionError> {
        let bytes = self.encode(format)?;
        let io = |source| VisionError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&bytes).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, VisionError> {
        let bytes = std::fs::read(path).map_err(|source| VisionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if bytes.starts_with(b"P5") {
            Self::from_pgm(&bytes)
        } else {
            Self::from_png(&bytes)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    #[default]
    Pgm,
    Png,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Pgm => "pgm",
            FrameFormat::Png => "png",
        }
    }
}

impl std::str::FromStr for FrameFormat {
    type Err = VisionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(FrameFormat::Pgm),
            "png" => Ok(FrameFormat::Png),
            other => Err(VisionError::Config(format!("unknown frame format `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Frame {
        let px = (0..12u32 * 7).map(|i| (i * 37 % 256) as u8).collect();
        Frame::from_pixels(12, 7, px).unwrap()
    }

    #[test]
    fn pgm_round_trip() {
        let f = sample();
        let bytes = f.to_pgm();
        assert!(bytes.starts_with(b"P5\n12 7\n255\n"));
        assert_eq!(Frame::from_pgm(&bytes).unwrap(), f);
    }

    #[test]
    fn pgm_header_comments_tolerated() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[3, 4]);
        let f = Frame::from_pgm(&bytes).unwrap();
        assert_eq!(f.pixels(), &[3, 4]);
    }

    #[test]
    fn malformed_pgm_rejected() {
        assert!(Frame::from_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(Frame::from_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(Frame::from_pgm(b"P5\n2").is_err());
    }

    #[test]
    fn png_round_trip() {
        let f = sample();
        assert_eq!(Frame::from_png(&f.to_png().unwrap()).unwrap(), f);
    }

    #[test]
    fn zero_sized_frame_rejected() {
        assert!(Frame::filled(0, 10, 0).is_err());
    }
}
