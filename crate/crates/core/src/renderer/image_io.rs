//! 8-bit RGB images and their file formats: binary PPM (`P6`, maxval 255)
//! and PNG.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::biline::FeatureMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major `[H × W × 3]` 8-bit pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image8 {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

/// `clamp((x + 1) / 2, 0, 1) · 255`, rounded half to even.
pub fn quantize(x: f64) -> u8 {
    if x.is_nan() {
        return 0;
    }
    (((x + 1.0) / 2.0).clamp(0.0, 1.0) * 255.0).round_ties_even() as u8
}

impl Image8 {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("image must be at least 1x1".into()));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::shape("image pixels", height * width * 3, pixels.len()));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn blank(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![0; height * width * 3],
        }
    }

    /// Quantizes a `[3 × H × W]` map with values nominally in `[-1, 1]`.
    pub fn from_map<T: Scalar>(map: &FeatureMap<T>) -> Result<Self> {
        if map.channels != 3 {
            return Err(Error::shape("RGB map channels", 3, map.channels));
        }
        let n = map.pixels();
        let mut pixels = vec![0u8; n * 3];
        for (p, px) in pixels.chunks_exact_mut(3).enumerate() {
            for (c, v) in px.iter_mut().enumerate() {
                *v = quantize(map.data[c * n + p].widen());
            }
        }
        Self::new(map.height, map.width, pixels)
    }

    #[inline]
    pub fn pixel(&self, i: usize, j: usize) -> [u8; 3] {
        let k = (i * self.width + j) * 3;
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, i: usize, j: usize, rgb: [u8; 3]) {
        let k = (i * self.width + j) * 3;
        self.pixels[k..k + 3].copy_from_slice(&rgb);
    }

    /// Copies `tile` into this image with its top-left corner at `(i0, j0)`.
    pub fn paste(&mut self, tile: &Image8, i0: usize, j0: usize) {
        for i in 0..tile.height {
            let src = &tile.pixels[i * tile.width * 3..(i + 1) * tile.width * 3];
            let k = ((i0 + i) * self.width + j0) * 3;
            self.pixels[k..k + src.len()].copy_from_slice(src);
        }
    }

    /// `[3 × H × W]` map of `value / 255`.
    pub fn to_unit_map(&self) -> FeatureMap<f64> {
        let n = self.height * self.width;
        let mut data = vec![0.0; 3 * n];
        for (p, px) in self.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                data[c * n + p] = px[c] as f64 / 255.0;
            }
        }
        FeatureMap {
            channels: 3,
            height: self.height,
            width: self.width,
            data,
        }
    }
}

pub fn encode_ppm(img: &Image8) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("PPM header: bad {what}")))
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image8> {
    match bytes.get(..2) {
        Some(b"P6") => {}
        Some(b"P3") => {
            return Err(Error::Format("ASCII PPM (P3) is not supported; use binary P6".into()))
        }
        _ => return Err(Error::Format("not a binary PPM (missing P6 magic)".into())),
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("PPM maxval {maxval} unsupported; expected 255")));
    }
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(Error::Format("PPM header must end with one whitespace byte".into()));
    }
    let payload = &bytes[h.pos + 1..];
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::Format("PPM dimensions overflow".into()))?;
    if payload.len() != need {
        return Err(Error::Format(format!(
            "PPM payload has {} bytes, expected {need}",
            payload.len()
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("PPM with zero dimension".into()));
    }
    Image8::new(height, width, payload.to_vec())
}

pub fn encode_png(img: &Image8) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| Error::Format(format!("PNG encode: {e}"));
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&img.pixels).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    Ok(out)
}

/// Decodes any 8- or 16-bit PNG to RGB8; gray is replicated and alpha dropped.
pub fn decode_png(bytes: &[u8]) -> Result<Image8> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let png_err = |e: png::DecodingError| Error::Format(format!("PNG decode: {e}"));
    let mut reader = dec.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => return Err(Error::UnsupportedFormat(format!("PNG color type {other:?}"))),
    };
    let mut pixels = Vec::with_capacity(w * h * 3);
    for row in buf.chunks(info.line_size).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            match channels {
                1 | 2 => pixels.extend_from_slice(&[px[0]; 3]),
                _ => pixels.extend_from_slice(&px[..3]),
            }
        }
    }
    Image8::new(h, w, pixels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ppm") | Some("pnm") => Ok(ImageFormat::Ppm),
            Some("png") => Ok(ImageFormat::Png),
            _ => Err(Error::UnsupportedFormat(format!(
                "{}: expected a .ppm or .png extension",
                path.display()
            ))),
        }
    }
}

/// Writes by extension: `.ppm`/`.pnm` as `P6`, `.png` as PNG.
pub fn write_image(img: &Image8, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match ImageFormat::from_path(path)? {
        ImageFormat::Ppm => encode_ppm(img),
        ImageFormat::Png => encode_png(img)?,
    };
    crate::persistence::write_bytes(path, &bytes)
}

/// Reads a PPM or PNG file, sniffing the content rather than the extension.
pub fn read_image8(path: impl AsRef<Path>) -> Result<Image8> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P") {
        decode_ppm(&bytes)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: neither PPM nor PNG",
            path.display()
        )))
    }
}

/// Reads an image as a `[3 × H × W]` map of reals in `[0, 1]`.
pub fn read_image(path: impl AsRef<Path>) -> Result<FeatureMap<f64>> {
    Ok(read_image8(path)?.to_unit_map())
}
