//! PNG and binary PNM (P5/P6) codecs to and from `[3, H, W]` tensors in `[0, 1]`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Interleaved 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rgb8 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Rgb8 {
    pub fn from_tensor<T: Scalar>(img: &Tensor<T>) -> Result<Self> {
        img.expect_rank(3, "rgb image")?;
        let (c, h, w) = (img.shape()[0], img.shape()[1], img.shape()[2]);
        if c != 3 {
            return Err(crate::error::shape_err!("expected 3 channels, got {c}"));
        }
        let mut pixels = Vec::with_capacity(h * w * 3);
        for y in 0..h {
            for x in 0..w {
                for ch in 0..3 {
                    let v = img.at3(ch, y, x).as_f64().clamp(0.0, 1.0);
                    pixels.push((v * 255.0).round() as u8);
                }
            }
        }
        Ok(Self {
            width: w,
            height: h,
            pixels,
        })
    }

    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        let (h, w) = (self.height, self.width);
        Tensor::from_fn(&[3, h, w], |i| {
            let ch = i / (h * w);
            let p = i % (h * w);
            T::of(self.pixels[p * 3 + ch] as f64 / 255.0)
        })
        .expect("raster extents are positive")
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().expect("in-memory png header");
            writer
                .write_image_data(&self.pixels)
                .expect("in-memory png body");
        }
        out
    }

    /// Writes PNG for a `.png` extension and binary PPM otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        let bytes = if is_png {
            self.encode_png()
        } else {
            self.encode_ppm()
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

struct PnmHeader {
    magic: u8,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> Option<PnmHeader> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return None;
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos)? {
                b'#' => {
                    while *bytes.get(pos)? != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos]).ok()?.parse().ok()?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos)?.is_ascii_whitespace() {
        return None;
    }
    Some(PnmHeader {
        magic: bytes[1],
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_start: pos + 1,
    })
}

pub fn decode_pnm(bytes: &[u8], origin: &Path) -> Result<Rgb8> {
    let hdr =
        parse_pnm_header(bytes).ok_or_else(|| Error::format(origin, "malformed PNM header"))?;
    if hdr.width == 0 || hdr.height == 0 || hdr.maxval == 0 || hdr.maxval > 65535 {
        return Err(Error::format(
            origin,
            "PNM dimensions or maxval out of range",
        ));
    }
    let channels = if hdr.magic == b'6' { 3 } else { 1 };
    let sample_bytes = if hdr.maxval > 255 { 2 } else { 1 };
    let n = hdr.width * hdr.height * channels;
    let raster = bytes
        .get(hdr.data_start..hdr.data_start + n * sample_bytes)
        .ok_or_else(|| Error::format(origin, "PNM raster truncated"))?;
    let sample = |i: usize| -> u8 {
        let v = if sample_bytes == 2 {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
        } else {
            raster[i] as usize
        };
        if hdr.maxval == 255 {
            v as u8
        } else {
            ((v.min(hdr.maxval) * 255 + hdr.maxval / 2) / hdr.maxval) as u8
        }
    };
    let mut pixels = Vec::with_capacity(hdr.width * hdr.height * 3);
    for p in 0..hdr.width * hdr.height {
        if channels == 3 {
            pixels.extend([sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)]);
        } else {
            let g = sample(p);
            pixels.extend([g, g, g]);
        }
    }
    Ok(Rgb8 {
        width: hdr.width,
        height: hdr.height,
        pixels,
    })
}

pub fn decode_png(bytes: &[u8], origin: &Path) -> Result<Rgb8> {
    let fail = |e: png::DecodingError| Error::format(origin, e.to_string());
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(fail)?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(fail)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let src = &buf[..info.buffer_size()];
    let stride = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(Error::format(origin, "unexpanded palette PNG")),
    };
    let mut pixels = Vec::with_capacity(w * h * 3);
    for px in src.chunks_exact(stride) {
        if stride < 3 {
            pixels.extend([px[0], px[0], px[0]]);
        } else {
            pixels.extend_from_slice(&px[..3]);
        }
    }
    Ok(Rgb8 {
        width: w,
        height: h,
        pixels,
    })
}

/// Decodes a PNG or PNM file (sniffed from its leading bytes) into a
/// `[3, H, W]` tensor; grayscale becomes three equal channels, alpha is dropped.
pub fn read_image(path: &Path) -> Result<Tensor<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, path)
}

pub fn decode_image(bytes: &[u8], origin: &Path) -> Result<Tensor<f64>> {
    let raster = if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes, origin)?
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes, origin)?
    } else {
        return Err(Error::format(
            origin,
            "unrecognized image format (want PNG or binary PPM)",
        ));
    };
    Ok(raster.to_tensor())
}

pub fn write_ppm<T: Scalar>(path: &Path, img: &Tensor<T>) -> Result<()> {
    let bytes = Rgb8::from_tensor(img)?.encode_ppm();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes PNG or PPM depending on the extension.
pub fn write_image<T: Scalar>(path: &Path, img: &Tensor<T>) -> Result<()> {
    Rgb8::from_tensor(img)?.write(path)
}
