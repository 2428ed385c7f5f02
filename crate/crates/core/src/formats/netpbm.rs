//! Binary netpbm: P6 for color images, P5 for gray images, segmentation
//! indices and masks. Only maxval 255 is accepted.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::Image;
use crate::toif::Mask;

/// Raw 8-bit gray raster as stored in a P5 file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl GrayRaster {
    /// Mask bit is set iff the sample is 255; anything other than 0 or 255
    /// is rejected.
    pub fn into_mask(self) -> Result<Mask> {
        let mut bits = Vec::with_capacity(self.samples.len());
        for (offset, &value) in self.samples.iter().enumerate() {
            match value {
                0 => bits.push(false),
                255 => bits.push(true),
                _ => return Err(Error::InvalidMaskValue { value, offset }),
            }
        }
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits,
        })
    }
}

impl From<&Mask> for GrayRaster {
    fn from(m: &Mask) -> Self {
        GrayRaster {
            width: m.width,
            height: m.height,
            samples: m.bits.iter().map(|b| if *b { 255 } else { 0 }).collect(),
        }
    }
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::MalformedHeader("missing magic number".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        if pos == 2 {
            return Err(Error::MalformedHeader("no whitespace after magic".into()));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let name = ["width", "height", "maxval"][i];
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap_or_default();
        *field = text
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("bad {name}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "empty raster {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    Ok(Header {
        magic,
        width: width as usize,
        height: height as usize,
        data_offset: pos,
    })
}

fn payload(bytes: &[u8], header: &Header, channels: usize) -> Result<Vec<u8>> {
    let expected = header.width * header.height * channels;
    let data = &bytes[header.data_offset..];
    if data.len() < expected {
        return Err(Error::TruncatedData {
            expected,
            found: data.len(),
        });
    }
    Ok(data[..expected].to_vec())
}

/// Decodes a P6 or P5 file into a 3- or 1-channel image.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let header = parse_header(bytes)?;
    let channels = match &header.magic {
        b"P6" => 3,
        b"P5" => 1,
        m => {
            return Err(Error::MalformedHeader(format!(
                "unsupported magic {}",
                String::from_utf8_lossy(m)
            )))
        }
    };
    let pixels = payload(bytes, &header, channels)?;
    Image::new(header.width, header.height, channels, pixels)
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    if !bytes.starts_with(b"P6") {
        return Err(Error::MalformedHeader("expected P6".into()));
    }
    decode_image(bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayRaster> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::MalformedHeader("expected P5".into()));
    }
    let header = parse_header(bytes)?;
    Ok(GrayRaster {
        width: header.width,
        height: header.height,
        samples: payload(bytes, &header, 1)?,
    })
}

/// P6 for 3-channel images, P5 for gray.
pub fn encode_image(img: &Image) -> Vec<u8> {
    let magic = if img.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_pgm(raster: &GrayRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend_from_slice(&raster.samples);
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image> {
    decode_ppm(&read(path.as_ref())?)
}

/// Reads a P6 or P5 image.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_image(&read(path.as_ref())?)
}

pub fn write_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &encode_image(img))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayRaster> {
    decode_pgm(&read(path.as_ref())?)
}

pub fn write_pgm(raster: &GrayRaster, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &encode_pgm(raster))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    read_pgm(path)?.into_mask()
}

pub fn write_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&GrayRaster::from(mask), path)
}
