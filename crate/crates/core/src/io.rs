//! Bit-exact raster file I/O.
//!
//! PGM (P5) and PPM (P6) binary are the native formats; the `maxval`
//! header field selects 8- or 16-bit storage. PNG rides behind the same
//! contract. Loading maps integer sample `v` to `v / maxval`; saving
//! clamps to `[0, 1]` and quantizes with round-half-up.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::image::Image;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn maxval(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: String,
        source: io::Error,
    },
    #[error("{path}: not a binary PGM/PPM file (bad magic)")]
    BadMagic { path: String },
    #[error("{path}: malformed header: {reason}")]
    BadHeader { path: String, reason: String },
    #[error("{path}: unsupported maxval {maxval} (expected 1..=65535)")]
    UnsupportedMaxval { path: String, maxval: u64 },
    #[error("{path}: unsupported channel count {channels}")]
    UnsupportedChannels { path: String, channels: usize },
    #[error("{path}: unsupported sample bit depth")]
    UnsupportedBitDepth { path: String },
    #[error("{path}: file truncated (expected {expected} data bytes, found {found})")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: unsupported file extension (use .pgm, .ppm, or .png)")]
    UnsupportedFormat { path: String },
    #[error("{path}: {channels} channel image cannot be written as {format}")]
    ChannelFormatMismatch {
        path: String,
        channels: usize,
        format: &'static str,
    },
    #[error(transparent)]
    Image(#[from] crate::image::ImageError),
    #[error("{path}: png: {source}")]
    Png {
        path: String,
        source: image::ImageError,
    },
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Loads a PGM/PPM/PNG image, mapping sample `v` to `v / maxval`.
pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<Image<T>, IoError> {
    let path = path.as_ref();
    match extension(path) {
        Some("pgm") | Some("ppm") => load_netpbm(path),
        Some("png") => load_png(path),
        _ => Err(IoError::UnsupportedFormat {
            path: path_str(path),
        }),
    }
}

/// Saves as PGM (1 channel), PPM (3 channels), or PNG, clamping to
/// `[0, 1]` and quantizing to the requested bit depth.
pub fn save_image<T: Scalar>(
    img: &Image<T>,
    path: impl AsRef<Path>,
    depth: BitDepth,
) -> Result<(), IoError> {
    let path = path.as_ref();
    match extension(path) {
        Some("pgm") => {
            if img.channels() != 1 {
                return Err(IoError::ChannelFormatMismatch {
                    path: path_str(path),
                    channels: img.channels(),
                    format: "PGM",
                });
            }
            save_netpbm(img, path, depth)
        }
        Some("ppm") => {
            if img.channels() != 3 {
                return Err(IoError::ChannelFormatMismatch {
                    path: path_str(path),
                    channels: img.channels(),
                    format: "PPM",
                });
            }
            save_netpbm(img, path, depth)
        }
        Some("png") => save_png(img, path, depth),
        _ => Err(IoError::UnsupportedFormat {
            path: path_str(path),
        }),
    }
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

/// Clamp then quantize: `round(v * maxval)` with round-half-up.
pub fn quantize<T: Scalar>(v: T, maxval: u32) -> u32 {
    let v = v.max(T::zero()).min(T::one()).to_f64_lossy();
    (v * maxval as f64).round() as u32
}

fn load_netpbm<T: Scalar>(path: &Path) -> Result<Image<T>, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::Unreadable {
        path: path_str(path),
        source,
    })?;
    parse_netpbm(&bytes, &path_str(path))
}

fn parse_netpbm<T: Scalar>(bytes: &[u8], path: &str) -> Result<Image<T>, IoError> {
    let channels = match bytes.get(0..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(IoError::BadMagic {
                path: path.to_string(),
            })
        }
    };
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        *field = read_header_int(bytes, &mut pos, path)?;
    }
    let (width, height, maxval) = (fields[0] as usize, fields[1] as usize, fields[2]);
    if maxval == 0 || maxval > 65535 {
        return Err(IoError::UnsupportedMaxval {
            path: path.to_string(),
            maxval,
        });
    }
    // exactly one whitespace byte separates header and raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(IoError::BadHeader {
                path: path.to_string(),
                reason: "missing whitespace before raster data".into(),
            })
        }
    }
    let n = width * height * channels;
    let wide = maxval > 255;
    let expected = n * if wide { 2 } else { 1 };
    let raster = &bytes[pos.min(bytes.len())..];
    if raster.len() < expected {
        return Err(IoError::Truncated {
            path: path.to_string(),
            expected,
            found: raster.len(),
        });
    }
    let scale = 1.0 / maxval as f64;
    let data: Vec<T> = if wide {
        raster[..expected]
            .chunks_exact(2)
            .map(|c| T::of_f64(u16::from_be_bytes([c[0], c[1]]) as f64 * scale))
            .collect()
    } else {
        raster[..expected]
            .iter()
            .map(|&b| T::of_f64(b as f64 * scale))
            .collect()
    };
    Ok(Image::new(width, height, channels, data)?)
}

fn read_header_int(bytes: &[u8], pos: &mut usize, path: &str) -> Result<u64, IoError> {
    // skip whitespace and '#' comments
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
        return Err(IoError::BadHeader {
            path: path.to_string(),
            reason: "expected integer field".into(),
        });
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).expect("digits are utf8");
    text.parse().map_err(|_| IoError::BadHeader {
        path: path.to_string(),
        reason: format!("integer field '{text}' out of range"),
    })
}

fn save_netpbm<T: Scalar>(img: &Image<T>, path: &Path, depth: BitDepth) -> Result<(), IoError> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let maxval = depth.maxval();
    let mut out = Vec::with_capacity(32 + img.len() * 2);
    write!(out, "{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).expect("vec write");
    for &v in img.data() {
        let q = quantize(v, maxval);
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    fs::write(path, out).map_err(|source| IoError::Unwritable {
        path: path_str(path),
        source,
    })
}

fn load_png<T: Scalar>(path: &Path) -> Result<Image<T>, IoError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| IoError::Unreadable {
            path: path_str(path),
            source,
        })?;
    let dyn_img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(
        |source| IoError::Png {
            path: path_str(path),
            source,
        },
    )?;
    let (w, h) = (dyn_img.width() as usize, dyn_img.height() as usize);
    use image::DynamicImage::*;
    let (channels, data): (usize, Vec<T>) = match dyn_img {
        ImageLuma8(buf) => (1, scale_u8(buf.as_raw())),
        ImageRgb8(buf) => (3, scale_u8(buf.as_raw())),
        ImageLuma16(buf) => (1, scale_u16(buf.as_raw())),
        ImageRgb16(buf) => (3, scale_u16(buf.as_raw())),
        ImageLumaA8(_) | ImageLumaA16(_) | ImageRgba8(_) | ImageRgba16(_) => {
            return Err(IoError::UnsupportedChannels {
                path: path_str(path),
                channels: 4,
            })
        }
        _ => {
            return Err(IoError::UnsupportedBitDepth {
                path: path_str(path),
            })
        }
    };
    Ok(Image::new(w, h, channels, data)?)
}

fn scale_u8<T: Scalar>(raw: &[u8]) -> Vec<T> {
    raw.iter().map(|&v| T::of_f64(v as f64 / 255.0)).collect()
}

fn scale_u16<T: Scalar>(raw: &[u16]) -> Vec<T> {
    raw.iter()
        .map(|&v| T::of_f64(v as f64 / 65535.0))
        .collect()
}

fn save_png<T: Scalar>(img: &Image<T>, path: &Path, depth: BitDepth) -> Result<(), IoError> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let maxval = depth.maxval();
    let res = match (img.channels(), depth) {
        (1, BitDepth::Eight) => {
            let buf: Vec<u8> = img.data().iter().map(|&v| quantize(v, maxval) as u8).collect();
            image::GrayImage::from_raw(w, h, buf).expect("sized buffer").save(path)
        }
        (3, BitDepth::Eight) => {
            let buf: Vec<u8> = img.data().iter().map(|&v| quantize(v, maxval) as u8).collect();
            image::RgbImage::from_raw(w, h, buf).expect("sized buffer").save(path)
        }
        (1, BitDepth::Sixteen) => {
            let buf: Vec<u16> = img.data().iter().map(|&v| quantize(v, maxval) as u16).collect();
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, buf)
                .expect("sized buffer")
                .save(path)
        }
        (3, BitDepth::Sixteen) => {
            let buf: Vec<u16> = img.data().iter().map(|&v| quantize(v, maxval) as u16).collect();
            image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(w, h, buf)
                .expect("sized buffer")
                .save(path)
        }
        (c, _) => {
            return Err(IoError::UnsupportedChannels {
                path: path_str(path),
                channels: c,
            })
        }
    };
    res.map_err(|source| IoError::Png {
        path: path_str(path),
        source,
    })
}
