use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use super::RgbImage;
use crate::error::{Error, Result};

/// Decodes an 8-bit PNG into RGB. Gray is replicated into three channels,
/// palettes are expanded and alpha is dropped; 16-bit files are rejected.
pub fn load_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| decode_error(path, e))?;

    let (color, depth) = reader.output_color_type();
    if depth != BitDepth::Eight {
        return Err(Error::Format(format!(
            "{}: only 8-bit PNGs are supported, found {depth:?}",
            path.display()
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format(format!("{}: image too large", path.display())))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| decode_error(path, e))?;
    buf.truncate(info.buffer_size());

    let (w, h) = (info.width as usize, info.height as usize);
    let mut rgb = Vec::with_capacity(w * h * 3);
    match color {
        ColorType::Rgb => rgb = buf,
        ColorType::Rgba => {
            for p in buf.chunks_exact(4) {
                rgb.extend_from_slice(&p[..3]);
            }
        }
        ColorType::Grayscale => {
            for &g in &buf {
                rgb.extend_from_slice(&[g, g, g]);
            }
        }
        ColorType::GrayscaleAlpha => {
            for p in buf.chunks_exact(2) {
                rgb.extend_from_slice(&[p[0], p[0], p[0]]);
            }
        }
        ColorType::Indexed => {
            return Err(Error::Format(format!(
                "{}: palette was not expanded",
                path.display()
            )))
        }
    }
    RgbImage::new(w, h, rgb)
}

fn decode_error(path: &Path, e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Writes an 8-bit RGB PNG.
pub fn save_png(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    encoder.set_color(ColorType::Rgb);
    encoder.set_depth(BitDepth::Eight);
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(img.data()).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}
