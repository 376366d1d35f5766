//! File exports for control tensors: 8-bit PNG frame sequences and the
//! lossless `FPCT` float tensor format.
//!
//! `FPCT` layout, all little-endian: 4-byte magic `b"FPCT"`, then `u32`
//! frames, channels, height, width, then `f·c·h·w` `f32` values in
//! frame-channel-row-column order.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{ControlTensor, EncodeError, Encoding};
use crate::image::RgbImage;
use crate::types::VideoDims;

pub const FPCT_MAGIC: &[u8; 4] = b"FPCT";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EncodeError + '_ {
    move |source| EncodeError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> EncodeError {
    EncodeError::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn write_fpct(tensor: &ControlTensor, path: &Path) -> Result<(), EncodeError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let d = tensor.dims();
    let mut header = Vec::with_capacity(20);
    header.extend_from_slice(FPCT_MAGIC);
    for v in [d.frames(), d.channels(), d.height(), d.width()] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&header).map_err(io_err(path))?;
    for chunk in tensor.values().chunks(1 << 14) {
        let bytes: Vec<u8> = chunk.iter().flat_map(|v| v.to_le_bytes()).collect();
        w.write_all(&bytes).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads an `FPCT` file. The frame rate is not stored; `fps` fills it in.
/// The encoding is inferred from the value range (any negative value means
/// global).
pub fn read_fpct(path: &Path, fps: u32) -> Result<ControlTensor, EncodeError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    if bytes.len() < 20 || &bytes[..4] != FPCT_MAGIC {
        return Err(format_err(path, "missing FPCT header"));
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (f, c, h, w) = (field(0), field(1), field(2), field(3));
    let dims = VideoDims::with_channels(f, c, h, w, fps)
        .map_err(|e| format_err(path, e.to_string()))?;
    let n = f as usize * c as usize * h as usize * w as usize;
    if bytes.len() != 20 + 4 * n {
        return Err(format_err(
            path,
            format!("expected {} payload bytes, found {}", 4 * n, bytes.len() - 20),
        ));
    }
    let values: Vec<f32> = bytes[20..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let encoding = if values.iter().any(|v| *v < 0.0) {
        Encoding::Global
    } else {
        Encoding::Local
    };
    Ok(ControlTensor::from_parts(dims, encoding, values))
}

fn quantize(v: f32, encoding: Encoding) -> u8 {
    let unit = match encoding {
        Encoding::Local => v,
        Encoding::Global => (v + 1.0) * 0.5,
    };
    (unit.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// One RGB image per frame. Local tensors become grayscale replicated to
/// RGB; global tensors map each channel affinely from `[−1, 1]` to `[0, 255]`.
pub fn frame_images(tensor: &ControlTensor) -> Vec<RgbImage> {
    let d = tensor.dims();
    let (w, h) = (d.width(), d.height());
    (0..d.frames() as usize)
        .map(|f| {
            let planes = [tensor.plane(f, 0), tensor.plane(f, 1), tensor.plane(f, 2)];
            let data = (0..d.pixels_per_frame())
                .flat_map(|i| planes.map(|p| quantize(p[i], tensor.encoding())))
                .collect();
            RgbImage::from_raw(w, h, data).expect("sized from dims")
        })
        .collect()
}

/// Writes `frame_%04d.png` for every frame into `dir` (created if missing).
pub fn write_png_frames(tensor: &ControlTensor, dir: &Path) -> Result<usize, EncodeError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let frames = frame_images(tensor);
    for (i, img) in frames.iter().enumerate() {
        let path = dir.join(format!("frame_{i:04}.png"));
        img.save_png(&path).map_err(io_err(&path))?;
    }
    Ok(frames.len())
}
