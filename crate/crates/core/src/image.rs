//! Minimal 8-bit RGB image with deterministic PNG encoding.

use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize * 3],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * 3).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }
    pub fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Places images side by side. All tiles must share a height.
    pub fn hstack(tiles: &[RgbImage]) -> Option<RgbImage> {
        let h = tiles.first()?.height;
        if tiles.iter().any(|t| t.height != h) {
            return None;
        }
        let w: u32 = tiles.iter().map(|t| t.width).sum();
        let mut out = RgbImage::new(w, h);
        let mut x0 = 0usize;
        for t in tiles {
            let tw = t.width as usize * 3;
            for row in 0..h as usize {
                let dst = (row * w as usize) * 3 + x0 * 3;
                out.data[dst..dst + tw].copy_from_slice(&t.data[row * tw..(row + 1) * tw]);
            }
            x0 += t.width as usize;
        }
        Some(out)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, png::EncodingError> {
        let mut buf = Vec::new();
        self.write_png_to(&mut buf)?;
        Ok(buf)
    }

    fn write_png_to<W: Write>(&self, w: W) -> Result<(), png::EncodingError> {
        let mut enc = png::Encoder::new(w, self.width, self.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.data)?;
        writer.finish()
    }

    pub fn save_png(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut bw = BufWriter::new(file);
        self.write_png_to(&mut bw).map_err(std::io::Error::other)?;
        bw.flush()
    }

    pub fn load_png(path: &Path) -> std::io::Result<RgbImage> {
        let file = std::fs::File::open(path)?;
        Self::decode_png(BufReader::new(file))
    }

    pub fn decode_png<R: std::io::BufRead + std::io::Seek>(r: R) -> std::io::Result<RgbImage> {
        let mut decoder = png::Decoder::new(r);
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder.read_info().map_err(std::io::Error::other)?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf).map_err(std::io::Error::other)?;
        buf.truncate(info.buffer_size());
        let (w, h) = (info.width, info.height);
        let data = match info.color_type {
            png::ColorType::Rgb => buf,
            png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
            png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
            png::ColorType::GrayscaleAlpha => {
                buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect()
            }
            other => {
                return Err(std::io::Error::other(format!("unsupported PNG color type {other:?}")))
            }
        };
        RgbImage::from_raw(w, h, data).ok_or_else(|| std::io::Error::other("truncated PNG"))
    }
}
