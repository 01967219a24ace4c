//! Software rasterizer for screens.
//!
//! Output depends only on the [`ScreenSpec`] and [`RENDERER_VERSION`]; no
//! system fonts or platform libraries are involved.

use std::io;

use sha2::{Digest, Sha256};

use crate::font;
use crate::icons::{Direction, Glyph, Primitive, Shape};
use crate::layout::{BBox, ScreenSpec, GLYPH_H, ICON_W, LABEL_H};

pub const RENDERER_VERSION: u32 = 1;

const BACKGROUND: [u8; 3] = [255, 255, 255];
const TILE: [u8; 3] = [236, 239, 244];
const INK: [u8; 3] = [33, 37, 41];
const FONT_SCALE: i32 = 2;

/// Row-major RGBA8 pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl ImageBuffer {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = std::iter::repeat_n([rgb[0], rgb[1], rgb[2], 255], (width * height) as usize)
            .flatten()
            .collect();
        ImageBuffer {
            width,
            height,
            data,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = ((y * self.width + x) * 4) as usize;
        [
            self.data[i],
            self.data[i + 1],
            self.data[i + 2],
            self.data[i + 3],
        ]
    }

    fn put(&mut self, x: i32, y: i32, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            return;
        }
        let i = ((y as u32 * self.width + x as u32) * 4) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
        self.data[i + 3] = 255;
    }

    fn fill_rect(&mut self, r: BBox, rgb: [u8; 3]) {
        for y in r.y0.max(0)..r.y1.min(self.height as i32) {
            for x in r.x0.max(0)..r.x1.min(self.width as i32) {
                self.put(x, y, rgb);
            }
        }
    }

    /// Hex SHA-256 of the raw pixel bytes.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(&self.data);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Encodes as an 8-bit RGBA PNG.
    pub fn to_png(&self) -> io::Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_compression(png::Compression::Fast);
            let mut writer = enc.write_header().map_err(io::Error::other)?;
            writer
                .write_image_data(&self.data)
                .map_err(io::Error::other)?;
        }
        Ok(out)
    }

    pub fn from_png(bytes: &[u8]) -> io::Result<Self> {
        let mut decoder = png::Decoder::new(io::Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::EXPAND);
        let mut reader = decoder.read_info().map_err(io::Error::other)?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| io::Error::other("image too large"))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf).map_err(io::Error::other)?;
        if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Eight {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "expected 8-bit RGBA",
            ));
        }
        buf.truncate(info.buffer_size());
        Ok(ImageBuffer {
            width: info.width,
            height: info.height,
            data: buf,
        })
    }
}

/// Rasterizes a screen: white background, page caption top-center, and for
/// each icon a tinted tile with its glyph and the icon name beneath.
pub fn render_screen(spec: &ScreenSpec) -> ImageBuffer {
    let mut img = ImageBuffer::filled(spec.width, spec.height, BACKGROUND);
    let caption = spec.node.to_string();
    let w = font::text_width(&caption, FONT_SCALE);
    draw_text(&mut img, &caption, spec.width as i32 / 2 - w / 2, 20, INK);
    for icon in &spec.icons {
        let b = icon.bbox;
        let glyph_box = BBox::new(b.x0, b.y0, b.x0 + ICON_W, b.y0 + GLYPH_H);
        img.fill_rect(
            BBox::new(
                glyph_box.x0 + 2,
                glyph_box.y0 + 2,
                glyph_box.x1 - 2,
                glyph_box.y1 - 2,
            ),
            TILE,
        );
        draw_glyph(&mut img, &icon.asset.glyph, glyph_box);
        let name = &icon.asset.name;
        let tw = font::text_width(name, FONT_SCALE);
        let ty = b.y0 + GLYPH_H + (LABEL_H - font::GLYPH_H * FONT_SCALE) / 2;
        draw_text(&mut img, name, b.x0 + (ICON_W - tw) / 2, ty, INK);
    }
    img
}

fn draw_text(img: &mut ImageBuffer, text: &str, x: i32, y: i32, rgb: [u8; 3]) {
    let advance = (font::GLYPH_W + 1) * FONT_SCALE;
    for (i, c) in text.chars().enumerate() {
        let rows = font::glyph(c);
        let ox = x + i as i32 * advance;
        for (row, bits) in rows.iter().enumerate() {
            for col in 0..font::GLYPH_W {
                if bits & (1 << (font::GLYPH_W - 1 - col)) != 0 {
                    let px = ox + col * FONT_SCALE;
                    let py = y + row as i32 * FONT_SCALE;
                    img.fill_rect(BBox::new(px, py, px + FONT_SCALE, py + FONT_SCALE), rgb);
                }
            }
        }
    }
}

fn draw_glyph(img: &mut ImageBuffer, glyph: &Glyph, area: BBox) {
    for p in &glyph.0 {
        draw_primitive(img, p, area);
    }
}

fn draw_primitive(img: &mut ImageBuffer, p: &Primitive, area: BBox) {
    let cx = (area.x0 + area.x1) / 2 + p.dx as i32;
    let cy = (area.y0 + area.y1) / 2 + p.dy as i32;
    let s = p.size as i32;
    let x0 = (cx - s).max(area.x0);
    let x1 = (cx + s + 1).min(area.x1);
    let y0 = (cy - s).max(area.y0);
    let y1 = (cy + s + 1).min(area.y1);
    for y in y0..y1 {
        for x in x0..x1 {
            if covers(p.shape, x - cx, y - cy, s) {
                img.put(x, y, p.color);
            }
        }
    }
}

/// Coverage test in primitive-local coordinates, with `s` the half-extent.
fn covers(shape: Shape, u: i32, v: i32, s: i32) -> bool {
    match shape {
        Shape::Disc => u * u + v * v <= s * s,
        Shape::Ring => {
            let d = u * u + v * v;
            let inner = s * 2 / 3;
            d <= s * s && d > inner * inner
        }
        Shape::Bar { vertical: false } => u.abs() <= s && v.abs() <= s / 3,
        Shape::Bar { vertical: true } => v.abs() <= s && u.abs() <= s / 3,
        Shape::Cross => (u.abs() <= s && v.abs() <= s / 4) || (v.abs() <= s && u.abs() <= s / 4),
        Shape::Triangle { dir } => {
            // `along` runs from the apex (0) to the base (2s)
            let (across, along) = match dir {
                Direction::Up => (u, v + s),
                Direction::Down => (u, s - v),
                Direction::Left => (v, u + s),
                Direction::Right => (v, s - u),
            };
            (0..=2 * s).contains(&along) && 2 * across.abs() <= along
        }
    }
}
