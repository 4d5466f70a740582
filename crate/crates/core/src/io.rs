//! File formats: PGM/PNG images, CSV signals and loss histories, the plain
//! text operator grid, and `TGDF` raw float grids.
//!
//! `TGDF` layout (little-endian): magic `TGDF`, `u16` rank, three `u16`
//! extents (unused axes 0), `u32` element size (always 4), then the `f32`
//! payload in row-major order. The header is 16 bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, ArrayD, IxDyn};

use crate::denoise::HistoryEntry;
use crate::operators::{Operator, Order};
use crate::{Error, Image, Mask, Result, Signal, Volume};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), offset, message: message.into() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

// ---------------------------------------------------------------- PGM / PNG

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max(self) -> f64 {
        match self {
            Self::Eight => 255.0,
            Self::Sixteen => 65535.0,
        }
    }
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl PgmCursor<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(self.path, start, format!("expected {what}")))
    }

    /// One binary P5 image starting at the cursor.
    fn image(&mut self) -> Result<Image> {
        self.skip_space();
        let start = self.pos;
        if self.bytes.get(start..start + 2) != Some(b"P5") {
            return Err(parse_err(self.path, start, "expected P5 magic"));
        }
        self.pos += 2;
        let w = self.number("width")?;
        let h = self.number("height")?;
        let maxval = self.number("maxval")?;
        if w == 0 || h == 0 {
            return Err(parse_err(self.path, start, "zero image dimension"));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(parse_err(self.path, start, format!("maxval {maxval} out of range")));
        }
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => self.pos += 1,
            _ => return Err(parse_err(self.path, self.pos, "expected whitespace after maxval")),
        }
        let bpp = if maxval < 256 { 1 } else { 2 };
        let len = w * h * bpp;
        let data = self
            .bytes
            .get(self.pos..self.pos + len)
            .ok_or_else(|| parse_err(self.path, self.pos, format!("truncated pixel data, need {len} bytes")))?;
        self.pos += len;
        let values: Vec<f64> = if bpp == 1 {
            data.iter().map(|&b| f64::from(b)).collect()
        } else {
            data.chunks_exact(2)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        };
        Ok(Array2::from_shape_vec((h, w), values).expect("pixel count matches"))
    }

    fn at_end(&mut self) -> bool {
        self.skip_space();
        self.pos >= self.bytes.len()
    }
}

/// Reads a binary P5 PGM; sample values are returned unscaled.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = read_bytes(path)?;
    PgmCursor { bytes: &bytes, pos: 0, path }.image()
}

/// Reads a stream of concatenated P5 images of equal size into `[t, y, x]`.
pub fn read_pgm_stream(path: &Path) -> Result<Volume> {
    let bytes = read_bytes(path)?;
    let mut cursor = PgmCursor { bytes: &bytes, pos: 0, path };
    let mut frames = Vec::new();
    while !cursor.at_end() {
        let offset = cursor.pos;
        let frame = cursor.image()?;
        if let Some(first) = frames.first().map(|f: &Image| f.dim()) {
            if frame.dim() != first {
                return Err(parse_err(path, offset, "frame size differs from the first frame"));
            }
        }
        frames.push(frame);
    }
    stack(frames, path)
}

fn stack(frames: Vec<Image>, path: &Path) -> Result<Volume> {
    let Some(first) = frames.first() else {
        return Err(parse_err(path, 0, "no frames"));
    };
    let (h, w) = first.dim();
    let mut vol = Array3::zeros((frames.len(), h, w));
    for (t, f) in frames.iter().enumerate() {
        if f.dim() != (h, w) {
            return Err(Error::Shape(format!("frame {t} is {:?}, expected {:?}", f.dim(), (h, w))));
        }
        vol.index_axis_mut(ndarray::Axis(0), t).assign(f);
    }
    Ok(vol)
}

fn quantize(v: f64, depth: BitDepth) -> u16 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, depth.max()) as u16
}

/// Writes a P5 PGM, rounding and clamping to the depth's range.
pub fn write_pgm(path: &Path, image: &Image, depth: BitDepth) -> Result<()> {
    let (h, w) = image.dim();
    let mut out = format!("P5\n{w} {h}\n{}\n", depth.max() as u32).into_bytes();
    for &v in image.iter() {
        let q = quantize(v, depth);
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&q.to_be_bytes()),
        }
    }
    write_bytes(path, &out)
}

/// Edge maps as 8-bit PGM, 255 = edge.
pub fn write_mask_pgm(path: &Path, mask: &Mask) -> Result<()> {
    write_pgm(path, &mask.mapv(|m| if m { 255.0 } else { 0.0 }), BitDepth::Eight)
}

fn image_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image { path: path.to_path_buf(), message: e.to_string() }
}

/// Reads a PNG as single-channel luma (8- or 16-bit sample values).
pub fn read_png(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| image_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let sixteen = img.color().bits_per_pixel() / u16::from(img.color().channel_count()) > 8;
    let values: Vec<f64> = if sixteen {
        img.to_luma16().into_raw().into_iter().map(f64::from).collect()
    } else {
        img.to_luma8().into_raw().into_iter().map(f64::from).collect()
    };
    Ok(Array2::from_shape_vec((h, w), values).expect("pixel count matches"))
}

pub fn write_png(path: &Path, image: &Image, depth: BitDepth) -> Result<()> {
    let (h, w) = image.dim();
    let result = match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = image.iter().map(|&v| quantize(v, depth) as u8).collect();
            image::GrayImage::from_raw(w as u32, h as u32, raw)
                .expect("buffer size matches")
                .save_with_format(path, image::ImageFormat::Png)
        }
        BitDepth::Sixteen => {
            let raw: Vec<u16> = image.iter().map(|&v| quantize(v, depth)).collect();
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w as u32, h as u32, raw)
                .expect("buffer size matches")
                .save_with_format(path, image::ImageFormat::Png)
        }
    };
    result.map_err(|e| image_err(path, e))
}

/// Writes an `[row, col, channel]` RGB array as an 8-bit PNG.
pub fn write_rgb_png(path: &Path, rgb: &Array3<u8>) -> Result<()> {
    let (h, w, c) = rgb.dim();
    if c != 3 {
        return Err(Error::Shape(format!("expected 3 channels, got {c}")));
    }
    let raw: Vec<u8> = rgb.iter().copied().collect();
    image::RgbImage::from_raw(w as u32, h as u32, raw)
        .expect("buffer size matches")
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

/// Reads `.pgm` or `.png` by extension.
pub fn read_image(path: &Path) -> Result<Image> {
    match extension(path).as_str() {
        "pgm" => read_pgm(path),
        "png" => read_png(path),
        other => Err(Error::Image {
            path: path.to_path_buf(),
            message: format!("unsupported image extension `{other}` (pgm or png)"),
        }),
    }
}

/// Reads a frame sequence: a directory of PGM/PNG frames in lexicographic
/// order, or a single concatenated PGM stream.
pub fn read_frames(path: &Path) -> Result<Volume> {
    if !path.is_dir() {
        return read_pgm_stream(path);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(extension(p).as_str(), "pgm" | "png"))
        .collect();
    files.sort();
    let frames = files.iter().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
    stack(frames, path)
}

// ------------------------------------------------------------------ Signals

/// Reads a one-column CSV signal. Blank lines and `#` lines are skipped; a
/// `# tgd-signal v1 N=<len>` header, if present, is checked against the data.
pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| parse_err(path, e.valid_up_to(), "invalid UTF-8"))?;
    let mut values = Vec::new();
    let mut declared = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("tgd-signal v1 N=") {
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, offset, "bad N in signal header"))?;
                declared = Some(n);
            }
        } else if !trimmed.is_empty() {
            let v: f64 = trimmed
                .parse()
                .map_err(|_| parse_err(path, offset, format!("not a number: `{trimmed}`")))?;
            values.push(v);
        }
        offset += line.len();
    }
    if let Some(n) = declared {
        if n != values.len() {
            return Err(parse_err(path, offset, format!("header declares N={n}, found {}", values.len())));
        }
    }
    Ok(Signal::from(values))
}

/// Writes one value per line (shortest round-trip formatting).
pub fn write_signal_csv(path: &Path, signal: &[f64], header: bool) -> Result<()> {
    let mut out = String::with_capacity(signal.len() * 20);
    if header {
        out.push_str(&format!("# tgd-signal v1 N={}\n", signal.len()));
    }
    for v in signal {
        out.push_str(&format!("{v}\n"));
    }
    write_bytes(path, out.as_bytes())
}

pub fn write_history_csv(path: &Path, history: &[HistoryEntry]) -> Result<()> {
    let mut out = String::from("epoch,L_total,L_1st,L_2nd,L_offset,lr\n");
    for h in history {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            h.epoch, h.total, h.first, h.second, h.offset, h.lr
        ));
    }
    write_bytes(path, out.as_bytes())
}

// ---------------------------------------------------------------- Operators

/// `tgd-op v1 <rank> <order> <extent...>` then the weights, row-major, with
/// 17 significant digits.
pub fn format_operator(op: &Operator) -> String {
    let extents: Vec<String> = op.extent().iter().map(|e| e.to_string()).collect();
    let mut out = format!("tgd-op v1 {} {} {}\n", op.rank(), op.order(), extents.join(" "));
    let row_len = *op.extent().last().expect("rank >= 1");
    for (i, w) in op.weights().iter().enumerate() {
        out.push_str(&format!("{w:.16e}"));
        out.push(if (i + 1) % row_len == 0 { '\n' } else { ' ' });
    }
    out
}

pub fn parse_operator(text: &str, path: &Path) -> Result<Operator> {
    let header_end = text.find('\n').unwrap_or(text.len());
    let mut header = text[..header_end].split_whitespace();
    if header.next() != Some("tgd-op") || header.next() != Some("v1") {
        return Err(parse_err(path, 0, "expected `tgd-op v1` header"));
    }
    let rank: usize = header
        .next()
        .and_then(|s| s.parse().ok())
        .filter(|r| (1..=3).contains(r))
        .ok_or_else(|| parse_err(path, 0, "bad rank"))?;
    let order: Order = header
        .next()
        .ok_or_else(|| parse_err(path, 0, "missing order"))?
        .parse()
        .map_err(|_| parse_err(path, 0, "bad order"))?;
    let extents: Vec<usize> = header
        .map(|s| s.parse().map_err(|_| parse_err(path, 0, format!("bad extent `{s}`"))))
        .collect::<Result<_>>()?;
    if extents.len() != rank {
        return Err(parse_err(path, 0, format!("rank {rank} but {} extents", extents.len())));
    }
    let mut weights = Vec::new();
    let body = &text[header_end..];
    let mut pos = header_end;
    for token in body.split_inclusive(char::is_whitespace) {
        let t = token.trim();
        if !t.is_empty() {
            let v: f64 = t.parse().map_err(|_| parse_err(path, pos, format!("bad weight `{t}`")))?;
            weights.push(v);
        }
        pos += token.len();
    }
    let expected: usize = extents.iter().product();
    if weights.len() != expected {
        return Err(parse_err(path, pos, format!("expected {expected} weights, found {}", weights.len())));
    }
    let grid = ArrayD::from_shape_vec(IxDyn(&extents), weights).expect("count checked");
    Operator::from_weights(grid, order)
}

pub fn write_operator(path: &Path, op: &Operator) -> Result<()> {
    write_bytes(path, format_operator(op).as_bytes())
}

pub fn read_operator(path: &Path) -> Result<Operator> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| parse_err(path, e.valid_up_to(), "invalid UTF-8"))?;
    parse_operator(text, path)
}

// --------------------------------------------------------------------- TGDF

pub fn write_tgdf(path: &Path, grid: &ArrayD<f64>) -> Result<()> {
    let rank = grid.ndim();
    if !(1..=3).contains(&rank) || grid.shape().iter().any(|&e| e > u16::MAX as usize) {
        return Err(Error::Shape(format!("TGDF holds rank 1-3 with extents <= 65535, got {:?}", grid.shape())));
    }
    let mut out = Vec::with_capacity(16 + 4 * grid.len());
    out.extend_from_slice(b"TGDF");
    out.extend_from_slice(&(rank as u16).to_le_bytes());
    for axis in 0..3 {
        let e = grid.shape().get(axis).copied().unwrap_or(0) as u16;
        out.extend_from_slice(&e.to_le_bytes());
    }
    out.extend_from_slice(&4u32.to_le_bytes());
    for &v in grid.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&out).map_err(io_err(path))
}

pub fn read_tgdf(path: &Path) -> Result<ArrayD<f32>> {
    let bytes = read_bytes(path)?;
    if bytes.len() < 16 || &bytes[..4] != b"TGDF" {
        return Err(parse_err(path, 0, "missing TGDF header"));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]) as usize;
    let rank = u16_at(4);
    if !(1..=3).contains(&rank) {
        return Err(parse_err(path, 4, format!("bad rank {rank}")));
    }
    let extents: Vec<usize> = (0..rank).map(|a| u16_at(6 + 2 * a)).collect();
    let elem = u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]);
    if elem != 4 {
        return Err(parse_err(path, 12, format!("element size {elem}, expected 4")));
    }
    let count: usize = extents.iter().product();
    let payload = &bytes[16..];
    if payload.len() != 4 * count {
        return Err(parse_err(path, 16, format!("payload is {} bytes, expected {}", payload.len(), 4 * count)));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(ArrayD::from_shape_vec(IxDyn(&extents), values).expect("count checked"))
}

/// `x,y,angle_degrees` for every edge pixel, row-major.
pub fn write_orientation_csv(path: &Path, edges: &Mask, orientation: &Image) -> Result<()> {
    let mut out = String::from("x,y,angle_degrees\n");
    for ((r, c), &e) in edges.indexed_iter() {
        if e {
            out.push_str(&format!("{c},{r},{}\n", orientation[[r, c]].to_degrees()));
        }
    }
    write_bytes(path, out.as_bytes())
}
