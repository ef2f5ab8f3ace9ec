//! Grayscale image and matrix I/O.
//!
//! Images are 8-bit: loading maps a byte `v` to `v / 255`, saving writes
//! `round(255 clamp(v, 0, 1))`. Supported containers are binary PGM (`P5`),
//! binary PPM (`P6`, read only, averaged to gray), PNG, and plain CSV
//! matrices (unquantized, one grid row per line).

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    Csv,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("pgm") | Some("ppm") | Some("pnm") => Ok(ImageFormat::Pgm),
            Some("png") => Ok(ImageFormat::Png),
            Some("csv") => Ok(ImageFormat::Csv),
            _ => Err(Error::UnsupportedFormat(path.display().to_string())),
        }
    }
}

/// Maps a value to its 8-bit code.
pub fn quantize(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Loads an image or CSV matrix as a field with unit spacing.
pub fn load_image(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    match ImageFormat::from_path(path)? {
        ImageFormat::Pgm => decode_pnm(&read_bytes(path)?, path),
        ImageFormat::Png => load_png(path),
        ImageFormat::Csv => load_csv(path),
    }
}

/// Saves a field. Image formats clamp and quantize; CSV writes raw values.
pub fn save_image(field: &ScalarField, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::Pgm => encode_pgm(field),
        ImageFormat::Png => encode_png(field, path)?,
        ImageFormat::Csv => encode_csv(field).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Saves using the format implied by the file extension.
pub fn save_image_auto(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    save_image(field, path, ImageFormat::from_path(path)?)
}

/// Binary PGM bytes: `P5\n<W> <H>\n255\n` followed by `W * H` row-major bytes.
pub fn encode_pgm(field: &ScalarField) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", field.cols(), field.rows());
    let mut out = Vec::with_capacity(header.len() + field.len());
    out.extend_from_slice(header.as_bytes());
    out.extend(field.values().iter().map(|&v| quantize(v)));
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| malformed(path, format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, format!("invalid {what}")))
    }
}

/// Decodes binary PGM (`P5`) or PPM (`P6`) bytes.
pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<ScalarField> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let channels = match cur.token() {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(_) => return Err(malformed(path, "expected P5 or P6 magic")),
        None => return Err(malformed(path, "empty file")),
    };
    let width = cur.number(path, "width")?;
    let height = cur.number(path, "height")?;
    let maxval = cur.number(path, "maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            depth: format!("maxval {maxval}"),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(malformed(path, "truncated header"));
    }
    let data = &bytes[cur.pos + 1..];
    let needed = width * height * channels;
    if data.len() < needed {
        return Err(malformed(
            path,
            format!("expected {needed} raster bytes, found {}", data.len()),
        ));
    }
    let values = data[..needed]
        .chunks_exact(channels)
        .map(|px| px.iter().map(|&b| b as f64).sum::<f64>() / (255.0 * channels as f64))
        .collect();
    ScalarField::new(height, width, values)
}

fn load_png(path: &Path) -> Result<ScalarField> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| malformed(path, e.to_string()))?;
    let depth = reader.info().bit_depth;
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            depth: format!("{depth:?}"),
        });
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| malformed(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| malformed(path, e.to_string()))?;
    let (color_channels, stride) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (1, 2),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (3, 4),
        png::ColorType::Indexed => {
            return Err(malformed(path, "palette was not expanded"));
        }
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        let line = &buf[row * info.line_size..row * info.line_size + w * stride];
        for px in line.chunks_exact(stride) {
            let sum: f64 = px[..color_channels].iter().map(|&b| b as f64).sum();
            values.push(sum / (255.0 * color_channels as f64));
        }
    }
    ScalarField::new(h, w, values)
}

fn encode_png(field: &ScalarField, path: &Path) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(BufWriter::new(&mut out), field.cols() as u32, field.rows() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let to_err = |e: png::EncodingError| Error::io(path, std::io::Error::other(e.to_string()));
        let mut writer = encoder.write_header().map_err(to_err)?;
        let data: Vec<u8> = field.values().iter().map(|&v| quantize(v)).collect();
        writer.write_image_data(&data).map_err(to_err)?;
        writer.finish().map_err(to_err)?;
    }
    Ok(out)
}

/// CSV matrix text, one grid row per line, values in shortest round-trip
/// form.
pub fn encode_csv(field: &ScalarField) -> String {
    let mut s = String::new();
    for i in 0..field.rows() {
        let row: Vec<String> = (0..field.cols()).map(|j| field.get(i, j).to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn load_csv(path: &Path) -> Result<ScalarField> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|_| malformed(path, "not UTF-8"))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(path, format!("line {}: {e}", lineno + 1)))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(malformed(path, format!("line {} has {} columns, expected {c}", lineno + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| malformed(path, "empty matrix"))?;
    ScalarField::new(rows, cols, values)
}

/// Writes `text` to `path` atomically enough for our purposes: a sibling
/// temp file is written and renamed over the target.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let tmp: PathBuf = {
        let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".tmp");
        path.with_file_name(name)
    };
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
