//! Image input (binary PPM, optionally PNG), box downsampling, and label map
//! output as 16-bit PGM or CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::cluster::Segmentation;
use crate::error::{Error, Result};

/// RGB image with channel values in `[0, 1]`, stored row-major, pixel
/// interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!("empty {height}x{width} image")));
        }
        if data.len() != height * width * 3 {
            return Err(Error::mismatch(height * width * 3, data.len()));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("channel value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, r: usize, c: usize) -> [f64; 3] {
        let k = 3 * (r * self.width + c);
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }
}

/// Netpbm header reader: whitespace separated tokens with `#` comments.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
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
        if start == self.pos {
            return Err(Error::Format {
                offset: start,
                msg: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format {
                offset: start,
                msg: format!("{what} out of range"),
            })
    }

    /// Consumes the single whitespace byte that ends a Netpbm header.
    fn end_of_header(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(Error::Format {
                offset: self.pos,
                msg: "expected whitespace after maxval".into(),
            }),
        }
    }
}

struct NetpbmHeader {
    width: usize,
    height: usize,
    maxval: usize,
    raster: usize,
}

fn parse_netpbm_header(bytes: &[u8], magic: &[u8; 2]) -> Result<NetpbmHeader> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::Format {
            offset: 0,
            msg: format!("expected magic {:?}", String::from_utf8_lossy(magic)),
        });
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = {
        cur.skip_space();
        cur.pos
    };
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format {
            offset: 2,
            msg: format!("zero image dimension {width}x{height}"),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format {
            offset: maxval_at,
            msg: format!("maxval {maxval} not in 1..=65535"),
        });
    }
    let raster = cur.end_of_header()?;
    Ok(NetpbmHeader {
        width,
        height,
        maxval,
        raster,
    })
}

fn read_samples(bytes: &[u8], h: &NetpbmHeader, count: usize) -> Result<Vec<u16>> {
    let wide = h.maxval > 255;
    let need = count * if wide { 2 } else { 1 };
    let body = &bytes[h.raster..];
    if body.len() < need {
        return Err(Error::Format {
            offset: bytes.len(),
            msg: format!("raster truncated: need {need} bytes, found {}", body.len()),
        });
    }
    let samples: Vec<u16> = if wide {
        body[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        body[..need].iter().map(|&b| u16::from(b)).collect()
    };
    if let Some(k) = samples.iter().position(|&s| usize::from(s) > h.maxval) {
        return Err(Error::Format {
            offset: h.raster + if wide { 2 * k } else { k },
            msg: format!("sample {} exceeds maxval {}", samples[k], h.maxval),
        });
    }
    Ok(samples)
}

/// Decodes a binary PPM (P6).
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let h = parse_netpbm_header(bytes, b"P6")?;
    let samples = read_samples(bytes, &h, h.width * h.height * 3)?;
    let scale = h.maxval as f64;
    RgbImage::new(h.height, h.width, samples.iter().map(|&s| f64::from(s) / scale).collect())
}

/// Encodes as P6 with maxval 255; values are rounded to the nearest level.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn save_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format {
            offset: 0,
            msg: format!("PNG decode failed: {e}"),
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::new(
        h as usize,
        w as usize,
        img.into_raw().into_iter().map(|b| f64::from(b) / 255.0).collect(),
    )
}

#[cfg(not(feature = "png"))]
fn decode_png(_bytes: &[u8]) -> Result<RgbImage> {
    Err(Error::Format {
        offset: 0,
        msg: "PNG input requires the `png` feature".into(),
    })
}

pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else {
        Err(Error::Format {
            offset: 0,
            msg: "unsupported image format (expected binary PPM or PNG)".into(),
        })
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// `factor × factor` box average. Trailing rows and columns that do not fill
/// a whole box are dropped.
pub fn downsample(img: &RgbImage, factor: usize) -> Result<RgbImage> {
    if factor == 0 {
        return Err(Error::InvalidParameter("downsampling factor must be at least 1".into()));
    }
    let (h, w) = (img.height / factor, img.width / factor);
    if h == 0 || w == 0 {
        return Err(Error::InvalidParameter(format!(
            "downsampling {}x{} by {factor} leaves an empty image",
            img.height, img.width
        )));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let area = (factor * factor) as f64;
    RgbImage::from_fn(h, w, |r, c| {
        // offsets from the first pixel, so a constant block comes back exactly
        let base = img.pixel(r * factor, c * factor);
        let mut acc = [0.0; 3];
        for dr in 0..factor {
            for dc in 0..factor {
                let p = img.pixel(r * factor + dr, c * factor + dc);
                for ch in 0..3 {
                    acc[ch] += p[ch] - base[ch];
                }
            }
        }
        [0, 1, 2].map(|ch| (base[ch] + acc[ch] / area).clamp(0.0, 1.0))
    })
}

/// Pixel replication by an integer factor.
pub fn upsample_replicate(img: &RgbImage, factor: usize) -> Result<RgbImage> {
    if factor == 0 {
        return Err(Error::InvalidParameter("upsampling factor must be at least 1".into()));
    }
    RgbImage::from_fn(img.height * factor, img.width * factor, |r, c| img.pixel(r / factor, c / factor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelFormat {
    Pgm,
    Csv,
}

impl LabelFormat {
    /// Guesses from the file extension; anything other than `.pgm` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => LabelFormat::Pgm,
            _ => LabelFormat::Csv,
        }
    }
}

fn layout_of(seg: &Segmentation) -> Result<(usize, usize)> {
    seg.layout()
        .ok_or_else(|| Error::InvalidParameter("segmentation has no image layout".into()))
}

/// Serializes a label map: PGM stores raw 16-bit big-endian labels with
/// maxval 65535, CSV one line per image row.
pub fn encode_labels(seg: &Segmentation, format: LabelFormat) -> Result<Vec<u8>> {
    let (h, w) = layout_of(seg)?;
    match format {
        LabelFormat::Pgm => {
            if seg.k() > 65535 {
                return Err(Error::InvalidParameter(format!(
                    "{} segments do not fit a 16-bit PGM",
                    seg.k()
                )));
            }
            let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
            for &l in seg.labels() {
                out.extend_from_slice(&(l as u16).to_be_bytes());
            }
            Ok(out)
        }
        LabelFormat::Csv => {
            let mut out = String::with_capacity(seg.len() * 3);
            for row in seg.labels().chunks(w) {
                for (c, l) in row.iter().enumerate() {
                    if c > 0 {
                        out.push(',');
                    }
                    write!(out, "{l}").unwrap();
                }
                out.push('\n');
            }
            Ok(out.into_bytes())
        }
    }
}

pub fn save_labels(seg: &Segmentation, path: impl AsRef<Path>, format: LabelFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_labels(seg, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a label map from PGM (P5, 8 or 16 bit) or integer CSV.
pub fn decode_labels(bytes: &[u8], path: &Path) -> Result<Segmentation> {
    if bytes.starts_with(b"P5") {
        let h = parse_netpbm_header(bytes, b"P5")?;
        let samples = read_samples(bytes, &h, h.width * h.height)?;
        let labels = samples.into_iter().map(usize::from).collect();
        return Segmentation::from_labels(labels).map(|s| s.with_layout(h.height, h.width));
    }
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format {
        offset: e.valid_up_to(),
        msg: "label CSV is not UTF-8".into(),
    })?;
    let mut labels = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<usize> = line
            .split(',')
            .map(|f| f.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("bad label: {e}"),
            })?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("expected {w} labels, found {}", row.len()),
                })
            }
            _ => {}
        }
        labels.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty label file".into(),
    })?;
    Segmentation::from_labels(labels).map(|s| s.with_layout(height, width))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Segmentation> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_labels(&bytes, path)
}

/// Nearest-neighbour resampling of a label map to `height × width`.
pub fn resample_labels_nearest(seg: &Segmentation, height: usize, width: usize) -> Result<Segmentation> {
    let (h, w) = layout_of(seg)?;
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("empty target layout".into()));
    }
    let labels = (0..height)
        .flat_map(|r| {
            let sr = ((2 * r + 1) * h / (2 * height)).min(h - 1);
            (0..width).map(move |c| {
                let sc = ((2 * c + 1) * w / (2 * width)).min(w - 1);
                sr * w + sc
            })
        })
        .map(|src| seg.labels()[src])
        .collect();
    Ok(Segmentation::new(labels, seg.k())?.with_layout(height, width))
}

/// Majority label over each `factor × factor` block (smallest label on
/// ties), cropping remainders the same way as [`downsample`].
pub fn downsample_labels(seg: &Segmentation, factor: usize) -> Result<Segmentation> {
    let (h, w) = layout_of(seg)?;
    if factor == 0 || h / factor == 0 || w / factor == 0 {
        return Err(Error::InvalidParameter(format!("cannot downsample {h}x{w} labels by {factor}")));
    }
    let (oh, ow) = (h / factor, w / factor);
    let mut labels = Vec::with_capacity(oh * ow);
    let mut block = Vec::with_capacity(factor * factor);
    for r in 0..oh {
        for c in 0..ow {
            block.clear();
            for dr in 0..factor {
                for dc in 0..factor {
                    block.push(seg.labels()[(r * factor + dr) * w + c * factor + dc]);
                }
            }
            block.sort_unstable();
            let mut best = (0usize, block[0]);
            let mut run = (0usize, block[0]);
            for &l in &block {
                if l == run.1 {
                    run.0 += 1;
                } else {
                    run = (1, l);
                }
                if run.0 > best.0 {
                    best = run;
                }
            }
            labels.push(best.1);
        }
    }
    Ok(Segmentation::new(labels, seg.k())?.with_layout(oh, ow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn white_pixel() {
        let img = decode_ppm(b"P6\n1 1\n255\n\xff\xff\xff").unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn black_image_with_comment() {
        let mut bytes = b"P6 # made by hand\n2 2\n255\n".to_vec();
        bytes.extend([0u8; 12]);
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!((img.height(), img.width()), (2, 2));
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn corrupt_headers_name_offsets() {
        match decode_image(b"GIF89a") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
        match decode_ppm(b"P6\n2 x\n255\n") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(decode_ppm(b"P6\n2 2\n255\n\0\0"), Err(Error::Format { .. })));
        assert!(matches!(decode_ppm(b"P6\n1 1\n70000\n\0\0\0"), Err(Error::Format { offset: 7, .. })));
    }

    #[test]
    fn downsample_cases() {
        let img = RgbImage::from_fn(3, 3, |r, c| [(r * 3 + c) as f64 / 8.0, 0.5, 0.0]).unwrap();
        assert_eq!(downsample(&img, 1).unwrap(), img);
        let flat = RgbImage::from_fn(2, 2, |_, _| [0.25, 0.5, 0.75]).unwrap();
        assert_eq!(downsample(&flat, 2).unwrap().pixel(0, 0), [0.25, 0.5, 0.75]);
        let checker = RgbImage::from_fn(4, 4, |r, c| [((r + c) % 2) as f64; 3]).unwrap();
        let one = downsample(&checker, 4).unwrap();
        assert_eq!((one.height(), one.width()), (1, 1));
        assert_eq!(one.pixel(0, 0), [0.5; 3]);
        assert!(downsample(&checker, 5).is_err());
        assert!(downsample(&checker, 0).is_err());
        // 5x7 by 2 crops the last row and column
        let odd = RgbImage::from_fn(5, 7, |_, _| [0.0; 3]).unwrap();
        let small = downsample(&odd, 2).unwrap();
        assert_eq!((small.height(), small.width()), (2, 3));
    }

    #[test]
    fn csv_labels_body() {
        let seg = Segmentation::new(vec![0, 1], 2).unwrap().with_layout(1, 2);
        assert_eq!(encode_labels(&seg, LabelFormat::Csv).unwrap(), b"0,1\n");
    }

    #[test]
    fn labels_without_layout_rejected() {
        let seg = Segmentation::new(vec![0, 1], 2).unwrap();
        assert!(encode_labels(&seg, LabelFormat::Csv).is_err());
        assert!(encode_labels(&seg, LabelFormat::Pgm).is_err());
    }

    #[test]
    fn pgm_too_many_segments() {
        let seg = Segmentation::new(vec![0, 1], 70000).unwrap().with_layout(1, 2);
        assert!(encode_labels(&seg, LabelFormat::Pgm).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let labels: Vec<usize> = (0..12).map(|i| (i * 7) % 300).collect();
        let seg = Segmentation::new(labels, 300).unwrap().with_layout(3, 4);
        let bytes = encode_labels(&seg, LabelFormat::Pgm).unwrap();
        let back = decode_labels(&bytes, &PathBuf::from("x.pgm")).unwrap();
        assert_eq!(back.labels(), seg.labels());
        assert_eq!(back.layout(), Some((3, 4)));
    }

    #[test]
    fn nearest_resampling_and_block_mode() {
        let seg = Segmentation::new(vec![0, 1, 2, 3], 4).unwrap().with_layout(2, 2);
        let up = resample_labels_nearest(&seg, 4, 4).unwrap();
        assert_eq!(
            up.labels(),
            &[0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3]
        );
        assert_eq!(downsample_labels(&up, 2).unwrap().labels(), seg.labels());
        let tie = Segmentation::new(vec![3, 1, 1, 3], 4).unwrap().with_layout(2, 2);
        assert_eq!(downsample_labels(&tie, 2).unwrap().labels(), &[1]);
    }
}
