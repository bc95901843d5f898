//! PNG (8/16-bit) and binary PNM (P5/P6, maxval 255 or 65535) codecs with
//! row-level streaming, plus whole-image load/save helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Seek, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BinaryMask, ImageBuffer};
use crate::color::ColorSpaceTag;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::InvalidArgument(format!(
                "unsupported bit depth {other}, expected 8 or 16"
            ))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    /// 2^depth - 1.
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }

    pub fn normalize<T: Scalar>(self, sample: u16) -> T {
        T::lit(sample as f64 / self.max_value() as f64)
    }

    pub fn quantize<T: Scalar>(self, v: T) -> u16 {
        (v.clamp01().as_f64() * self.max_value() as f64).round() as u16
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Png,
    Pnm,
}

impl FileFormat {
    pub fn from_extension(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("png") => Ok(FileFormat::Png),
            Some("ppm" | "pgm" | "pnm") => Ok(FileFormat::Pnm),
            _ => Err(Error::format(path, "unknown image extension (png, ppm, pgm, pnm)")),
        }
    }

    fn sniff(path: &Path, magic: &[u8]) -> Result<Self> {
        if magic.starts_with(&[0x89, b'P', b'N', b'G']) {
            Ok(FileFormat::Png)
        } else if magic.len() >= 2 && magic[0] == b'P' && (magic[1] == b'5' || magic[1] == b'6') {
            Ok(FileFormat::Pnm)
        } else {
            Err(Error::format(path, "not a PNG or binary PNM file"))
        }
    }
}

/// Shape and sample format of an encoded image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterInfo {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub depth: BitDepth,
}

impl RasterInfo {
    pub fn row_samples(&self) -> usize {
        self.width * self.channels
    }
}

/// Integer samples of a decoded image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub info: RasterInfo,
    pub samples: Vec<u16>,
}

/// Sequential row decoder.
pub trait RowReader {
    fn info(&self) -> RasterInfo;
    /// Fills `out` (length `row_samples()`) with the next row; `false` at end.
    fn read_row(&mut self, out: &mut [u16]) -> Result<bool>;
}

/// Sequential row encoder. `finish` must be called after the last row.
pub trait RowWriter {
    fn write_row(&mut self, row: &[u16]) -> Result<()>;
    fn finish(self: Box<Self>) -> Result<()>;
}

pub fn open_reader(path: &Path) -> Result<Box<dyn RowReader>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let magic = reader.fill_buf().map_err(|e| Error::io(path, e))?.to_vec();
    match FileFormat::sniff(path, &magic)? {
        FileFormat::Png => Ok(Box::new(PngRows::new(path, reader)?)),
        FileFormat::Pnm => Ok(Box::new(PnmRows::new(path, reader)?)),
    }
}

pub fn create_writer(path: &Path, info: RasterInfo) -> Result<Box<dyn RowWriter>> {
    if info.channels != 1 && info.channels != 3 {
        return Err(Error::format(path, format!("cannot encode {} channels", info.channels)));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let out = BufWriter::new(file);
    match FileFormat::from_extension(path)? {
        FileFormat::Png => Ok(Box::new(PngSink::new(path, out, info)?)),
        FileFormat::Pnm => Ok(Box::new(PnmSink::new(path, out, info)?)),
    }
}

struct PngRows<R: BufRead + Seek> {
    path: PathBuf,
    reader: png::Reader<R>,
    info: RasterInfo,
}

fn png_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::format(path, format!("png: {e}"))
}

impl<R: BufRead + Seek> PngRows<R> {
    fn new(path: &Path, r: R) -> Result<Self> {
        let mut decoder = png::Decoder::new(r);
        decoder.set_transformations(png::Transformations::EXPAND);
        let reader = decoder.read_info().map_err(|e| png_err(path, e))?;
        if reader.info().interlaced {
            return Err(Error::format(path, "interlaced PNG is not supported"));
        }
        let (color, depth) = reader.output_color_type();
        let channels = match color {
            png::ColorType::Grayscale => 1,
            png::ColorType::Rgb => 3,
            other => {
                return Err(Error::format(
                    path,
                    format!("unexpected channel layout {other:?}; need gray or RGB"),
                ))
            }
        };
        let depth = match depth {
            png::BitDepth::Eight => BitDepth::Eight,
            png::BitDepth::Sixteen => BitDepth::Sixteen,
            other => return Err(Error::format(path, format!("unsupported depth {other:?}"))),
        };
        let info = RasterInfo {
            width: reader.info().width as usize,
            height: reader.info().height as usize,
            channels,
            depth,
        };
        Ok(Self {
            path: path.to_path_buf(),
            reader,
            info,
        })
    }
}

impl<R: BufRead + Seek> RowReader for PngRows<R> {
    fn info(&self) -> RasterInfo {
        self.info
    }

    fn read_row(&mut self, out: &mut [u16]) -> Result<bool> {
        let depth = self.info.depth;
        let row = match self.reader.next_row().map_err(|e| png_err(&self.path, e))? {
            Some(row) => row,
            None => return Ok(false),
        };
        let data = row.data();
        match depth {
            BitDepth::Eight => {
                for (o, &b) in out.iter_mut().zip(data) {
                    *o = b as u16;
                }
            }
            BitDepth::Sixteen => {
                for (o, b) in out.iter_mut().zip(data.chunks_exact(2)) {
                    *o = u16::from_be_bytes([b[0], b[1]]);
                }
            }
        }
        Ok(true)
    }
}

struct PngSink<W: Write + 'static> {
    path: PathBuf,
    writer: png::StreamWriter<'static, W>,
    depth: BitDepth,
    bytes: Vec<u8>,
}

impl<W: Write + 'static> PngSink<W> {
    fn new(path: &Path, out: W, info: RasterInfo) -> Result<Self> {
        let mut enc = png::Encoder::new(out, info.width as u32, info.height as u32);
        enc.set_color(if info.channels == 3 {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        enc.set_depth(match info.depth {
            BitDepth::Eight => png::BitDepth::Eight,
            BitDepth::Sixteen => png::BitDepth::Sixteen,
        });
        let writer = enc.write_header().map_err(|e| png_err(path, e))?;
        let writer = writer.into_stream_writer().map_err(|e| png_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            depth: info.depth,
            bytes: Vec::new(),
        })
    }
}

impl<W: Write + 'static> RowWriter for PngSink<W> {
    fn write_row(&mut self, row: &[u16]) -> Result<()> {
        encode_samples(row, self.depth, &mut self.bytes);
        self.writer
            .write_all(&self.bytes)
            .map_err(|e| Error::io(&self.path, e))
    }

    fn finish(self: Box<Self>) -> Result<()> {
        let path = self.path.clone();
        self.writer.finish().map_err(|e| png_err(&path, e))
    }
}

fn encode_samples(row: &[u16], depth: BitDepth, bytes: &mut Vec<u8>) {
    bytes.clear();
    match depth {
        BitDepth::Eight => bytes.extend(row.iter().map(|&v| v as u8)),
        BitDepth::Sixteen => {
            for &v in row {
                bytes.extend_from_slice(&v.to_be_bytes());
            }
        }
    }
}

struct PnmRows<R: BufRead> {
    path: PathBuf,
    reader: R,
    info: RasterInfo,
    rows_left: usize,
    bytes: Vec<u8>,
}

fn pnm_token<R: BufRead>(path: &Path, r: &mut R) -> Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte).map_err(|e| Error::io(path, e))? == 0 {
            return Err(Error::format(path, "truncated PNM header"));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut comment = Vec::new();
                r.read_until(b'\n', &mut comment).map_err(|e| Error::io(path, e))?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    return Ok(token);
                }
            }
            c => token.push(c as char),
        }
    }
}

impl<R: BufRead> PnmRows<R> {
    fn new(path: &Path, mut reader: R) -> Result<Self> {
        let magic = pnm_token(path, &mut reader)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(Error::format(path, format!("unsupported PNM type {other}"))),
        };
        let mut num = |what: &str| -> Result<usize> {
            pnm_token(path, &mut reader)?
                .parse()
                .map_err(|_| Error::format(path, format!("bad PNM {what}")))
        };
        let width = num("width")?;
        let height = num("height")?;
        let depth = match num("maxval")? {
            255 => BitDepth::Eight,
            65535 => BitDepth::Sixteen,
            other => {
                return Err(Error::format(
                    path,
                    format!("unsupported PNM maxval {other}; need 255 or 65535"),
                ))
            }
        };
        Ok(Self {
            path: path.to_path_buf(),
            reader,
            info: RasterInfo {
                width,
                height,
                channels,
                depth,
            },
            rows_left: height,
            bytes: Vec::new(),
        })
    }
}

impl<R: BufRead> RowReader for PnmRows<R> {
    fn info(&self) -> RasterInfo {
        self.info
    }

    fn read_row(&mut self, out: &mut [u16]) -> Result<bool> {
        if self.rows_left == 0 {
            return Ok(false);
        }
        let n = self.info.row_samples();
        let bytes_per = if self.info.depth == BitDepth::Sixteen { 2 } else { 1 };
        self.bytes.resize(n * bytes_per, 0);
        self.reader
            .read_exact(&mut self.bytes)
            .map_err(|e| Error::io(&self.path, e))?;
        match self.info.depth {
            BitDepth::Eight => {
                for (o, &b) in out.iter_mut().zip(&self.bytes) {
                    *o = b as u16;
                }
            }
            BitDepth::Sixteen => {
                for (o, b) in out.iter_mut().zip(self.bytes.chunks_exact(2)) {
                    *o = u16::from_be_bytes([b[0], b[1]]);
                }
            }
        }
        self.rows_left -= 1;
        Ok(true)
    }
}

struct PnmSink<W: Write> {
    path: PathBuf,
    out: W,
    depth: BitDepth,
    bytes: Vec<u8>,
}

impl<W: Write> PnmSink<W> {
    fn new(path: &Path, mut out: W, info: RasterInfo) -> Result<Self> {
        let magic = if info.channels == 3 { "P6" } else { "P5" };
        write!(
            out,
            "{magic}\n{} {}\n{}\n",
            info.width,
            info.height,
            info.depth.max_value()
        )
        .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
            depth: info.depth,
            bytes: Vec::new(),
        })
    }
}

impl<W: Write> RowWriter for PnmSink<W> {
    fn write_row(&mut self, row: &[u16]) -> Result<()> {
        encode_samples(row, self.depth, &mut self.bytes);
        self.out.write_all(&self.bytes).map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self: Box<Self>) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_raw(path: &Path) -> Result<RawImage> {
    let mut reader = open_reader(path)?;
    let info = reader.info();
    let n = info.row_samples();
    let mut samples = vec![0u16; n * info.height];
    for y in 0..info.height {
        if !reader.read_row(&mut samples[y * n..(y + 1) * n])? {
            return Err(Error::format(path, format!("image ends after {y} rows")));
        }
    }
    Ok(RawImage { info, samples })
}

pub fn write_raw(path: &Path, raw: &RawImage) -> Result<()> {
    let mut writer = create_writer(path, raw.info)?;
    let n = raw.info.row_samples();
    for row in raw.samples.chunks_exact(n.max(1)).take(raw.info.height) {
        writer.write_row(row)?;
    }
    writer.finish()
}

pub fn read_dimensions(path: &Path) -> Result<(usize, usize)> {
    let reader = open_reader(path)?;
    let info = reader.info();
    Ok((info.height, info.width))
}

/// Decodes an RGB image into [0,1] by dividing by 2^depth - 1; tagged sRGB.
pub fn load_image<T: Scalar>(path: &Path) -> Result<(ImageBuffer<T>, BitDepth)> {
    let raw = read_raw(path)?;
    if raw.info.channels != 3 {
        return Err(Error::format(
            path,
            format!("expected 3 channels, found {}", raw.info.channels),
        ));
    }
    let depth = raw.info.depth;
    let data = raw.samples.iter().map(|&s| depth.normalize(s)).collect();
    let img = ImageBuffer::from_raw(raw.info.height, raw.info.width, data, ColorSpaceTag::SrgbNonlinear)?;
    Ok((img, depth))
}

/// Like [`load_image`] but insists on a declared bit depth.
pub fn load_image_with_depth<T: Scalar>(path: &Path, depth: BitDepth) -> Result<ImageBuffer<T>> {
    let (img, found) = load_image(path)?;
    if found != depth {
        return Err(Error::format(
            path,
            format!("expected {}-bit samples, found {}-bit", depth.bits(), found.bits()),
        ));
    }
    Ok(img)
}

pub fn image_to_raw<T: Scalar>(img: &ImageBuffer<T>, depth: BitDepth) -> RawImage {
    RawImage {
        info: RasterInfo {
            width: img.width(),
            height: img.height(),
            channels: 3,
            depth,
        },
        samples: img.data().iter().map(|&v| depth.quantize(v)).collect(),
    }
}

pub fn save_image<T: Scalar>(path: &Path, img: &ImageBuffer<T>, depth: BitDepth) -> Result<()> {
    if !img.tag().is_rgb() {
        return Err(Error::TagMismatch {
            expected: ColorSpaceTag::SrgbNonlinear,
            actual: img.tag(),
        });
    }
    write_raw(path, &image_to_raw(img, depth))
}

/// Loads a single-channel mask; samples at or above the midpoint are subject.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let raw = read_raw(path)?;
    if raw.info.channels != 1 {
        return Err(Error::format(
            path,
            format!("mask must be single-channel, found {} channels", raw.info.channels),
        ));
    }
    let threshold = match raw.info.depth {
        BitDepth::Eight => 128,
        BitDepth::Sixteen => 128 * 256,
    };
    BinaryMask::new(
        raw.info.height,
        raw.info.width,
        raw.samples.iter().map(|&s| s >= threshold).collect(),
    )
}

/// Loads a mask and checks it against the paired photo's dimensions.
pub fn load_mask_for(path: &Path, photo_dims: (usize, usize)) -> Result<BinaryMask> {
    let mask = load_mask(path)?;
    if mask.dims() != photo_dims {
        return Err(Error::format(
            path,
            format!(
                "mask is {}x{} but photo is {}x{}",
                mask.height(),
                mask.width(),
                photo_dims.0,
                photo_dims.1
            ),
        ));
    }
    Ok(mask)
}

pub fn save_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_raw(
        path,
        &RawImage {
            info: RasterInfo {
                width: mask.width(),
                height: mask.height(),
                channels: 1,
                depth: BitDepth::Eight,
            },
            samples: mask.to_u8().into_iter().map(u16::from).collect(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_examples() {
        assert_eq!(BitDepth::Eight.normalize::<f32>(255), 1.0);
        assert_eq!(BitDepth::Sixteen.normalize::<f32>(0), 0.0);
        let v: f64 = BitDepth::Sixteen.normalize(32768);
        assert_eq!(v, 32768.0 / 65535.0);
        assert!((v - 0.500_007_6).abs() < 1e-7);
    }

    #[test]
    fn rejects_wrong_channel_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gray.png");
        let raw = RawImage {
            info: RasterInfo { width: 2, height: 2, channels: 1, depth: BitDepth::Eight },
            samples: vec![0, 1, 2, 3],
        };
        write_raw(&p, &raw).unwrap();
        assert!(matches!(load_image::<f32>(&p), Err(Error::Format { .. })));
        let rgb = dir.path().join("rgb.ppm");
        save_image(&rgb, &ImageBuffer::filled(2, 2, [0.5f32; 3], ColorSpaceTag::SrgbNonlinear), BitDepth::Eight).unwrap();
        assert!(load_mask(&rgb).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_image::<f32>(Path::new("/nonexistent/x.png")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.png"));
    }

    #[test]
    fn corrupt_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.png");
        std::fs::write(&p, b"\x89PNG\r\n\x1a\ngarbage").unwrap();
        assert!(load_image::<f32>(&p).is_err());
        let q = dir.path().join("bad.ppm");
        std::fs::write(&q, b"P6\n4 4\n255\nabc").unwrap();
        assert!(load_image::<f32>(&q).is_err());
    }

    #[test]
    fn mask_dimension_mismatch_names_both_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        save_mask(&p, &BinaryMask::empty(3, 4)).unwrap();
        let msg = load_mask_for(&p, (5, 6)).unwrap_err().to_string();
        assert!(msg.contains("3x4") && msg.contains("5x6"), "{msg}");
    }

    #[test]
    fn pnm_header_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ppm");
        let mut bytes = b"P6\n# made by hand\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x80, 0x00, 0xff, 0xff, 0x00, 0x01]);
        std::fs::write(&p, bytes).unwrap();
        let (img, depth) = load_image::<f64>(&p).unwrap();
        assert_eq!(depth, BitDepth::Sixteen);
        assert_eq!(img.pixel(0, 0), [32768.0 / 65535.0, 1.0, 1.0 / 65535.0]);
    }

    fn raw_strategy() -> impl Strategy<Value = (RawImage, bool)> {
        (1usize..9, 1usize..9, prop_oneof![Just(1usize), Just(3usize)], any::<bool>(), any::<bool>())
            .prop_flat_map(|(w, h, ch, sixteen, png)| {
                let depth = if sixteen { BitDepth::Sixteen } else { BitDepth::Eight };
                let max = depth.max_value();
                proptest::collection::vec(0..=max, w * h * ch).prop_map(move |samples| {
                    (
                        RawImage {
                            info: RasterInfo { width: w, height: h, channels: ch, depth },
                            samples,
                        },
                        png,
                    )
                })
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn raw_round_trip_is_lossless((raw, png) in raw_strategy()) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join(if png { "x.png" } else { "x.pnm" });
            write_raw(&p, &raw).unwrap();
            prop_assert_eq!(read_raw(&p).unwrap(), raw);
        }
    }
}
