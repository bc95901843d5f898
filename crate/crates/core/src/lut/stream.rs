//! Tile-by-tile LUT application between row codecs, for images too large
//! to hold in memory.

use std::path::Path;

use rayon::prelude::*;

use super::{apply_slice, Lut3D};
use crate::error::{Error, Result};
use crate::imaging::io::{create_writer, open_reader, RasterInfo};
use crate::scalar::Scalar;

pub const DEFAULT_TILE_ROWS: usize = 64;

/// Streams `input` through `lut` into `output` (same bit depth), holding at
/// most `tile_rows` rows in memory. Returns the raster info.
pub fn apply_file<T: Scalar>(lut: &Lut3D<T>, input: &Path, output: &Path, tile_rows: usize) -> Result<RasterInfo> {
    let mut reader = open_reader(input)?;
    let info = reader.info();
    if info.channels != 3 {
        return Err(Error::format(input, format!("expected 3 channels, found {}", info.channels)));
    }
    let mut writer = create_writer(output, info)?;
    let tile_rows = tile_rows.max(1);
    let row_len = info.row_samples();
    let depth = info.depth;
    let mut samples = vec![0u16; row_len * tile_rows];
    let mut pixels = vec![T::zero(); row_len * tile_rows];
    let mut done = 0;
    while done < info.height {
        let rows = tile_rows.min(info.height - done);
        for r in 0..rows {
            if !reader.read_row(&mut samples[r * row_len..(r + 1) * row_len])? {
                return Err(Error::format(input, format!("image ends after {} rows", done + r)));
            }
        }
        let n = rows * row_len;
        pixels[..n]
            .par_chunks_mut(row_len.max(3))
            .zip(samples[..n].par_chunks_mut(row_len.max(3)))
            .for_each(|(px, s)| {
                for (p, &v) in px.iter_mut().zip(s.iter()) {
                    *p = depth.normalize(v);
                }
                apply_slice(lut, px, true);
                for (v, &p) in s.iter_mut().zip(px.iter()) {
                    *v = depth.quantize(p);
                }
            });
        for r in 0..rows {
            writer.write_row(&samples[r * row_len..(r + 1) * row_len])?;
        }
        done += rows;
    }
    writer.finish()?;
    Ok(info)
}
