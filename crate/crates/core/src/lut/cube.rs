//! `.cube` text import/export (3D tables only, unit domain).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::Lut3D;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn cube_err(line: usize, message: impl Into<String>) -> Error {
    Error::Cube {
        line,
        message: message.into(),
    }
}

pub fn read_cube<T: Scalar, R: BufRead>(reader: R) -> Result<Lut3D<T>> {
    let mut size: Option<usize> = None;
    let mut entries: Vec<[T; 3]> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| cube_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or_default();
        match head {
            "TITLE" => {}
            "LUT_3D_SIZE" => {
                let s: usize = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| cube_err(lineno, "bad LUT_3D_SIZE"))?;
                if s < 2 {
                    return Err(cube_err(lineno, format!("LUT_3D_SIZE {s} < 2")));
                }
                size = Some(s);
                entries.reserve(s * s * s);
            }
            "LUT_1D_SIZE" => return Err(cube_err(lineno, "1D LUTs are not supported")),
            "DOMAIN_MIN" | "DOMAIN_MAX" => {
                let want = if head == "DOMAIN_MIN" { 0.0 } else { 1.0 };
                let vals: Vec<f64> = parts.filter_map(|v| v.parse().ok()).collect();
                if vals.len() != 3 || vals.iter().any(|&v| v != want) {
                    return Err(cube_err(lineno, format!("only the unit domain is supported ({line})")));
                }
            }
            _ if head.starts_with(|c: char| c.is_ascii_alphabetic()) => {
                log::debug!("cube: ignoring keyword {head} at line {lineno}");
            }
            _ => {
                let vals: Vec<T> = line
                    .split_whitespace()
                    .map(|v| v.parse::<T>().map_err(|_| cube_err(lineno, format!("bad number '{v}'"))))
                    .collect::<Result<_>>()?;
                if vals.len() != 3 {
                    return Err(cube_err(lineno, format!("expected 3 values, found {}", vals.len())));
                }
                entries.push([vals[0], vals[1], vals[2]]);
            }
        }
    }
    let size = size.ok_or_else(|| cube_err(0, "LUT_3D_SIZE not found"))?;
    if entries.len() != size * size * size {
        return Err(cube_err(
            0,
            format!("expected {} entries, found {}", size * size * size, entries.len()),
        ));
    }
    Lut3D::from_entries(size, entries)
}

/// Writes the lattice with shortest round-trip number formatting.
pub fn write_cube<T: Scalar, W: Write>(mut w: W, lut: &Lut3D<T>, title: &str) -> std::io::Result<()> {
    writeln!(w, "TITLE \"{}\"", title.replace('"', "'"))?;
    writeln!(w, "LUT_3D_SIZE {}", lut.size())?;
    writeln!(w, "DOMAIN_MIN 0 0 0")?;
    writeln!(w, "DOMAIN_MAX 1 1 1")?;
    for e in lut.entries() {
        writeln!(w, "{} {} {}", e[0], e[1], e[2])?;
    }
    w.flush()
}

pub fn load_cube<T: Scalar>(path: &Path) -> Result<Lut3D<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cube(BufReader::new(f)).map_err(|e| match e {
        Error::Cube { line, message } => Error::format(path, format!("line {line}: {message}")),
        other => other,
    })
}

pub fn save_cube<T: Scalar>(path: &Path, lut: &Lut3D<T>, title: &str) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_cube(BufWriter::new(f), lut, title).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_file() {
        let text = "# comment\nTITLE \"x\"\nLUT_3D_SIZE 2\n\
                    0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n";
        let lut: Lut3D<f32> = read_cube(text.as_bytes()).unwrap();
        assert_eq!(lut, Lut3D::identity(2).unwrap());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_cube::<f32, _>("0 0 0\n".as_bytes()).is_err());
        assert!(read_cube::<f32, _>("LUT_3D_SIZE 2\n0 0 0\n".as_bytes()).is_err());
        assert!(read_cube::<f32, _>("LUT_1D_SIZE 4\n".as_bytes()).is_err());
        assert!(read_cube::<f32, _>("LUT_3D_SIZE 2\nDOMAIN_MAX 2 2 2\n".as_bytes()).is_err());
        let e = read_cube::<f32, _>("LUT_3D_SIZE 2\n0 0 x\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn export_import_exact_f32(size in 2usize..6, seed in any::<u64>(), mag in 0.0f64..0.5) {
            let lut = Lut3D::<f32>::identity(size).unwrap().perturb(mag, seed);
            let mut buf = Vec::new();
            write_cube(&mut buf, &lut, "t").unwrap();
            let back: Lut3D<f32> = read_cube(buf.as_slice()).unwrap();
            prop_assert_eq!(back, lut);
        }

        #[test]
        fn export_import_exact_f64(size in 2usize..5, seed in any::<u64>()) {
            let lut = Lut3D::<f64>::identity(size).unwrap().perturb(0.3, seed);
            let mut buf = Vec::new();
            write_cube(&mut buf, &lut, "t").unwrap();
            let back: Lut3D<f64> = read_cube(buf.as_slice()).unwrap();
            prop_assert_eq!(back, lut);
        }
    }
}
