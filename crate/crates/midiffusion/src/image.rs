//! Grayscale image type and file I/O.
//!
//! Images are 2D scalar fields stored as `Array2<f64>`. Data images are
//! normalized to [0, 1]; intermediate diffusion states may range outside.
//! Supported formats: PGM (P2/P5, 8-bit) and grayscale PNG.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// 2D grayscale scalar field, row-major, indexed `[row, col]`.
pub type Image = Array2<f64>;

/// Load a grayscale image, scaling values to [0, 1].
pub fn load_image<P: AsRef<Path>>(path: P) -> Result<Image> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => load_pgm(path),
        Some("png") => load_png(path),
        _ => Err(Error::ImageFormat(format!(
            "unsupported image extension: {}",
            path.display()
        ))),
    }
}

/// Save an image, quantizing to 8 bits. Format chosen by extension.
pub fn save_image<P: AsRef<Path>>(img: &Image, path: P) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => save_pgm(img, path),
        Some("png") => save_png(img, path),
        _ => Err(Error::ImageFormat(format!(
            "unsupported image extension: {}",
            path.display()
        ))),
    }
}

/// Quantize a [0, 1] value onto the 8-bit scale.
pub fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn load_png(path: &Path) -> Result<Image> {
    let img = image::open(path)
        .map_err(|e| Error::ImageFormat(format!("{}: {e}", path.display())))?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Array2::from_shape_fn((h, w), |(y, x)| {
        img.get_pixel(x as u32, y as u32).0[0] as f64 / 255.0
    }))
}

fn save_png(img: &Image, path: &Path) -> Result<()> {
    let (h, w) = img.dim();
    let buf = image::GrayImage::from_fn(w as u32, h as u32, |x, y| {
        image::Luma([to_u8(img[[y as usize, x as usize]])])
    });
    buf.save(path)
        .map_err(|e| Error::ImageFormat(format!("{}: {e}", path.display())))
}

/// Save as binary PGM (P5), 8-bit.
pub fn save_pgm(img: &Image, path: &Path) -> Result<()> {
    let (h, w) = img.dim();
    let mut out = Vec::with_capacity(h * w + 32);
    write!(out, "P5\n{w} {h}\n255\n")?;
    for v in img.iter() {
        out.push(to_u8(*v));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parse PGM, accepting both ASCII (P2) and binary (P5) with maxval <= 255.
pub fn load_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes).map_err(|msg| Error::ImageFormat(format!("{}: {msg}", path.display())))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Image, String> {
    let mut pos = 0usize;

    // Reads the next whitespace-separated token, skipping `#` comments.
    let next_token = |pos: &mut usize| -> std::result::Result<String, String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err("unexpected end of header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(format!("not a PGM (magic {magic:?})"));
    }
    let w: usize = next_token(&mut pos)?.parse().map_err(|_| "bad width")?;
    let h: usize = next_token(&mut pos)?.parse().map_err(|_| "bad height")?;
    let maxval: u32 = next_token(&mut pos)?.parse().map_err(|_| "bad maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval} (8-bit only)"));
    }
    let scale = maxval as f64;

    let mut img = Array2::zeros((h, w));
    if magic == "P5" {
        // Single whitespace byte separates the header from the raster.
        pos += 1;
        if bytes.len() < pos + h * w {
            return Err("truncated raster".into());
        }
        for (i, v) in img.iter_mut().enumerate() {
            *v = bytes[pos + i] as f64 / scale;
        }
    } else {
        for v in img.iter_mut() {
            let tok = next_token(&mut pos)?;
            let px: u32 = tok.parse().map_err(|_| format!("bad pixel {tok:?}"))?;
            if px > maxval {
                return Err(format!("pixel {px} exceeds maxval {maxval}"));
            }
            *v = px as f64 / scale;
        }
    }
    Ok(img)
}

/// Min-max scale a field to [0, 1]; constant fields map to 0.
pub fn min_max_scale(img: &Image) -> Image {
    let lo = img.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        img.mapv(|v| (v - lo) / (hi - lo))
    } else {
        Array2::zeros(img.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pgm_round_trip_is_exact_at_8_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let img = array![[0.0, 0.25, 0.5], [0.75, 1.0, 0.1]];
        save_pgm(&img, &path).unwrap();
        let back = load_pgm(&path).unwrap();
        // The original quantized to 8 bits, then reloaded, must be identical.
        let quantized = img.mapv(|v| to_u8(v) as f64 / 255.0);
        assert_eq!(back, quantized);
        // A second round trip is bit-exact.
        let path2 = dir.path().join("t2.pgm");
        save_pgm(&back, &path2).unwrap();
        assert_eq!(load_pgm(&path2).unwrap(), back);
    }

    #[test]
    fn p2_ascii_parses_with_comments() {
        let src = b"P2\n# a comment\n3 2\n255\n0 128 255\n64 32 16\n";
        let img = parse_pgm(src).unwrap();
        assert_eq!(img.dim(), (2, 3));
        assert_eq!(img[[0, 2]], 1.0);
        assert_eq!(img[[1, 0]], 64.0 / 255.0);
    }

    #[test]
    fn maxval_65535_rejected() {
        let src = b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0";
        let err = parse_pgm(src).unwrap_err();
        assert!(err.contains("maxval"), "{err}");
    }

    #[test]
    fn truncated_raster_rejected() {
        let src = b"P5\n4 4\n255\n\0\0\0";
        assert!(parse_pgm(src).is_err());
    }

    #[test]
    fn ramp_normalizes_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.pgm");
        let ramp = Array2::from_shape_fn((4, 4), |(y, x)| (y * 4 + x) as f64 / 15.0);
        save_pgm(&ramp, &path).unwrap();
        let back = load_pgm(&path).unwrap();
        assert_eq!(back[[0, 0]], 0.0);
        assert_eq!(back[[3, 3]], 1.0);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let img = Array2::from_shape_fn((5, 7), |(y, x)| ((y * 7 + x) % 13) as f64 / 12.0);
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        let quantized = img.mapv(|v| to_u8(v) as f64 / 255.0);
        assert_eq!(back, quantized);
    }
}
