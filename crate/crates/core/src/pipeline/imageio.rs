use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::dct_filters::Filter;
use crate::{Error, Plane, Result, Scalar};

/// ITU-R BT.601 luma weights.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

fn image_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Converts an 8-bit image to gray levels in `[0, 255]`. Color images use
/// BT.601 luma; alpha is ignored.
pub fn grayscale_from_dynamic<T: Scalar>(img: &DynamicImage) -> std::result::Result<Plane<T>, String> {
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => Ok(Plane::from_vec(rows, cols, g.as_raw().iter().map(|&v| T::lit(f64::from(v))).collect())),
        DynamicImage::ImageLumaA8(g) => Ok(Plane::from_vec(
            rows,
            cols,
            g.as_raw().chunks_exact(2).map(|p| T::lit(f64::from(p[0]))).collect(),
        )),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let channels = if matches!(img, DynamicImage::ImageRgb8(_)) { 3 } else { 4 };
            Ok(Plane::from_vec(
                rows,
                cols,
                img.as_bytes()
                    .chunks_exact(channels)
                    .map(|p| {
                        let y = LUMA[0] * f64::from(p[0]) + LUMA[1] * f64::from(p[1]) + LUMA[2] * f64::from(p[2]);
                        T::lit(y)
                    })
                    .collect(),
            ))
        }
        other => Err(format!("unsupported pixel format {:?}; only 8-bit images are accepted", other.color())),
    }
}

/// Largest centred window of `plane` with the aspect ratio `rows:cols`.
pub fn center_crop<T: Scalar>(plane: &Plane<T>, rows: usize, cols: usize) -> Plane<T> {
    let (sr, sc) = plane.dims();
    // Compare sr/sc with rows/cols without division.
    let (cr, cc) = if sr * cols > rows * sc {
        (((sc * rows) as f64 / cols as f64).round().max(1.0) as usize, sc)
    } else {
        (sr, ((sr * cols) as f64 / rows as f64).round().max(1.0) as usize)
    };
    let (top, left) = ((sr - cr) / 2, (sc - cc) / 2);
    Plane::from_fn(cr, cc, |r, c| plane[(top + r, left + c)])
}

/// Bilinear resampling with pixel-centre alignment and clamped borders.
pub fn resize_bilinear<T: Scalar>(plane: &Plane<T>, rows: usize, cols: usize) -> Plane<T> {
    let (sr, sc) = plane.dims();
    if (sr, sc) == (rows, cols) {
        return plane.clone();
    }
    let axis = |dst: usize, src: usize| -> Vec<(usize, usize, f64)> {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let lo = x.floor() as usize;
                let hi = (lo + 1).min(src - 1);
                (lo, hi, x - lo as f64)
            })
            .collect()
    };
    let ys = axis(rows, sr);
    let xs = axis(cols, sc);
    Plane::from_fn(rows, cols, |r, c| {
        let (y0, y1, fy) = ys[r];
        let (x0, x1, fx) = xs[c];
        let (fy, fx) = (T::lit(fy), T::lit(fx));
        let one = T::one();
        let top = plane[(y0, x0)] * (one - fx) + plane[(y0, x1)] * fx;
        let bottom = plane[(y1, x0)] * (one - fx) + plane[(y1, x1)] * fx;
        top * (one - fy) + bottom * fy
    })
}

/// Reads a PGM or PNG file as gray levels in `[0, 255]`. When `target`
/// (`rows, cols`) differs from the source size, the image is center-cropped
/// to the target aspect ratio and bilinearly resized.
pub fn load_image_grayscale<T: Scalar>(path: &Path, target: Option<(usize, usize)>) -> Result<Plane<T>> {
    let img = ImageReader::open(path)
        .map_err(|e| image_err(path, e.to_string()))?
        .with_guessed_format()
        .map_err(|e| image_err(path, e.to_string()))?
        .decode()
        .map_err(|e| image_err(path, e.to_string()))?;
    let gray = grayscale_from_dynamic(&img).map_err(|m| image_err(path, m))?;
    Ok(match target {
        Some((rows, cols)) if gray.dims() != (rows, cols) => resize_bilinear(&center_crop(&gray, rows, cols), rows, cols),
        _ => gray,
    })
}

/// Writes an 8-bit binary (P5) PGM.
pub fn write_pgm(path: &Path, plane: &Plane<u8>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", plane.cols(), plane.rows())?;
    out.write_all(plane.as_slice())?;
    out.flush()?;
    Ok(())
}

/// Rounds and clamps gray levels to bytes.
pub fn to_bytes<T: Scalar>(plane: &Plane<T>) -> Plane<u8> {
    plane.map(|v| v.as_f64().round().clamp(0.0, 255.0) as u8)
}

/// Min-max scales a filter to `[0, 255]`, each coefficient enlarged to a
/// `scale`x`scale` square.
pub fn render_filter<T: Scalar>(filter: &Filter<T>, scale: usize) -> Plane<u8> {
    let k = filter.size();
    let scale = scale.max(1);
    let (lo, hi) = filter
        .coeffs()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.as_f64()), hi.max(c.as_f64())));
    let span = hi - lo;
    Plane::from_fn(k * scale, k * scale, |r, c| {
        let v = filter.at(r / scale, c / scale).as_f64();
        if span > 0.0 {
            ((v - lo) / span * 255.0).round() as u8
        } else {
            128
        }
    })
}
