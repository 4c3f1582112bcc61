//! Scalar images, dynamic-range bookkeeping and the centering transform.
//!
//! All intensities are held as `f64`. 8-bit files are promoted on load and
//! clamped/rounded back on save.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

/// A row-major grid of finite intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::param(format!(
                "{} samples do not fill a {width}x{height} image",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite sample at pixel ({}, {})",
                k % width,
                k / width
            )));
        }
        Ok(Image {
            width,
            height,
            samples,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if a dimension is zero or `f` yields a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Image::new(width, height, samples).expect("invalid image from closure")
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Image::from_fn(width, height, |_, _| value)
    }

    pub(crate) fn from_raw(width: usize, height: usize, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        Image {
            width,
            height,
            samples,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.samples.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn transpose(&self) -> Image {
        Image::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Copies the `width`x`height` block whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::param(format!(
                "crop {width}x{height}+{x0}+{y0} does not fit in {}x{}",
                self.width, self.height
            )));
        }
        Ok(Image::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Reads an 8-bit grayscale PGM (`P5`) or PNG file.
    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        let decoded = ImageReader::new(BufReader::new(file))
            .with_guessed_format()
            .map_err(io_err)?
            .decode()
            .map_err(|e| Error::Format {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        let gray = match decoded {
            DynamicImage::ImageLuma8(buf) => buf,
            other => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("expected 8-bit grayscale, found {:?}", other.color()),
                })
            }
        };
        let (w, h) = gray.dimensions();
        let samples = gray.into_raw().into_iter().map(f64::from).collect();
        Image::new(w as usize, h as usize, samples)
    }

    /// Writes the image as 8-bit grayscale; the format follows the extension
    /// (`.pgm` or `.png`).
    ///
    /// Samples are clamped to `[0, 255]` and rounded half away from zero.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_u8();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let out = BufWriter::new(file);
        let (w, h) = (self.width as u32, self.height as u32);
        let res = match ext.as_str() {
            "pgm" => PnmEncoder::new(out)
                .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
                .write_image(&bytes, w, h, ExtendedColorType::L8),
            "png" => image::codecs::png::PngEncoder::new(out).write_image(
                &bytes,
                w,
                h,
                ExtendedColorType::L8,
            ),
            _ => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: "output extension must be .pgm or .png".into(),
                })
            }
        };
        res.map_err(|e| match e {
            image::ImageError::IoError(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => Error::Format {
                path: path.to_path_buf(),
                reason: other.to_string(),
            },
        })
    }

    /// Quantizes to 8 bits: clamp to `[0, 255]`, round half away from zero.
    pub fn to_u8(&self) -> Vec<u8> {
        self.samples
            .iter()
            .map(|&v| v.clamp(0.0, 255.0).round() as u8)
            .collect()
    }
}

/// Declared dynamic range `[center - half_range, center + half_range]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RangeSpec {
    pub half_range: f64,
    pub center: f64,
}

impl RangeSpec {
    /// 8-bit data: `T = 128`, `t_c = 128`, so `[0, 255]` maps into `[-128, 127]`.
    pub const EIGHT_BIT: RangeSpec = RangeSpec {
        half_range: 128.0,
        center: 128.0,
    };

    pub fn new(half_range: f64, center: f64) -> Result<Self> {
        if !(half_range > 0.0 && half_range.is_finite()) {
            return Err(Error::param(format!(
                "half range T must be positive and finite, got {half_range}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::param(format!("center must be finite, got {center}")));
        }
        Ok(RangeSpec { half_range, center })
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_range
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_range
    }

    /// Returns the first sample outside the declared range, as an error.
    pub fn check(&self, img: &Image) -> Result<()> {
        let (lo, hi) = (self.lo(), self.hi());
        match img.samples.iter().position(|&v| v < lo || v > hi) {
            None => Ok(()),
            Some(k) => Err(Error::RangeViolation {
                x: k % img.width,
                y: k / img.width,
                value: img.samples[k],
                lo,
                hi,
            }),
        }
    }
}

impl Default for RangeSpec {
    fn default() -> Self {
        RangeSpec::EIGHT_BIT
    }
}

/// Shifts intensities by `-t_c` so they lie in `[-T, T]`.
pub fn center(img: &Image, spec: RangeSpec) -> Result<Image> {
    spec.check(img)?;
    Ok(img.map(|v| v - spec.center))
}

/// Inverse of [`center`].
pub fn uncenter(img: &Image, spec: RangeSpec) -> Image {
    img.map(|v| v + spec.center)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_constant_to_zero() {
        let img = Image::constant(4, 3, 128.0);
        let c = center(&img, RangeSpec::EIGHT_BIT).unwrap();
        assert!(c.samples().iter().all(|&v| v == 0.0));
        let back = uncenter(&c, RangeSpec::EIGHT_BIT);
        assert!(back.samples().iter().all(|&v| v == 128.0));
    }

    #[test]
    fn center_eight_bit_extremes() {
        let img = Image::new(2, 1, vec![0.0, 255.0]).unwrap();
        let c = center(&img, RangeSpec::EIGHT_BIT).unwrap();
        assert_eq!(c.samples(), &[-128.0, 127.0]);
    }

    #[test]
    fn center_rejects_out_of_range() {
        let img = Image::new(3, 2, vec![0.0, 1.0, 2.0, 3.0, 300.0, 5.0]).unwrap();
        match center(&img, RangeSpec::EIGHT_BIT) {
            Err(Error::RangeViolation { x, y, value, .. }) => {
                assert_eq!((x, y), (1, 1));
                assert_eq!(value, 300.0);
            }
            other => panic!("expected range violation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Image::new(0, 3, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(RangeSpec::new(0.0, 1.0).is_err());
        assert!(RangeSpec::new(-2.0, 1.0).is_err());
    }

    #[test]
    fn quantization_rounds_half_away_and_clamps() {
        let img = Image::new(5, 1, vec![-3.0, 0.5, 1.49, 254.5, 400.0]).unwrap();
        assert_eq!(img.to_u8(), vec![0, 1, 1, 255, 255]);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = std::env::temp_dir().join(format!("gpa-core-pgm-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let img = Image::from_fn(7, 5, |x, y| ((x * 31 + y * 17) % 256) as f64);
        for name in ["a.pgm", "a.png"] {
            let path = dir.join(name);
            img.save(&path).unwrap();
            assert_eq!(Image::load(&path).unwrap(), img);
        }
        let raw = std::fs::read(dir.join("a.pgm")).unwrap();
        assert!(raw.starts_with(b"P5"));
        assert!(img.save(dir.join("a.bmp")).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
