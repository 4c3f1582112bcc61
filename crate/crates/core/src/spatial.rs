//! Linear spatial filtering with replicate (clamp-to-edge) boundaries.
//!
//! [`box_filter`] costs O(1) per pixel regardless of the window size: each axis
//! is handled with a prefix sum, and window samples that fall outside the image
//! are accounted for by multiplying the edge value by the overhang. The
//! Gaussian path is a separable truncated convolution, exact with respect to the
//! truncated 2-D kernel. [`convolve_direct`] is the literal double sum that both
//! are tested against.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernels::{gaussian_taps, KernelKind, SpatialKernel};

/// Boundary extension used by every filter in the crate, fast paths and oracles alike.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Samples outside the image take the value of the nearest edge pixel.
    #[default]
    Replicate,
}

pub const BOUNDARY: BoundaryPolicy = BoundaryPolicy::Replicate;

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

fn check_window(half_width: usize, width: usize, height: usize) -> Result<()> {
    if half_width >= width.min(height) {
        return Err(Error::param(format!(
            "window half-width {half_width} is too large for a {width}x{height} image"
        )));
    }
    Ok(())
}

enum Pass {
    Box { half_width: usize },
    Gaussian { taps: Vec<f64> },
}

/// A spatial filter bound to one image size, with its scratch buffers
/// allocated once so it can be applied repeatedly without allocation.
pub struct SpatialFilter {
    width: usize,
    height: usize,
    pass: Pass,
    tmp: Vec<f64>,
    line: Vec<f64>,
}

impl SpatialFilter {
    pub fn new(kernel: &SpatialKernel, width: usize, height: usize) -> Result<Self> {
        check_window(kernel.half_width(), width, height)?;
        let hw = kernel.half_width();
        let (pass, line_len) = match kernel.kind() {
            KernelKind::Box => (Pass::Box { half_width: hw }, (width + 1).max((height + 1) * width)),
            KernelKind::Gaussian => {
                let sigma_s = kernel.sigma_s().expect("gaussian kernel carries sigma_s");
                (Pass::Gaussian { taps: gaussian_taps(sigma_s) }, width + 2 * hw)
            }
        };
        Ok(SpatialFilter {
            width,
            height,
            pass,
            tmp: vec![0.0; width * height],
            line: vec![0.0; line_len],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Filters `src` into `dst`; both are row-major `width * height` buffers.
    pub fn apply(&mut self, src: &[f64], dst: &mut [f64]) {
        assert_eq!(src.len(), self.width * self.height);
        assert_eq!(dst.len(), self.width * self.height);
        match &self.pass {
            Pass::Box { half_width } => {
                let hw = *half_width;
                box_rows(src, &mut self.tmp, &mut self.line, self.width, hw);
                box_cols(&self.tmp, dst, &mut self.line, self.width, self.height, hw);
            }
            Pass::Gaussian { taps } => {
                gauss_rows(src, &mut self.tmp, &mut self.line, self.width, taps);
                gauss_cols(&self.tmp, dst, self.width, self.height, taps);
            }
        }
    }
}

/// Sum of `line[x-w..=x+w]` with replicated edges, given prefix sums
/// `prefix[k] = line[0] + ... + line[k-1]`.
#[inline]
fn window_sum(prefix: &[f64], first: f64, last: f64, x: usize, w: usize, len: usize) -> f64 {
    let a = x as isize - w as isize;
    let b = x + w;
    let lo = a.max(0) as usize;
    let hi = b.min(len - 1);
    let mut s = prefix[hi + 1] - prefix[lo];
    if a < 0 {
        s += (-a) as f64 * first;
    }
    if b >= len {
        s += (b - (len - 1)) as f64 * last;
    }
    s
}

fn box_rows(src: &[f64], dst: &mut [f64], prefix: &mut [f64], width: usize, hw: usize) {
    let norm = 1.0 / (2 * hw + 1) as f64;
    for (row, out) in src.chunks_exact(width).zip(dst.chunks_exact_mut(width)) {
        prefix[0] = 0.0;
        for (k, &v) in row.iter().enumerate() {
            prefix[k + 1] = prefix[k] + v;
        }
        let (first, last) = (row[0], row[width - 1]);
        for (x, o) in out.iter_mut().enumerate() {
            *o = window_sum(prefix, first, last, x, hw, width) * norm;
        }
    }
}

fn box_cols(src: &[f64], dst: &mut [f64], prefix: &mut [f64], width: usize, height: usize, hw: usize) {
    let norm = 1.0 / (2 * hw + 1) as f64;
    // prefix rows: prefix[(y + 1) * width + x] = src[0][x] + ... + src[y][x]
    let prefix = &mut prefix[..(height + 1) * width];
    prefix[..width].fill(0.0);
    for y in 0..height {
        let (done, rest) = prefix.split_at_mut((y + 1) * width);
        let prev = &done[y * width..];
        let row = &src[y * width..(y + 1) * width];
        for ((p, &a), &v) in rest[..width].iter_mut().zip(prev).zip(row) {
            *p = a + v;
        }
    }
    let first = &src[..width];
    let last = &src[(height - 1) * width..];
    for y in 0..height {
        let a = y as isize - hw as isize;
        let b = y + hw;
        let lo = a.max(0) as usize;
        let hi = b.min(height - 1);
        let under = if a < 0 { (-a) as f64 } else { 0.0 };
        let over = if b >= height { (b - (height - 1)) as f64 } else { 0.0 };
        let top = &prefix[(hi + 1) * width..(hi + 2) * width];
        let bottom = &prefix[lo * width..(lo + 1) * width];
        let out = &mut dst[y * width..(y + 1) * width];
        for x in 0..width {
            let mut s = top[x] - bottom[x];
            if under > 0.0 {
                s += under * first[x];
            }
            if over > 0.0 {
                s += over * last[x];
            }
            out[x] = s * norm;
        }
    }
}

fn gauss_rows(src: &[f64], dst: &mut [f64], padded: &mut [f64], width: usize, taps: &[f64]) {
    let hw = taps.len() / 2;
    for (row, out) in src.chunks_exact(width).zip(dst.chunks_exact_mut(width)) {
        padded[..hw].fill(row[0]);
        padded[hw..hw + width].copy_from_slice(row);
        padded[hw + width..].fill(row[width - 1]);
        for (x, o) in out.iter_mut().enumerate() {
            *o = taps
                .iter()
                .zip(&padded[x..x + taps.len()])
                .map(|(t, v)| t * v)
                .sum();
        }
    }
}

fn gauss_cols(src: &[f64], dst: &mut [f64], width: usize, height: usize, taps: &[f64]) {
    let hw = taps.len() as isize / 2;
    for y in 0..height {
        let out = &mut dst[y * width..(y + 1) * width];
        out.fill(0.0);
        for (k, &t) in taps.iter().enumerate() {
            let sy = clamp_index(y as isize + k as isize - hw, height);
            let row = &src[sy * width..(sy + 1) * width];
            for (o, &v) in out.iter_mut().zip(row) {
                *o += t * v;
            }
        }
    }
}

/// Box filter with half-width `W`: mean over the `(2W+1)^2` window.
pub fn box_filter(img: &Image, half_width: usize) -> Result<Image> {
    let kernel = SpatialKernel::box_filter(half_width)?;
    filter(img, &kernel)
}

/// Separable truncated Gaussian filter, `W = ceil(3 sigma_s)`.
pub fn gaussian_filter(img: &Image, sigma_s: f64) -> Result<Image> {
    let kernel = SpatialKernel::gaussian(sigma_s)?;
    filter(img, &kernel)
}

/// Filters with the fast path matching the kernel kind.
pub fn filter(img: &Image, kernel: &SpatialKernel) -> Result<Image> {
    let mut f = SpatialFilter::new(kernel, img.width(), img.height())?;
    let mut out = vec![0.0; img.len()];
    f.apply(img.samples(), &mut out);
    Ok(Image::from_raw(img.width(), img.height(), out))
}

/// `out(i) = sum_j w(j) img(i - j)`, evaluated literally.
pub fn convolve_direct(img: &Image, kernel: &SpatialKernel) -> Result<Image> {
    let (width, height) = (img.width(), img.height());
    check_window(kernel.half_width(), width, height)?;
    let w = kernel.half_width() as isize;
    let mut out = Vec::with_capacity(img.len());
    for y in 0..height as isize {
        for x in 0..width as isize {
            let mut acc = 0.0;
            for dy in -w..=w {
                let sy = clamp_index(y - dy, height);
                for dx in -w..=w {
                    let sx = clamp_index(x - dx, width);
                    acc += kernel.weight(dx, dy) * img.get(sx, sy);
                }
            }
            out.push(acc);
        }
    }
    Ok(Image::from_raw(width, height, out))
}
