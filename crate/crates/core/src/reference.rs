//! Exact brute-force bilateral filter, the ground truth for every accuracy check.

use rayon::prelude::*;

use crate::error::Result;
use crate::image::Image;
use crate::kernels::{check_sigma_r, SpatialKernel};

/// Evaluates
///
/// `out(i) = sum_j w(j) g(f(i-j) - f(i)) f(i-j) / sum_j w(j) g(f(i-j) - f(i))`
///
/// term by term over the full window, with replicate boundaries. The weighted
/// mean is taken over the differences `f(i-j) - f(i)` and added back to `f(i)`.
/// Rows are computed in parallel; each pixel's sum is sequential, so the result
/// does not depend on the thread count.
pub fn bilateral_exact(img: &Image, kernel: &SpatialKernel, sigma_r: f64) -> Result<Image> {
    check_sigma_r(sigma_r)?;
    let (width, height) = (img.width(), img.height());
    let w = kernel.half_width() as isize;
    let inv_two_s2 = 1.0 / (2.0 * sigma_r * sigma_r);
    let mut out = vec![0.0; img.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let y = y as isize;
        for (x, o) in row.iter_mut().enumerate() {
            let x = x as isize;
            let center = img.get(x as usize, y as usize);
            let mut num = 0.0;
            let mut den = 0.0;
            for dy in -w..=w {
                let sy = (y - dy).clamp(0, height as isize - 1) as usize;
                for dx in -w..=w {
                    let sx = (x - dx).clamp(0, width as isize - 1) as usize;
                    let v = img.get(sx, sy);
                    let d = v - center;
                    let weight = kernel.weight(dx, dy) * (-d * d * inv_two_s2).exp();
                    num += weight * d;
                    den += weight;
                }
            }
            *o = center + num / den;
        }
    });
    Ok(Image::from_raw(width, height, out))
}
