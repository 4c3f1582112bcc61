//! Range kernel, its Gaussian-polynomial approximant, and spatial kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn check_sigma_r(sigma_r: f64) -> Result<()> {
    if sigma_r > 0.0 && sigma_r.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "sigma_r must be positive and finite, got {sigma_r}"
        )))
    }
}

/// Gaussian range kernel `exp(-t^2 / 2 sigma_r^2)`.
pub fn range_kernel(t: f64, sigma_r: f64) -> Result<f64> {
    check_sigma_r(sigma_r)?;
    Ok((-t * t / (2.0 * sigma_r * sigma_r)).exp())
}

/// Range scale and approximation order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeKernelParams {
    sigma_r: f64,
    order: usize,
}

impl RangeKernelParams {
    pub fn new(sigma_r: f64, order: usize) -> Result<Self> {
        check_sigma_r(sigma_r)?;
        if order == 0 {
            return Err(Error::param("approximation order must be at least 1"));
        }
        Ok(RangeKernelParams { sigma_r, order })
    }

    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Order-`N` Gaussian-polynomial approximation of `g(t - tau)`:
///
/// `exp(-(t^2 + tau^2) / 2 sigma_r^2) * sum_{n < N} (tau t / sigma_r^2)^n / n!`
///
/// Terms are accumulated by `term_n = term_{n-1} * x / n`, so no factorial is
/// ever formed.
pub fn gauss_poly(t: f64, tau: f64, params: &RangeKernelParams) -> f64 {
    let s2 = params.sigma_r * params.sigma_r;
    let x = tau * t / s2;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..params.order {
        term *= x / n as f64;
        sum += term;
    }
    (-(t * t + tau * tau) / (2.0 * s2)).exp() * sum
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Box,
    Gaussian,
}

/// Normalized nonnegative weights on the square window `[-W, W]^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialKernel {
    kind: KernelKind,
    half_width: usize,
    sigma_s: Option<f64>,
    /// Row-major over `(dy, dx)` in `[-W, W]^2`.
    weights: Vec<f64>,
}

impl SpatialKernel {
    /// Gaussian kernel `exp(-|i|^2 / 2 sigma_s^2)` truncated to
    /// `W = ceil(3 sigma_s)` and normalized to unit sum.
    pub fn gaussian(sigma_s: f64) -> Result<Self> {
        if !(sigma_s > 0.0 && sigma_s.is_finite()) {
            return Err(Error::param(format!(
                "sigma_s must be positive and finite, got {sigma_s}"
            )));
        }
        let half_width = (3.0 * sigma_s).ceil() as usize;
        let side = 2 * half_width + 1;
        let w = half_width as isize;
        let denom = 2.0 * sigma_s * sigma_s;
        let mut weights = Vec::with_capacity(side * side);
        for dy in -w..=w {
            for dx in -w..=w {
                let r2 = (dx * dx + dy * dy) as f64;
                weights.push((-r2 / denom).exp());
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|v| *v /= total);
        Ok(SpatialKernel {
            kind: KernelKind::Gaussian,
            half_width,
            sigma_s: Some(sigma_s),
            weights,
        })
    }

    /// Uniform kernel `1 / (2W + 1)^2`.
    pub fn box_filter(half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::param("box half-width W must be at least 1"));
        }
        let side = 2 * half_width + 1;
        let n = side * side;
        Ok(SpatialKernel {
            kind: KernelKind::Box,
            half_width,
            sigma_s: None,
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn sigma_s(&self) -> Option<f64> {
        self.sigma_s
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)`, both in `[-W, W]`.
    #[inline]
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let w = self.half_width as isize;
        debug_assert!(dx.abs() <= w && dy.abs() <= w);
        self.weights[((dy + w) as usize) * self.side() + (dx + w) as usize]
    }

    /// The centre weight `w(0)`, which enters the accuracy bound.
    pub fn w0(&self) -> f64 {
        self.weight(0, 0)
    }
}

/// Normalized 1-D Gaussian taps on `[-W, W]`, `W = ceil(3 sigma_s)`.
///
/// The 2-D kernel of [`SpatialKernel::gaussian`] is the outer product of these.
pub(crate) fn gaussian_taps(sigma_s: f64) -> Vec<f64> {
    let w = (3.0 * sigma_s).ceil() as isize;
    let denom = 2.0 * sigma_s * sigma_s;
    let mut taps: Vec<f64> = (-w..=w).map(|d| (-((d * d) as f64) / denom).exp()).collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= total);
    taps
}
