//! Error metrology: image-difference metrics, the kernel error on the integer
//! grid, the Poisson-tail bound, and the filtering-accuracy bound.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernels::{check_sigma_r, gauss_poly, RangeKernelParams};
use crate::order::poisson_tail;

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a.width(), a.height(), b.width(), b.height()))
    }
}

/// `max_i |a(i) - b(i)|`.
pub fn linf_error(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    Ok(a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `10 log10(mean squared difference)`; `-inf` when the images are equal.
pub fn mse_db(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(10.0 * (sum / a.len() as f64).log10())
}

/// `20 log10(linf)`; `-inf` for zero.
pub fn linf_db(linf: f64) -> f64 {
    20.0 * linf.log10()
}

/// A decibel value that serializes `-inf` as the string `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Decibels(pub f64);

impl fmt::Display for Decibels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{:.2}", self.0)
        }
    }
}

impl Serialize for Decibels {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Decibels {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Decibels(v)),
            Repr::Str(s) if s == "-inf" => Ok(Decibels(f64::NEG_INFINITY)),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid decibel value {s:?}"))),
        }
    }
}

/// Differences between two filtered images plus whatever bounds and timings
/// were computed alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub linf: f64,
    pub linf_db: Decibels,
    pub mse_db: Decibels,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel_error_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy_bound: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub runtime_ms: BTreeMap<String, f64>,
}

impl ErrorReport {
    pub fn compare(a: &Image, b: &Image) -> Result<Self> {
        let linf = linf_error(a, b)?;
        Ok(ErrorReport {
            linf,
            linf_db: Decibels(linf_db(linf)),
            mse_db: Decibels(mse_db(a, b)?),
            kernel_error_sup: None,
            kernel_bound: None,
            accuracy_bound: None,
            runtime_ms: BTreeMap::new(),
        })
    }
}

/// `max |g(t - tau) - phi_N(t, tau)|` over the integer grid
/// `t, tau in {-T, -T + 1, ..., T}`.
pub fn kernel_error_sup(order: usize, sigma_r: f64, half_range: f64) -> Result<f64> {
    let params = RangeKernelParams::new(sigma_r, order)?;
    if !(half_range > 0.0 && half_range.is_finite()) {
        return Err(Error::param(format!("half range T must be positive, got {half_range}")));
    }
    let steps = (2.0 * half_range).floor() as usize;
    let inv_two_s2 = 1.0 / (2.0 * sigma_r * sigma_r);
    let sup = (0..=steps)
        .into_par_iter()
        .map(|j| {
            let tau = -half_range + j as f64;
            (0..=steps)
                .map(|k| {
                    let t = -half_range + k as f64;
                    let d = t - tau;
                    ((-d * d * inv_two_s2).exp() - gauss_poly(t, tau, &params)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// `psi_N(s) = 1 - exp(-s / sigma_r^2) sum_{n<N} (s / sigma_r^2)^n / n!`,
/// i.e. the Poisson tail with mean `s / sigma_r^2`.
pub fn psi_eval(s: f64, order: usize, sigma_r: f64) -> Result<f64> {
    check_sigma_r(sigma_r)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param(format!("psi argument must be nonnegative, got {s}")));
    }
    Ok(poisson_tail(order, s / (sigma_r * sigma_r)))
}

/// Worst-case pixel error `2 T e / (w(0) - e)` for kernel error `e`.
pub fn accuracy_bound(kernel_err: f64, w0: f64, half_range: f64) -> Result<f64> {
    if !(kernel_err >= 0.0 && w0 > 0.0 && half_range > 0.0) {
        return Err(Error::param(format!(
            "accuracy bound needs kernel_err >= 0, w0 > 0, T > 0 (got {kernel_err}, {w0}, {half_range})"
        )));
    }
    if kernel_err >= w0 {
        return Err(Error::BoundInapplicable { kernel_err, w0 });
    }
    Ok(2.0 * half_range * kernel_err / (w0 - kernel_err))
}
