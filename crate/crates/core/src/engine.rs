//! The fast bilateral filter.
//!
//! With `h = f - t_c` and `H = h / sigma_r`, the order-`N` approximation of the
//! bilateral filter is `sigma_r * P / Q + t_c`, where
//!
//! ```text
//! P = sum_{n<N} G_n * (F_{n+1} * w)      Q = sum_{n<N} G_n * (F_n * w)
//! G_n = H^n / n!                          F_n = exp(-h^2 / 2 sigma_r^2) H^n
//! ```
//!
//! Both sums share the filtered images `F_n * w`, so a run costs exactly
//! `N + 1` spatial filterings. `F_n` and `G_n` are advanced in place, so the
//! whole pipeline lives in six buffers.

use crate::error::{Error, Result};
use crate::image::{Image, RangeSpec};
use crate::kernels::{check_sigma_r, SpatialKernel};
use crate::order::{epsilon_from_delta, estimate_order, OrderEstimate};
use crate::spatial::SpatialFilter;

/// Smallest `sigma_r` accepted without [`FilterParams::allow_small_sigma_r`].
///
/// At `T = 128` and `sigma_r = 10` the intermediate images already reach
/// magnitudes around `1e200`.
pub const MIN_SIGMA_R: f64 = 10.0;

/// Below this `|Q|` the output falls back to the input sample.
const Q_FLOOR: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Order {
    /// Explicit approximation order `N >= 1`.
    Fixed(usize),
    /// Target worst-case pixel error `delta`; the order is derived from it.
    Accuracy(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    pub sigma_r: f64,
    pub order: Order,
    pub range: RangeSpec,
    pub allow_small_sigma_r: bool,
}

impl FilterParams {
    pub fn fixed(sigma_r: f64, order: usize) -> Self {
        FilterParams {
            sigma_r,
            order: Order::Fixed(order),
            range: RangeSpec::EIGHT_BIT,
            allow_small_sigma_r: false,
        }
    }

    pub fn accuracy(sigma_r: f64, delta: f64) -> Self {
        FilterParams {
            order: Order::Accuracy(delta),
            ..FilterParams::fixed(sigma_r, 1)
        }
    }

    pub fn with_range(mut self, range: RangeSpec) -> Self {
        self.range = range;
        self
    }

    /// Accepts `sigma_r < 10`; intermediate overflow is then reported as
    /// [`Error::NumericRange`].
    pub fn allow_small_sigma_r(mut self) -> Self {
        self.allow_small_sigma_r = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma_r(self.sigma_r)?;
        if self.sigma_r < MIN_SIGMA_R && !self.allow_small_sigma_r {
            return Err(Error::param(format!(
                "sigma_r = {} is below {MIN_SIGMA_R}; intermediate images may overflow \
                 (set the small-sigma override to proceed)",
                self.sigma_r
            )));
        }
        match self.order {
            Order::Fixed(0) => Err(Error::param("approximation order must be at least 1")),
            Order::Accuracy(d) if !(d > 0.0 && d.is_finite()) => Err(Error::param(format!(
                "accuracy delta must be positive and finite, got {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Order to run with, plus the estimate it came from when `delta` drives it.
    pub fn resolve(&self, kernel: &SpatialKernel) -> Result<(usize, Option<OrderEstimate>)> {
        self.validate()?;
        match self.order {
            Order::Fixed(n) => Ok((n, None)),
            Order::Accuracy(delta) => {
                let t = self.range.half_range;
                let eps = epsilon_from_delta(delta, kernel.w0(), t)?;
                let est = estimate_order(self.sigma_r, eps, t)?;
                Ok((est.n0, Some(est)))
            }
        }
    }
}

/// The six working images of a run.
#[derive(Debug, Default)]
pub struct GpaWorkspace {
    /// `F_n = exp(-h^2 / 2 sigma_r^2) H^n`
    pub f: Vec<f64>,
    /// `G_n = H^n / n!`
    pub g: Vec<f64>,
    /// `H = h / sigma_r`
    pub h: Vec<f64>,
    /// `F_n * w`
    pub fbar: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl GpaWorkspace {
    fn new(len: usize) -> Self {
        GpaWorkspace {
            f: vec![0.0; len],
            g: vec![0.0; len],
            h: vec![0.0; len],
            fbar: vec![0.0; len],
            p: vec![0.0; len],
            q: vec![0.0; len],
        }
    }
}

/// Reusable engine for one spatial kernel and image size.
pub struct GpaEngine {
    filter: SpatialFilter,
    ws: GpaWorkspace,
    filterings: usize,
}

impl GpaEngine {
    pub fn new(kernel: &SpatialKernel, width: usize, height: usize) -> Result<Self> {
        Ok(GpaEngine {
            filter: SpatialFilter::new(kernel, width, height)?,
            ws: GpaWorkspace::new(width * height),
            filterings: 0,
        })
    }

    /// Spatial filterings performed by the last [`run`](Self::run).
    pub fn filterings(&self) -> usize {
        self.filterings
    }

    pub fn workspace(&self) -> &GpaWorkspace {
        &self.ws
    }

    /// Runs the order-`order` approximation.
    pub fn run(&mut self, img: &Image, sigma_r: f64, order: usize, range: RangeSpec) -> Result<Image> {
        check_sigma_r(sigma_r)?;
        if order == 0 {
            return Err(Error::param("approximation order must be at least 1"));
        }
        if img.width() != self.filter.width() || img.height() != self.filter.height() {
            return Err(Error::DimensionMismatch(
                img.width(),
                img.height(),
                self.filter.width(),
                self.filter.height(),
            ));
        }
        range.check(img)?;

        let tc = range.center;
        let inv_two_s2 = 1.0 / (2.0 * sigma_r * sigma_r);
        let ws = &mut self.ws;
        self.filterings = 0;

        for (k, &v) in img.samples().iter().enumerate() {
            let h = v - tc;
            ws.f[k] = (-h * h * inv_two_s2).exp();
            ws.g[k] = 1.0;
            ws.p[k] = 0.0;
            ws.q[k] = 0.0;
            ws.h[k] = h / sigma_r;
        }
        self.filter.apply(&ws.f, &mut ws.fbar);
        self.filterings += 1;

        for n in 1..=order {
            for (((q, f), &g), (&fb, &h)) in ws
                .q
                .iter_mut()
                .zip(ws.f.iter_mut())
                .zip(&ws.g)
                .zip(ws.fbar.iter().zip(&ws.h))
            {
                *q += g * fb;
                *f *= h;
            }
            self.filter.apply(&ws.f, &mut ws.fbar);
            self.filterings += 1;
            let nf = n as f64;
            for ((p, g), (&fb, &h)) in ws
                .p
                .iter_mut()
                .zip(ws.g.iter_mut())
                .zip(ws.fbar.iter().zip(&ws.h))
            {
                *p += *g * fb;
                *g = h * *g / nf;
            }
        }

        // A flat image is its own bilateral filter.
        let flat = img.min() == img.max();
        let mut out = Vec::with_capacity(img.len());
        for (k, (&p, &q)) in ws.p.iter().zip(&ws.q).enumerate() {
            let v = if flat || q.abs() < Q_FLOOR {
                img.samples()[k]
            } else {
                sigma_r * (p / q) + tc
            };
            if !v.is_finite() {
                return Err(Error::NumericRange(format!(
                    "non-finite output at pixel ({}, {}) with sigma_r = {sigma_r}, N = {order}",
                    k % img.width(),
                    k / img.width()
                )));
            }
            out.push(v);
        }
        Ok(Image::from_raw(img.width(), img.height(), out))
    }
}

/// Fast bilateral filter. An [`Order::Accuracy`] target is resolved first;
/// use [`gpa_filter_auto`] to also get the order estimate.
pub fn gpa_filter(img: &Image, kernel: &SpatialKernel, params: &FilterParams) -> Result<Image> {
    let (order, _) = params.resolve(kernel)?;
    let mut engine = GpaEngine::new(kernel, img.width(), img.height())?;
    engine.run(img, params.sigma_r, order, params.range)
}

/// Fast bilateral filter within `±delta` of the exact filter at every pixel.
pub fn gpa_filter_auto(
    img: &Image,
    kernel: &SpatialKernel,
    sigma_r: f64,
    delta: f64,
    range: RangeSpec,
) -> Result<(Image, OrderEstimate)> {
    let params = FilterParams::accuracy(sigma_r, delta).with_range(range);
    let (order, est) = params.resolve(kernel)?;
    let mut engine = GpaEngine::new(kernel, img.width(), img.height())?;
    let out = engine.run(img, sigma_r, order, range)?;
    Ok((out, est.expect("accuracy target always yields an estimate")))
}
