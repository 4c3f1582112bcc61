//! Choosing the approximation order.
//!
//! The kernel error of an order-`N` Gaussian-polynomial is bounded by the
//! upper tail `P(X >= N)` of a Poisson variable with mean `lambda = T^2 / sigma_r^2`.
//! This module evaluates that tail and the estimates of the smallest `N` that
//! pushes it below a budget `epsilon`:
//!
//! * Chebyshev: `N = ceil(lambda + sqrt(lambda / epsilon))`.
//! * Chernoff: the smallest `N > lambda` with `e^-lambda (e lambda)^N / N^N <= epsilon`,
//!   either by linear scan ([`chernoff_order_exhaustive`]) or in closed form
//!   through the principal Lambert-W branch ([`estimate_order`]).
//!
//! Two rough closed-form formulas are provided for comparison
//! ([`order_approx`], [`yang_order`]).

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `sigma_r` the Lambert-W closed form is used; at or above it the
/// order is fixed at [`LARGE_SIGMA_ORDER`].
pub const LARGE_SIGMA_R: f64 = 70.0;
pub const LARGE_SIGMA_ORDER: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMethod {
    FixedLargeSigma,
    Chebyshev,
    ChernoffExhaustive,
    LambertwSeries,
    LambertwNewton,
    ApproxFormula,
    YangFormula,
}

/// A selected order together with how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    #[serde(rename = "N0")]
    pub n0: usize,
    pub method: OrderMethod,
    /// Real-valued estimate before it was turned into an integer.
    pub raw: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
    /// Argument `q e^-p` handed to the Lambert-W series.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w0_arg: Option<f64>,
    /// Series start `x_0 = q / W0(q e^-p)` followed by every Newton iterate.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub newton_trace: Vec<f64>,
}

impl OrderEstimate {
    fn new(n0: usize, method: OrderMethod, raw: f64) -> Self {
        OrderEstimate {
            n0,
            method,
            raw,
            epsilon: None,
            lambda: None,
            p: None,
            q: None,
            w0_arg: None,
            newton_trace: Vec::new(),
        }
    }

    /// The order the Lambert-W series alone would give, before any Newton step.
    pub fn series_order(&self) -> Option<usize> {
        self.newton_trace.first().map(|x0| x0.ceil() as usize)
    }
}

/// How many Newton steps refine the series estimate in [`estimate_order_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonSchedule {
    /// Three steps for every `sigma_r < 70`.
    #[default]
    Three,
    /// Three steps only when `sigma_r < 30`; the series value is used as is above.
    ThreeBelowSigma30,
    /// Step until `|dx| < 0.25`, at most 10 steps.
    Converge,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "kernel error budget epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// `P(X >= n)` for `X ~ Poisson(lambda)`, clamped to `[0, 1]`.
///
/// For `n > lambda` the tail terms are summed directly, which keeps full
/// relative precision for tiny tails; otherwise `1 - P(X < n)` is used. Terms
/// follow `t_k = t_{k-1} * lambda / k` (in log space once `e^-lambda`
/// underflows). `lambda` must be nonnegative; `NaN` is returned otherwise.
pub fn poisson_tail(n: usize, lambda: f64) -> f64 {
    if lambda.is_nan() || lambda < 0.0 {
        return f64::NAN;
    }
    if n == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    let tail = if n as f64 > lambda {
        let mut term = poisson_pmf(n, lambda);
        let mut sum = 0.0;
        let mut k = n;
        while term > sum * 1e-18 && term > 0.0 {
            sum += term;
            k += 1;
            term *= lambda / k as f64;
        }
        sum
    } else {
        let mut lower = 0.0;
        if lambda < 700.0 {
            let mut term = (-lambda).exp();
            for k in 0..n {
                if k > 0 {
                    term *= lambda / k as f64;
                }
                lower += term;
            }
        } else {
            let ln_lambda = lambda.ln();
            let mut log_term = -lambda;
            for k in 0..n {
                if k > 0 {
                    log_term += ln_lambda - (k as f64).ln();
                }
                lower += log_term.exp();
            }
        }
        1.0 - lower
    };
    tail.clamp(0.0, 1.0)
}

/// `e^-lambda lambda^n / n!`.
fn poisson_pmf(n: usize, lambda: f64) -> f64 {
    if lambda < 700.0 {
        let mut term = (-lambda).exp();
        for k in 1..=n {
            term *= lambda / k as f64;
        }
        term
    } else {
        let ln_lambda = lambda.ln();
        let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        (-lambda + n as f64 * ln_lambda - log_fact).exp()
    }
}

/// Natural log of the Chernoff tail bound `e^-lambda (e lambda)^n / n^n`.
pub fn log_chernoff_bound(n: f64, lambda: f64) -> f64 {
    -lambda + n * (1.0 + lambda.ln() - n.ln())
}

pub fn chebyshev_order(lambda: f64, epsilon: f64) -> Result<OrderEstimate> {
    check_positive("lambda", lambda)?;
    check_epsilon(epsilon)?;
    let raw = lambda + (lambda / epsilon).sqrt();
    let mut est = OrderEstimate::new(raw.ceil() as usize, OrderMethod::Chebyshev, raw);
    est.epsilon = Some(epsilon);
    est.lambda = Some(lambda);
    Ok(est)
}

/// Smallest integer `N > lambda` meeting the Chernoff bound, by linear scan.
pub fn chernoff_order_exhaustive(lambda: f64, epsilon: f64) -> Result<OrderEstimate> {
    check_positive("lambda", lambda)?;
    check_epsilon(epsilon)?;
    let target = epsilon.ln();
    let mut n = lambda.floor() as usize + 1;
    while log_chernoff_bound(n as f64, lambda) > target {
        n += 1;
    }
    let mut est = OrderEstimate::new(n, OrderMethod::ChernoffExhaustive, n as f64);
    est.epsilon = Some(epsilon);
    est.lambda = Some(lambda);
    est.p = Some(1.0 + lambda.ln());
    est.q = Some(-lambda - epsilon.ln());
    Ok(est)
}

/// Four-term series of the principal Lambert-W branch around the origin.
pub fn lambert_w0_series(t: f64) -> f64 {
    t - t * t + 1.5 * t.powi(3) - (8.0 / 3.0) * t.powi(4)
}

/// Order for kernel error budget `epsilon`, with the default Newton schedule.
pub fn estimate_order(sigma_r: f64, epsilon: f64, half_range: f64) -> Result<OrderEstimate> {
    estimate_order_with(sigma_r, epsilon, half_range, NewtonSchedule::default())
}

/// Lambert-W order estimate.
///
/// For `sigma_r >= 70` the order is fixed at 10. Otherwise the positive root
/// `theta > lambda` of `x ln x - p x - q` is approximated by
/// `q / W0(q e^-p)` with the series [`lambert_w0_series`], refined with Newton
/// steps per `schedule`, and rounded up; a result not exceeding `lambda` is
/// raised to `floor(lambda) + 1`. If the series or a Newton step leaves the
/// positive reals the exhaustive scan is used instead.
pub fn estimate_order_with(
    sigma_r: f64,
    epsilon: f64,
    half_range: f64,
    schedule: NewtonSchedule,
) -> Result<OrderEstimate> {
    check_positive("sigma_r", sigma_r)?;
    check_positive("half range T", half_range)?;
    check_epsilon(epsilon)?;

    let lambda = (half_range / sigma_r).powi(2);
    let p = 1.0 + lambda.ln();
    let q = -lambda - epsilon.ln();

    if sigma_r >= LARGE_SIGMA_R {
        let mut est = OrderEstimate::new(
            LARGE_SIGMA_ORDER,
            OrderMethod::FixedLargeSigma,
            LARGE_SIGMA_ORDER as f64,
        );
        est.epsilon = Some(epsilon);
        est.lambda = Some(lambda);
        est.p = Some(p);
        est.q = Some(q);
        return Ok(est);
    }

    let fallback = || -> Result<OrderEstimate> {
        let mut est = chernoff_order_exhaustive(lambda, epsilon)?;
        est.w0_arg = Some(q / (E * lambda));
        Ok(est)
    };

    // q e^-p == q / (e lambda)
    let t = q / (E * lambda);
    let w0 = lambert_w0_series(t);
    let x0 = q / w0;
    if !(x0.is_finite() && x0 > 0.0) {
        let mut est = fallback()?;
        est.newton_trace.push(x0);
        return Ok(est);
    }

    let mut trace = vec![x0];
    let steps = match schedule {
        NewtonSchedule::Three => 3,
        NewtonSchedule::ThreeBelowSigma30 if sigma_r < 30.0 => 3,
        NewtonSchedule::ThreeBelowSigma30 => 0,
        NewtonSchedule::Converge => 10,
    };
    let mut x = x0;
    for _ in 0..steps {
        let next = x - (x * x.ln() - p * x - q) / (x.ln() + 1.0 - p);
        if !(next.is_finite() && next > 0.0) {
            let mut est = fallback()?;
            trace.push(next);
            est.newton_trace = trace;
            return Ok(est);
        }
        let step = (next - x).abs();
        x = next;
        trace.push(x);
        if schedule == NewtonSchedule::Converge && step < 0.25 {
            break;
        }
    }

    let mut n0 = x.ceil() as usize;
    if n0 as f64 <= lambda {
        n0 = lambda.floor() as usize + 1;
    }
    let method = if trace.len() > 1 {
        OrderMethod::LambertwNewton
    } else {
        OrderMethod::LambertwSeries
    };
    Ok(OrderEstimate {
        n0,
        method,
        raw: x,
        epsilon: Some(epsilon),
        lambda: Some(lambda),
        p: Some(p),
        q: Some(q),
        w0_arg: Some(t),
        newton_trace: trace,
    })
}

/// Kernel error budget that guarantees output accuracy `±delta`:
/// `epsilon = w(0) delta / (2T + delta)`.
pub fn epsilon_from_delta(delta: f64, w0: f64, half_range: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    check_positive("half range T", half_range)?;
    if !(w0 > 0.0 && w0 <= 1.0) {
        return Err(Error::param(format!("w(0) must lie in (0, 1], got {w0}")));
    }
    Ok(w0 * delta / (2.0 * half_range + delta))
}

/// `N0 ~ 1.72 (T / sigma_r)^2 + ln(2T / (w(0) delta))`, rounded to the nearest integer.
pub fn order_approx(sigma_r: f64, delta: f64, w0: f64, half_range: f64) -> Result<OrderEstimate> {
    check_positive("sigma_r", sigma_r)?;
    check_positive("delta", delta)?;
    check_positive("half range T", half_range)?;
    if !(w0 > 0.0 && w0 <= 1.0) {
        return Err(Error::param(format!("w(0) must lie in (0, 1], got {w0}")));
    }
    let lambda = (half_range / sigma_r).powi(2);
    let raw = 1.72 * lambda + (2.0 * half_range / (w0 * delta)).ln();
    let mut est = OrderEstimate::new(nearest(raw), OrderMethod::ApproxFormula, raw);
    est.lambda = Some(lambda);
    est.epsilon = Some(w0 * delta / (2.0 * half_range));
    Ok(est)
}

/// Order estimate for the competing quantized-intensity scheme,
/// `N0 ~ 1.14e5 / (sqrt(delta) sigma_r^2)`, rounded to the nearest integer.
/// Comparator only.
pub fn yang_order(sigma_r: f64, delta: f64) -> Result<OrderEstimate> {
    check_positive("sigma_r", sigma_r)?;
    check_positive("delta", delta)?;
    let raw = 1.14e5 / (delta.sqrt() * sigma_r * sigma_r);
    Ok(OrderEstimate::new(nearest(raw), OrderMethod::YangFormula, raw))
}

fn nearest(x: f64) -> usize {
    x.round().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lam(sigma_r: f64) -> f64 {
        (128.0 / sigma_r).powi(2)
    }

    #[test]
    fn poisson_tail_small_cases() {
        assert_eq!(poisson_tail(0, 3.7), 1.0);
        assert!((poisson_tail(1, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((poisson_tail(1, 1.0) - 0.632121).abs() < 1e-6);
        assert!((poisson_tail(2, 1.0) - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((poisson_tail(2, 1.0) - 0.264241).abs() < 1e-6);
        assert_eq!(poisson_tail(3, 0.0), 0.0);
        assert!(poisson_tail(3, -1.0).is_nan());
    }

    #[test]
    fn poisson_tail_branches_agree() {
        // n just above and below lambda uses different summations.
        for lambda in [0.5f64, 3.3, 18.2, 163.84] {
            let n = lambda.ceil() as usize;
            let direct = poisson_tail(n, lambda);
            let mut lower = 0.0;
            let mut term = (-lambda).exp();
            for k in 0..n {
                if k > 0 {
                    term *= lambda / k as f64;
                }
                lower += term;
            }
            assert!((direct - (1.0 - lower)).abs() < 1e-12, "lambda {lambda}");
        }
    }

    #[test]
    fn poisson_tail_large_lambda() {
        // Median of Poisson(1e4) sits near its mean.
        let t = poisson_tail(10_000, 10_000.0);
        assert!((t - 0.5).abs() < 0.01, "{t}");
        assert!(poisson_tail(11_000, 10_000.0) < 1e-20);
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_order(lam(30.0), 0.1).unwrap().n0, 32);
        assert_eq!(chebyshev_order(4.0, 0.25).unwrap().n0, 8);
        assert_eq!(chebyshev_order(lam(30.0), 0.001).unwrap().n0, 154);
        assert!(chebyshev_order(4.0, 1.0).is_err());
        assert!(chebyshev_order(4.0, 0.0).is_err());
    }

    #[test]
    fn chernoff_exhaustive_examples() {
        assert_eq!(chernoff_order_exhaustive(lam(30.0), 1e-3).unwrap().n0, 37);
        assert_eq!(chernoff_order_exhaustive(lam(50.0), 1e-3).unwrap().n0, 19);
        assert_eq!(chernoff_order_exhaustive(lam(10.0), 1e-3).unwrap().n0, 214);
        assert!(chernoff_order_exhaustive(lam(10.0), 1.5).is_err());
    }

    #[test]
    fn lambert_series_values() {
        assert_eq!(lambert_w0_series(0.0), 0.0);
        assert!((lambert_w0_series(0.1) - 0.0912333333).abs() < 1e-9);
        let s = lambert_w0_series(-0.3524);
        assert!((s - -0.58336).abs() < 1e-4, "{s}");
        // True branch value by bisection on w e^w = -0.3524 over (-1, 0).
        let (mut lo, mut hi) = (-1.0f64, 0.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < -0.3524 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - -0.7347128540343769).abs() < 1e-12);
        assert!((s - lo).abs() > 0.1);
    }

    #[test]
    fn estimate_order_examples() {
        let big = estimate_order(80.0, 0.3, 128.0).unwrap();
        assert_eq!(big.n0, 10);
        assert_eq!(big.method, OrderMethod::FixedLargeSigma);
        assert_eq!(estimate_order(70.0, 1e-3, 128.0).unwrap().n0, 10);

        let ten = estimate_order(10.0, 1e-3, 128.0).unwrap();
        assert_eq!(ten.series_order(), Some(270));
        assert_eq!(ten.n0, 214);
        assert_eq!(ten.method, OrderMethod::LambertwNewton);
        assert_eq!(ten.newton_trace.len(), 4);

        assert_eq!(estimate_order(30.0, 1e-3, 128.0).unwrap().n0, 37);
        let gated = estimate_order_with(30.0, 1e-3, 128.0, NewtonSchedule::ThreeBelowSigma30).unwrap();
        assert_eq!(gated.n0, 37);
        assert_eq!(gated.method, OrderMethod::LambertwSeries);
        assert_eq!(gated.newton_trace.len(), 1);

        assert!(estimate_order(0.0, 1e-3, 128.0).is_err());
        assert!(estimate_order(30.0, 1.0, 128.0).is_err());
        assert!(estimate_order(30.0, 1e-3, -1.0).is_err());
    }

    #[test]
    fn converge_schedule_stops_early() {
        let est = estimate_order_with(10.0, 1e-3, 128.0, NewtonSchedule::Converge).unwrap();
        assert_eq!(est.n0, 214);
        assert!(est.newton_trace.len() <= 11);
        let n = est.newton_trace.len();
        assert!((est.newton_trace[n - 1] - est.newton_trace[n - 2]).abs() < 0.25);
    }

    #[test]
    fn w0_argument_in_branch_domain() {
        for sigma_r in [10.0, 25.0, 45.0, 69.0] {
            for eps in [0.5, 1e-1, 1e-6] {
                let est = estimate_order(sigma_r, eps, 128.0).unwrap();
                assert!(est.w0_arg.unwrap() >= -1.0 / E);
            }
        }
    }

    #[test]
    fn epsilon_from_delta_examples() {
        assert_eq!(epsilon_from_delta(256.0, 1.0, 128.0).unwrap(), 0.5);
        let w0 = 6.390480282123036e-3;
        let e = epsilon_from_delta(0.1, w0, 128.0).unwrap();
        assert!((e - 2.4953e-6).abs() < 1e-9, "{e}");
        let e = epsilon_from_delta(3.0, 1.0 / 9.0, 128.0).unwrap();
        assert!((e - 3.0 / (9.0 * 259.0)).abs() < 1e-15);
        assert!(epsilon_from_delta(0.0, 0.1, 128.0).is_err());
        assert!(epsilon_from_delta(1.0, 1.5, 128.0).is_err());
    }

    #[test]
    fn closed_form_comparators() {
        let w0 = 6.390480282123036e-3;
        assert_eq!(order_approx(30.0, 0.1, w0, 128.0).unwrap().n0, 44);
        assert_eq!(order_approx(30.0, 1e-3, w0, 128.0).unwrap().n0, 49);
        assert_eq!(order_approx(30.0, 3.0, w0, 128.0).unwrap().n0, 41);
        assert_eq!(yang_order(30.0, 0.1).unwrap().n0, 401);
        assert_eq!(yang_order(30.0, 3.0).unwrap().n0, 73);
        // 1.14e5 / (sqrt(3) * 2500) = 26.33; quoted elsewhere as ~27.
        let y = yang_order(50.0, 3.0).unwrap();
        assert!((y.raw - 26.3272).abs() < 1e-3);
        assert_eq!(y.n0, 26);
        // 3x3 box, sigma_r = 50, delta = 3: the formula gives ~17.9.
        let a = order_approx(50.0, 3.0, 1.0 / 9.0, 128.0).unwrap();
        assert!((a.raw - 17.916).abs() < 1e-3);
        assert_eq!(a.n0, 18);
    }

    #[test]
    fn chernoff_never_underestimates_tail_order() {
        for sigma_r in [10.0, 20.0, 30.0, 50.0, 69.0] {
            for eps in [1e-1, 1e-2, 1e-3, 1e-6] {
                let l = lam(sigma_r);
                let c = chernoff_order_exhaustive(l, eps).unwrap().n0;
                let exact = (0..).find(|&n| poisson_tail(n, l) <= eps).unwrap();
                assert!(c >= exact, "sigma_r {sigma_r} eps {eps}: {c} < {exact}");
            }
        }
    }

    proptest! {
        #[test]
        fn poisson_tail_is_monotone(lambda in 0.01f64..300.0, n in 0usize..400) {
            let a = poisson_tail(n, lambda);
            let b = poisson_tail(n + 1, lambda);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a);
        }

        #[test]
        fn estimate_order_is_pure(sigma_r in 10.0f64..69.0, log_eps in -8.0f64..-0.5) {
            let eps = 10f64.powf(log_eps);
            let a = estimate_order(sigma_r, eps, 128.0).unwrap();
            let b = estimate_order(sigma_r, eps, 128.0).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.n0 as f64 > a.lambda.unwrap());
        }
    }
}
