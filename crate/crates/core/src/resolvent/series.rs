//! Explicit series route
//! `s(t) = e^{-beta t} sum_k ((beta - lam) t)^k E^{k+1}_{nu+1,k+1}(-alpha lam t^{nu+1})`.
//!
//! The inner Prabhakar values are not evaluated one by one. With `q = nu + 1`,
//! `x = (beta - lam) t` and `z = -alpha lam t^q` the double series is
//! `sum_k sum_j A_k D_{k,j}` where `A_k = x^k / k!` and
//! `D_{k,j} = (k+j)! z^j / (k! j! Gamma(q j + k + 1))`, so that
//! `sum_j D_{k,j} = k! E^{k+1}_{q,k+1}(z)`. Both factors obey cheap
//! recurrences in k and the terms are accumulated in double-double, since
//! the alternating terms can exceed the result by many orders of magnitude.

use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;
use crate::special::{ln_gamma, DoubleDouble, EvalResult, EvalRoute, DD_EPSILON};

/// Stopping and acceptance parameters of the series route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Relative tolerance of the outer stopping rule.
    pub tol: f64,
    /// Maximum number of outer terms.
    pub max_terms: usize,
    /// Largest accepted absolute error estimate; beyond it the series
    /// reports `NotConverged` so callers fall back to the contour route.
    pub max_error: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { tol: 1e-16, max_terms: 2000, max_error: 1e-10 }
    }
}

/// Series value of `s_m(t)` with default options.
pub fn scalar_resolvent_ml(kernel: &MemoryKernel, lam: f64, t: f64, tol: f64) -> Result<f64> {
    let opts = SeriesOptions { tol, ..SeriesOptions::default() };
    Ok(scalar_resolvent_ml_with(kernel, lam, t, &opts)?.value)
}

/// Inner coefficients `D_{0,j} = z^j / Gamma(q j + 1)` with their relative
/// rounding errors; truncated where the tail cannot affect the result.
fn base_coefficients(q: f64, z: f64, growth: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values = vec![1.0];
    let mut rel_err = vec![0.0];
    if z == 0.0 {
        return Ok((values, rel_err));
    }
    let lnz = z.abs().ln();
    let mut peak = 1.0_f64;
    let mut j = 1usize;
    loop {
        let jf = j as f64;
        let (lg, _) = ln_gamma(q * jf + 1.0)?;
        let l = jf * lnz - lg;
        let mag = l.exp();
        let sign = if z < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 };
        values.push(sign * mag);
        rel_err.push(4.0 * f64::EPSILON * (1.0 + jf * lnz.abs() + lg.abs()));
        peak = peak.max(mag);
        // |D_{k,j}| <= |D_{0,j}| for q >= 1, so once the base terms are
        // decreasing and tiny relative to exp(|x|) the j tail is negligible.
        let past_peak = jf * q > z.abs().powf(1.0 / q) + 2.0;
        if past_peak && mag * growth < 1e-34 * peak.max(1.0) {
            break;
        }
        j += 1;
        if j > 20_000 {
            return Err(Error::NotConverged { terms: j, estimate: mag });
        }
    }
    Ok((values, rel_err))
}

/// Series value of `s_m(t)` with error bookkeeping.
pub fn scalar_resolvent_ml_with(kernel: &MemoryKernel, lam: f64, t: f64, opts: &SeriesOptions) -> Result<EvalResult<f64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be nonnegative (got {t})")));
    }
    if t == 0.0 {
        return Ok(EvalResult { value: 1.0, error_estimate: 0.0, terms_used: 1, route: EvalRoute::Series });
    }
    let (alpha, beta, nu) = (kernel.alpha(), kernel.beta(), kernel.nu());
    let q = nu + 1.0;
    let x = (beta - lam) * t;
    let z = -alpha * lam * t.powf(q);
    let (base, base_err) = base_coefficients(q, z, x.abs().exp())?;
    let nj = base.len();
    let mut d: Vec<DoubleDouble> = base.iter().map(|&v| DoubleDouble::new(v)).collect();
    let d0_abs: f64 = base.iter().map(|v| v.abs()).sum();
    // per-j accumulated k-sums, for propagating the base rounding errors
    let mut s_j = vec![0.0_f64; nj];
    let mut a = DoubleDouble::ONE;
    let mut sum = DoubleDouble::ZERO;
    let mut abs_total = 0.0_f64;
    let mut peak = 0.0_f64;
    let mut terms = 0usize;
    let mut tail_bound = f64::INFINITY;
    for k in 0..opts.max_terms {
        let kf = k as f64;
        let mut inner = DoubleDouble::ZERO;
        let af = a.to_f64();
        for j in 0..nj {
            inner += d[j];
            s_j[j] += af * d[j].to_f64();
        }
        let term = a * inner;
        sum += term;
        let term_abs_bound = af.abs() * d.iter().map(|v| v.hi.abs()).sum::<f64>();
        abs_total += term_abs_bound;
        peak = peak.max(term_abs_bound);
        terms = k + 1;
        // tail after this term: |A_{k'}| decays geometrically once k + 1 > 2|x|
        let next_a = af.abs() * x.abs() / (kf + 1.0);
        if kf + 1.0 > 2.0 * x.abs() {
            let ratio = x.abs() / (kf + 2.0);
            tail_bound = next_a * d0_abs / (1.0 - ratio);
            let s = sum.to_f64().abs();
            if tail_bound <= opts.tol * s || tail_bound <= 1e-33 * peak || next_a == 0.0 {
                break;
            }
        }
        if k + 1 == opts.max_terms {
            return Err(Error::NotConverged { terms, estimate: tail_bound });
        }
        // recurrences in k
        for j in 0..nj {
            let jf = j as f64;
            d[j] = d[j] * DoubleDouble::ratio(kf + jf + 1.0, q * jf + kf + 1.0);
        }
        a = a.mul_f64(x) / DoubleDouble::new(kf + 1.0);
    }
    let scale = (-beta * t).exp();
    let value = scale * sum.to_f64();
    let base_part: f64 = s_j.iter().zip(&base_err).map(|(s, e)| s.abs() * e).sum();
    let dd_part = 8.0 * DD_EPSILON * abs_total * (terms as f64 + nj as f64);
    let error_estimate = scale * (tail_bound + base_part + dd_part) + 2.0 * f64::EPSILON * value.abs();
    if !(error_estimate <= opts.max_error) {
        return Err(Error::NotConverged { terms, estimate: error_estimate });
    }
    Ok(EvalResult { value, error_estimate, terms_used: terms, route: EvalRoute::Series })
}
