//! Prabhakar function `E^g_{q,r}(z) = sum_j Gamma(g+j) z^j / (j! Gamma(g) Gamma(q j + r))`.
//!
//! Small and moderate arguments use the defining series with log-domain
//! terms. Large negative arguments use Laplace inversion of
//! `L{t^(r-1) E^g_{q,r}(-a t^q)}(s) = s^(q g - r) / (s^q + a)^g` at `t = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::{ln_gamma, rgamma};
use crate::error::{Error, Result};
use crate::resolvent::contour::{talbot_invert_checked, TalbotOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalRoute {
    Series,
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult<T> {
    pub value: T,
    /// Bound on the absolute truncation plus rounding error.
    pub error_estimate: f64,
    pub terms_used: usize,
    pub route: EvalRoute,
}

/// Route-selection parameters for [`ml3_eval_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ml3Options {
    /// Series is used for `|z| <= z_switch`.
    pub z_switch: f64,
    /// Band on the negative real axis where both routes are cross-checked.
    pub overlap_band: (f64, f64),
    /// Relative agreement demanded inside the band.
    pub overlap_tol: f64,
    pub max_terms: usize,
    pub contour_nodes: usize,
}

impl Default for Ml3Options {
    fn default() -> Self {
        Self { z_switch: 30.0, overlap_band: (20.0, 40.0), overlap_tol: 1e-8, max_terms: 1000, contour_nodes: 48 }
    }
}

fn check_params(q: f64, g: f64, tol: f64) -> Result<()> {
    if !(q > 0.0) || !(g > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("ml3 requires q > 0, g > 0, tol > 0 (q={q}, g={g}, tol={tol})")));
    }
    Ok(())
}

/// The j-th series term computed directly from its closed form.
pub fn ml3_term(q: f64, r: f64, g: f64, z: f64, j: usize) -> Result<f64> {
    let x = q * j as f64 + r;
    if x <= 0.0 && x == x.floor() {
        return Ok(0.0);
    }
    if z == 0.0 {
        return Ok(if j == 0 { rgamma(r) } else { 0.0 });
    }
    let jf = j as f64;
    let (lg_gj, _) = ln_gamma(g + jf)?;
    let (lg_g, _) = ln_gamma(g)?;
    let (lg_j1, _) = ln_gamma(jf + 1.0)?;
    let (lg_x, sx) = ln_gamma(x)?;
    let sign = if z < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * sx * (lg_gj - lg_g - lg_j1 - lg_x + jf * z.abs().ln()).exp())
}

/// Series core shared by the real and complex entry points. Terms are
/// `exp(logp_j - ln|Gamma(q j + r)|) * sign * phase^j` with `phase = z / |z|`.
fn series_core(q: f64, r: f64, g: f64, z: Complex64, tol: f64, max_terms: usize) -> Result<EvalResult<Complex64>> {
    check_params(q, g, tol)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(EvalResult { value: Complex64::new(rgamma(r), 0.0), error_estimate: 0.0, terms_used: 1, route: EvalRoute::Series });
    }
    let lnz = z.norm().ln();
    let phase = z / z.norm();
    let mut phase_j = Complex64::new(1.0, 0.0);
    let mut logp = 0.0_f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut rounding = 0.0_f64;
    let mut peak = 0.0_f64;
    let mut small_run = 0usize;
    let mut prev_mag = f64::INFINITY;
    let mut last_mag = 0.0;
    for j in 0..max_terms {
        let jf = j as f64;
        let x = q * jf + r;
        let at_pole = x <= 0.0 && x == x.floor();
        let mag;
        if at_pole {
            mag = 0.0;
        } else {
            let (lg, sg) = ln_gamma(x)?;
            let l = logp - lg;
            mag = l.exp();
            let term = phase_j * (sg * mag);
            sum += term;
            peak = peak.max(mag);
            rounding += mag * (4.0 + lg.abs() + jf * (lnz.abs() + (g + jf + 1.0).ln()));
        }
        // advance the log-magnitude recurrence: (g + j) |z| / (j + 1)
        logp += lnz + (g + jf).ln() - (jf + 1.0).ln();
        phase_j *= phase;
        if !at_pole {
            let floor = f64::EPSILON * 1e-3 * peak;
            let small = mag < tol * sum.norm() || mag <= floor;
            if small && mag <= prev_mag {
                small_run += 1;
            } else {
                small_run = 0;
            }
            prev_mag = mag;
            last_mag = mag;
            if small_run >= 3 {
                let error_estimate = 2.0 * mag + f64::EPSILON * (rounding + sum.norm());
                return Ok(EvalResult { value: sum, error_estimate, terms_used: j + 1, route: EvalRoute::Series });
            }
        }
    }
    Err(Error::NotConverged { terms: max_terms, estimate: last_mag })
}

/// Partial sum of the defining series for real `z`.
///
/// Stops once three consecutive, non-increasing terms fall below
/// `tol * |partial sum|` (or below the rounding floor of the largest term).
pub fn ml3_series(q: f64, r: f64, g: f64, z: f64, tol: f64, max_terms: usize) -> Result<EvalResult<f64>> {
    let res = series_core(q, r, g, Complex64::new(z, 0.0), tol, max_terms)?;
    Ok(EvalResult { value: res.value.re, error_estimate: res.error_estimate, terms_used: res.terms_used, route: res.route })
}

/// Series for complex `z`.
pub fn ml3_series_complex(q: f64, r: f64, g: f64, z: Complex64, tol: f64, max_terms: usize) -> Result<EvalResult<Complex64>> {
    series_core(q, r, g, z, tol, max_terms)
}

/// `q = 1`: `E^g_{1,r}(z) = e^z 1F1(r - g; r; -z) / Gamma(r)` (Kummer), stable for large negative z.
fn kummer_series(r: f64, g: f64, z: f64, tol: f64, max_terms: usize) -> Result<EvalResult<f64>> {
    let a = r - g;
    let x = -z;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut abs_sum = 1.0_f64;
    let mut small_run = 0;
    for j in 0..max_terms {
        let jf = j as f64;
        term *= (a + jf) * x / ((r + jf) * (jf + 1.0));
        sum += term;
        abs_sum += term.abs();
        if term.abs() < tol * sum.abs() || term == 0.0 {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= 3 {
            let scale = z.exp() * rgamma(r);
            let value = scale * sum;
            let err = scale.abs() * (2.0 * term.abs() + 4.0 * f64::EPSILON * abs_sum * (j as f64 + 1.0));
            return Ok(EvalResult { value, error_estimate: err, terms_used: j + 2, route: EvalRoute::Series });
        }
    }
    Err(Error::NotConverged { terms: max_terms, estimate: term.abs() })
}

/// Inversion of `s^(-r) (1 + a s^(-q))^(-g)` at t = 1, which equals `E^g_{q,r}(-a)`.
fn contour_route(q: f64, r: f64, g: f64, a: f64, nodes: usize) -> Result<EvalResult<f64>> {
    if !(r > 0.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("contour route needs r > 0 and z < 0 (r={r}, z={})", -a)));
    }
    let mut poles = Vec::new();
    if q > 1.0 {
        let rho = a.powf(1.0 / q);
        let ang = std::f64::consts::PI / q;
        poles.push(Complex64::from_polar(rho, ang));
    }
    let f = |s: Complex64| -> Result<Complex64> {
        let w = Complex64::new(1.0, 0.0) + a * s.powf(-q);
        Ok(s.powf(-r) * w.powf(-g))
    };
    let opts = TalbotOptions { nodes, shift: 0.0, branch_point: 0.0 };
    let inv = talbot_invert_checked(&f, 1.0, &poles, &opts)?;
    Ok(EvalResult {
        value: inv.value,
        error_estimate: inv.doubling_difference + inv.imag_residual.abs(),
        terms_used: inv.nodes,
        route: EvalRoute::Contour,
    })
}

/// Route-selecting evaluation with default options.
pub fn ml3_eval(q: f64, r: f64, g: f64, z: f64, tol: f64) -> Result<EvalResult<f64>> {
    ml3_eval_with(q, r, g, z, tol, &Ml3Options::default())
}

/// Series for `|z| <= z_switch`, Laplace inversion beyond, with a
/// cross-check of both routes inside the overlap band on the negative axis.
/// For `q = 1` and `z < 0` the Kummer-transformed series is used instead,
/// which avoids the alternating-sign cancellation of the plain series.
pub fn ml3_eval_with(q: f64, r: f64, g: f64, z: f64, tol: f64, opts: &Ml3Options) -> Result<EvalResult<f64>> {
    check_params(q, g, tol)?;
    if z == 0.0 {
        return ml3_series(q, r, g, z, tol, opts.max_terms);
    }
    let az = z.abs();
    if q == 1.0 && z < 0.0 && r > 0.0 && z > -600.0 {
        return kummer_series(r, g, z, tol, opts.max_terms);
    }
    let contour_ok = z < 0.0 && r > 0.0;
    let in_band = z < 0.0 && az >= opts.overlap_band.0 && az <= opts.overlap_band.1;
    if az <= opts.z_switch || !contour_ok {
        let series = ml3_series(q, r, g, z, tol, opts.max_terms);
        let series = match series {
            Ok(s) => s,
            Err(e) if contour_ok => {
                let _ = e;
                return contour_route(q, r, g, -z, opts.contour_nodes);
            }
            Err(e) => return Err(e),
        };
        if in_band && contour_ok {
            let contour = contour_route(q, r, g, -z, opts.contour_nodes)?;
            cross_check(z, &series, &contour, opts.overlap_tol)?;
        }
        return Ok(series);
    }
    let contour = contour_route(q, r, g, -z, opts.contour_nodes)?;
    if in_band {
        if let Ok(series) = ml3_series(q, r, g, z, tol, opts.max_terms) {
            cross_check(z, &series, &contour, opts.overlap_tol)?;
        }
    }
    Ok(contour)
}

fn cross_check(z: f64, series: &EvalResult<f64>, contour: &EvalResult<f64>, tol: f64) -> Result<()> {
    let scale = series.value.abs().max(contour.value.abs());
    // A series whose own rounding bound already exceeds the tolerance cannot arbitrate.
    if series.error_estimate > tol * scale {
        return Ok(());
    }
    if (series.value - contour.value).abs() > tol * scale + contour.error_estimate {
        return Err(Error::RouteDisagreement { z, series: series.value, contour: contour.value });
    }
    Ok(())
}
