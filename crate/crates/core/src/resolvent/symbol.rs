//! Scalar Laplace symbol `1 / (s + lam (1 + alpha (s + beta)^(-nu)))` and its poles.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;

/// Principal-branch Laplace symbol of the mode-`lam` resolvent.
pub fn laplace_symbol(kernel: &MemoryKernel, lam: f64, s: Complex64) -> Result<Complex64> {
    let w = s + kernel.beta();
    if w.im == 0.0 && w.re <= 0.0 {
        return Err(Error::BranchCut(format!("s + beta = {w}")));
    }
    let den = s + lam * (1.0 + kernel.alpha() * w.powf(-kernel.nu()));
    if den.norm() < 1e-14 {
        return Err(Error::SingularSymbol(format!("{s}")));
    }
    Ok(den.inv())
}

fn denominator(kernel: &MemoryKernel, lam: f64, s: Complex64) -> (Complex64, Complex64) {
    let (a, nu) = (kernel.alpha(), kernel.nu());
    let w = s + kernel.beta();
    let wn = w.powf(-nu);
    let d = s + lam * (1.0 + a * wn);
    let dd = 1.0 - lam * a * nu * wn / w;
    (d, dd)
}

/// Derivative of the symbol's denominator `s + lam (1 + alpha (s + beta)^(-nu))`.
pub fn symbol_derivative(kernel: &MemoryKernel, lam: f64, s: Complex64) -> Complex64 {
    denominator(kernel, lam, s).1
}

/// Upper-half-plane zero of the symbol's denominator, located by Newton's
/// method. Returns `None` when no complex pole is found.
pub fn symbol_pole(kernel: &MemoryKernel, lam: f64) -> Option<Complex64> {
    let (a, b, nu) = (kernel.alpha(), kernel.beta(), kernel.nu());
    let c = lam - b;
    let mut s = if c > 0.0 {
        let mag = lam * a * c.powf(-nu);
        let ang = std::f64::consts::PI * nu;
        Complex64::new(-lam - mag * ang.cos(), mag * ang.sin())
    } else {
        Complex64::new(-lam, (lam * a).powf(1.0 / (1.0 + nu)))
    };
    for _ in 0..100 {
        let w = s + b;
        if w.im == 0.0 && w.re <= 0.0 {
            return None;
        }
        let (d, dd) = denominator(kernel, lam, s);
        let step = d / dd;
        s -= step;
        if step.norm() <= 1e-14 * (s.norm() + lam) {
            let (d, _) = denominator(kernel, lam, s);
            return if s.im > 0.0 && d.norm() <= 1e-10 * (s.norm() + lam) { Some(s) } else { None };
        }
    }
    None
}

/// Poles the inversion contour must enclose. Falls back to the bound
/// `|Im p| <= (lam alpha)^(1/(1+nu))` placed on the imaginary axis.
pub fn contour_poles(kernel: &MemoryKernel, lam: f64) -> Vec<Complex64> {
    match symbol_pole(kernel, lam) {
        Some(p) => vec![p],
        None => vec![Complex64::new(0.0, (lam * kernel.alpha()).powf(1.0 / (1.0 + kernel.nu())))],
    }
}
