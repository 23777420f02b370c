//! Product-integration weights for `int_0^{t_k} K(t_k - s) g(s) ds` with g
//! replaced by its piecewise-polynomial interpolant.
//!
//! The panel touching the singularity `s = t_k` is integrated exactly through
//! the moments `int_0^u v^p K(v) dv`. All other panels see a kernel that is
//! analytic on a neighbourhood of the panel and use a 20-point Gauss-Legendre
//! rule, which is exact to rounding there.

use rayon::prelude::*;

use super::grid::TimeGrid;
use super::quadrature::panel_rule;
use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;

/// A convolution kernel with computable power moments.
pub trait ConvolutionKernel: Sync {
    fn value(&self, u: f64) -> Result<f64>;
    /// `int_0^u v^p K(v) dv`
    fn moment(&self, p: u32, u: f64) -> Result<f64>;
}

/// The memory kernel itself.
pub struct Kappa<'a>(pub &'a MemoryKernel);

/// `M0(u) = int_0^u kappa`.
pub struct KappaIntegral<'a>(pub &'a MemoryKernel);

/// `1 + M0(u)`, the kernel of the resolvent integral equation.
pub struct ResolventEquationKernel<'a>(pub &'a MemoryKernel);

impl ConvolutionKernel for Kappa<'_> {
    fn value(&self, u: f64) -> Result<f64> {
        Ok(self.0.value(u))
    }
    fn moment(&self, p: u32, u: f64) -> Result<f64> {
        self.0.moment(p, u)
    }
}

impl ConvolutionKernel for KappaIntegral<'_> {
    fn value(&self, u: f64) -> Result<f64> {
        self.0.integrated(u)
    }
    fn moment(&self, p: u32, u: f64) -> Result<f64> {
        // integration by parts: (u^{p+1} M0(u) - M_{p+1}(u)) / (p + 1)
        let pf = p as f64 + 1.0;
        Ok((u.powi(p as i32 + 1) * self.0.integrated(u)? - self.0.moment(p + 1, u)?) / pf)
    }
}

impl ConvolutionKernel for ResolventEquationKernel<'_> {
    fn value(&self, u: f64) -> Result<f64> {
        Ok(1.0 + self.0.integrated(u)?)
    }
    fn moment(&self, p: u32, u: f64) -> Result<f64> {
        let pf = p as f64 + 1.0;
        Ok(u.powi(p as i32 + 1) / pf + KappaIntegral(self.0).moment(p, u)?)
    }
}

/// Monomial coefficients (in u) of the Lagrange basis on nodes `u`.
fn lagrange_monomials(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut c = vec![1.0];
            let mut denom = 1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                denom *= u[i] - u[j];
                let mut next = vec![0.0; c.len() + 1];
                for (p, &cp) in c.iter().enumerate() {
                    next[p + 1] += cp;
                    next[p] -= u[j] * cp;
                }
                c = next;
            }
            c.iter().map(|v| v / denom).collect()
        })
        .collect()
}

fn lagrange_eval(nodes: &[f64], i: usize, s: f64) -> f64 {
    nodes.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &sj)| (s - sj) / (nodes[i] - sj)).product()
}

/// `int_{s_0}^{s_d} K(t - s) l_i(s) ds` for the Lagrange basis `l_i` on `panel`.
/// Requires `t >= s_d`; the singular case `t == s_d` uses moments.
pub fn panel_weights<K: ConvolutionKernel + ?Sized>(kernel: &K, t: f64, panel: &[f64]) -> Result<Vec<f64>> {
    let d = panel.len() - 1;
    let (s0, sd) = (panel[0], panel[d]);
    if t == sd {
        let u: Vec<f64> = panel.iter().map(|s| t - s).collect();
        let big_u = u[0];
        let moments: Vec<f64> = (0..=d as u32).map(|p| kernel.moment(p, big_u)).collect::<Result<_>>()?;
        let coeffs = lagrange_monomials(&u);
        return Ok(coeffs.iter().map(|c| c.iter().zip(&moments).map(|(a, m)| a * m).sum()).collect());
    }
    let (x, w) = panel_rule();
    let half = 0.5 * (sd - s0);
    let mid = 0.5 * (sd + s0);
    let mut out = vec![0.0; d + 1];
    for (xi, wi) in x.iter().zip(w) {
        let s = mid + half * xi;
        let kv = kernel.value(t - s)? * wi * half;
        for (i, o) in out.iter_mut().enumerate() {
            *o += kv * lagrange_eval(panel, i, s);
        }
    }
    Ok(out)
}

/// Weight table for the piecewise-linear product rule.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvWeights {
    /// Toeplitz form: `w[k][j] = a[k-j-1] (j < k) + b[k-j] (j > 0)`.
    Uniform { a: Vec<f64>, b: Vec<f64> },
    /// Row k holds `w[k][0..=k]`.
    Dense { rows: Vec<Vec<f64>> },
}

impl ConvWeights {
    pub fn build<K: ConvolutionKernel>(kernel: &K, grid: &TimeGrid) -> Result<Self> {
        let nodes = grid.nodes();
        let kmax = grid.steps();
        if grid.is_uniform() {
            let h = grid.step(1);
            let ab: Vec<(f64, f64)> = (0..kmax)
                .into_par_iter()
                .map(|d| {
                    let w = panel_weights(kernel, (d + 1) as f64 * h, &[0.0, h])?;
                    Ok((w[0], w[1]))
                })
                .collect::<Result<_>>()?;
            let (a, b) = ab.into_iter().unzip();
            return Ok(ConvWeights::Uniform { a, b });
        }
        let rows = (0..=kmax)
            .into_par_iter()
            .map(|k| {
                let mut row = vec![0.0; k + 1];
                for j in 0..k {
                    let w = panel_weights(kernel, nodes[k], &[nodes[j], nodes[j + 1]])?;
                    row[j] += w[0];
                    row[j + 1] += w[1];
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(ConvWeights::Dense { rows })
    }

    /// `w[k][j]` for `j <= k`.
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        match self {
            ConvWeights::Uniform { a, b } => {
                if j > k {
                    return 0.0;
                }
                let mut w = 0.0;
                if j < k {
                    w += a[k - j - 1];
                }
                if j > 0 {
                    w += b[k - j];
                }
                w
            }
            ConvWeights::Dense { rows } => rows[k].get(j).copied().unwrap_or(0.0),
        }
    }

    /// `sum_j w[k][j] g[j]`.
    pub fn apply(&self, k: usize, g: &[f64]) -> f64 {
        (0..=k).map(|j| self.weight(k, j) * g[j]).sum()
    }
}

/// Product-integration weights of the memory kernel on `grid`.
pub fn conv_weights(kernel: &MemoryKernel, grid: &TimeGrid) -> Result<ConvWeights> {
    ConvWeights::build(&Kappa(kernel), grid)
}

/// Weights `int K(t_k - s) l_i(s) ds` for the piecewise-quadratic (Simpson-type)
/// interpolant on pairs of intervals; k must be even.
pub fn quadratic_row<K: ConvolutionKernel>(kernel: &K, nodes: &[f64], k: usize) -> Result<Vec<f64>> {
    if k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("quadratic product rule needs an even node index (got {k})")));
    }
    let mut row = vec![0.0; k + 1];
    for j in (0..k).step_by(2) {
        let w = panel_weights(kernel, nodes[k], &nodes[j..=j + 2])?;
        for (i, wi) in w.iter().enumerate() {
            row[j + i] += wi;
        }
    }
    Ok(row)
}

/// Piecewise-linear product weights for row k on arbitrary nodes.
pub fn linear_row<K: ConvolutionKernel>(kernel: &K, nodes: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut row = vec![0.0; k + 1];
    for j in 0..k {
        let w = panel_weights(kernel, nodes[k], &nodes[j..=j + 1])?;
        row[j] += w[0];
        row[j + 1] += w[1];
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use crate::volterra::grid::GridKind;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exact_on_constants_and_linears() {
        let k = MemoryKernel::new(1.3, 0.0, 0.5).unwrap();
        for grid in [TimeGrid::uniform(1.0, 64).unwrap(), TimeGrid::new(1.0, 64, GridKind::Graded { exponent: 4.0 }).unwrap()] {
            let w = conv_weights(&k, &grid).unwrap();
            let nodes = grid.nodes();
            for kk in [1, 7, 33, 64] {
                let t = nodes[kk];
                let ones = vec![1.0; kk + 1];
                let c = w.apply(kk, &ones);
                assert!(rel(c, 1.3 * t.powf(0.5) / gamma(1.5).unwrap()) < 1e-12, "k = {kk}");
                let c = w.apply(kk, &nodes[..=kk]);
                assert!(rel(c, 1.3 * t.powf(1.5) / gamma(2.5).unwrap()) < 1e-12, "k = {kk}");
            }
        }
    }

    #[test]
    fn exact_on_constants_with_damping() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let grid = TimeGrid::uniform(1.0, 128).unwrap();
        let w = conv_weights(&k, &grid).unwrap();
        let c = w.apply(128, &[1.0; 129]);
        assert!(rel(c, k.integrated(1.0).unwrap()) < 1e-12);
    }

    #[test]
    fn cosine_converges_at_second_order() {
        // reference: int_0^1 kappa(1 - s) cos(s) ds at 30 digits
        let reference = 0.702_171_192_842_496_108_5;
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let mut errs = vec![];
        for n in [32, 64, 128, 256] {
            let grid = TimeGrid::uniform(1.0, n).unwrap();
            let w = conv_weights(&k, &grid).unwrap();
            let g: Vec<f64> = grid.nodes().iter().map(|s| s.cos()).collect();
            errs.push((w.apply(n, &g) - reference).abs());
        }
        for e in errs.windows(2) {
            let order = (e[0] / e[1]).log2();
            assert!(order >= 1.8, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn quadratic_rule_exact_on_quadratics() {
        let k = MemoryKernel::new(1.0, 0.0, 0.3).unwrap();
        let grid = TimeGrid::uniform(2.0, 16).unwrap();
        let row = quadratic_row(&Kappa(&k), grid.nodes(), 16).unwrap();
        let q: f64 = row.iter().zip(grid.nodes()).map(|(w, s)| w * s * s).sum();
        // int_0^2 (2-s)^{nu-1} s^2 ds / Gamma(nu) = 2 * 2^{nu+2} / Gamma(nu + 3)
        let exact = 2.0 * 2f64.powf(2.3) / gamma(3.3).unwrap();
        assert!(rel(q, exact) < 1e-12);
        assert!(quadratic_row(&Kappa(&k), grid.nodes(), 3).is_err());
    }

    #[test]
    fn integrated_kernel_moments_match_quadrature() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let ki = KappaIntegral(&k);
        // compare with Gauss-Legendre on the smooth substitution v = u x^2
        let (x, w) = crate::volterra::quadrature::gauss_legendre(40);
        let u = 0.8;
        for p in 0..3u32 {
            let q: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let y = 0.5 * (xi + 1.0);
                    let v = u * y * y;
                    0.5 * wi * 2.0 * u * y * v.powi(p as i32) * k.integrated(v).unwrap()
                })
                .sum();
            assert!(rel(ki.moment(p, u).unwrap(), q) < 1e-13, "p = {p}");
        }
    }
}
