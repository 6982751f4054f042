//! Uniform interior grids on (0, 1) and the tridiagonal operators that act on
//! the flat-measure amplitude `u(r) = r * psi(r)`.
//!
//! Both endpoints carry homogeneous Dirichlet data (`u(0) = 0` from regularity,
//! `u(1) = 0` from the superconducting wall), so only interior nodes are stored
//! and the centrifugal term `l(l+1)/r^2` is never evaluated at `r = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::AlphaProfile;

/// Smallest resolution accepted by [`build_grid`].
pub const MIN_NODES: usize = 8;

/// Interior nodes `r_j = j h`, `h = 1/(n+1)`, `j = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Builds a grid without the production resolution floor. Useful for
    /// hand-checkable stencils; `n` must still be positive.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("grid needs at least one interior node".into()));
        }
        let h = 1.0 / (n as f64 + 1.0);
        let nodes = (1..=n).map(|j| j as f64 * h).collect();
        Ok(Self {
            n,
            h,
            nodes,
            weights: vec![h; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Midpoint `r_{j+1/2}` for `j = 0..=n` (so `half_node(0) = h/2`).
    pub fn half_node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }
}

/// Builds the production grid; rejects resolutions below [`MIN_NODES`].
pub fn build_grid(n: usize) -> Result<RadialGrid> {
    if n < MIN_NODES {
        return Err(Error::Config(format!(
            "n = {n}: resolution too low for any acceptance test (need n >= {MIN_NODES})"
        )));
    }
    RadialGrid::uniform(n)
}

/// Real tridiagonal operator. `sub[j]` couples row `j+1` to column `j`,
/// `sup[j]` couples row `j` to column `j+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagOp {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub symmetric: bool,
}

impl TridiagOp {
    /// Symmetric operator from a diagonal and one off-diagonal.
    pub fn symmetric(diag: Vec<f64>, off: Vec<f64>) -> Self {
        debug_assert_eq!(off.len() + 1, diag.len());
        Self {
            sub: off.clone(),
            diag,
            sup: off,
            symmetric: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        self.sub
            .iter()
            .zip(&self.sup)
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            sub: self.sub.iter().map(|v| c * v).collect(),
            diag: self.diag.iter().map(|v| c * v).collect(),
            sup: self.sup.iter().map(|v| c * v).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Adds `shift` to the diagonal.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|d| *d += shift);
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "operator dimension mismatch");
        (0..n)
            .map(|j| {
                let mut y = self.diag[j] * x[j];
                if j > 0 {
                    y += self.sub[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    y += self.sup[j] * x[j + 1];
                }
                y
            })
            .collect()
    }

    pub fn apply_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "operator dimension mismatch");
        (0..n)
            .map(|j| {
                let mut y = x[j] * self.diag[j];
                if j > 0 {
                    y += x[j - 1] * self.sub[j - 1];
                }
                if j + 1 < n {
                    y += x[j + 1] * self.sup[j];
                }
                y
            })
            .collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| {
                let mut s = self.diag[j].abs();
                if j > 0 {
                    s += self.sub[j - 1].abs();
                }
                if j + 1 < n {
                    s += self.sup[j].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count, symmetric only).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for j in 0..self.dim() {
            let off2 = if j > 0 { self.sub[j - 1] * self.sub[j - 1] } else { 0.0 };
            d = self.diag[j] - x - if j > 0 { off2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[j].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` smallest eigenvalues, ascending, by Sturm bisection.
    ///
    /// Requires a symmetric operator.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        assert!(self.symmetric, "Sturm bisection needs a symmetric operator");
        let k = k.min(self.dim());
        let bound = self.norm_inf();
        (0..k)
            .map(|idx| {
                let (mut lo, mut hi) = (-bound - 1.0, bound + 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if self.count_below(mid) > idx {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Eigenvector for a (converged) eigenvalue by inverse iteration,
    /// normalised to unit Euclidean norm with a positive largest component.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.dim();
        let scale = self.norm_inf().max(1.0);
        let shifted = self.shifted(-(lambda + 1e-13 * scale));
        let mut x = vec![1.0; n];
        for (j, v) in x.iter_mut().enumerate() {
            // deterministic, non-symmetric start vector
            *v += 0.1 * ((j as f64) * 0.7).sin();
        }
        for _ in 0..4 {
            x = solve_tridiag_pivoted(&shifted, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let imax = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }
}

/// Gaussian elimination with partial pivoting for a tridiagonal system
/// (one extra fill-in diagonal).
fn solve_tridiag_pivoted(a: &TridiagOp, rhs: &[f64]) -> Vec<f64> {
    let n = a.dim();
    let mut dl: Vec<f64> = a.sub.clone();
    let mut d: Vec<f64> = a.diag.clone();
    let mut du: Vec<f64> = a.sup.clone();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    let tiny = f64::EPSILON * a.norm_inf().max(f64::MIN_POSITIVE);

    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i].abs() < tiny {
                d[i] = tiny;
            }
            let m = dl[i] / d[i];
            d[i + 1] -= m * du[i];
            b[i + 1] -= m * b[i];
            dl[i] = 0.0;
        } else {
            let m = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - m * tmp;
            du[i] = tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -m * du2[i];
            }
            b.swap(i, i + 1);
            b[i + 1] -= m * b[i];
        }
    }
    if d[n - 1].abs() < tiny {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= du2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    x
}

fn check_l(l: u32) -> Result<()> {
    if l == 0 {
        return Err(Error::Domain(
            "l = 0 is excluded: the zero-mean normalisation of the scalar potentials on the sphere removes the l = 0 mode"
                .into(),
        ));
    }
    Ok(())
}

/// `Delta_l^u = d^2/dr^2 - l(l+1)/r^2` with Dirichlet ends, second order.
pub fn laplacian_l(grid: &RadialGrid, l: u32) -> Result<TridiagOp> {
    check_l(l)?;
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let ll = f64::from(l) * (f64::from(l) + 1.0);
    let diag = grid
        .nodes()
        .iter()
        .map(|&r| -2.0 * inv_h2 - ll / (r * r))
        .collect();
    Ok(TridiagOp::symmetric(diag, vec![inv_h2; grid.n() - 1]))
}

/// `Q[alpha] u = -(alpha u')' + alpha l(l+1) u / r^2`, with `alpha` sampled on
/// half nodes for the flux so the result is exactly symmetric.
pub fn diffusion_alpha(grid: &RadialGrid, alpha: &AlphaProfile, l: u32) -> Result<TridiagOp> {
    check_l(l)?;
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let ll = f64::from(l) * (f64::from(l) + 1.0);
    let half: Vec<f64> = (0..=n).map(|j| alpha.value(grid.half_node(j))).collect();
    let diag = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, &r)| (half[j] + half[j + 1]) * inv_h2 + alpha.value(r) * ll / (r * r))
        .collect();
    let off = (1..n).map(|j| -half[j] * inv_h2).collect();
    Ok(TridiagOp::symmetric(diag, off))
}

/// Flat-measure inner product `(f, g) = sum_j w_j conj(f_j) g_j`.
pub fn inner_product(grid: &RadialGrid, f: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
    for v in [f, g] {
        if v.len() != grid.n() {
            return Err(Error::Shape {
                expected: grid.n(),
                got: v.len(),
            });
        }
    }
    Ok(f.iter()
        .zip(g)
        .zip(grid.weights())
        .map(|((a, b), w)| a.conj() * b * *w)
        .sum())
}

/// Real-valued convenience form of [`inner_product`].
pub fn inner_product_real(grid: &RadialGrid, f: &[f64], g: &[f64]) -> Result<f64> {
    for v in [f, g] {
        if v.len() != grid.n() {
            return Err(Error::Shape {
                expected: grid.n(),
                got: v.len(),
            });
        }
    }
    Ok(f.iter()
        .zip(g)
        .zip(grid.weights())
        .map(|((a, b), w)| a * b * w)
        .sum())
}
