//! The discrete alpha^2-dynamo operator matrix in flat-measure coordinates,
//! its fundamental symmetry, and the associated quadratic pencil.
//!
//! With `u_i = r psi_i` the operator reads
//!
//! ```text
//!     H_l[alpha] = [ -Q[1]      diag(alpha) ]
//!                  [  Q[alpha]  -Q[1]        ]
//! ```
//!
//! and is symmetric with respect to the block-swap metric `J`:
//! `H = J H^T J`. Every block is a real symmetric tridiagonal (or diagonal)
//! matrix, so the identity holds bit for bit.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{diffusion_alpha, inner_product, laplacian_l, RadialGrid, TridiagOp};
use crate::profile::AlphaProfile;

#[derive(Debug, Clone)]
pub struct DynamoMatrix {
    grid: RadialGrid,
    l: u32,
    alpha: AlphaProfile,
    /// `Delta_l^u = -Q[1]`.
    laplacian: TridiagOp,
    q_alpha: TridiagOp,
    alpha_nodes: Vec<f64>,
    dense: Mat<f64>,
}

impl DynamoMatrix {
    pub fn assemble(grid: &RadialGrid, alpha: &AlphaProfile, l: u32) -> Result<Self> {
        let laplacian = laplacian_l(grid, l)?;
        let q_alpha = diffusion_alpha(grid, alpha, l)?;
        let alpha_nodes: Vec<f64> = grid.nodes().iter().map(|&r| alpha.value(r)).collect();
        let n = grid.n();
        let mut dense = Mat::<f64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            for (blk_r, blk_c) in [(0, 0), (n, n)] {
                dense[(blk_r + j, blk_c + j)] = laplacian.diag[j];
                if j + 1 < n {
                    dense[(blk_r + j, blk_c + j + 1)] = laplacian.sup[j];
                    dense[(blk_r + j + 1, blk_c + j)] = laplacian.sub[j];
                }
            }
            dense[(j, n + j)] = alpha_nodes[j];
            dense[(n + j, j)] = q_alpha.diag[j];
            if j + 1 < n {
                dense[(n + j, j + 1)] = q_alpha.sup[j];
                dense[(n + j + 1, j)] = q_alpha.sub[j];
            }
        }
        Ok(Self {
            grid: grid.clone(),
            l,
            alpha: alpha.clone(),
            laplacian,
            q_alpha,
            alpha_nodes,
            dense,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &AlphaProfile {
        &self.alpha
    }

    pub fn laplacian(&self) -> &TridiagOp {
        &self.laplacian
    }

    pub fn q_alpha(&self) -> &TridiagOp {
        &self.q_alpha
    }

    pub fn alpha_nodes(&self) -> &[f64] {
        &self.alpha_nodes
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.dense.as_ref()
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.dense
    }

    /// Max-norm of `J M^T J - M`; zero by construction.
    pub fn pseudo_hermiticity_residual(&self) -> f64 {
        j_symmetry_residual(self.matrix())
    }

    /// `M x` using the block structure (no dense product).
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        assert_eq!(x.len(), 2 * n);
        let (x1, x2) = x.split_at(n);
        let top = self.laplacian.apply_complex(x1);
        let bot_a = self.q_alpha.apply_complex(x1);
        let bot_b = self.laplacian.apply_complex(x2);
        let mut out = Vec::with_capacity(2 * n);
        out.extend(top.iter().zip(x2).zip(&self.alpha_nodes).map(|((t, v), a)| t + v * a));
        out.extend(bot_a.iter().zip(&bot_b).map(|(a, b)| a + b));
        out
    }

    /// Pencil coefficients for the first component of a state vector.
    pub fn pencil_coefficients(&self, psi1: &[Complex64]) -> Result<PencilCoefficients> {
        pencil_coefficients(&self.grid, &self.alpha, self.l, psi1)
    }

    /// Checks an eigenpair against the quadratic pencil and the
    /// `psi_2 = alpha^{-1} (Q[1] + lambda) psi_1` reconstruction.
    pub fn pencil_consistency(&self, lambda: Complex64, psi: &[Complex64]) -> Result<PencilCheck> {
        let n = self.n();
        if psi.len() != 2 * n {
            return Err(Error::Shape {
                expected: 2 * n,
                got: psi.len(),
            });
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        let (psi1, psi2) = psi.split_at(n);
        let coeffs = self.pencil_coefficients(psi1)?;
        let terms = [
            coeffs.a2 * lambda * lambda,
            coeffs.a1 * lambda,
            Complex64::new(coeffs.a0, 0.0),
        ];
        let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        let pencil_residual = terms.iter().sum::<Complex64>().norm() / scale.max(f64::MIN_POSITIVE);
        let (lp, lm) = lambda_pm(&coeffs)?;
        let root_mismatch = (lambda - lp).norm().min((lambda - lm).norm()) / lambda.norm().max(1.0);

        let recon = reconstruct_psi2(self, psi1, lambda)?;
        let diff = recon
            .iter()
            .zip(psi2)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok(PencilCheck {
            coefficients: coeffs,
            psi1_norm: psi1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            pencil_residual,
            root_mismatch,
            reconstruction_residual: diff,
        })
    }
}

/// Outcome of [`DynamoMatrix::pencil_consistency`] for a unit-norm eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilCheck {
    pub coefficients: PencilCoefficients,
    /// Euclidean norm of the first component.
    pub psi1_norm: f64,
    /// `|a2 l^2 + a1 l + a0| / max(|a2 l^2|, |a1 l|, |a0|)`.
    pub pencil_residual: f64,
    /// Distance to the nearer of `lambda_+-`, relative to `max(|lambda|, 1)`.
    pub root_mismatch: f64,
    /// Euclidean norm of `psi_2 - alpha^{-1}(Q[1] + lambda) psi_1`.
    pub reconstruction_residual: f64,
}

/// Assembles the operator matrix; `l = 0` is rejected.
pub fn assemble(grid: &RadialGrid, alpha: &AlphaProfile, l: u32) -> Result<DynamoMatrix> {
    DynamoMatrix::assemble(grid, alpha, l)
}

/// Max-norm of `J M^T J - M` for an even-dimensional real matrix, `J` the
/// block-swap metric.
pub fn j_symmetry_residual(m: MatRef<'_, f64>) -> f64 {
    let dim = m.nrows();
    assert!(dim == m.ncols() && dim % 2 == 0, "need an even square matrix");
    let half = dim / 2;
    let swap = |i: usize| if i < half { i + half } else { i - half };
    let mut worst = 0.0f64;
    for j in 0..dim {
        for i in 0..dim {
            worst = worst.max((m[(swap(j), swap(i))] - m[(i, j)]).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// `a1^2 - 4 a0 a2`.
    pub discriminant: f64,
}

impl PencilCoefficients {
    pub fn new(a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            a0,
            a1,
            a2,
            discriminant: a1 * a1 - 4.0 * a0 * a2,
        }
    }
}

fn checked_real(form: Complex64, abs_scale: f64, which: &str) -> Result<f64> {
    let tol = 1e-10 * form.norm() + 1e-13 * abs_scale;
    if form.im.abs() > tol {
        return Err(Error::Domain(format!(
            "quadratic form {which} has imaginary residue {:e} (value {:e})",
            form.im,
            form.re
        )));
    }
    Ok(form.re)
}

fn form_with_scale(grid: &RadialGrid, a_psi: &[Complex64], psi: &[Complex64]) -> Result<(Complex64, f64)> {
    let form = inner_product(grid, a_psi, psi)?;
    let scale = a_psi
        .iter()
        .zip(psi)
        .zip(grid.weights())
        .map(|((a, b), w)| a.norm() * b.norm() * w)
        .sum();
    Ok((form, scale))
}

/// `a_j = (A_j psi_1, psi_1)` with `A_2 = 1/alpha`,
/// `A_1 = Q[1] alpha^{-1} + alpha^{-1} Q[1]`, `A_0 = Q[1] alpha^{-1} Q[1] - Q[alpha]`.
pub fn pencil_coefficients(
    grid: &RadialGrid,
    alpha: &AlphaProfile,
    l: u32,
    psi1: &[Complex64],
) -> Result<PencilCoefficients> {
    if psi1.len() != grid.n() {
        return Err(Error::Shape {
            expected: grid.n(),
            got: psi1.len(),
        });
    }
    if psi1.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::Domain("pencil needs a nonzero psi_1".into()));
    }
    let inv_alpha = inverse_alpha_nodes(grid, alpha)?;
    let q1 = laplacian_l(grid, l)?.scaled(-1.0);
    let qa = diffusion_alpha(grid, alpha, l)?;

    let div = |v: &[Complex64]| -> Vec<Complex64> { v.iter().zip(&inv_alpha).map(|(z, a)| z * a).collect() };

    let a2_psi = div(psi1);
    let q1_psi = q1.apply_complex(psi1);
    let a1_psi: Vec<Complex64> = q1
        .apply_complex(&a2_psi)
        .iter()
        .zip(div(&q1_psi))
        .map(|(a, b)| a + b)
        .collect();
    let a0_psi: Vec<Complex64> = q1
        .apply_complex(&div(&q1_psi))
        .iter()
        .zip(qa.apply_complex(psi1))
        .map(|(a, b)| a - b)
        .collect();

    let (f2, s2) = form_with_scale(grid, &a2_psi, psi1)?;
    let (f1, s1) = form_with_scale(grid, &a1_psi, psi1)?;
    let (f0, s0) = form_with_scale(grid, &a0_psi, psi1)?;
    Ok(PencilCoefficients::new(
        checked_real(f0, s0, "a0")?,
        checked_real(f1, s1, "a1")?,
        checked_real(f2, s2, "a2")?,
    ))
}

fn inverse_alpha_nodes(grid: &RadialGrid, alpha: &AlphaProfile) -> Result<Vec<f64>> {
    grid.nodes()
        .iter()
        .map(|&r| {
            let a = alpha.value(r);
            if a == 0.0 || !a.is_finite() {
                Err(Error::Domain(format!(
                    "alpha vanishes at r = {r}; the pencil elimination divides by alpha"
                )))
            } else {
                Ok(1.0 / a)
            }
        })
        .collect()
}

/// `psi_2 = alpha^{-1} (Q[1] + lambda) psi_1`.
pub fn reconstruct_psi2(m: &DynamoMatrix, psi1: &[Complex64], lambda: Complex64) -> Result<Vec<Complex64>> {
    let inv_alpha = inverse_alpha_nodes(m.grid(), m.alpha())?;
    // Q[1] = -Delta
    let lap = m.laplacian().apply_complex(psi1);
    Ok(lap
        .iter()
        .zip(psi1)
        .zip(&inv_alpha)
        .map(|((d, p), a)| (lambda * p - d) * a)
        .collect())
}

/// Roots `lambda_+- = (-a1 +- sqrt(a1^2 - 4 a0 a2)) / (2 a2)`.
pub fn lambda_pm(c: &PencilCoefficients) -> Result<(Complex64, Complex64)> {
    if c.a2 == 0.0 || !c.a2.is_finite() {
        return Err(Error::DegeneratePencil(c.a2));
    }
    let disc = c.discriminant;
    let centre = -c.a1 / (2.0 * c.a2);
    if disc < 0.0 {
        let w = (-disc).sqrt() / (2.0 * c.a2);
        return Ok((Complex64::new(centre, w), Complex64::new(centre, -w)));
    }
    if disc == 0.0 {
        let z = Complex64::new(centre, 0.0);
        return Ok((z, z));
    }
    // Cancellation-free pair; then label by the sign of the square root.
    let sq = disc.sqrt();
    let q = -0.5 * (c.a1 + if c.a1 >= 0.0 { sq } else { -sq });
    let (r1, r2) = if q == 0.0 {
        (sq / (2.0 * c.a2), -sq / (2.0 * c.a2))
    } else {
        (q / c.a2, c.a0 / q)
    };
    let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    let (plus, minus) = if c.a2 > 0.0 { (hi, lo) } else { (lo, hi) };
    Ok((Complex64::new(plus, 0.0), Complex64::new(minus, 0.0)))
}
