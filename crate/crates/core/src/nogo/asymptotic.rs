//! Small-`r` matching of the two Riccati equations.
//!
//! With `Z = Y'Y^{-1} ~ -l1/r I + (a1/2) sigma_-`, the mismatch
//!
//! ```text
//!     -K1^{-1} K1' Z - Z' - l0(l0+1)/r^2 I + K1^{-1} Z K1 Z + Z K1'
//! ```
//!
//! has leading coefficients `(l1^2 - l1 - l0(l0+1)) r^-2 I` and `-a1 l1 r^-1 sigma_-`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::mre::{mre_linear_solve, InitialData, LinearSystem, MreOptions};
use super::{k_inverse, k_matrix, m_matrix, AlphaPair};
use crate::error::{Error, Result};
use crate::mat2::{c, sigma_minus, C2};
use crate::profile::AlphaProfile;

/// Fit window for the numerical mismatch, integrated from the right end inward
/// so that the regular solution decays.
pub const FIT_WINDOW: (f64, f64) = (1e-3, 1e-2);
/// RK4 step inside the fit window.
pub const FIT_STEP: f64 = 1e-6;
/// Nodes between fit samples.
pub const FIT_STRIDE: usize = 50;
/// Powers `r^-2 ..= r^2`.
const FIT_BASIS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchFit {
    pub l0: u32,
    pub l1: u32,
    /// Largest `|r^-2|` coefficient over the four entries.
    pub coef_r2: f64,
    /// `r^-1` coefficient of the `sigma_-` entry.
    pub coef_r1_sigma: Complex64,
    /// `l1^2 - l1 - l0(l0+1)`.
    pub closed_form_r2: f64,
    /// Relative least-squares residual.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRecord {
    pub l0: u32,
    /// Unique positive root of `l1^2 - l1 - l0(l0+1) = 0`.
    pub l1: u32,
    /// Forced by the `r^-1 sigma_-` coefficient `-a1 l1`.
    pub a1_forced: f64,
    /// Follows from `a0/c0 = a1/c1`.
    pub a0_forced: f64,
    /// Whether the supplied linear coefficients already satisfy the constraint.
    pub inputs_consistent: bool,
    /// Fits for `l1 in {l0, l0+1, l0+2}`.
    pub fits: Vec<MismatchFit>,
    /// Smallest neighbour `|coef_r2|` divided by the one at `l0+1`.
    pub discrimination: f64,
}

/// `(l1, a1, a0)` forced by the `r^-2` and `r^-1` coefficients, then checked
/// numerically against fitted mismatches for the linear profile `c1 + a1 r`.
pub fn asymptotic_l_increment(l0: u32, coeffs: (f64, f64, f64, f64)) -> Result<AsymptoticRecord> {
    let (c0, a0, c1, a1) = coeffs;
    if c0 == 0.0 || c1 == 0.0 || !(c0.is_finite() && c1.is_finite()) {
        return Err(Error::Domain(format!("alpha must not vanish at the origin (c0 = {c0}, c1 = {c1})")));
    }
    if l0 == 0 {
        return Err(Error::Domain("l0 must be at least 1".into()));
    }
    // l1 = (1 + sqrt(1 + 4 l0 (l0 + 1))) / 2 = l0 + 1 exactly.
    let disc = 1 + 4 * l0 * (l0 + 1);
    let root = (disc as f64).sqrt().round() as u32;
    debug_assert_eq!(root * root, disc);
    let l1 = (1 + root) / 2;

    let profile = AlphaProfile::polynomial(vec![c1, a1]);
    let fits = [l0, l0 + 1, l0 + 2]
        .into_iter()
        .map(|l| fit_asymptotic_mismatch(l0, l, &profile, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let at = fits[1].coef_r2.abs();
    let neighbour = fits[0].coef_r2.abs().min(fits[2].coef_r2.abs());
    Ok(AsymptoticRecord {
        l0,
        l1,
        a1_forced: 0.0,
        a0_forced: 0.0,
        inputs_consistent: a1 == 0.0 && a0 == 0.0,
        fits,
        discrimination: if at > 0.0 { neighbour / at } else { f64::INFINITY },
    })
}

/// Integrates the B-system from series data across [`FIT_WINDOW`] and fits
/// every entry of the mismatch with `{r^-2, r^-1, 1, r, r^2}`.
pub fn fit_asymptotic_mismatch(l0: u32, l1: u32, alpha1: &AlphaProfile, energy: f64) -> Result<MismatchFit> {
    // Positivity is irrelevant on the fit window; build the pair directly.
    let pair = AlphaPair {
        alpha0: alpha1.clone(),
        alpha1: alpha1.clone(),
        l0,
        l1,
        energy,
    };
    let sol = mre_linear_solve(
        LinearSystem::B,
        &pair,
        InitialData::Series,
        MreOptions::new(FIT_WINDOW.1, FIT_STEP)
            .until(FIT_WINDOW.0)
            .recording_every(FIT_STRIDE),
    )?;
    let l0f = l0 as f64;
    let mut rs = Vec::new();
    let mut mism = Vec::new();
    for (i, &r) in sol.r.iter().enumerate() {
        let Some(b) = sol.affine[i] else { continue };
        let (al, dal, _) = alpha1.eval_all(r);
        let (k, kinv) = (k_matrix(al), k_inverse(al));
        let kp = -sigma_minus() * c(dal);
        let z = -(kinv * b);
        let zp = sigma_minus() * z * c(dal) + kinv * m_matrix(al, l1, energy, r) - z * z;
        let cent = C2::identity() * c(l0f * (l0f + 1.0) / (r * r));
        mism.push(-(kinv * kp * z) - zp - cent + kinv * z * k * z + z * kp);
        rs.push(r);
    }
    if rs.len() < 8 {
        return Err(Error::Domain(format!("only {} usable fit samples", rs.len())));
    }

    let m = rs.len();
    let mut basis = DMatrix::<f64>::from_fn(m, FIT_BASIS, |i, j| rs[i].powi(j as i32 - 2));
    let scales: Vec<f64> = (0..FIT_BASIS).map(|j| basis.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        basis.column_mut(j).unscale_mut(*s);
    }
    let svd = basis.clone().svd(true, true);
    let mut coef_r2 = 0.0f64;
    let mut coef_r1_sigma = Complex64::new(0.0, 0.0);
    let mut resid = 0.0f64;
    for (row, col) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let mut coef = [Complex64::new(0.0, 0.0); FIT_BASIS];
        for part in 0..2 {
            let rhs = DVector::from_fn(m, |i, _| {
                let z = mism[i][(row, col)];
                if part == 0 {
                    z.re
                } else {
                    z.im
                }
            });
            let x = svd
                .solve(&rhs, 1e-14)
                .map_err(|_| Error::Solver { dim: m })?;
            let fitted = &basis * &x;
            resid = resid.max((fitted - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE));
            for j in 0..FIT_BASIS {
                let v = x[j] / scales[j];
                if part == 0 {
                    coef[j].re = v;
                } else {
                    coef[j].im = v;
                }
            }
        }
        coef_r2 = coef_r2.max(coef[0].norm());
        if (row, col) == (1, 0) {
            coef_r1_sigma = coef[1];
        }
    }
    let l1f = l1 as f64;
    Ok(MismatchFit {
        l0,
        l1,
        coef_r2,
        coef_r1_sigma,
        closed_form_r2: l1f * l1f - l1f - l0f * (l0f + 1.0),
        fit_residual: resid,
    })
}
