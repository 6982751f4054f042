//! Trajectory diagnostics and the discrete intertwining defect.
//!
//! A first-order intertwiner `A = R d/dr + Q` with `Q = (R#)^{-1} B` would give
//! `H0 - E = -A A#` and `H1 - E = -A# A`, hence `A# (H0 - E) = (H1 - E) A#`.
//! The defect measures how far that identity fails on smooth test vectors.

use num_complex::Complex64;

use super::mre::{mre_linear_solve, InitialData, LinearSystem, MatrixODESolution, MreOptions};
use super::{build_r, k_matrix, m_matrix, AlphaPair, GaugeChoice};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::mat2::{c, cond_log10, det, inverse, norm_max, sharp, C2};
use crate::operator::DynamoMatrix;

/// Radius at which the B-system is started for the defect.
pub const DEFECT_R_START: f64 = 0.05;
/// RK4 substeps per grid spacing.
pub const DEFECT_SUBSTEPS: usize = 20;
/// Number of test vectors.
pub const TEST_FUNCTIONS: usize = 8;
/// Half-width of the compact bumps.
pub const BUMP_HALF_WIDTH: f64 = 0.08;

/// `max |K W'' + K' W' - M W| / max |M W|` along the bottom block, with
/// three-point differences on the stored nodes.
pub fn eigenfunction_equivalence(sol: &MatrixODESolution) -> f64 {
    let (alpha, l) = match sol.system {
        LinearSystem::U => (&sol.pair.alpha0, sol.pair.l0),
        LinearSystem::B => (&sol.pair.alpha1, sol.pair.l1),
    };
    let w = &sol.bottom;
    let h = sol.spacing;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 1..w.len().saturating_sub(1) {
        let r = sol.r[i];
        let (a, da, _) = alpha.eval_all(r);
        let w1 = (w[i + 1] - w[i - 1]) / c(2.0 * h);
        let w2 = (w[i + 1] - w[i] * c(2.0) + w[i - 1]) / c(h * h);
        let kp = -crate::mat2::sigma_minus() * c(da);
        let mw = m_matrix(a, l, sol.pair.energy, r) * w[i];
        num = num.max(norm_max(&(k_matrix(a) * w2 + kp * w1 - mw)));
        den = den.max(norm_max(&mw));
    }
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct ProductDiagnostic {
    pub r: Vec<f64>,
    /// `|P'| / |P|` by central differences; endpoints repeat their neighbour.
    pub drift: Vec<f64>,
    pub norm: Vec<f64>,
    pub det: Vec<Complex64>,
    /// Both blocks have `log10 cond < 12`.
    pub well_conditioned: Vec<bool>,
}

/// `P = Y# R# W` along two trajectories sharing one grid.
pub fn product_invariant_diagnostic(
    sol_u: &MatrixODESolution,
    sol_b: &MatrixODESolution,
    gauge: &GaugeChoice,
) -> Result<ProductDiagnostic> {
    if sol_u.system != LinearSystem::U || sol_b.system != LinearSystem::B {
        return Err(Error::Config("expected one U-system and one B-system trajectory".into()));
    }
    let n = sol_u.r.len();
    if sol_b.r.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: sol_b.r.len(),
        });
    }
    if sol_u.r.iter().zip(&sol_b.r).any(|(a, b)| (a - b).abs() > 1e-12) || n < 3 {
        return Err(Error::Config("trajectories must share a grid of at least 3 nodes".into()));
    }
    let mut p = Vec::with_capacity(n);
    for i in 0..n {
        let rr = build_r(&sol_u.pair, gauge, sol_u.r[i])?;
        p.push(sharp(&sol_b.bottom[i]) * sharp(&rr) * sol_u.bottom[i]);
    }
    let h = sol_u.spacing;
    let mut drift = vec![0.0; n];
    for i in 1..n - 1 {
        drift[i] = norm_max(&((p[i + 1] - p[i - 1]) / c(2.0 * h))) / norm_max(&p[i]);
    }
    drift[0] = drift[1];
    drift[n - 1] = drift[n - 2];
    Ok(ProductDiagnostic {
        r: sol_u.r.clone(),
        drift,
        norm: p.iter().map(norm_max).collect(),
        det: p.iter().map(det).collect(),
        well_conditioned: (0..n)
            .map(|i| sol_u.cond_log[i] < super::mre::COND_LOG_MAX && sol_b.cond_log[i] < super::mre::COND_LOG_MAX)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    /// `max_j |D phi_j|_inf`.
    pub raw: f64,
    /// `raw / max_j |A# (H0 - E) phi_j|_inf`.
    pub normalized: f64,
    pub per_function: Vec<f64>,
    /// Test functions dropped because their support met an invalid `B` node.
    pub skipped: usize,
    /// Last radius with a valid affine `B`, when the trajectory truncates.
    pub truncated_at: Option<f64>,
    /// Set when `normalized` is below ten times the solver tolerance.
    pub suspicious: bool,
}

/// Smooth compactly supported test vectors `(b, e^{i theta} b / 2)`.
pub fn test_functions(grid: &RadialGrid, scale: f64) -> Vec<Vec<Complex64>> {
    let n = grid.n();
    (0..TEST_FUNCTIONS)
        .map(|j| {
            let centre = 0.2 + 0.7 * j as f64 / (TEST_FUNCTIONS - 1) as f64;
            let theta = 0.9 * j as f64;
            let mut v = vec![Complex64::new(0.0, 0.0); 2 * n];
            for (i, &r) in grid.nodes().iter().enumerate() {
                let s = (r - centre) / BUMP_HALF_WIDTH;
                if s.abs() < 1.0 {
                    let b = scale * (1.0 - s * s).powi(4);
                    v[i] = Complex64::new(b, 0.0);
                    v[n + i] = Complex64::from_polar(0.5 * b, theta);
                }
            }
            v
        })
        .collect()
}

fn block(v: &[Complex64], n: usize, i: usize) -> [Complex64; 2] {
    [v[i], v[n + i]]
}

fn mul(m: &C2, x: [Complex64; 2]) -> [Complex64; 2] {
    [m[(0, 0)] * x[0] + m[(0, 1)] * x[1], m[(1, 0)] * x[0] + m[(1, 1)] * x[1]]
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Defect of the intertwining identity on [`TEST_FUNCTIONS`] bumps scaled by `scale`.
pub fn intertwining_defect(pair: &AlphaPair, gauge: &GaugeChoice, grid: &RadialGrid, scale: f64) -> Result<DefectReport> {
    let n = grid.n();
    let h = grid.h();
    let nodes = grid.nodes();
    let h0 = DynamoMatrix::assemble(grid, &pair.alpha0, pair.l0)?;
    let h1 = DynamoMatrix::assemble(grid, &pair.alpha1, pair.l1)?;
    let e = Complex64::new(pair.energy, 0.0);

    let start = nodes
        .iter()
        .position(|&r| r >= DEFECT_R_START)
        .ok_or_else(|| Error::Config("grid too coarse for the defect window".into()))?;
    let sol = mre_linear_solve(
        LinearSystem::B,
        pair,
        InitialData::Series,
        MreOptions::new(nodes[start], h / DEFECT_SUBSTEPS as f64).recording_every(DEFECT_SUBSTEPS),
    )?;
    // Stored node m sits at nodes[start + m]; the last stored node is r = 1.
    let mut q_sharp: Vec<Option<C2>> = vec![None; n];
    let mut r_sharp: Vec<C2> = Vec::with_capacity(n);
    for (i, &r) in nodes.iter().enumerate() {
        let rr = build_r(pair, gauge, r)?;
        r_sharp.push(sharp(&rr));
        if i >= start {
            if let (Some(b), Ok(rinv)) = (sol.affine.get(i - start).copied().flatten(), inverse(&rr)) {
                if cond_log10(&rr) < super::mre::COND_LOG_MAX {
                    q_sharp[i] = Some(sharp(&b) * rinv);
                }
            }
        }
    }

    // A# x = -d/dr (R# x) + B# R^{-1} x, central differences with zero ends.
    let apply_sharp = |x: &[Complex64]| -> Option<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * n];
        let rx: Vec<[Complex64; 2]> = (0..n).map(|i| mul(&r_sharp[i], block(x, n, i))).collect();
        for i in 0..n {
            let xi = block(x, n, i);
            let zero = [Complex64::new(0.0, 0.0); 2];
            let left = if i > 0 { rx[i - 1] } else { zero };
            let right = if i + 1 < n { rx[i + 1] } else { zero };
            let mut v = [(left[0] - right[0]) / (2.0 * h), (left[1] - right[1]) / (2.0 * h)];
            if xi[0].norm() > 0.0 || xi[1].norm() > 0.0 {
                let q = mul(&q_sharp[i]?, xi);
                v[0] += q[0];
                v[1] += q[1];
            }
            out[i] = v[0];
            out[n + i] = v[1];
        }
        Some(out)
    };

    let mut per_function = Vec::new();
    let mut skipped = 0;
    let mut lhs_scale = 0.0f64;
    for phi in test_functions(grid, scale) {
        let h0phi: Vec<Complex64> = h0.apply(&phi).iter().zip(&phi).map(|(a, b)| a - e * b).collect();
        let (Some(lhs), Some(aphi)) = (apply_sharp(&h0phi), apply_sharp(&phi)) else {
            skipped += 1;
            continue;
        };
        let rhs: Vec<Complex64> = h1.apply(&aphi).iter().zip(&aphi).map(|(a, b)| a - e * b).collect();
        let d: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        lhs_scale = lhs_scale.max(max_abs(&lhs));
        per_function.push(max_abs(&d));
    }
    if per_function.is_empty() {
        return Err(Error::Domain("no test function fits inside the valid B interval".into()));
    }
    let raw = per_function.iter().copied().fold(0.0, f64::max);
    let normalized = if lhs_scale > 0.0 { raw / lhs_scale } else { f64::INFINITY };
    Ok(DefectReport {
        raw,
        normalized,
        per_function,
        skipped,
        truncated_at: sol.truncated_at,
        suspicious: normalized < 10.0 * 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::mat2::identity;
    use crate::profile::AlphaProfile;

    fn witness() -> AlphaPair {
        AlphaPair::new(AlphaProfile::constant(1.0), AlphaProfile::polynomial(vec![1.0, 0.0, 0.5]), 1, 2, 0.0).unwrap()
    }

    #[test]
    fn corrupted_block_detected() {
        let pair = AlphaPair::new(AlphaProfile::constant(1.0), AlphaProfile::constant(1.0), 1, 2, -2.0).unwrap();
        let init = InitialData::Explicit {
            top: identity(),
            bottom: identity() * c(0.5),
        };
        let mut sol = mre_linear_solve(LinearSystem::U, &pair, init, MreOptions::new(0.1, 1e-3)).unwrap();
        assert!(eigenfunction_equivalence(&sol) < 1e-4);
        let mid = sol.r.len() / 2;
        sol.bottom[mid] = C2::zeros();
        assert!(eigenfunction_equivalence(&sol) > 0.1);
    }

    #[test]
    fn defect_linear_and_phase_invariant() {
        let grid = build_grid(200).unwrap();
        let pair = witness();
        let a = intertwining_defect(&pair, &GaugeChoice::default(), &grid, 1.0).unwrap();
        let b = intertwining_defect(&pair, &GaugeChoice::default(), &grid, 10.0).unwrap();
        assert!((b.raw / a.raw - 10.0).abs() < 1e-9);
        let g = intertwining_defect(&pair, &GaugeChoice::new(0.7), &grid, 1.0).unwrap();
        assert!((g.raw - a.raw).abs() <= 1e-10 * a.raw);
        assert!(a.normalized > 1e-3, "{a:?}");
    }
}
