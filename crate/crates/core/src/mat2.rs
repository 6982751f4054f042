//! 2x2 complex matrix helpers: the `#` involution, nilpotent generators,
//! and guarded closed-form inversion.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C2 = Matrix2<Complex64>;

/// Relative determinant floor for [`inverse`].
pub const DET_GUARD: f64 = 1e-14;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn real2(m11: f64, m12: f64, m21: f64, m22: f64) -> C2 {
    C2::new(c(m11), c(m12), c(m21), c(m22))
}

pub fn identity() -> C2 {
    C2::identity()
}

/// `sigma_+ = [[0, 1], [0, 0]]`.
pub fn sigma_plus() -> C2 {
    real2(0.0, 1.0, 0.0, 0.0)
}

/// `sigma_- = [[0, 0], [1, 0]]`.
pub fn sigma_minus() -> C2 {
    real2(0.0, 0.0, 1.0, 0.0)
}

/// `C# = J C^† J` with the block-swap metric `J = [[0, 1], [1, 0]]`.
pub fn sharp(m: &C2) -> C2 {
    C2::new(
        m[(1, 1)].conj(),
        m[(0, 1)].conj(),
        m[(1, 0)].conj(),
        m[(0, 0)].conj(),
    )
}

/// Adjugate inverse; fails when `|det|` is below [`DET_GUARD`] times the
/// squared max-norm.
pub fn inverse(m: &C2) -> Result<C2> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let scale = norm_max(m);
    if !(det.norm() > DET_GUARD * scale * scale) {
        return Err(Error::Domain(format!(
            "2x2 block numerically singular (|det| = {:e})",
            det.norm()
        )));
    }
    Ok(C2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

pub fn det(m: &C2) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn norm_max(m: &C2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `log10` of the 2-norm condition number; `inf` for singular blocks.
pub fn cond_log10(m: &C2) -> f64 {
    let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let d = det(m).norm();
    if d == 0.0 {
        return f64::INFINITY;
    }
    // sigma_max/sigma_min from the Frobenius norm and |det| = s1 s2.
    let disc = (fro2 * fro2 - 4.0 * d * d).max(0.0).sqrt();
    let s1sq = 0.5 * (fro2 + disc);
    let s2sq = (d * d / s1sq).max(f64::MIN_POSITIVE);
    0.5 * (s1sq / s2sq).log10()
}
