//! First-order matrix intertwining between two dynamo operators
//! `H_{l0}[alpha0]` and `H_{l1}[alpha1]`, and the quantities showing that
//! it cannot exist.
//!
//! Conventions (flat-measure `u = r psi`, `p = -i d/dr`):
//!
//! ```text
//!     H_l[alpha] - E = d/dr K d/dr - M
//!     K = I - alpha sigma_-        K^{-1} = I + alpha sigma_-
//!     M = K l(l+1)/r^2 + E I - alpha sigma_+
//! ```

pub mod asymptotic;
pub mod certificate;
pub mod defect;
pub mod mre;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{c, identity, sigma_minus, sigma_plus, C2};
use crate::profile::AlphaProfile;

pub use asymptotic::{asymptotic_l_increment, fit_asymptotic_mismatch, AsymptoticRecord, MismatchFit};
pub use certificate::{default_family, nogo_certificate, CertificateOptions, NoGoReport};
pub use defect::{eigenfunction_equivalence, intertwining_defect, product_invariant_diagnostic, DefectReport};
pub use mre::{mre_linear_solve, InitialData, LinearSystem, MatrixODESolution, MreOptions};

/// Default floor on `|q|` below which the closed form for `b1` is refused.
pub const Q_FLOOR: f64 = 1e-10;

/// Sample count for positivity and proportionality checks on `[0, 1]`.
pub const CHECK_SAMPLES: usize = 1001;

#[derive(Debug, Clone)]
pub struct AlphaPair {
    pub alpha0: AlphaProfile,
    pub alpha1: AlphaProfile,
    pub l0: u32,
    pub l1: u32,
    pub energy: f64,
}

impl AlphaPair {
    /// Checks positivity of both profiles and `l0, l1 >= 1`.
    pub fn new(alpha0: AlphaProfile, alpha1: AlphaProfile, l0: u32, l1: u32, energy: f64) -> Result<Self> {
        if l0 == 0 || l1 == 0 {
            return Err(Error::Domain(format!("l0 and l1 must be at least 1, got ({l0}, {l1})")));
        }
        if !energy.is_finite() {
            return Err(Error::Domain("energy must be finite".into()));
        }
        alpha0.check_positive()?;
        alpha1.check_positive()?;
        Ok(Self {
            alpha0,
            alpha1,
            l0,
            l1,
            energy,
        })
    }

    pub fn with_l1(&self, l1: u32) -> Self {
        Self { l1, ..self.clone() }
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self { energy, ..self.clone() }
    }
}

type EpsFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Residual gauge freedom of `R`: constant phase `gamma` and `epsilon(r)`.
#[derive(Clone, Default)]
pub struct GaugeChoice {
    pub gamma: f64,
    /// `r -> (epsilon, epsilon')`; `None` is `epsilon = 0`.
    pub epsilon: Option<EpsFn>,
}

impl fmt::Debug for GaugeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeChoice")
            .field("gamma", &self.gamma)
            .field("epsilon", &self.epsilon.as_ref().map(|_| "fn"))
            .finish()
    }
}

impl GaugeChoice {
    pub fn new(gamma: f64) -> Self {
        Self { gamma, epsilon: None }
    }

    pub fn with_epsilon(mut self, eps: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        self.epsilon = Some(Arc::new(eps));
        self
    }

    pub fn epsilon(&self, r: f64) -> (f64, f64) {
        self.epsilon.as_ref().map_or((0.0, 0.0), |e| e(r))
    }
}

fn positive_at(p: &AlphaProfile, r: f64, name: &str) -> Result<f64> {
    let v = p.value(r);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name}({r}) = {v} is not positive")))
    }
}

/// `R = e^{i gamma} [[sqrt(a1/a0), 0], [-sqrt(a0 a1)(1 + i tan eps)/2, sqrt(a0/a1)]]`.
pub fn build_r(pair: &AlphaPair, gauge: &GaugeChoice, r: f64) -> Result<C2> {
    let a0 = positive_at(&pair.alpha0, r, "alpha0")?;
    let a1 = positive_at(&pair.alpha1, r, "alpha1")?;
    let (eps, _) = gauge.epsilon(r);
    if !(eps.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!("|epsilon({r})| = {} must stay below pi/2", eps.abs())));
    }
    let phase = Complex64::from_polar(1.0, gauge.gamma);
    let low = Complex64::new(1.0, eps.tan()) * (-0.5 * (a0 * a1).sqrt());
    Ok(C2::new(c((a1 / a0).sqrt()), c(0.0), low, c((a0 / a1).sqrt())) * phase)
}

pub fn k_matrix(alpha: f64) -> C2 {
    identity() - sigma_minus() * c(alpha)
}

pub fn k_inverse(alpha: f64) -> C2 {
    identity() + sigma_minus() * c(alpha)
}

pub fn m_matrix(alpha: f64, l: u32, energy: f64, r: f64) -> C2 {
    let cent = (l * (l + 1)) as f64 / (r * r);
    k_matrix(alpha) * c(cent) + identity() * c(energy) - sigma_plus() * c(alpha)
}

/// Pointwise structure functions of a pair in a fixed gauge.
#[derive(Debug, Clone)]
pub struct StructureFunctions {
    pub pair: AlphaPair,
    pub gauge: GaugeChoice,
    pub q_floor: f64,
}

/// Values of the `alpha` profiles and their first two derivatives at one radius.
#[derive(Debug, Clone, Copy)]
struct Jet {
    a0: f64,
    d0: f64,
    s0: f64,
    a1: f64,
    d1: f64,
    s1: f64,
}

impl StructureFunctions {
    pub fn new(pair: &AlphaPair, gauge: &GaugeChoice) -> Self {
        Self {
            pair: pair.clone(),
            gauge: gauge.clone(),
            q_floor: Q_FLOOR,
        }
    }

    fn jet(&self, r: f64) -> Jet {
        let (a0, d0, s0) = self.pair.alpha0.eval_all(r);
        let (a1, d1, s1) = self.pair.alpha1.eval_all(r);
        Jet {
            a0,
            d0,
            s0,
            a1,
            d1,
            s1,
        }
    }

    /// `q = (alpha0'/alpha0 - alpha1'/alpha1) / 2`.
    pub fn q(&self, r: f64) -> f64 {
        let j = self.jet(r);
        0.5 * (j.d0 / j.a0 - j.d1 / j.a1)
    }

    pub fn q_prime(&self, r: f64) -> f64 {
        let j = self.jet(r);
        let (l0, l1) = (j.d0 / j.a0, j.d1 / j.a1);
        0.5 * (j.s0 / j.a0 - l0 * l0 - j.s1 / j.a1 + l1 * l1)
    }

    /// `f = -(alpha1/2) [alpha0'/alpha0 (1 + i tan eps) + i eps'/cos^2 eps]`.
    pub fn f(&self, r: f64) -> Complex64 {
        let j = self.jet(r);
        let (eps, deps) = self.gauge.epsilon(r);
        let cos2 = eps.cos().powi(2);
        let re = j.d0 / j.a0;
        let im = re * eps.tan() + deps / cos2;
        Complex64::new(re, im) * (-0.5 * j.a1)
    }

    /// `N = R^{-1} R' = [[-q, 0], [f, q]]` (`gamma` constant).
    pub fn n_matrix(&self, r: f64) -> C2 {
        let q = self.q(r);
        C2::new(c(-q), c(0.0), self.f(r), c(q))
    }

    pub fn k0(&self, r: f64) -> C2 {
        k_matrix(self.pair.alpha0.value(r))
    }

    pub fn k1(&self, r: f64) -> C2 {
        k_matrix(self.pair.alpha1.value(r))
    }

    pub fn k0_inv(&self, r: f64) -> C2 {
        k_inverse(self.pair.alpha0.value(r))
    }

    pub fn k1_inv(&self, r: f64) -> C2 {
        k_inverse(self.pair.alpha1.value(r))
    }

    pub fn m0(&self, r: f64) -> C2 {
        m_matrix(self.pair.alpha0.value(r), self.pair.l0, self.pair.energy, r)
    }

    pub fn m1(&self, r: f64) -> C2 {
        m_matrix(self.pair.alpha1.value(r), self.pair.l1, self.pair.energy, r)
    }

    /// `b2 = 2q / alpha1`.
    pub fn b2(&self, r: f64) -> f64 {
        2.0 * self.q(r) / self.pair.alpha1.value(r)
    }

    /// `b4 = -(alpha0'/alpha0 tan eps + eps'/cos^2 eps) / 2 = Im f / alpha1`.
    pub fn b4(&self, r: f64) -> f64 {
        let j = self.jet(r);
        let (eps, deps) = self.gauge.epsilon(r);
        -0.5 * (j.d0 / j.a0 * eps.tan() + deps / eps.cos().powi(2))
    }

    fn checked_q(&self, r: f64) -> Result<f64> {
        let q = self.q(r);
        if q.abs() < self.q_floor || !q.is_finite() {
            Err(Error::DegenerateQ { r, q })
        } else {
            Ok(q)
        }
    }

    /// `b1 = -(4q^2 + alpha0^2 + alpha1^2) / (8q)`.
    pub fn b1(&self, r: f64) -> Result<f64> {
        let q = self.checked_q(r)?;
        let j = self.jet(r);
        Ok(-(4.0 * q * q + j.a0 * j.a0 + j.a1 * j.a1) / (8.0 * q))
    }

    /// Analytic derivative of [`Self::b1`].
    pub fn b1_prime(&self, r: f64) -> Result<f64> {
        let q = self.checked_q(r)?;
        let qp = self.q_prime(r);
        let j = self.jet(r);
        let s = 4.0 * q * q + j.a0 * j.a0 + j.a1 * j.a1;
        let sp = 8.0 * q * qp + 2.0 * j.a0 * j.d0 + 2.0 * j.a1 * j.d1;
        Ok(-(sp * q - s * qp) / (8.0 * q * q))
    }

    /// `2 b1 b2 + alpha1 (1 + b2^2) - (-2 b1 b2 - alpha0^2/alpha1)` at the closed-form `b1`.
    pub fn b1_consistency(&self, r: f64) -> Result<f64> {
        let b1 = self.b1(r)?;
        let b2 = self.b2(r);
        let j = self.jet(r);
        Ok(2.0 * b1 * b2 + j.a1 * (1.0 + b2 * b2) + 2.0 * b1 * b2 + j.a0 * j.a0 / j.a1)
    }

    /// `rho = 2 b1' - [-2 l1/r^2 + 2q (b1 - alpha1'/alpha1) + alpha0^2/2 + q' - q^2]`.
    pub fn rho(&self, r: f64) -> Result<f64> {
        let b1 = self.b1(r)?;
        let b1p = self.b1_prime(r)?;
        let q = self.q(r);
        let j = self.jet(r);
        let l1 = self.pair.l1 as f64;
        let bracket = -2.0 * l1 / (r * r) + 2.0 * q * (b1 - j.d1 / j.a1) + 0.5 * j.a0 * j.a0 + self.q_prime(r) - q * q;
        Ok(2.0 * b1p - bracket)
    }
}

pub fn structure_functions(pair: &AlphaPair, gauge: &GaugeChoice) -> StructureFunctions {
    StructureFunctions::new(pair, gauge)
}

pub fn b1_closed_form(sf: &StructureFunctions, r: f64) -> Result<(f64, f64)> {
    Ok((sf.b1(r)?, sf.b1_prime(r)?))
}

pub fn ode_residual(pair: &AlphaPair, gauge: &GaugeChoice, r: f64) -> Result<f64> {
    StructureFunctions::new(pair, gauge).rho(r)
}

/// Outcome of the proportional-profile branch `alpha1 = kappa alpha0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateRecord {
    pub kappa: f64,
    /// Minimum of `alpha1 + alpha0^2/alpha1` over `[0, 1]`; the forced value is 0.
    pub forced_min: f64,
    pub forced_min_at: f64,
    /// `forced_min > 0`: the forced identity has no solution.
    pub impossible: bool,
}

/// With `q = 0` the `sigma_+` projections force `alpha1 + alpha0^2/alpha1 = 0`.
pub fn degenerate_case_check(pair: &AlphaPair) -> Result<DegenerateRecord> {
    let rs: Vec<f64> = (0..CHECK_SAMPLES).map(|i| i as f64 / (CHECK_SAMPLES - 1) as f64).collect();
    let kappa = pair.alpha1.value(0.0) / pair.alpha0.value(0.0);
    for &r in &rs {
        let ratio = pair.alpha1.value(r) / pair.alpha0.value(r);
        if (ratio - kappa).abs() > 1e-12 * kappa.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "profiles are not proportional: alpha1/alpha0 = {ratio} at r = {r}, {kappa} at r = 0"
            )));
        }
    }
    let (mut best, mut at) = (f64::INFINITY, 0.0);
    for &r in &rs {
        let (a0, a1) = (pair.alpha0.value(r), pair.alpha1.value(r));
        let v = a1 + a0 * a0 / a1;
        if v < best {
            best = v;
            at = r;
        }
    }
    Ok(DegenerateRecord {
        kappa,
        forced_min: best,
        forced_min_at: at,
        impossible: best > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{inverse, norm_max, sharp};

    fn pair(a0: AlphaProfile, a1: AlphaProfile) -> AlphaPair {
        AlphaPair::new(a0, a1, 1, 2, 0.0).unwrap()
    }

    #[test]
    fn r_examples() {
        let p = pair(AlphaProfile::constant(0.7), AlphaProfile::constant(0.7));
        let r = build_r(&p, &GaugeChoice::default(), 0.3).unwrap();
        assert!(norm_max(&(r - crate::mat2::real2(1.0, 0.0, -0.35, 1.0))) < 1e-15);
        assert!(norm_max(&(r * sharp(&r) - k_matrix(0.7))) < 1e-15);

        let p = pair(AlphaProfile::constant(1.0), AlphaProfile::constant(4.0));
        let r = build_r(&p, &GaugeChoice::default(), 0.9).unwrap();
        assert_eq!(r, crate::mat2::real2(2.0, 0.0, -1.0, 0.5));
    }

    #[test]
    fn nonpositive_alpha_rejected() {
        assert!(AlphaPair::new(AlphaProfile::constant(-1.0), AlphaProfile::constant(1.0), 1, 2, 0.0).is_err());
        let p = AlphaPair {
            alpha0: AlphaProfile::constant(-1.0),
            alpha1: AlphaProfile::constant(1.0),
            l0: 1,
            l1: 2,
            energy: 0.0,
        };
        assert!(matches!(build_r(&p, &GaugeChoice::default(), 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn structure_examples() {
        let sf = StructureFunctions::new(
            &pair(AlphaProfile::constant(1.0), AlphaProfile::exponential(1.0, 1.0)),
            &GaugeChoice::default(),
        );
        for r in [0.0, 0.3, 1.0] {
            assert!((sf.q(r) + 0.5).abs() < 1e-15);
            assert!((sf.b2(r) + (-r as f64).exp()).abs() < 1e-15);
            assert_eq!(sf.b4(r), 0.0);
        }
        assert!((sf.b1(0.0).unwrap() - 0.75).abs() < 1e-15);

        let sf = StructureFunctions::new(
            &pair(AlphaProfile::polynomial(vec![1.0, 0.0, 1.0]), AlphaProfile::constant(1.0)),
            &GaugeChoice::default(),
        );
        assert!((sf.q(0.5) - 0.4).abs() < 1e-15);
        assert!((sf.b2(0.5) - 0.8).abs() < 1e-15);
        assert!((sf.b1(0.5).unwrap() + 1.00078125).abs() < 1e-14);
    }

    #[test]
    fn equal_profiles_degenerate() {
        let a = AlphaProfile::polynomial(vec![1.0, 0.0, 1.0]);
        let sf = StructureFunctions::new(&pair(a.clone(), a), &GaugeChoice::default());
        assert_eq!(sf.q(0.4), 0.0);
        assert_eq!(sf.b2(0.4), 0.0);
        assert!(matches!(sf.b1(0.4), Err(Error::DegenerateQ { .. })));
        assert!(matches!(sf.rho(0.4), Err(Error::DegenerateQ { .. })));
    }

    #[test]
    fn l_shift() {
        let p = pair(AlphaProfile::polynomial(vec![1.0, 0.0, 0.4]), AlphaProfile::polynomial(vec![1.0, 0.0, 0.1]));
        let a = ode_residual(&p, &GaugeChoice::default(), 0.5).unwrap();
        let b = ode_residual(&p.with_l1(3), &GaugeChoice::default(), 0.5).unwrap();
        assert!((b - a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_examples() {
        let d = degenerate_case_check(&pair(AlphaProfile::constant(1.0), AlphaProfile::constant(1.0))).unwrap();
        assert_eq!(d.forced_min, 2.0);
        let d = degenerate_case_check(&pair(AlphaProfile::constant(1.0), AlphaProfile::constant(3.0))).unwrap();
        assert!((d.forced_min - 10.0 / 3.0).abs() < 1e-15 && d.impossible);
        let a = AlphaProfile::polynomial(vec![1.0, 0.0, 1.0]);
        let d = degenerate_case_check(&pair(a.clone(), a)).unwrap();
        assert_eq!((d.forced_min, d.forced_min_at), (2.0, 0.0));
        assert!(degenerate_case_check(&pair(AlphaProfile::constant(1.0), AlphaProfile::exponential(1.0, 1.0))).is_err());
    }

    #[test]
    fn k_inverse_exact() {
        for a in [0.1, 1.0, 3.7, 1e3] {
            assert_eq!(k_matrix(a) * k_inverse(a), identity());
            assert_eq!(inverse(&k_matrix(a)).unwrap(), k_inverse(a));
        }
    }
}
