//! Linearized matrix Riccati equations.
//!
//! ```text
//!     U-system:  V' =  M0 W,    W' =  K0^{-1} V,    U = V W^{-1},  U' = M0 - U K0^{-1} U
//!     B-system:  X' = -M1 Y,    Y' = -K1^{-1} X,    B = X Y^{-1},  B' = -M1 + B K1^{-1} B
//! ```
//!
//! Integrated with fixed-step RK4 on a uniform grid ending at `r = 1`.

use crate::error::{Error, Result};
use crate::mat2::{c, cond_log10, identity, inverse, norm_max, sigma_minus, C2};

use super::{k_inverse, m_matrix, AlphaPair};

/// Affine coordinates are formed only where `log10 cond < COND_LOG_MAX`.
pub const COND_LOG_MAX: f64 = 12.0;

/// Smallest admissible starting radius.
pub const R_START_MIN: f64 = 1e-3;

/// Highest series order used for the small-`r` initial data.
pub const SERIES_ORDER_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSystem {
    U,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `(V, W)` or `(X, Y)` at `r_start`.
    Explicit { top: C2, bottom: C2 },
    /// Singular Frobenius solution `Y ~ r^{-l1} (I + ...)`; B-system only.
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MreOptions {
    pub r_start: f64,
    /// May lie below `r_start`.
    pub r_end: f64,
    /// Upper bound on the RK4 step; the actual step divides `r_end - r_start` evenly.
    pub max_step: f64,
    /// Store every `record_every`-th node (1 keeps all).
    pub record_every: usize,
}

impl MreOptions {
    pub fn new(r_start: f64, max_step: f64) -> Self {
        Self {
            r_start,
            r_end: 1.0,
            max_step,
            record_every: 1,
        }
    }

    pub fn until(self, r_end: f64) -> Self {
        Self { r_end, ..self }
    }

    pub fn recording_every(self, record_every: usize) -> Self {
        Self { record_every, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixODESolution {
    pub system: LinearSystem,
    pub r: Vec<f64>,
    /// `V` or `X`.
    pub top: Vec<C2>,
    /// `W` or `Y`.
    pub bottom: Vec<C2>,
    /// `U` or `B` where the bottom block is well conditioned.
    pub affine: Vec<Option<C2>>,
    pub cond_log: Vec<f64>,
    /// Signed spacing between stored nodes.
    pub spacing: f64,
    /// Last radius before the first ill-conditioned node, if any.
    pub truncated_at: Option<f64>,
    pub pair: AlphaPair,
}

fn rhs(system: LinearSystem, pair: &AlphaPair, r: f64, top: &C2, bottom: &C2) -> (C2, C2) {
    match system {
        LinearSystem::U => {
            let a = pair.alpha0.value(r);
            (m_matrix(a, pair.l0, pair.energy, r) * bottom, k_inverse(a) * top)
        }
        LinearSystem::B => {
            let a = pair.alpha1.value(r);
            (-(m_matrix(a, pair.l1, pair.energy, r) * bottom), -(k_inverse(a) * top))
        }
    }
}

/// Right-hand side of the matrix Riccati equation at `(r, A)`.
pub fn riccati_rhs(system: LinearSystem, pair: &AlphaPair, r: f64, a: &C2) -> C2 {
    match system {
        LinearSystem::U => {
            let al = pair.alpha0.value(r);
            m_matrix(al, pair.l0, pair.energy, r) - a * k_inverse(al) * a
        }
        LinearSystem::B => {
            let al = pair.alpha1.value(r);
            -m_matrix(al, pair.l1, pair.energy, r) + a * k_inverse(al) * a
        }
    }
}

/// Frobenius coefficients `s_0 = I, s_1, ..` of `Y = r^{-l} sum s_k r^k` for
/// `Y'' = alpha' sigma_- Y' + (l(l+1)/r^2 + P) Y`, where
/// `P = [[E, -alpha], [E alpha, E - alpha^2]]`.
pub fn series_coefficients(alpha: &crate::profile::AlphaProfile, l: u32, energy: f64) -> Vec<C2> {
    let order = SERIES_ORDER_MAX.min(2 * l as usize);
    let t = alpha.taylor_at_zero(order + 1);
    let d: Vec<f64> = (0..=order).map(|m| (m + 1) as f64 * t[m + 1]).collect();
    let tt = |m: usize| -> f64 { (0..=m).map(|i| t[i] * t[m - i]).sum() };
    let p = |m: usize| -> C2 {
        let e = if m == 0 { energy } else { 0.0 };
        C2::new(c(e), c(-t[m]), c(energy * t[m]), c(e - tt(m)))
    };
    let lf = l as f64;
    let mut s: Vec<C2> = vec![identity()];
    for k in 1..=order {
        let mut acc = C2::zeros();
        for m in 0..k {
            let j = k - 1 - m;
            acc += sigma_minus() * s[j] * c(d[m] * (j as f64 - lf));
        }
        for m in 0..k.saturating_sub(1) {
            acc += p(m) * s[k - 2 - m];
        }
        let kf = k as f64;
        s.push(acc / c(kf * (kf - 2.0 * lf - 1.0)));
    }
    s
}

/// `(Y, Y')` from the series at `r`.
pub fn series_values(coeffs: &[C2], l: u32, r: f64) -> (C2, C2) {
    let lf = l as f64;
    let mut y = C2::zeros();
    let mut dy = C2::zeros();
    for (k, s) in coeffs.iter().enumerate() {
        let e = k as f64 - lf;
        y += s * c(r.powf(e));
        dy += s * c(e * r.powf(e - 1.0));
    }
    (y, dy)
}

fn rk4(system: LinearSystem, pair: &AlphaPair, r: f64, h: f64, top: &C2, bottom: &C2) -> (C2, C2) {
    let f = |r: f64, t: &C2, b: &C2| rhs(system, pair, r, t, b);
    let hh = c(h);
    let half = c(0.5 * h);
    let (k1t, k1b) = f(r, top, bottom);
    let (k2t, k2b) = f(r + 0.5 * h, &(top + k1t * half), &(bottom + k1b * half));
    let (k3t, k3b) = f(r + 0.5 * h, &(top + k2t * half), &(bottom + k2b * half));
    let (k4t, k4b) = f(r + h, &(top + k3t * hh), &(bottom + k3b * hh));
    let sixth = c(h / 6.0);
    (
        top + (k1t + k2t * c(2.0) + k3t * c(2.0) + k4t) * sixth,
        bottom + (k1b + k2b * c(2.0) + k3b * c(2.0) + k4b) * sixth,
    )
}

fn affine_of(top: &C2, bottom: &C2) -> (Option<C2>, f64) {
    let cl = cond_log10(bottom);
    if cl < COND_LOG_MAX {
        (inverse(bottom).ok().map(|inv| top * inv), cl)
    } else {
        (None, cl)
    }
}

/// Integrates one of the linear systems from `r_start` to `r_end`.
pub fn mre_linear_solve(
    system: LinearSystem,
    pair: &AlphaPair,
    init: InitialData,
    opts: MreOptions,
) -> Result<MatrixODESolution> {
    let MreOptions {
        r_start,
        r_end,
        max_step,
        record_every,
    } = opts;
    let inside = |r: f64| (R_START_MIN..=1.0).contains(&r);
    if !(inside(r_start) && inside(r_end) && r_start != r_end) {
        return Err(Error::Config(format!(
            "need distinct r_start, r_end in [{R_START_MIN}, 1], got [{r_start}, {r_end}]"
        )));
    }
    if !(max_step > 0.0) || record_every == 0 {
        return Err(Error::Config("step must be positive and record_every at least 1".into()));
    }
    let (mut top, mut bottom) = match (init, system) {
        (InitialData::Explicit { top, bottom }, _) => (top, bottom),
        (InitialData::Series, LinearSystem::B) => {
            let coeffs = series_coefficients(&pair.alpha1, pair.l1, pair.energy);
            let (y, dy) = series_values(&coeffs, pair.l1, r_start);
            // X = -K1 Y'
            let k1 = super::k_matrix(pair.alpha1.value(r_start));
            (-(k1 * dy), y)
        }
        (InitialData::Series, LinearSystem::U) => {
            return Err(Error::Config("series initial data is defined for the B-system only".into()));
        }
    };
    // Negative span integrates inward.
    let span = r_end - r_start;
    // Relative slack keeps exact multiples of max_step from gaining a step.
    let steps = ((span.abs() / max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let steps = steps.div_ceil(record_every) * record_every;
    let h = span / steps as f64;

    let cap = steps / record_every + 1;
    let mut sol = MatrixODESolution {
        system,
        r: Vec::with_capacity(cap),
        top: Vec::with_capacity(cap),
        bottom: Vec::with_capacity(cap),
        affine: Vec::with_capacity(cap),
        cond_log: Vec::with_capacity(cap),
        spacing: h * record_every as f64,
        truncated_at: None,
        pair: pair.clone(),
    };
    let push = |sol: &mut MatrixODESolution, r: f64, t: C2, b: C2| {
        let (a, cl) = affine_of(&t, &b);
        if a.is_none() && sol.truncated_at.is_none() {
            sol.truncated_at = Some(sol.r.last().copied().unwrap_or(r));
        }
        sol.r.push(r);
        sol.top.push(t);
        sol.bottom.push(b);
        sol.affine.push(a);
        sol.cond_log.push(cl);
    };
    push(&mut sol, r_start, top, bottom);
    for i in 0..steps {
        let r = r_start + i as f64 * h;
        let (t, b) = rk4(system, pair, r, h, &top, &bottom);
        top = t;
        bottom = b;
        if !(norm_max(&top).is_finite() && norm_max(&bottom).is_finite()) {
            return Err(Error::Domain(format!("linear system overflowed near r = {r}")));
        }
        if (i + 1) % record_every == 0 {
            let rr = if i + 1 == steps { r_end } else { r_start + (i + 1) as f64 * h };
            push(&mut sol, rr, top, bottom);
        }
    }
    Ok(sol)
}

impl MatrixODESolution {
    /// Per-node residual of the matrix Riccati equation: five-point
    /// derivative of the affine coordinate against its right-hand side,
    /// divided by `1 + |rhs|`. Nodes without four valid neighbours are skipped.
    pub fn riccati_residuals(&self) -> Vec<(f64, f64)> {
        let n = self.r.len();
        let h = self.spacing;
        let mut out = Vec::new();
        for i in 2..n.saturating_sub(2) {
            let w: Option<Vec<C2>> = (i - 2..=i + 2).map(|k| self.affine[k]).collect();
            let Some(w) = w else { continue };
            let fd = (w[0] - w[1] * c(8.0) + w[3] * c(8.0) - w[4]) / c(12.0 * h);
            let rhs = riccati_rhs(self.system, &self.pair, self.r[i], &w[2]);
            out.push((self.r[i], norm_max(&(fd - rhs)) / (1.0 + norm_max(&rhs))));
        }
        out
    }

    pub fn max_riccati_residual(&self) -> f64 {
        self.riccati_residuals().iter().map(|x| x.1).fold(0.0, f64::max)
    }

    /// Residual of the linear system itself: five-point derivative of
    /// the stacked blocks against the right-hand side.
    pub fn linear_residual(&self) -> f64 {
        let n = self.r.len();
        let h = self.spacing;
        let mut worst = 0.0f64;
        for i in 2..n.saturating_sub(2) {
            let d = |v: &[C2]| (v[i - 2] - v[i - 1] * c(8.0) + v[i + 1] * c(8.0) - v[i + 2]) / c(12.0 * h);
            let (rt, rb) = rhs(self.system, &self.pair, self.r[i], &self.top[i], &self.bottom[i]);
            let scale = 1.0 + norm_max(&rt).max(norm_max(&rb));
            worst = worst.max(norm_max(&(d(&self.top) - rt)).max(norm_max(&(d(&self.bottom) - rb))) / scale);
        }
        worst
    }

    /// Index of the stored node closest to `r`.
    pub fn index_near(&self, r: f64) -> usize {
        self.r
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - r).abs().total_cmp(&(b.1 - r).abs()))
            .map(|(i, _)| i)
            .expect("nonempty trajectory")
    }
}
