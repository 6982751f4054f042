//! Continuation of eigenvalue branches in a scaling parameter `C` and
//! bisection of real/complex transitions (exceptional points).
//!
//! Matching between consecutive parameter values uses a linear predictor
//! built from the last two accepted points and a greedy global
//! nearest-neighbour assignment against the full spectrum. A step is refined
//! (halved, at most [`MAX_REFINEMENTS`] times) when some branch moved by more
//! than a quarter of its local gap, unless the branch sits at a coalescence:
//! the runner-up candidate lies within twice the match distance of either
//! the assigned candidate or the prediction.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{build_grid, RadialGrid};
use crate::operator::assemble;
use crate::profile::AlphaProfile;
use crate::spectral::{classify_pairs, eigen_matrix, PairTag, Spectrum};

pub const MAX_REFINEMENTS: usize = 6;

/// Fraction of the local branch gap a match may move without refinement.
pub const GAP_FRACTION: f64 = 0.25;

/// A parameter-dependent real square matrix.
pub trait MatrixFamily: Sync {
    fn dim(&self) -> usize;
    fn matrix(&self, c: f64) -> Result<Mat<f64>>;
}

/// `C -> H_l[C alpha*]` on a fixed grid.
#[derive(Debug, Clone)]
pub struct DynamoFamily {
    grid: RadialGrid,
    base: AlphaProfile,
    l: u32,
}

impl DynamoFamily {
    pub fn new(grid: RadialGrid, base: AlphaProfile, l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("l must be at least 1".into()));
        }
        Ok(Self { grid, base, l })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn base(&self) -> &AlphaProfile {
        &self.base
    }

    pub fn l(&self) -> u32 {
        self.l
    }
}

impl MatrixFamily for DynamoFamily {
    fn dim(&self) -> usize {
        2 * self.grid.n()
    }

    fn matrix(&self, c: f64) -> Result<Mat<f64>> {
        Ok(assemble(&self.grid, &self.base.scaled(c), self.l)?.into_matrix())
    }
}

/// Family given by a closure producing a small dense matrix.
pub struct FnFamily<F> {
    dim: usize,
    f: F,
}

impl<F> FnFamily<F>
where
    F: Fn(f64) -> Vec<Vec<f64>> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> MatrixFamily for FnFamily<F>
where
    F: Fn(f64) -> Vec<Vec<f64>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn matrix(&self, c: f64) -> Result<Mat<f64>> {
        let rows = (self.f)(c);
        if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
            return Err(Error::Shape {
                expected: self.dim,
                got: rows.len(),
            });
        }
        Ok(Mat::from_fn(self.dim, self.dim, |i, j| rows[i][j]))
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: AlphaProfile,
    pub c_min: f64,
    pub c_max: f64,
    pub steps: usize,
    pub l: u32,
    pub n: usize,
    pub track_count: usize,
    /// Band `|Im| <= pair_tol` counted as real; `None` uses the eigensolver default.
    pub pair_tol: Option<f64>,
}

/// Parameters of a sweep independent of the matrix family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub c_min: f64,
    pub c_max: f64,
    pub steps: usize,
    pub track_count: usize,
    pub pair_tol: Option<f64>,
}

impl SweepRange {
    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.c_min < self.c_max) || !self.c_min.is_finite() || !self.c_max.is_finite() {
            return Err(Error::Config(format!(
                "need finite C_min < C_max, got [{}, {}]",
                self.c_min, self.c_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::Config(format!("steps must be at least 2, got {}", self.steps)));
        }
        if self.track_count == 0 || self.track_count > dim {
            return Err(Error::Config(format!(
                "track_count must lie in 1..={dim}, got {}",
                self.track_count
            )));
        }
        if let Some(t) = self.pair_tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("pair_tol must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn c_values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.c_max
                } else {
                    self.c_min + (self.c_max - self.c_min) * k as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    RealToComplex,
    ComplexToReal,
    Crossing,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::RealToComplex => "RealToComplex",
            EventKind::ComplexToReal => "ComplexToReal",
            EventKind::Crossing => "Crossing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchEvent {
    pub c_lo: f64,
    pub c_hi: f64,
    pub branch: usize,
    /// Other tracked branch involved, if any.
    pub partner: Option<usize>,
    pub kind: EventKind,
}

#[derive(Debug, Clone)]
pub struct BranchTrace {
    pub c_values: Vec<f64>,
    /// Full classified spectrum at every grid value of `C`.
    pub spectra: Vec<Spectrum>,
    /// `paths[b][k]` is branch `b` at `c_values[k]`.
    pub paths: Vec<Vec<Complex64>>,
    pub events: Vec<BranchEvent>,
    /// `step_bounds[k]` bounds `|paths[b][k+1] - paths[b][k]|` for every branch.
    pub step_bounds: Vec<f64>,
    /// Halvings used on each grid interval.
    pub refinements: Vec<usize>,
    pub pair_tol: f64,
}

impl BranchTrace {
    pub fn branch_count(&self) -> usize {
        self.paths.len()
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &BranchEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Values of `C` where `Re` of branch `b` changes sign, linearly interpolated.
    pub fn zero_crossings(&self, b: usize) -> Vec<f64> {
        let path = &self.paths[b];
        let mut out = Vec::new();
        for k in 0..path.len().saturating_sub(1) {
            let (y0, y1) = (path[k].re, path[k + 1].re);
            if y0 == 0.0 {
                out.push(self.c_values[k]);
            } else if y0 * y1 < 0.0 {
                let (c0, c1) = (self.c_values[k], self.c_values[k + 1]);
                out.push(c0 + (c1 - c0) * y0 / (y0 - y1));
            }
        }
        out
    }

    /// First `C` at which the largest tracked real part turns nonnegative.
    pub fn growth_threshold(&self) -> Option<f64> {
        let lead: Vec<f64> = (0..self.c_values.len())
            .map(|k| self.paths.iter().map(|p| p[k].re).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        if lead.first().is_some_and(|&y| y >= 0.0) {
            return Some(self.c_values[0]);
        }
        (0..lead.len().saturating_sub(1)).find(|&k| lead[k] < 0.0 && lead[k + 1] >= 0.0).map(|k| {
            let (c0, c1) = (self.c_values[k], self.c_values[k + 1]);
            c0 + (c1 - c0) * lead[k] / (lead[k] - lead[k + 1])
        })
    }
}

/// Builds the dynamo family from `cfg` and sweeps it.
pub fn sweep(cfg: &SweepConfig) -> Result<BranchTrace> {
    if cfg.l == 0 {
        return Err(Error::Domain("l must be at least 1".into()));
    }
    let grid = build_grid(cfg.n)?;
    let family = DynamoFamily::new(grid, cfg.base.clone(), cfg.l)?;
    sweep_family(
        &family,
        &SweepRange {
            c_min: cfg.c_min,
            c_max: cfg.c_max,
            steps: cfg.steps,
            track_count: cfg.track_count,
            pair_tol: cfg.pair_tol,
        },
    )
}

fn solve(family: &dyn MatrixFamily, c: f64, pair_tol: Option<f64>) -> Result<Spectrum> {
    let m = family.matrix(c)?;
    let spec = eigen_matrix(m.as_ref(), false)?;
    match pair_tol {
        Some(t) => classify_pairs(spec, t),
        None => Ok(spec),
    }
}

fn abs_tol(z: Complex64) -> f64 {
    1e-9 * (1.0 + z.norm())
}

/// Tracked state: last two accepted parameter values and branch values.
struct State {
    c_prev: Option<f64>,
    prev: Vec<Complex64>,
    c_cur: f64,
    cur: Vec<Complex64>,
    cur_spec: Vec<Complex64>,
}

impl State {
    fn predict(&self, c: f64) -> Vec<Complex64> {
        match self.c_prev {
            Some(cp) if cp != self.c_cur => {
                let t = (c - self.c_cur) / (self.c_cur - cp);
                self.cur
                    .iter()
                    .zip(&self.prev)
                    .map(|(a, b)| a + (a - b) * t)
                    .collect()
            }
            _ => self.cur.clone(),
        }
    }
}

/// Greedy global assignment; returns `(assigned values, bound)` or `None`
/// if the step must be refined.
fn try_match(state: &State, c: f64, target: &[Complex64]) -> Option<(Vec<Complex64>, f64)> {
    let pred = state.predict(c);
    let nb = pred.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(nb * target.len());
    for (b, p) in pred.iter().enumerate() {
        for (j, t) in target.iter().enumerate() {
            pairs.push(((p - t).norm(), b, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut assigned = vec![usize::MAX; nb];
    let mut taken = vec![false; target.len()];
    let mut left = nb;
    for &(_, b, j) in &pairs {
        if left == 0 {
            break;
        }
        if assigned[b] == usize::MAX && !taken[j] {
            assigned[b] = j;
            taken[j] = true;
            left -= 1;
        }
    }

    let mut bound = 0.0f64;
    for b in 0..nb {
        let src = state.cur[b];
        let cand = target[assigned[b]];
        let d = (pred[b] - cand).norm();
        let tol = abs_tol(src);
        let gap = state
            .cur_spec
            .iter()
            .map(|z| (z - src).norm())
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let gap = if gap.is_finite() { gap } else { f64::INFINITY };
        // Exact multiplicity at the source counts as zero gap.
        let multiple = state.cur_spec.iter().filter(|z| **z == src).count() > 1;
        let gap = if multiple { 0.0 } else { gap };
        let ok = d <= GAP_FRACTION * gap + tol || {
            let runner = target
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != assigned[b])
                .map(|(_, z)| *z)
                .min_by(|x, y| (pred[b] - x).norm().total_cmp(&(pred[b] - y).norm()));
            match runner {
                Some(r) => (cand - r).norm() <= 2.0 * d + tol || (pred[b] - r).norm() <= 2.0 * d + tol,
                None => true,
            }
        };
        if !ok {
            return None;
        }
        bound = bound.max((pred[b] - src).norm() + d);
    }
    Some((assigned.iter().map(|&j| target[j]).collect(), bound))
}

fn advance(
    family: &dyn MatrixFamily,
    state: &mut State,
    c_target: f64,
    target: &[Complex64],
    depth: usize,
    used: &mut usize,
    bound: &mut f64,
) -> Result<()> {
    if let Some((vals, b)) = try_match(state, c_target, target) {
        state.c_prev = Some(state.c_cur);
        state.prev = std::mem::replace(&mut state.cur, vals);
        state.c_cur = c_target;
        state.cur_spec = target.to_vec();
        *bound += b;
        return Ok(());
    }
    if depth >= MAX_REFINEMENTS {
        return Err(Error::Tracking {
            c_lo: state.c_cur,
            c_hi: c_target,
            refinements: depth,
        });
    }
    *used = (*used).max(depth + 1);
    let c_mid = 0.5 * (state.c_cur + c_target);
    let mid = solve(family, c_mid, None)?.eigenvalues;
    advance(family, state, c_mid, &mid, depth + 1, used, bound)?;
    advance(family, state, c_target, target, depth + 1, used, bound)
}

fn nearest_partner(paths: &[Vec<Complex64>], k: usize, b: usize) -> Option<usize> {
    let z = paths[b][k].conj();
    (0..paths.len())
        .filter(|&o| o != b)
        .min_by(|&x, &y| (paths[x][k] - z).norm().total_cmp(&(paths[y][k] - z).norm()))
}

/// Sweeps an arbitrary family; the `track_count` leading eigenvalues at
/// `C_min` (by real part, then imaginary part) become the branches.
pub fn sweep_family(family: &dyn MatrixFamily, range: &SweepRange) -> Result<BranchTrace> {
    range.validate(family.dim())?;
    let c_values = range.c_values();
    let spectra: Vec<Spectrum> = c_values
        .par_iter()
        .map(|&c| solve(family, c, range.pair_tol))
        .collect::<Result<_>>()?;
    let pair_tol = range
        .pair_tol
        .unwrap_or_else(|| spectra.iter().map(|s| s.pair_tol).fold(0.0, f64::max));
    let spectra: Vec<Spectrum> = match range.pair_tol {
        Some(_) => spectra,
        None => spectra
            .into_iter()
            .map(|s| classify_pairs(s, pair_tol))
            .collect::<Result<_>>()?,
    };

    let nb = range.track_count;
    let first = spectra[0].eigenvalues[..nb].to_vec();
    let mut state = State {
        c_prev: None,
        prev: first.clone(),
        c_cur: c_values[0],
        cur: first.clone(),
        cur_spec: spectra[0].eigenvalues.clone(),
    };
    let mut paths: Vec<Vec<Complex64>> = first.iter().map(|z| vec![*z]).collect();
    let mut step_bounds = Vec::with_capacity(c_values.len() - 1);
    let mut refinements = Vec::with_capacity(c_values.len() - 1);
    for k in 1..c_values.len() {
        let mut used = 0;
        let mut bound = 0.0;
        advance(
            family,
            &mut state,
            c_values[k],
            &spectra[k].eigenvalues,
            0,
            &mut used,
            &mut bound,
        )?;
        for (b, z) in state.cur.iter().enumerate() {
            paths[b].push(*z);
        }
        step_bounds.push(bound + abs_tol(Complex64::new(bound, 0.0)));
        refinements.push(used);
    }

    let mut events = Vec::new();
    for k in 1..c_values.len() {
        let (c_lo, c_hi) = (c_values[k - 1], c_values[k]);
        let complex = |b: usize, kk: usize| paths[b][kk].im.abs() > pair_tol;
        for b in 0..nb {
            let (was, is) = (complex(b, k - 1), complex(b, k));
            if was == is {
                continue;
            }
            let kind = if is {
                EventKind::RealToComplex
            } else {
                EventKind::ComplexToReal
            };
            let at = if is { k } else { k - 1 };
            let partner = nearest_partner(&paths, at, b);
            // One event per pair.
            if let Some(p) = partner {
                if p < b && complex(p, k - 1) == was && complex(p, k) == is {
                    continue;
                }
            }
            events.push(BranchEvent {
                c_lo,
                c_hi,
                branch: b,
                partner,
                kind,
            });
        }
        for a in 0..nb {
            for b in a + 1..nb {
                if complex(a, k - 1) || complex(a, k) || complex(b, k - 1) || complex(b, k) {
                    continue;
                }
                let before = paths[a][k - 1].re - paths[b][k - 1].re;
                let after = paths[a][k].re - paths[b][k].re;
                if before * after < 0.0 {
                    events.push(BranchEvent {
                        c_lo,
                        c_hi,
                        branch: a,
                        partner: Some(b),
                        kind: EventKind::Crossing,
                    });
                }
            }
        }
    }

    Ok(BranchTrace {
        c_values,
        spectra,
        paths,
        events,
        step_bounds,
        refinements,
        pair_tol,
    })
}

/// Result of [`locate_ep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalPoint {
    pub c_star: f64,
    /// Mean of the coalescing pair at `c_star`.
    pub lambda_star: Complex64,
    /// Indicator `|Im| - gap/2` at `c_star`.
    pub indicator: f64,
}

/// Pair nearest to `seed` (or the globally closest pair) and its indicator.
fn indicator(spec: &[Complex64], seed: Option<Complex64>) -> (f64, Complex64) {
    let n = spec.len();
    let partner_of = |a: usize| -> usize {
        let z = spec[a].conj();
        (0..n)
            .filter(|&j| j != a)
            .min_by(|&x, &y| (spec[x] - z).norm().total_cmp(&(spec[y] - z).norm()))
            .expect("at least two eigenvalues")
    };
    let (a, b) = match seed {
        Some(s) => {
            let a = (0..n)
                .min_by(|&x, &y| (spec[x] - s).norm().total_cmp(&(spec[y] - s).norm()))
                .expect("nonempty");
            (a, partner_of(a))
        }
        None => (0..n)
            .map(|a| (a, partner_of(a)))
            .min_by(|x, y| {
                (spec[x.0] - spec[x.1].conj())
                    .norm()
                    .total_cmp(&(spec[y.0] - spec[y.1].conj()).norm())
            })
            .expect("nonempty"),
    };
    let gap = (spec[a].re - spec[b].re).abs();
    let g = spec[a].im.abs() - 0.5 * gap;
    (g, 0.5 * (spec[a] + spec[b]))
}

/// Bisects the sign change of `|Im lambda| - gap/2` on the pair nearest
/// `seed` (updated to the pair mean after every evaluation) down to a
/// bracket of width `tol_c`.
pub fn locate_ep(
    family: &dyn MatrixFamily,
    bracket: (f64, f64),
    tol_c: f64,
    seed: Option<Complex64>,
) -> Result<ExceptionalPoint> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol_c > 0.0) {
        return Err(Error::Config(format!(
            "need C_lo < C_hi and tol_C > 0, got ({lo}, {hi}), {tol_c}"
        )));
    }
    if family.dim() < 2 {
        return Err(Error::Config("family must have dimension at least 2".into()));
    }
    let eval = |c: f64, s: Option<Complex64>| -> Result<(f64, Complex64)> {
        Ok(indicator(&solve(family, c, None)?.eigenvalues, s))
    };
    let (g_lo, m_lo) = eval(lo, seed)?;
    let (g_hi, m_hi) = eval(hi, seed.or(Some(m_lo)))?;
    if g_lo == 0.0 {
        return Ok(ExceptionalPoint {
            c_star: lo,
            lambda_star: m_lo,
            indicator: 0.0,
        });
    }
    if g_hi == 0.0 {
        return Ok(ExceptionalPoint {
            c_star: hi,
            lambda_star: m_hi,
            indicator: 0.0,
        });
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket { c_lo: lo, c_hi: hi });
    }
    let lo_sign = g_lo.signum();
    let mut s = seed.or(Some(m_lo));
    while hi - lo > tol_c {
        let mid = 0.5 * (lo + hi);
        let (g, m) = eval(mid, s)?;
        s = Some(m);
        if g == 0.0 {
            return Ok(ExceptionalPoint {
                c_star: mid,
                lambda_star: m,
                indicator: 0.0,
            });
        }
        if g.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c_star = 0.5 * (lo + hi);
    let (g, m) = eval(c_star, s)?;
    Ok(ExceptionalPoint {
        c_star,
        lambda_star: m,
        indicator: g,
    })
}

/// Whether a classified spectrum holds a conjugate pair near `z`.
pub fn has_pair_near(spec: &Spectrum, z: Complex64, radius: f64) -> bool {
    spec.eigenvalues
        .iter()
        .zip(&spec.classification)
        .any(|(l, t)| matches!(t, PairTag::ConjugatePair(_)) && (l - z).norm() <= radius)
}
