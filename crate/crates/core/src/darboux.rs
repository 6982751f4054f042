//! Scalar Darboux transformation for `H = -d^2/dx^2 + V` on `(0, 1)` with
//! Dirichlet ends, discretized on the interior nodes of a uniform grid.
//!
//! For a nodeless seed `chi0` with `H0 chi0 = E chi0` the superpotential is
//! `f = -chi0'/chi0`, the partner potential `V1 = V0 + 2 f'`, and
//! `H0 - E = A^+ A`, `H1 - E = A A^+` with `A = d/dx + f`, `A^+ = -d/dx + f`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, TridiagOp};
use crate::spline::CubicSpline;

/// Number of random test vectors in [`factorization_residual`].
pub const FACTORIZATION_PROBES: usize = 16;
const PROBE_SEED: u64 = 0x5eed_da7b;

/// Product-invariant window.
pub const PRODUCT_WINDOW: (f64, f64) = (0.1, 0.9);

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type JetFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

#[derive(Clone)]
pub struct Potential1D {
    eval: ScalarFn,
    pub singular_left: bool,
    pub singular_right: bool,
}

impl fmt::Debug for Potential1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential1D")
            .field("V(0.5)", &self.value(0.5))
            .field("singular_left", &self.singular_left)
            .field("singular_right", &self.singular_right)
            .finish()
    }
}

impl Potential1D {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            singular_left: false,
            singular_right: false,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    /// `k (x - x0)^2`.
    pub fn harmonic(k: f64, x0: f64) -> Self {
        Self::new(move |x| k * (x - x0) * (x - x0))
    }

    pub fn with_singular_ends(mut self, left: bool, right: bool) -> Self {
        self.singular_left = left;
        self.singular_right = right;
        self
    }

    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            eval: Arc::new(move |x| inner(x) + c),
            ..self.clone()
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Values on interior nodes; every value must be finite.
    pub fn sample(&self, grid: &RadialGrid) -> Result<Vec<f64>> {
        grid.nodes()
            .iter()
            .map(|&x| {
                let v = self.value(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!("potential not finite at x = {x}")))
                }
            })
            .collect()
    }
}

/// Discrete `-D^2 + V` with Dirichlet ends.
pub fn hamiltonian(grid: &RadialGrid, v: &Potential1D) -> Result<TridiagOp> {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let diag = v.sample(grid)?.into_iter().map(|vj| 2.0 * inv_h2 + vj).collect();
    Ok(TridiagOp::symmetric(diag, vec![-inv_h2; grid.n() - 1]))
}

/// Lowest `k` levels of the discrete Hamiltonian.
pub fn levels(grid: &RadialGrid, v: &Potential1D, k: usize) -> Result<Vec<f64>> {
    Ok(hamiltonian(grid, v)?.lowest_eigenvalues(k))
}

/// Seed function with first and second derivatives.
#[derive(Clone)]
pub enum Seed {
    Analytic(JetFn),
    /// Natural cubic spline through node samples and the endpoint zeros.
    Spline(CubicSpline),
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seed::Analytic(_) => f.write_str("Seed::Analytic"),
            Seed::Spline(s) => write!(f, "Seed::Spline({} knots)", s.knots().len()),
        }
    }
}

impl Seed {
    pub fn analytic(f: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static) -> Self {
        Seed::Analytic(Arc::new(f))
    }

    /// `sin(k pi x)`.
    pub fn sine(k: u32) -> Self {
        let w = k as f64 * std::f64::consts::PI;
        Self::analytic(move |x| {
            let (s, c) = (w * x).sin_cos();
            (s, w * c, -w * w * s)
        })
    }

    pub fn from_node_samples(grid: &RadialGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Shape {
                expected: grid.n(),
                got: values.len(),
            });
        }
        let mut x = Vec::with_capacity(grid.n() + 2);
        let mut y = Vec::with_capacity(grid.n() + 2);
        x.push(0.0);
        y.push(0.0);
        x.extend_from_slice(grid.nodes());
        y.extend_from_slice(values);
        x.push(1.0);
        y.push(0.0);
        Ok(Seed::Spline(CubicSpline::natural(x, y)?))
    }

    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Seed::Analytic(f) => f(x),
            Seed::Spline(s) => s.eval_all(x),
        }
    }

    /// `(f, f')` with `f = -chi'/chi`.
    pub fn superpotential(&self, x: f64) -> (f64, f64) {
        let (c, d1, d2) = self.eval(x);
        let q = d1 / c;
        (-q, -d2 / c + q * q)
    }
}

#[derive(Debug, Clone)]
pub enum DarbouxMode {
    /// Seed is the discrete ground state of `H0`.
    GroundState,
    GivenSeed { seed: Seed, energy: f64 },
}

#[derive(Debug, Clone)]
pub struct DarbouxPair {
    pub grid: RadialGrid,
    pub v0: Potential1D,
    pub v1: Potential1D,
    pub energy: f64,
    pub seed: Seed,
    /// `f` on interior nodes.
    pub f: Vec<f64>,
    /// Seed samples on interior nodes, positive.
    pub chi0: Vec<f64>,
}

impl DarbouxPair {
    pub fn superpotential(&self, x: f64) -> (f64, f64) {
        self.seed.superpotential(x)
    }

    /// `max |V1 - V0 - 2 f'|` on interior nodes.
    pub fn partner_consistency(&self) -> f64 {
        self.grid
            .nodes()
            .iter()
            .map(|&x| (self.v1.value(x) - self.v0.value(x) - 2.0 * self.superpotential(x).1).abs())
            .fold(0.0, f64::max)
    }

    /// `max |-f' + f^2 - (V0 - E)|` over `points`.
    pub fn riccati_residual(&self, points: &[f64]) -> f64 {
        points
            .iter()
            .map(|&x| {
                let (f, fp) = self.superpotential(x);
                (-fp + f * f - (self.v0.value(x) - self.energy)).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn check_nodeless(grid: &RadialGrid, values: &[f64]) -> Result<Vec<f64>> {
    let sign = values
        .iter()
        .copied()
        .find(|v| *v != 0.0)
        .map(f64::signum)
        .ok_or(Error::SingularSuperpotential { x: grid.nodes()[0] })?;
    for (&x, &v) in grid.nodes().iter().zip(values) {
        if !(v * sign > 0.0) {
            return Err(Error::SingularSuperpotential { x });
        }
    }
    Ok(values.iter().map(|v| v * sign).collect())
}

pub fn darboux_partner(v0: &Potential1D, grid: &RadialGrid, mode: DarbouxMode) -> Result<DarbouxPair> {
    let (seed, energy, chi0) = match mode {
        DarbouxMode::GroundState => {
            let h0 = hamiltonian(grid, v0)?;
            let e = h0.lowest_eigenvalues(1)[0];
            let chi0 = check_nodeless(grid, &h0.eigenvector(e))?;
            (Seed::from_node_samples(grid, &chi0)?, e, chi0)
        }
        DarbouxMode::GivenSeed { seed, energy } => {
            let raw: Vec<f64> = grid.nodes().iter().map(|&x| seed.eval(x).0).collect();
            let chi0 = check_nodeless(grid, &raw)?;
            (seed, energy, chi0)
        }
    };
    let f: Vec<f64> = grid.nodes().iter().map(|&x| seed.superpotential(x).0).collect();
    if let Some(x) = grid
        .nodes()
        .iter()
        .zip(&f)
        .find(|(_, fj)| !fj.is_finite())
        .map(|(x, _)| *x)
    {
        return Err(Error::SingularSuperpotential { x });
    }
    let v0c = v0.eval.clone();
    let seed1 = seed.clone();
    let v1 = Potential1D::new(move |x| v0c(x) + 2.0 * seed1.superpotential(x).1).with_singular_ends(true, true);
    Ok(DarbouxPair {
        grid: grid.clone(),
        v0: v0.clone(),
        v1,
        energy,
        seed,
        f,
        chi0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMatch {
    pub level: usize,
    pub e0: f64,
    pub e1: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsospectralReport {
    pub levels: Vec<LevelMatch>,
    /// Index of the `H0` level removed as the seed level.
    pub deleted_level: Option<usize>,
    /// Every `H1` level differs from `E` by more than `tol |E|`.
    pub seed_level_absent: bool,
    pub passed: bool,
}

/// Compares the first `levels` of `H1` with those of `H0` after removing the
/// level at the factorization energy.
pub fn verify_isospectral(pair: &DarbouxPair, levels: usize, tol: f64) -> Result<IsospectralReport> {
    if levels == 0 || levels > 20 {
        return Err(Error::Config(format!("levels must lie in 1..=20, got {levels}")));
    }
    let grid = &pair.grid;
    let mut e0 = hamiltonian(grid, &pair.v0)?.lowest_eigenvalues(levels + 1);
    let e1 = hamiltonian(grid, &pair.v1)?.lowest_eigenvalues(levels);
    let e = pair.energy;
    let scale = e.abs().max(f64::MIN_POSITIVE);
    let deleted = e0
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs()))
        .filter(|(_, v)| (*v - e).abs() <= tol * scale)
        .map(|(i, _)| i);
    match deleted {
        Some(i) => {
            e0.remove(i);
        }
        None => {
            e0.pop();
        }
    }
    let matches: Vec<LevelMatch> = e0
        .iter()
        .zip(&e1)
        .enumerate()
        .map(|(k, (&a, &b))| {
            let rel_err = (a - b).abs() / a.abs().max(f64::MIN_POSITIVE);
            LevelMatch {
                level: k + 1,
                e0: a,
                e1: b,
                rel_err,
                pass: rel_err <= tol,
            }
        })
        .collect();
    let seed_level_absent = e1.iter().all(|v| (v - e).abs() > tol * scale);
    let passed = matches.iter().all(|m| m.pass) && (deleted.is_none() || seed_level_absent);
    Ok(IsospectralReport {
        levels: matches,
        deleted_level: deleted,
        seed_level_absent,
        passed,
    })
}

/// Centered first difference with zero boundary values.
fn centered(h: f64, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { g[j - 1] };
            let hi = if j + 1 == n { 0.0 } else { g[j + 1] };
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

fn apply_a(h: f64, f: &[f64], g: &[f64]) -> Vec<f64> {
    centered(h, g).iter().zip(f).zip(g).map(|((d, fj), gj)| d + fj * gj).collect()
}

fn apply_a_dag(h: f64, f: &[f64], g: &[f64]) -> Vec<f64> {
    centered(h, g).iter().zip(f).zip(g).map(|((d, fj), gj)| -d + fj * gj).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Smooth random probes `(x(1-x))^3 sum_k c_k sin(k pi x)`.
pub fn probe_vectors(grid: &RadialGrid, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let pi = std::f64::consts::PI;
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            grid.nodes()
                .iter()
                .map(|&x| {
                    let w = (x * (1.0 - x)).powi(3);
                    w * c
                        .iter()
                        .enumerate()
                        .map(|(k, ck)| ck * ((k + 1) as f64 * pi * x).sin())
                        .sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// Max over probes of `|(A^+A - (H0 - E)) phi|_inf` and
/// `|(A A^+ - (H1 - E)) phi|_inf`, each divided by `|H0|_inf |phi|_inf`.
pub fn factorization_residual(pair: &DarbouxPair) -> Result<(f64, f64)> {
    let grid = &pair.grid;
    let h = grid.h();
    let h0 = hamiltonian(grid, &pair.v0)?.shifted(-pair.energy);
    let h1 = hamiltonian(grid, &pair.v1)?.shifted(-pair.energy);
    let norm = hamiltonian(grid, &pair.v0)?.norm_inf();
    let (mut r0, mut r1) = (0.0f64, 0.0f64);
    for phi in probe_vectors(grid, FACTORIZATION_PROBES) {
        let scale = norm * max_abs(&phi);
        let lhs0 = apply_a_dag(h, &pair.f, &apply_a(h, &pair.f, &phi));
        let rhs0 = h0.apply(&phi);
        let lhs1 = apply_a(h, &pair.f, &apply_a_dag(h, &pair.f, &phi));
        let rhs1 = h1.apply(&phi);
        let d0: Vec<f64> = lhs0.iter().zip(&rhs0).map(|(a, b)| a - b).collect();
        let d1: Vec<f64> = lhs1.iter().zip(&rhs1).map(|(a, b)| a - b).collect();
        r0 = r0.max(max_abs(&d0) / scale);
        r1 = r1.max(max_abs(&d1) / scale);
    }
    Ok((r0, r1))
}

/// Solves `chi1'' = (V1 - E) chi1` by RK4 outward from `x = 1/2` with
/// `chi1(1/2) = 1/chi0(1/2)`, `chi1'(1/2) = f(1/2) chi1(1/2)`; returns values
/// on the interior nodes inside `window`, in node order, with those nodes.
pub fn solve_partner_seed(pair: &DarbouxPair, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = window;
    if !(0.0 < a && a < 0.5 && 0.5 < b && b < 1.0) {
        return Err(Error::Config(format!("window must satisfy 0 < a < 1/2 < b < 1, got ({a}, {b})")));
    }
    let grid = &pair.grid;
    let xs: Vec<f64> = grid.nodes().iter().copied().filter(|&x| x >= a && x <= b).collect();
    let (c0, _, _) = pair.seed.eval(0.5);
    let (f_mid, _) = pair.superpotential(0.5);
    let y0 = [1.0 / c0, f_mid / c0];
    let e = pair.energy;
    let rhs = |x: f64, y: [f64; 2]| [y[1], (pair.v1.value(x) - e) * y[0]];
    let hmax = 0.5 * grid.h();
    let integrate = |targets: &[f64]| -> Vec<f64> {
        let mut x = 0.5;
        let mut y = y0;
        let mut out = Vec::with_capacity(targets.len());
        for &t in targets {
            let steps = ((t - x).abs() / hmax).ceil().max(1.0) as usize;
            let dx = (t - x) / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(x, y);
                let k2 = rhs(x + 0.5 * dx, [y[0] + 0.5 * dx * k1[0], y[1] + 0.5 * dx * k1[1]]);
                let k3 = rhs(x + 0.5 * dx, [y[0] + 0.5 * dx * k2[0], y[1] + 0.5 * dx * k2[1]]);
                let k4 = rhs(x + dx, [y[0] + dx * k3[0], y[1] + dx * k3[1]]);
                for i in 0..2 {
                    y[i] += dx / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                x += dx;
            }
            x = t;
            out.push(y[0]);
        }
        out
    };
    let right: Vec<f64> = xs.iter().copied().filter(|&x| x >= 0.5).collect();
    let left: Vec<f64> = xs.iter().rev().copied().filter(|&x| x < 0.5).collect();
    let mut vals_left = integrate(&left);
    vals_left.reverse();
    let vals_right = integrate(&right);
    vals_left.extend(vals_right);
    Ok((xs, vals_left))
}

/// Mean of `chi0 chi1` and its maximal relative deviation from the mean.
pub fn product_invariant_check(chi0: &[f64], chi1: &[f64]) -> Result<(f64, f64)> {
    if chi0.len() != chi1.len() {
        return Err(Error::Shape {
            expected: chi0.len(),
            got: chi1.len(),
        });
    }
    if chi0.is_empty() {
        return Err(Error::Config("product check needs at least one sample".into()));
    }
    let p: Vec<f64> = chi0.iter().zip(chi1).map(|(a, b)| a * b).collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let dev = p.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean.abs();
    Ok((mean, dev))
}

/// Product check on the default window using the integrated `chi1`.
pub fn product_invariant_for_pair(pair: &DarbouxPair) -> Result<(f64, f64)> {
    let (xs, chi1) = solve_partner_seed(pair, PRODUCT_WINDOW)?;
    let chi0: Vec<f64> = xs.iter().map(|&x| pair.seed.eval(x).0).collect();
    product_invariant_check(&chi0, &chi1)
}
