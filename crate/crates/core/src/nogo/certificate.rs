//! Aggregated evidence over a family of admissible profile pairs.

use rayon::prelude::*;

use super::asymptotic::{asymptotic_l_increment, AsymptoticRecord};
use super::defect::{intertwining_defect, DefectReport};
use super::{degenerate_case_check, AlphaPair, DegenerateRecord, GaugeChoice, StructureFunctions, Q_FLOOR};
use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::profile::AlphaProfile;

/// Smallest family accepted by [`nogo_certificate`].
pub const MIN_FAMILY: usize = 25;
/// Guard band that `min |rho|_inf` must clear.
pub const RHO_GUARD: f64 = 1e-6;
/// Tolerance of the l-shift identity, relative to `max(1, |rho|)`.
pub const L_SHIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CertificateOptions {
    pub window: (f64, f64),
    /// Radii sampled for `|rho|_inf`.
    pub rho_samples: usize,
    /// Radii sampled for the l-shift identity.
    pub shift_samples: usize,
    /// Samples with `|q| < max(q_floor, q_relative * max|q|)` are excluded.
    pub q_floor: f64,
    pub q_relative: f64,
    /// `l0` values for the asymptotic record.
    pub asymptotic_l0: Vec<u32>,
    /// Family members (taken from the front) that also get an intertwining defect.
    pub defect_pairs: usize,
    pub defect_grid: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            window: (0.1, 1.0),
            rho_samples: 1000,
            shift_samples: 100,
            q_floor: Q_FLOOR,
            q_relative: 1e-3,
            asymptotic_l0: vec![1, 2, 3],
            defect_pairs: 3,
            defect_grid: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub index: usize,
    pub rho_sup: f64,
    pub rho_sup_at: f64,
    pub samples_used: usize,
    pub samples_excluded: usize,
    /// Largest `|rho(l1+1) - rho(l1) - 2/r^2| / max(1, |rho|)` on the shift samples.
    pub l_shift_defect: f64,
}

#[derive(Debug, Clone)]
pub struct DegenerateCheck {
    pub record: DegenerateRecord,
    /// `2 min(alpha0, alpha1)` over `[0, 1]`; the forced quantity must not fall below it.
    pub lower_bound: f64,
}

#[derive(Debug, Clone)]
pub struct NoGoReport {
    pub window: (f64, f64),
    pub l1: u32,
    pub pairs: Vec<PairRecord>,
    pub min_rho_sup: f64,
    pub max_l_shift_defect: f64,
    pub shift_samples: usize,
    pub degenerate: Vec<DegenerateCheck>,
    pub asymptotic: Vec<AsymptoticRecord>,
    pub defects: Vec<DefectReport>,
}

impl NoGoReport {
    pub fn rho_positive(&self) -> bool {
        self.min_rho_sup > RHO_GUARD
    }

    pub fn l_shift_holds(&self) -> bool {
        self.max_l_shift_defect <= L_SHIFT_TOL
    }

    pub fn degenerate_impossible(&self) -> bool {
        self.degenerate
            .iter()
            .all(|d| d.record.impossible && d.record.forced_min >= d.lower_bound * (1.0 - 1e-12))
    }

    pub fn asymptotic_holds(&self) -> bool {
        self.asymptotic.iter().all(|a| a.l1 == a.l0 + 1 && a.discrimination >= 1e3)
    }

    pub fn passed(&self) -> bool {
        self.rho_positive() && self.l_shift_holds() && self.degenerate_impossible() && self.asymptotic_holds()
    }
}

/// `alpha0 = 1 + t0 r^2`, `alpha1 = 1 + t1 r^2` with `t0 in {0.2, .., 1.0}`,
/// `t1 in {0.1, .., 0.9}`: 25 pairs with `t0 != t1`, `l0 = l1 - 1`, `E = 0`.
pub fn default_family(l1: u32) -> Result<Vec<AlphaPair>> {
    if l1 < 2 {
        return Err(Error::Config(format!("l1 must be at least 2 so that l0 = l1 - 1 >= 1, got {l1}")));
    }
    let mut out = Vec::with_capacity(25);
    for i in 1..=5 {
        for j in 0..5 {
            let t0 = 0.2 * i as f64;
            let t1 = 0.1 + 0.2 * j as f64;
            out.push(AlphaPair::new(
                AlphaProfile::polynomial(vec![1.0, 0.0, t0]),
                AlphaProfile::polynomial(vec![1.0, 0.0, t1]),
                l1 - 1,
                l1,
                0.0,
            )?);
        }
    }
    Ok(out)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn pair_record(index: usize, pair: &AlphaPair, opts: &CertificateOptions) -> Result<PairRecord> {
    let gauge = GaugeChoice::default();
    let sf = StructureFunctions {
        q_floor: opts.q_floor,
        ..StructureFunctions::new(pair, &gauge)
    };
    let rs = linspace(opts.window.0, opts.window.1, opts.rho_samples);
    let q_max = rs.iter().map(|&r| sf.q(r).abs()).fold(0.0, f64::max);
    let cut = opts.q_floor.max(opts.q_relative * q_max);
    let (mut sup, mut at, mut used) = (0.0f64, f64::NAN, 0);
    for &r in &rs {
        if sf.q(r).abs() < cut {
            continue;
        }
        let rho = sf.rho(r)?;
        used += 1;
        if rho.abs() > sup {
            sup = rho.abs();
            at = r;
        }
    }
    let shifted = StructureFunctions {
        pair: pair.with_l1(pair.l1 + 1),
        ..sf.clone()
    };
    let mut shift = 0.0f64;
    for r in linspace(opts.window.0, opts.window.1, opts.shift_samples) {
        if sf.q(r).abs() < cut {
            continue;
        }
        let (a, b) = (sf.rho(r)?, shifted.rho(r)?);
        shift = shift.max((b - a - 2.0 / (r * r)).abs() / a.abs().max(1.0));
    }
    Ok(PairRecord {
        index,
        rho_sup: sup,
        rho_sup_at: at,
        samples_used: used,
        samples_excluded: rs.len() - used,
        l_shift_defect: shift,
    })
}

fn degenerate_checks(family: &[AlphaPair]) -> Result<Vec<DegenerateCheck>> {
    let mut out = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for p in family {
        let key = format!("{:?}", p.alpha0);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        for kappa in [1.0, 3.0] {
            let alpha1 = p.alpha0.scaled(kappa);
            let lower = 2.0 * p.alpha0.min_on_unit_interval().min(alpha1.min_on_unit_interval());
            let pair = AlphaPair::new(p.alpha0.clone(), alpha1, p.l0, p.l1, p.energy)?;
            out.push(DegenerateCheck {
                record: degenerate_case_check(&pair)?,
                lower_bound: lower,
            });
        }
    }
    Ok(out)
}

/// Evaluates `rho` over the family with `l1` imposed, plus the degenerate,
/// asymptotic and defect records.
pub fn nogo_certificate(family: &[AlphaPair], l1: u32, opts: &CertificateOptions) -> Result<NoGoReport> {
    if family.len() < MIN_FAMILY {
        return Err(Error::Config(format!(
            "family needs at least {MIN_FAMILY} pairs, got {}",
            family.len()
        )));
    }
    let (lo, hi) = opts.window;
    if !(lo > 0.0 && lo < hi && hi <= 1.0) || opts.rho_samples < 2 || opts.shift_samples < 2 {
        return Err(Error::Config(format!("invalid window [{lo}, {hi}] or sample counts")));
    }
    let family: Vec<AlphaPair> = family.iter().map(|p| p.with_l1(l1)).collect();
    let pairs = family
        .par_iter()
        .enumerate()
        .map(|(i, p)| pair_record(i, p, opts))
        .collect::<Result<Vec<_>>>()?;
    let min_rho_sup = pairs.iter().map(|p| p.rho_sup).fold(f64::INFINITY, f64::min);
    let max_l_shift_defect = pairs.iter().map(|p| p.l_shift_defect).fold(0.0, f64::max);

    let degenerate = degenerate_checks(&family)?;
    let asymptotic = opts
        .asymptotic_l0
        .par_iter()
        .map(|&l0| {
            let p = &family[0];
            let (t0, t1) = (p.alpha0.taylor_at_zero(1), p.alpha1.taylor_at_zero(1));
            asymptotic_l_increment(l0, (t0[0], t0[1], t1[0], t1[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = build_grid(opts.defect_grid)?;
    let defects = family
        .par_iter()
        .take(opts.defect_pairs)
        .map(|p| intertwining_defect(p, &GaugeChoice::default(), &grid, 1.0))
        .collect::<Result<Vec<_>>>()?;

    Ok(NoGoReport {
        window: opts.window,
        l1,
        pairs,
        min_rho_sup,
        max_l_shift_defect,
        shift_samples: opts.shift_samples,
        degenerate,
        asymptotic,
        defects,
    })
}
