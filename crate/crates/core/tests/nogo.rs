mod common;

use common::{bessel_zeros, rho_oracle, Taylor};
use dynamo_core::mat2::{c, identity, norm_max, sharp, sigma_minus, C2};
use dynamo_core::nogo::*;
use dynamo_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn poly_pair(t0: f64, t1: f64, l0: u32, l1: u32, energy: f64) -> AlphaPair {
    AlphaPair::new(
        AlphaProfile::polynomial(vec![1.0, 0.0, t0]),
        AlphaProfile::polynomial(vec![1.0, 0.0, t1]),
        l0,
        l1,
        energy,
    )
    .unwrap()
}

#[test]
fn intertwiner_factorizes_both_k_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let coeffs = |rng: &mut ChaCha8Rng| vec![rng.random_range(0.5..3.0), rng.random_range(-0.4..0.4), rng.random_range(0.0..1.0)];
        let pair = AlphaPair::new(
            AlphaProfile::polynomial(coeffs(&mut rng)),
            AlphaProfile::polynomial(coeffs(&mut rng)),
            1,
            2,
            0.0,
        )
        .unwrap();
        let (g, e0, e1) = (rng.random_range(-3.0..3.0), rng.random_range(-1.2..1.2), rng.random_range(-1.0..1.0));
        let gauge = GaugeChoice::new(g).with_epsilon(move |r| (e0 + e1 * r * r * 0.1, 0.2 * e1 * r));
        let r = rng.random_range(0.0..1.0);
        let rr = build_r(&pair, &gauge, r).unwrap();
        let sf = structure_functions(&pair, &gauge);
        assert!(norm_max(&(rr * sharp(&rr) - sf.k0(r))) <= 1e-12);
        assert!(norm_max(&(sharp(&rr) * rr - sf.k1(r))) <= 1e-12);
    }
}

#[test]
fn closed_form_b1_solves_both_projections() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gauge = GaugeChoice::default();
    for _ in 0..64 {
        let pair = poly_pair(rng.random_range(0.2..1.0), rng.random_range(1.1..2.0), 1, 2, 0.0);
        let sf = structure_functions(&pair, &gauge);
        let r = rng.random_range(0.1..1.0);
        let scale = 1.0 + sf.b1(r).unwrap().abs() * sf.b2(r).abs();
        assert!(sf.b1_consistency(r).unwrap().abs() <= 1e-10 * scale);
    }
}

#[test]
fn rho_matches_series_oracle() {
    let pair = AlphaPair::new(AlphaProfile::constant(1.0), AlphaProfile::exponential(1.0, 1.0), 1, 2, 0.0).unwrap();
    let sf = structure_functions(&pair, &GaugeChoice::default());
    for r in [0.25, 0.5, 0.9] {
        let want = rho_oracle(|_| Taylor::constant(1.0), |x| x.exp(), 2, r);
        let got = sf.rho(r).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "r={r}: {got} vs {want}");
    }
    // Frozen from the oracle.
    let golden = rho_oracle(|_| Taylor::constant(1.0), |x| x.exp(), 2, 0.5);
    assert!((golden - GOLDEN_RHO).abs() <= 1e-10 * GOLDEN_RHO.abs(), "{golden}");
}

const GOLDEN_RHO: f64 = 18.647852285573805;

#[test]
fn rho_shift_identity_at_quarter_radius() {
    let pair = poly_pair(0.6, 0.3, 1, 2, 0.0);
    let gauge = GaugeChoice::default();
    let a = structure_functions(&pair, &gauge).rho(0.25).unwrap();
    let b = structure_functions(&pair.with_l1(3), &gauge).rho(0.25).unwrap();
    assert!((b - a - 32.0).abs() <= 1e-10 * a.abs().max(1.0));
}

#[test]
fn rho_is_gauge_independent() {
    let pair = poly_pair(0.8, 0.1, 1, 2, 0.0);
    let plain = structure_functions(&pair, &GaugeChoice::default());
    let tilted = structure_functions(&pair, &GaugeChoice::new(1.3).with_epsilon(|r| (0.3 * r, 0.3)));
    for r in [0.2, 0.5, 0.8] {
        assert_eq!(plain.rho(r).unwrap(), tilted.rho(r).unwrap());
    }
}

#[test]
fn singular_series_start_gives_centrifugal_b() {
    let pair = AlphaPair::new(AlphaProfile::constant(1.0), AlphaProfile::constant(1.0), 1, 2, 0.0).unwrap();
    let sol = mre_linear_solve(
        LinearSystem::B,
        &pair,
        InitialData::Series,
        MreOptions::new(1e-3, 1e-6).until(0.011),
    )
    .unwrap();
    let b = sol.affine[sol.index_near(0.01)].unwrap();
    let want = (identity() - sigma_minus()) * c(200.0);
    assert!(norm_max(&(b - want)) <= 0.01 * 200.0, "{b}");
}

#[test]
fn riccati_residual_small_at_fine_step() {
    let pair = poly_pair(0.5, 0.2, 1, 2, -1.0);
    let init = InitialData::Explicit {
        top: identity(),
        bottom: identity(),
    };
    for system in [LinearSystem::U, LinearSystem::B] {
        let sol = mre_linear_solve(system, &pair, init, MreOptions::new(0.1, 1e-4)).unwrap();
        assert!(sol.truncated_at.is_none());
        assert!(sol.max_riccati_residual() <= 1e-6, "{system:?}: {}", sol.max_riccati_residual());
    }
}

#[test]
fn rk4_step_halving_converges_at_fourth_order() {
    let pair = poly_pair(0.5, 0.2, 1, 2, -1.0);
    let init = InitialData::Explicit {
        top: identity(),
        bottom: identity(),
    };
    let end = |h: f64| -> C2 {
        let sol = mre_linear_solve(LinearSystem::U, &pair, init, MreOptions::new(0.1, h)).unwrap();
        *sol.bottom.last().unwrap()
    };
    let (coarse, mid, fine) = (end(4e-3), end(2e-3), end(2.5e-4));
    let factor = norm_max(&(coarse - fine)) / norm_max(&(mid - fine));
    assert!(factor >= 12.0, "{factor}");
}

#[test]
fn bottom_block_solves_second_order_equation() {
    let k1 = bessel_zeros(1, 1)[0];
    let pair = AlphaPair::new(AlphaProfile::constant(1.0), AlphaProfile::constant(1.0), 1, 2, -k1 * k1 + k1).unwrap();
    let init = InitialData::Explicit {
        top: identity(),
        bottom: identity() * c(0.5),
    };
    let sol = mre_linear_solve(LinearSystem::U, &pair, init, MreOptions::new(0.1, 1e-3)).unwrap();
    assert!(eigenfunction_equivalence(&sol) <= 1e-4);
}

#[test]
fn product_diagnostic_is_finite() {
    let pair = poly_pair(0.4, 0.2, 1, 2, 0.0);
    let opts = MreOptions::new(0.2, 1e-3);
    let id = InitialData::Explicit {
        top: identity(),
        bottom: identity(),
    };
    let u = mre_linear_solve(LinearSystem::U, &pair, id, opts).unwrap();
    let b = mre_linear_solve(LinearSystem::B, &pair, id, opts).unwrap();
    let d = product_invariant_diagnostic(&u, &b, &GaugeChoice::default()).unwrap();
    assert_eq!(d.r.len(), u.r.len());
    assert!(d.drift.iter().all(|v| v.is_finite()));
    assert!(d.det.iter().all(|z| z.norm() > 0.0));
    // U and B need matching systems.
    assert!(product_invariant_diagnostic(&b, &u, &GaugeChoice::default()).is_err());
}

#[test]
fn witness_pair_has_nonzero_defect() {
    let pair = AlphaPair::new(
        AlphaProfile::constant(1.0),
        AlphaProfile::polynomial(vec![1.0, 0.0, 0.5]),
        1,
        2,
        0.0,
    )
    .unwrap();
    let grid = build_grid(200).unwrap();
    let rep = intertwining_defect(&pair, &GaugeChoice::default(), &grid, 1.0).unwrap();
    assert!(rep.normalized > 1e-3, "{rep:?}");
    assert!((rep.normalized - GOLDEN_DEFECT).abs() <= 1e-6 * GOLDEN_DEFECT, "{}", rep.normalized);
}

const GOLDEN_DEFECT: f64 = 0.001706427461690701;

#[test]
fn default_certificate_passes() {
    let fam = default_family(2).unwrap();
    let rep = nogo_certificate(&fam, 2, &CertificateOptions::default()).unwrap();
    assert_eq!(rep.pairs.len(), 25);
    assert!(rep.rho_positive(), "{}", rep.min_rho_sup);
    assert!(rep.l_shift_holds(), "{}", rep.max_l_shift_defect);
    assert!(rep.degenerate_impossible());
    assert!(rep.asymptotic_holds());
    assert!(rep.passed());
    assert!(rep.pairs.iter().all(|p| p.samples_excluded == 0));
    assert!(rep.defects.iter().all(|d| d.normalized > 1e-3));
}

#[test]
fn asymptotic_increment_is_one() {
    for l0 in 1..=4 {
        let rec = asymptotic_l_increment(l0, (1.0, 0.0, 2.0, 0.3)).unwrap();
        assert_eq!(rec.l1, l0 + 1);
        assert!(!rec.inputs_consistent);
        assert!(rec.discrimination >= 1e3, "{}", rec.discrimination);
    }
}
