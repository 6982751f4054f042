mod common;

use common::{bessel_zeros, rel};
use dynamo_core::tracker::*;
use dynamo_core::*;
use num_complex::Complex64;

fn unit_sweep() -> BranchTrace {
    sweep(&SweepConfig {
        base: AlphaProfile::constant(1.0),
        c_min: 0.0,
        c_max: 6.0,
        steps: 61,
        l: 1,
        n: 200,
        track_count: 4,
        pair_tol: None,
    })
    .unwrap()
}

#[test]
fn constant_profile_sweep_follows_closed_form() {
    let t = unit_sweep();
    let k1 = bessel_zeros(1, 1)[0];
    assert_eq!(t.events_of(EventKind::RealToComplex).count(), 0);
    // Branch 0 starts as the upper member of the lowest double eigenvalue.
    let upper = (0..t.branch_count())
        .max_by(|&a, &b| t.paths[a].last().unwrap().re.total_cmp(&t.paths[b].last().unwrap().re))
        .unwrap();
    for (c, z) in t.c_values.iter().zip(&t.paths[upper]) {
        let exact = -k1 * k1 + c * k1;
        assert!((z.re - exact).abs() <= 1e-3 * (k1 * k1), "C={c}: {z} vs {exact}");
        assert_eq!(z.im, 0.0);
    }
    let threshold = t.growth_threshold().unwrap();
    assert!((threshold - k1).abs() <= 0.01, "{threshold}");
    assert_eq!(t.zero_crossings(upper).len(), 1);
}

#[test]
fn events_come_with_conjugate_partners() {
    let fam = FnFamily::new(3, |c| vec![vec![1.0, c, 0.0], vec![-c, -1.0, 0.0], vec![0.0, 0.0, -5.0]]);
    let t = sweep_family(
        &fam,
        &SweepRange {
            c_min: 0.0,
            c_max: 2.0,
            steps: 40,
            track_count: 3,
            pair_tol: Some(1e-9),
        },
    )
    .unwrap();
    let ev: Vec<_> = t.events_of(EventKind::RealToComplex).collect();
    assert_eq!(ev.len(), 1);
    let k = t.c_values.iter().position(|&c| c == ev[0].c_hi).unwrap();
    let spec = &t.spectra[k];
    let z = t.paths[ev[0].branch][k];
    assert!(z.im != 0.0);
    assert!(has_pair_near(spec, z, 1e-12));
    let partner = ev[0].partner.unwrap();
    assert!((t.paths[partner][k] - z.conj()).norm() < 1e-12);
    // The isolated eigenvalue never joins an event.
    assert!(t.paths.iter().any(|p| p.iter().all(|z| (*z - Complex64::new(-5.0, 0.0)).norm() < 1e-12)));
}

#[test]
fn square_root_ep_located_independent_of_bracket() {
    let fam = FnFamily::new(2, |c| vec![vec![1.0, c], vec![-c, -1.0]]);
    let tol = 1e-8;
    let a = locate_ep(&fam, (0.5, 1.5), tol, None).unwrap();
    let b = locate_ep(&fam, (0.9, 1.05), tol, None).unwrap();
    assert!((a.c_star - 1.0).abs() <= tol);
    assert!((a.c_star - b.c_star).abs() <= 2.0 * tol);
}

#[test]
fn sign_changing_profile_has_exceptional_point() {
    let grid = build_grid(100).unwrap();
    let base = AlphaProfile::parse("poly:1,0,-4").unwrap();
    let fam = DynamoFamily::new(grid.clone(), base.clone(), 1).unwrap();
    let ep = locate_ep(&fam, (6.3, 6.4), 1e-10, None).unwrap();
    assert!(ep.c_star > 6.3 && ep.c_star < 6.4);
    // Pair coalesces near -21.18 on this grid.
    assert!(rel(ep.lambda_star.re, -21.18) < 1e-3, "{ep:?}");

    let m = DynamoMatrix::assemble(&grid, &base.scaled(ep.c_star), 1).unwrap();
    let spec = eigen(&m, true).unwrap();
    let k = (0..spec.len())
        .min_by(|&a, &b| {
            (spec.eigenvalues[a] - ep.lambda_star)
                .norm()
                .total_cmp(&(spec.eigenvalues[b] - ep.lambda_star).norm())
        })
        .unwrap();
    let psi = spec.eigenvector(k).unwrap();
    let probe = jordan_probe(m.matrix(), ep.lambda_star, &psi).unwrap();
    assert!(probe.eigvec_residual <= 1e-3, "{probe:?}");
    assert!(probe.chain_residual <= 1e-3, "{}", probe.chain_residual);

    // Real below, complex pair above.
    let below = eigen(&DynamoMatrix::assemble(&grid, &base.scaled(6.3), 1).unwrap(), false).unwrap();
    let above = eigen(&DynamoMatrix::assemble(&grid, &base.scaled(6.4), 1).unwrap(), false).unwrap();
    assert_eq!(below.count_complex(), 0);
    assert_eq!(above.count_complex(), 2);
}
