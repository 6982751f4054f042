//! Command-line front end: argument parsing, dispatch to `dynamo-core`, and
//! CSV/SVG output. [`run`] maps every outcome to a process exit code.

pub mod args;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use dynamo_core::darboux::{darboux_partner, verify_isospectral, DarbouxMode, Potential1D, Seed};
use dynamo_core::nogo::{
    default_family, mre_linear_solve, nogo_certificate, structure_functions, AlphaPair, CertificateOptions, GaugeChoice,
    InitialData, LinearSystem, MreOptions,
};
use dynamo_core::nogo::certificate::RHO_GUARD;
use dynamo_core::tracker::{sweep, EventKind, SweepConfig};
use dynamo_core::{build_grid, classify_pairs, eigen, mat2, AlphaProfile, DynamoMatrix, PairTag, Spectrum};

use args::{Cli, Command, DarbouxArgs, MreArgs, NogoArgs, PencilArgs, SeedKind, SpectrumArgs, SweepArgs, SystemKind};
use output::{f, svg_plot, write_svg, Series, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dynamo_core::Error),
    /// A computation finished but its contract check failed.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dynamo_core::Error as E;
        match self {
            CliError::Core(E::Config(_) | E::Parse(_) | E::Domain(_) | E::Io(_) | E::Shape { .. }) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Check(_) => EXIT_NUMERICAL,
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `argv` (program name first), runs the subcommand, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("dynamo-lab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Spectrum(a) => spectrum(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::PencilCheck(a) => pencil(a),
        Command::Darboux(a) => darboux(a),
        Command::Nogo(a) => nogo(a),
        Command::MreCheck(a) => mre(a),
    }
}

fn say(lines: &[(&str, String)]) {
    let mut out = std::io::stdout().lock();
    for (k, v) in lines {
        let _ = writeln!(out, "{k}={v}");
    }
}

fn operator(alpha: &str, l: u32, n: usize) -> Result<DynamoMatrix, CliError> {
    let profile = AlphaProfile::parse(alpha)?;
    let grid = build_grid(n)?;
    Ok(DynamoMatrix::assemble(&grid, &profile, l)?)
}

fn class_cells(spec: &Spectrum, k: usize) -> (String, String) {
    match spec.classification[k] {
        PairTag::Real => ("Real".into(), "-1".into()),
        PairTag::ConjugatePair(j) => ("ConjugatePair".into(), j.to_string()),
    }
}

fn spectrum(a: SpectrumArgs) -> CliResult {
    let m = operator(&a.op.alpha, a.op.l, a.op.n)?;
    let mut spec = eigen(&m, false)?;
    if let Some(tol) = a.pair_tol {
        spec = classify_pairs(spec, tol)?;
    }
    let mut t = Table::new(&["re_lambda", "im_lambda", "class", "pair_index"]);
    for (k, z) in spec.eigenvalues.iter().enumerate() {
        let (class, idx) = class_cells(&spec, k);
        t.row(&[f(z.re), f(z.im), class, idx]);
    }
    t.write(&a.out)?;
    if let Some(path) = &a.svg {
        let pts = spec.eigenvalues.iter().map(|z| (z.re, z.im)).collect();
        let body = svg_plot(
            &[Series {
                label: "eigenvalues".into(),
                points: pts,
            }],
            "Re lambda",
            "Im lambda",
            false,
        );
        write_svg(path, &body)?;
    }
    say(&[
        ("eigenvalues", spec.len().to_string()),
        ("complex", spec.count_complex().to_string()),
        ("leading_re", f(spec.eigenvalues[0].re)),
    ]);
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> CliResult {
    let (c_min, c_max, steps) = a.scale;
    let base = AlphaProfile::parse(&a.op.alpha)?;
    let trace = sweep(&SweepConfig {
        base,
        c_min,
        c_max,
        steps,
        l: a.op.l,
        n: a.op.n,
        track_count: a.track,
        pair_tol: a.pair_tol,
    })?;
    let mut t = Table::new(&["C", "branch_id", "re_lambda", "im_lambda"]);
    for (k, c) in trace.c_values.iter().enumerate() {
        for (b, path) in trace.paths.iter().enumerate() {
            t.row(&[f(*c), b.to_string(), f(path[k].re), f(path[k].im)]);
        }
    }
    // Real/complex transitions only; crossings of real branches are counted on stdout.
    t.section(&["C_lo", "C_hi", "kind"]);
    for e in trace.events.iter().filter(|e| e.kind != EventKind::Crossing) {
        t.row(&[f(e.c_lo), f(e.c_hi), e.kind.as_str().into()]);
    }
    t.write(&a.out)?;
    if let Some(path) = &a.svg {
        let series: Vec<Series> = trace
            .paths
            .iter()
            .enumerate()
            .map(|(b, p)| Series {
                label: format!("branch {b}"),
                points: trace.c_values.iter().zip(p).map(|(c, z)| (*c, z.re)).collect(),
            })
            .collect();
        write_svg(path, &svg_plot(&series, "C", "Re lambda", true))?;
    }
    say(&[
        ("branches", trace.branch_count().to_string()),
        ("transitions", trace.events.iter().filter(|e| e.kind != EventKind::Crossing).count().to_string()),
        ("crossings", trace.events_of(EventKind::Crossing).count().to_string()),
        ("growth_threshold", trace.growth_threshold().map_or("none".into(), f)),
    ]);
    Ok(())
}

fn pencil(a: PencilArgs) -> CliResult {
    let m = operator(&a.op.alpha, a.op.l, a.op.n)?;
    let spec = eigen(&m, true)?;
    let mut t = Table::new(&[
        "index",
        "re_lambda",
        "im_lambda",
        "psi1_norm",
        "pencil_residual",
        "root_mismatch",
        "reconstruction_residual",
    ]);
    let mut worst = 0.0f64;
    for k in 0..spec.len() {
        let psi = spec.eigenvector(k).expect("vectors requested");
        let chk = m.pencil_consistency(spec.eigenvalues[k], &psi)?;
        // Eigenvectors with a vanishing first component carry no pencil information.
        if chk.psi1_norm > 1e-8 {
            worst = worst.max(chk.pencil_residual).max(chk.root_mismatch).max(chk.reconstruction_residual);
        }
        t.row(&[
            k.to_string(),
            f(spec.eigenvalues[k].re),
            f(spec.eigenvalues[k].im),
            f(chk.psi1_norm),
            f(chk.pencil_residual),
            f(chk.root_mismatch),
            f(chk.reconstruction_residual),
        ]);
    }
    t.summary(&[("max_residual", f(worst)), ("tol", f(a.tol))]);
    t.write(&a.out)?;
    say(&[("max_residual", f(worst))]);
    if worst > a.tol {
        return Err(CliError::Check(format!("pencil residual {worst:e} exceeds {:e}", a.tol)));
    }
    Ok(())
}

fn parse_potential(s: &str) -> Result<Potential1D, CliError> {
    let bad = || dynamo_core::Error::Parse(format!("potential `{s}` is not `zero`, `const:c` or `harmonic:k[,x0]`"));
    if s == "zero" {
        return Ok(Potential1D::zero());
    }
    let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    match (tag, nums.as_slice()) {
        ("const", [c]) => Ok(Potential1D::constant(*c)),
        ("harmonic", [k]) => Ok(Potential1D::harmonic(*k, 0.5)),
        ("harmonic", [k, x0]) => Ok(Potential1D::harmonic(*k, *x0)),
        _ => Err(bad().into()),
    }
}

fn darboux(a: DarbouxArgs) -> CliResult {
    let v0 = parse_potential(&a.potential)?;
    let grid = build_grid(a.n)?;
    let mode = match a.seed {
        SeedKind::Ground => DarbouxMode::GroundState,
        SeedKind::Sine => DarbouxMode::GivenSeed {
            seed: Seed::sine(1),
            energy: a.energy.unwrap_or(std::f64::consts::PI.powi(2)),
        },
    };
    let pair = darboux_partner(&v0, &grid, mode)?;
    let rep = verify_isospectral(&pair, a.levels, a.tol)?;
    let mut t = Table::new(&["level", "E0", "E1", "abs_rel_err"]);
    for m in &rep.levels {
        t.row(&[m.level.to_string(), f(m.e0), f(m.e1), f(m.rel_err)]);
    }
    t.write(&a.out)?;
    say(&[
        ("energy", f(pair.energy)),
        ("seed_level_absent", rep.seed_level_absent.to_string()),
        ("passed", rep.passed.to_string()),
    ]);
    if !rep.passed {
        return Err(CliError::Check("partner levels do not match within tolerance".into()));
    }
    Ok(())
}

fn pair_from(alpha0: &str, alpha1: &str, l0: Option<u32>, l1: u32, energy: f64) -> Result<AlphaPair, CliError> {
    let l0 = match l0 {
        Some(v) => v,
        None => l1
            .checked_sub(1)
            .ok_or_else(|| dynamo_core::Error::Config("l1 must be at least 1".into()))?,
    };
    Ok(AlphaPair::new(AlphaProfile::parse(alpha0)?, AlphaProfile::parse(alpha1)?, l0, l1, energy)?)
}

fn nogo(a: NogoArgs) -> CliResult {
    let pair = pair_from(&a.alpha0, &a.alpha1, a.l0, a.l1, a.energy)?;
    let (lo, hi) = a.window;
    if !(lo > 0.0 && lo < hi && hi <= 1.0) || a.samples < 2 {
        return Err(dynamo_core::Error::Config(format!("invalid window [{lo}, {hi}] or sample count")).into());
    }
    let gauge = GaugeChoice::default();
    let sf = structure_functions(&pair, &gauge);
    let shifted = structure_functions(&pair.with_l1(pair.l1 + 1), &gauge);
    let opts = CertificateOptions::default();
    let rs: Vec<f64> = (0..a.samples)
        .map(|i| lo + (hi - lo) * i as f64 / (a.samples - 1) as f64)
        .collect();
    let q_max = rs.iter().map(|&r| sf.q(r).abs()).fold(0.0, f64::max);
    let cut = opts.q_floor.max(opts.q_relative * q_max);

    let mut t = Table::new(&["r", "q", "b1", "b2", "rho"]);
    let (mut sup, mut at, mut excluded, mut shift) = (0.0f64, f64::NAN, 0usize, 0.0f64);
    let mut curve = Vec::new();
    for &r in &rs {
        let q = sf.q(r);
        if q.abs() < cut {
            excluded += 1;
            continue;
        }
        let rho = sf.rho(r)?;
        t.row(&[f(r), f(q), f(sf.b1(r)?), f(sf.b2(r)), f(rho)]);
        curve.push((r, rho));
        if rho.abs() > sup {
            sup = rho.abs();
            at = r;
        }
        shift = shift.max((shifted.rho(r)? - rho - 2.0 / (r * r)).abs() / rho.abs().max(1.0));
    }
    let mut summary = vec![
        ("min_abs_rho_inf", f(sup)),
        ("rho_inf_at", f(at)),
        ("samples_used", (rs.len() - excluded).to_string()),
        ("samples_excluded", excluded.to_string()),
        ("l_shift_max_defect", f(shift)),
    ];
    let mut ok = sup > RHO_GUARD;
    if a.certificate {
        let family = default_family(a.l1)?;
        let cert = nogo_certificate(
            &family,
            a.l1,
            &CertificateOptions {
                window: a.window,
                ..opts
            },
        )?;
        summary.extend([
            ("certificate_pairs", cert.pairs.len().to_string()),
            ("certificate_min_abs_rho_inf", f(cert.min_rho_sup)),
            ("certificate_l_shift_max_defect", f(cert.max_l_shift_defect)),
            ("certificate_degenerate_impossible", cert.degenerate_impossible().to_string()),
            ("certificate_asymptotic_holds", cert.asymptotic_holds().to_string()),
            ("certificate_passed", cert.passed().to_string()),
        ]);
        ok &= cert.passed();
    }
    t.summary(&summary);
    t.write(&a.out)?;
    if let Some(path) = &a.svg {
        let body = svg_plot(
            &[Series {
                label: "rho".into(),
                points: curve,
            }],
            "r",
            "rho",
            true,
        );
        write_svg(path, &body)?;
    }
    say(&summary);
    if !ok {
        return Err(CliError::Check("rho is not bounded away from zero".into()));
    }
    Ok(())
}

fn mre(a: MreArgs) -> CliResult {
    let pair = pair_from(&a.alpha0, &a.alpha1, a.l0, a.l1, a.energy)?;
    let (system, init) = match (a.system, a.series) {
        (SystemKind::U, false) => (LinearSystem::U, identity_data()),
        (SystemKind::B, false) => (LinearSystem::B, identity_data()),
        (SystemKind::B, true) => (LinearSystem::B, InitialData::Series),
        (SystemKind::U, true) => {
            return Err(dynamo_core::Error::Config("--series applies to the B-system only".into()).into());
        }
    };
    let sol = mre_linear_solve(system, &pair, init, MreOptions::new(a.r_start, a.step).until(a.r_end))?;
    let mut t = Table::new(&["r", "riccati_residual", "cond_log"]);
    let res = sol.riccati_residuals();
    let mut worst = 0.0f64;
    for (r, v) in &res {
        worst = worst.max(*v);
        t.row(&[f(*r), f(*v), f(sol.cond_log[sol.index_near(*r)])]);
    }
    let summary = vec![
        ("max_riccati_residual", f(worst)),
        ("linear_residual", f(sol.linear_residual())),
        ("truncated_at", sol.truncated_at.map_or("none".into(), f)),
        ("nodes", sol.r.len().to_string()),
    ];
    t.summary(&summary);
    t.write(&a.out)?;
    say(&summary);
    if res.is_empty() {
        return Err(CliError::Check("no node with a well-conditioned affine coordinate".into()));
    }
    if worst > a.tol {
        return Err(CliError::Check(format!("Riccati residual {worst:e} exceeds {:e}", a.tol)));
    }
    Ok(())
}

fn identity_data() -> InitialData {
    InitialData::Explicit {
        top: mat2::identity(),
        bottom: mat2::identity(),
    }
}
