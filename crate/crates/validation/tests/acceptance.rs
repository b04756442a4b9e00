//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails. Tolerances and runtime budgets are
//! pinned below.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mottlab::chamber::{sample_track_starts_truncated, ChamberGeometry, ScaleParams};
use mottlab::empirics::{ks_statistic, EmpiricalCdf, GridCdf};
use mottlab::fitting::{fit_cutoff, fit_parameters, FitConfig, FitParam};
use mottlab::geiger::{
    case_iii_branch_jump, fit_stopping_equiv, flux, normalize_curve, normalized_curves, source_averaged_flux,
    GeigerGeometry, ModelKind, DEFAULT_SOURCE_NODES,
};
use mottlab::physics::{
    critical_radius, eval_amplitude, flux_magnitude, polarization_energy, total_square_norm, ClusterModel, FluxMode,
    GamowParams,
};
use mottlab::{model_cdf, planar_radius, sample_track_starts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const NORM_TOL: f64 = 1e-8;
const CONTINUITY_REL_TOL: f64 = 1e-5;
const ASYMPTOTIC_REL_TOL: f64 = 2e-3;
const ROUND_TRIP_TOL_EV: f64 = 1e-9;
const WORKED_RC_TOL_NM: f64 = 1e-6;
const KS_COEFF: f64 = 1.63;
const MC_VS_QUADRATURE_TOL: f64 = 0.01;
const SCALE_REL_TOL: f64 = 0.02;
const HEIGHT_REL_TOL: f64 = 0.05;
const CUTOFF_TOL_MM: f64 = 1.0;
const BRANCH_REL_TOL: f64 = 1e-9;
const NORMALIZATION_TOL: f64 = 1e-12;
const SZ_TOL_MM: f64 = 0.5;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within_budget(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_gamow(r: &mut ChaCha8Rng) -> GamowParams {
    GamowParams::new(
        10f64.powf(r.random_range(-1.0..2.0)),
        10f64.powf(r.random_range(0.0..3.0)),
        r.random_range(0.5..50.0),
    )
    .unwrap()
}

fn gamow_normalization() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_gamow(&mut r);
        for gt in [0.1, 1.0, 5.0, 20.0] {
            let t = gt / p.gamma;
            let err = (total_square_norm(t, &p) - (1.0 - (-gt).exp())).abs();
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst < NORM_TOL && within_budget(elapsed, 1.0),
        format!("max |norm - (1 - e^-γt)| = {worst:.2e} (tol {NORM_TOL:.0e}), {elapsed:.2?}"),
    )
}

fn continuity_equation() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_gamow(&mut r);
        let t = r.random_range(0.5..5.0) / p.gamma;
        // stay clear of the causal front so the stencil never crosses it
        let radius = p.v * t * r.random_range(0.05..0.9);
        let rho = |rr: f64, tt: f64| eval_amplitude(rr, tt, &p).unwrap().norm_sqr();
        let current = |rr: f64| flux_magnitude(rr, t, &p, FluxMode::Exact).unwrap();
        let ht = 1e-5 * t;
        let hr = 1e-5 * radius;
        let d_rho_dt = (rho(radius, t + ht) - rho(radius, t - ht)) / (2.0 * ht);
        let flux_r = |rr: f64| rr * rr * current(rr);
        let div_j = (flux_r(radius + hr) - flux_r(radius - hr)) / (2.0 * hr) / (radius * radius);
        let rel = (d_rho_dt + div_j).abs() / d_rho_dt.abs();
        worst = worst.max(rel);
    }
    Outcome::new(
        worst < CONTINUITY_REL_TOL,
        format!("max |∂ρ/∂t + ∇·J| / |∂ρ/∂t| = {worst:.2e} (tol {CONTINUITY_REL_TOL:.0e})"),
    )
}

fn asymptotic_flux() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_gamow(&mut r);
        let x = r.random_range(1e-7..1e-3); // γr/v
        let radius = x * p.v / p.gamma;
        let t = radius / p.v + r.random_range(0.0..5.0) / p.gamma;
        let exact = flux_magnitude(radius, t, &p, FluxMode::Exact).unwrap();
        let asym = flux_magnitude(radius, t, &p, FluxMode::Asymptotic).unwrap();
        worst = worst.max((exact - asym).abs() / exact);
    }
    Outcome::new(
        worst < ASYMPTOTIC_REL_TOL,
        format!("max relative exact/asymptotic gap = {worst:.2e} (tol {ASYMPTOTIC_REL_TOL:.0e})"),
    )
}

fn critical_radius_round_trip() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let q = f64::from(r.random_range(1..=3u8));
        let eps = r.random_range(1.5..80.0);
        let r_ion = r.random_range(0.05..0.5);
        let strength = 0.5 * q * q * mottlab::physics::COULOMB_EV_NM * (1.0 - 1.0 / eps);
        let e_b = r.random_range(0.01..0.95) * strength / r_ion;
        let c = ClusterModel::new(q, eps, r_ion, e_b).unwrap();
        let rc = critical_radius(&c).unwrap();
        worst = worst.max((polarization_energy(&c, rc).unwrap() + e_b).abs());
    }

    // binding energy equal to the polarization energy released by growing the
    // cluster to exactly 1 nm
    let probe = ClusterModel::new(1.0, 25.0, 0.2, 1.0).unwrap();
    let e_b = -polarization_energy(&probe, 1.0).unwrap();
    let rc = critical_radius(&ClusterModel::new(1.0, 25.0, 0.2, e_b).unwrap()).unwrap();
    let rc_rounded = critical_radius(&ClusterModel::new(1.0, 25.0, 0.2, 2.7647).unwrap()).unwrap();
    Outcome::new(
        worst < ROUND_TRIP_TOL_EV && (rc - 1.0).abs() < WORKED_RC_TOL_NM,
        format!(
            "max residual {worst:.2e} eV (tol {ROUND_TRIP_TOL_EV:.0e}); E_b = {e_b:.7} eV -> R_c = {rc:.9} nm \
             (tol {WORKED_RC_TOL_NM:.0e}); E_b = 2.7647 eV -> R_c = {rc_rounded:.7} nm"
        ),
    )
}

fn sampler_fidelity() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let radius = 10.0;
    let g = ChamberGeometry::sphere(radius, [0.0, 0.0, 0.0]).unwrap();
    let grid: Vec<f64> = (0..=400).map(|i| radius * f64::from(i) / 400.0).collect();
    let model = GridCdf::new(grid.clone(), model_cdf(&g, &grid).unwrap()).unwrap();
    let ks_bound = KS_COEFF / (n as f64).sqrt();
    let mut worst_ks: f64 = 0.0;
    let mut worst_sup: f64 = 0.0;
    for seed in 0..5 {
        let starts = sample_track_starts(n, 1000 + seed, &ScaleParams::default(), &g).unwrap();
        let r3: Vec<f64> = starts
            .iter()
            .map(|t| t.position.iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect();
        worst_ks = worst_ks.max(ks_statistic(&r3, |x| (x / radius).clamp(0.0, 1.0)));
        let planar: Vec<f64> = starts.iter().map(|t| planar_radius(t, &g)).collect();
        worst_sup = worst_sup.max(ks_statistic(&planar, |x| model.eval(x.min(radius))));
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst_ks < ks_bound && worst_sup < MC_VS_QUADRATURE_TOL && within_budget(elapsed, 10.0),
        format!(
            "radial KS max {worst_ks:.5} (bound {ks_bound:.5}); planar MC vs quadrature sup {worst_sup:.5} \
             (tol {MC_VS_QUADRATURE_TOL}); 5 seeds, {elapsed:.2?}"
        ),
    )
}

fn chamber_fit_recovery() -> Outcome {
    let start = Instant::now();
    let n = 20_000;
    let truth_height = 2.0;
    let truth_cutoff = 20.0;
    let template = ChamberGeometry::default();
    let mut cfg = FitConfig {
        free_params: vec![FitParam::SourceHeight],
        ..FitConfig::default()
    };
    // heights h and 10 - h project identically; search the lower half
    cfg.bounds.insert(FitParam::SourceHeight, (0.5, 5.0));

    let (mut scale_err, mut height_err, mut cutoff_err) = (0f64, 0f64, 0f64);
    let mut heights = Vec::new();
    for seed in 0..10u64 {
        let mut g = template;
        g.source[2] = truth_height;
        let s = ScaleParams::default();
        let full = sample_track_starts_truncated(n, 600 + seed, &s, &g, None).unwrap();
        let data = EmpiricalCdf::from_radii(full.iter().map(|t| planar_radius(t, &g)).collect()).unwrap();
        let fit = fit_parameters(&cfg, &template, &data).unwrap();
        let scale = fit.params["count_scale"].value;
        let h = fit.params["source_height"].value;
        scale_err = scale_err.max((scale / n as f64 - 1.0).abs());
        height_err = height_err.max((h / truth_height - 1.0).abs());
        heights.push(h);

        let cut = sample_track_starts_truncated(n, 700 + seed, &s, &g, Some(truth_cutoff)).unwrap();
        let data = EmpiricalCdf::from_radii(cut.iter().map(|t| planar_radius(t, &g)).collect()).unwrap();
        let c = fit_cutoff(&data, &g).unwrap();
        cutoff_err = cutoff_err.max((c.cutoff_mm - truth_cutoff).abs());
    }
    let elapsed = start.elapsed();
    let height_list: Vec<String> = heights.iter().map(|h| format!("{h:.3}")).collect();
    Outcome::new(
        scale_err < SCALE_REL_TOL
            && height_err < HEIGHT_REL_TOL
            && cutoff_err < CUTOFF_TOL_MM
            && within_budget(elapsed, 30.0),
        format!(
            "scale max rel err {scale_err:.4} (tol {SCALE_REL_TOL}); source height max rel err {height_err:.4} \
             (tol {HEIGHT_REL_TOL}) [{}]; cutoff max err {cutoff_err:.3} mm (tol {CUTOFF_TOL_MM}); 10 seeds, {elapsed:.2?}",
            height_list.join(", ")
        ),
    )
}

fn geiger_formulas() -> Outcome {
    let geom = GeigerGeometry::default();
    let bare = geom.with_sz(0.0);
    let mut identical = true;
    for i in 1..=1000 {
        let g = 40.0 * f64::from(i) / 1000.0;
        let a = flux(ModelKind::CaseI, g, &bare).unwrap();
        let b = flux(ModelKind::CaseII, g, &geom).unwrap();
        identical &= a == b;
    }
    let l_minus_sz = geom.stopping_distance_l - geom.sz();
    let mut geometric_zero = true;
    for i in 0..=1000 {
        let g = l_minus_sz + 20.0 * f64::from(i) / 1000.0;
        geometric_zero &= flux(ModelKind::Geometric, g, &geom).unwrap() == 0.0;
    }
    let mut worst: f64 = 0.0;
    for s in [0.1, 16.0 / 38.0, 0.8] {
        let jump = case_iii_branch_jump(&geom.with_sz(s * geom.stopping_distance_l)).unwrap();
        let far = -2.0 * s * s.ln();
        let near = -s * s.ln();
        worst = worst
            .max((jump.far / far - 1.0).abs())
            .max((jump.near / near - 1.0).abs());
    }
    Outcome::new(
        identical && geometric_zero && worst < BRANCH_REL_TOL,
        format!(
            "case_i(SZ=0) == case_ii on 1000 points: {identical}; geometric = 0 beyond L - SZ: {geometric_zero}; \
             case_iii branch max rel err {worst:.2e} (tol {BRANCH_REL_TOL:.0e})"
        ),
    )
}

fn normalization_invariance() -> Outcome {
    let geom = GeigerGeometry::default();
    let grid: Vec<f64> = (0..=80).map(|i| 0.5 * f64::from(i)).collect();
    let g_norm = 3.0;
    let curves = normalized_curves(&ModelKind::ALL, &grid, g_norm, &geom).unwrap();
    let mut worst_unit: f64 = 0.0;
    let mut worst_scaled: f64 = 0.0;
    for c in &curves {
        let unit = normalize_curve(
            |g| source_averaged_flux(c.kind, g, &geom, DEFAULT_SOURCE_NODES),
            &[g_norm],
            g_norm,
            c.kind,
        )
        .unwrap()[0];
        worst_unit = worst_unit.max((unit - 1.0).abs());
        for factor in [1e-6, 0.37, 3.0, 2.5e7] {
            let scaled = normalize_curve(
                |g| Ok(factor * source_averaged_flux(c.kind, g, &geom, DEFAULT_SOURCE_NODES)?),
                &grid,
                g_norm,
                c.kind,
            )
            .unwrap();
            for (a, b) in scaled.iter().zip(&c.values) {
                worst_scaled = worst_scaled.max((a - b).abs());
            }
        }
    }
    Outcome::new(
        worst_unit < NORMALIZATION_TOL && worst_scaled < NORMALIZATION_TOL,
        format!("max |curve(g_norm) - 1| = {worst_unit:.1e}; max change under rescaling = {worst_scaled:.1e} (tol {NORMALIZATION_TOL:.0e})"),
    )
}

fn sz_fit_recovery() -> Outcome {
    let start = Instant::now();
    let geom = GeigerGeometry::default();
    let truth = 16.0;
    let grid: Vec<f64> = (0..=80).map(|i| 0.5 * f64::from(i)).collect();
    let clean: Vec<f64> = grid
        .iter()
        .map(|&g| {
            1000.0 * source_averaged_flux(ModelKind::CaseI, g, &geom.with_sz(truth), DEFAULT_SOURCE_NODES).unwrap()
        })
        .collect();
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut worst: f64 = 0.0;
    let mut fits = Vec::new();
    for seed in 0..10 {
        let mut r = rng(900 + seed);
        let data: Vec<(f64, f64)> = grid
            .iter()
            .zip(&clean)
            .map(|(&g, &c)| (g, c * (1.0 + noise.sample(&mut r))))
            .collect();
        let fit = fit_stopping_equiv(&data, ModelKind::CaseI, &geom, (1.0, 30.0)).unwrap();
        worst = worst.max((fit.sz_equiv_mm - truth).abs());
        fits.push(format!("{:.3}", fit.sz_equiv_mm));
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst < SZ_TOL_MM && within_budget(elapsed, 5.0),
        format!(
            "max |SZ - 16| = {worst:.4} mm (tol {SZ_TOL_MM}) [{}]; 10 seeds, {elapsed:.2?}",
            fits.join(", ")
        ),
    )
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let sim_cfg = tmp.path().join("sim.json");
    fs::write(&sim_cfg, r#"{"n": 50000, "cutoff_mm": 30.0}"#).unwrap();
    let geiger_cfg = tmp.path().join("geiger.json");
    fs::write(&geiger_cfg, r#"{"g_norm": 1.0}"#).unwrap();

    let run = |name: &str| -> Result<PathBuf, String> {
        let out = tmp.path().join(name);
        let out_arg = out.to_str().unwrap();
        for args in [
            vec![
                "chamber-simulate",
                "--seed",
                "2026",
                "--config",
                sim_cfg.to_str().unwrap(),
            ],
            vec!["geiger-curves", "--config", geiger_cfg.to_str().unwrap()],
        ] {
            let argv = std::iter::once("mottlab")
                .chain(args.iter().copied())
                .chain(["--out", out_arg]);
            let code = mottlab_cli::run(argv);
            if code != 0 {
                return Err(format!("`mottlab {}` exited with {code}", args.join(" ")));
            }
        }
        Ok(out)
    };
    let (a, b) = match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::new(false, format!("CLI run failed: {e}")),
    };
    let files = [
        "samples.csv",
        "model_cdf.csv",
        "empirical_cdf.csv",
        "summary.json",
        "geiger_curves.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| !a.join(f).exists() || fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok())
        .collect();
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} CSV/JSON artifacts byte-identical across two runs", files.len())
        } else {
            format!("artifacts differ or missing: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gamow normalization", gamow_normalization),
        ("continuity equation", continuity_equation),
        ("asymptotic flux", asymptotic_flux),
        ("critical radius round trip", critical_radius_round_trip),
        ("sampler fidelity", sampler_fidelity),
        ("chamber fit recovery", chamber_fit_recovery),
        ("geiger formula fidelity", geiger_formulas),
        ("normalization invariance", normalization_invariance),
        ("SZ-equivalent fit recovery", sz_fit_recovery),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}: {name}: {}", i + 1, outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
