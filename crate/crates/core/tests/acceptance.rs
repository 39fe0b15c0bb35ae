//! Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
//!
//! Run with `cargo test -p bgf-core --test acceptance` (add `--release` for speed).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bgf_core::glauber::{
    apply_generator, assemble_matrix, evaluate_generator_gf, vlasov_gap_bound, GeneratorKind,
};
use bgf_core::harness::{
    cmd_chaos_check, cmd_evolve, cmd_scaling_study, cmd_verify_bounds, cmd_vlasov, parse_config,
    ExperimentConfig, DEFAULT_EPSILONS,
};
use bgf_core::hierarchy::{
    evaluate_gf, exponential_hierarchy, flatten, max_abs_difference, ruelle_margin, scale_norm,
};
use bgf_core::ovsjannikov::{evolve_global, matrix_exp_oracle, solve_local, step_radius};
use bgf_core::vlasov::{integrate, Scheme, VlasovConfig};
use bgf_core::{CorrelationHierarchy, Grid, GridField, PairPotential, ScaleParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped_config(name: &str) -> ExperimentConfig {
    parse_config(&configs_dir().join(name)).expect("shipped config parses")
}

fn random_theta(grid: Grid, rng: &mut ChaCha8Rng) -> GridField {
    let s = 1.0 / grid.length();
    GridField::from_fn(grid, |_| rng.gen_range(-s..=s)).unwrap()
}

fn duality() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(8, 8.0).unwrap();
    let pot = PairPotential::gaussian(grid, 0.5, 1.0).unwrap();
    let params = ScaleParams::new(0.5, 1.0, 0.5, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let k = CorrelationHierarchy::random(grid, 3, 0.5, &mut rng).unwrap();
        let theta = random_theta(grid, &mut rng);
        let kind = GeneratorKind::Glauber;
        let lhs = evaluate_gf(&apply_generator(&k, &params, &pot, kind).unwrap(), &theta).unwrap();
        let rhs = evaluate_generator_gf(&k, &theta, &params, &pot, kind).unwrap();
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 10.0,
        format!("max relative error {worst:.2e}, {secs:.2}s"),
    )
}

fn epsilon_one() -> Outcome {
    let grid = Grid::new(8, 8.0).unwrap();
    let pot = PairPotential::gaussian(grid, 0.5, 1.0).unwrap();
    let params = ScaleParams::new(0.5, 1.0, 0.5, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let k = CorrelationHierarchy::random(grid, 3, 1.0, &mut rng).unwrap();
        let a = apply_generator(&k, &params, &pot, GeneratorKind::Rescaled(1.0)).unwrap();
        let b = apply_generator(&k, &params, &pot, GeneratorKind::Glauber).unwrap();
        worst = worst.max(max_abs_difference(&a, &b).unwrap());
    }
    check(worst <= 1e-12, format!("max entrywise difference {worst:.2e}"))
}

fn solver_vs_oracle() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(6, 6.0).unwrap();
    let pot = PairPotential::gaussian(grid, 0.5, 1.0).unwrap();
    let params = ScaleParams::new(0.5, 1.0, 0.5, 0.0).unwrap();
    let kind = GeneratorKind::Glauber;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u0 = CorrelationHierarchy::random(grid, 2, 0.5, &mut rng).unwrap();
    let radius = step_radius(
        bgf_core::glauber::norm_bound_m(&params, &pot),
        params.alpha,
        params.alpha0,
    );
    let t = 0.5 * radius;
    let report = solve_local(&params, &pot, kind, &u0, t, 80, 1e-15).map_err(|e| e.to_string())?;
    let matrix = assemble_matrix(grid, 2, &params, &pot, kind).unwrap();
    let oracle = matrix_exp_oracle(&matrix, &flatten(&u0), t).unwrap();
    let got = flatten(&report.solution);
    let scale = oracle.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let err = got
        .iter()
        .zip(&oracle)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    let secs = start.elapsed().as_secs_f64();
    check(
        matrix.nrows() == 43 && err <= 1e-8 && secs < 30.0,
        format!("D = {}, relative error {err:.2e}, {secs:.2}s", matrix.nrows()),
    )
}

fn radius_bookkeeping() -> Outcome {
    let e = std::f64::consts::E;
    let r = step_radius(1.0 + e, 0.5, 1.0);
    let formula = 0.5 / (e * (1.0 + e));
    let grid = Grid::new(8, 8.0).unwrap();
    let pot = PairPotential::gaussian(grid, 0.5, 1.0).unwrap();
    let params = ScaleParams::new(0.5, 1.0, 0.5, 0.0).unwrap();
    let u0 = exponential_hierarchy(&GridField::constant(grid, 0.1), 3).unwrap();
    let local = step_radius(
        bgf_core::glauber::norm_bound_m(&params, &pot),
        params.alpha,
        params.alpha0,
    );
    let err = solve_local(&params, &pot, GeneratorKind::Glauber, &u0, 1.01 * local, 80, 1e-14)
        .err()
        .map(|e| e.kind());
    check(
        (r - formula).abs() <= 1e-6 && err == Some("radius-exceeded"),
        format!("step_radius = {r:.6}, 1.01 x radius -> {}", err.unwrap_or("accepted")),
    )
}

fn equilibrium() -> Outcome {
    let grid = Grid::new(8, 8.0).unwrap();
    let z = 0.5;
    let pot = PairPotential::zero(grid);
    let params = ScaleParams::new(0.5, 1.0, z, 0.0).unwrap();
    let u0 = exponential_hierarchy(&GridField::constant(grid, z), 3).unwrap();
    let gen = apply_generator(&u0, &params, &pot, GeneratorKind::Glauber).unwrap();
    let gen_max = gen.order_maxima().into_iter().fold(0.0, f64::max);
    let r = evolve_global(&params, &pot, GeneratorKind::Glauber, &u0, 5.0, 0.9, 80, 1e-14)
        .map_err(|e| e.to_string())?;
    let drift = max_abs_difference(&r.solution, &u0).unwrap();
    let margin = ruelle_margin(&r.solution, z);
    check(
        gen_max <= 1e-12 && drift <= 1e-9 && (margin - 1.0).abs() <= 1e-9,
        format!("generator {gen_max:.1e}, drift {drift:.1e}, margin {margin}, {} restarts", r.restarts),
    )
}

fn vlasov_closed_form() -> Outcome {
    let grid = Grid::new(8, 8.0).unwrap();
    let cfg = VlasovConfig::new(1.0, 1e-3, Scheme::Rk4, 1.0).unwrap();
    let traj = integrate(&GridField::zeros(grid), &cfg, &PairPotential::zero(grid))
        .map_err(|e| e.to_string())?;
    let exact = 1.0 - (-1.0_f64).exp();
    let err = traj
        .last()
        .values()
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - exact).abs()));
    check(err <= 1e-8, format!("max error {err:.2e} against {exact:.10}"))
}

fn shipped_configs() -> Vec<(String, ExperimentConfig)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, parse_config(&p).unwrap())
        })
        .collect()
}

fn linf_bound() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut failed = Vec::new();
    let configs = shipped_configs();
    for (name, cfg) in &configs {
        match cmd_vlasov(cfg, dir.path()) {
            Ok(s) if s.bound_ok => {}
            Ok(_) => failed.push(name.clone()),
            Err(e) => failed.push(format!("{name} ({e})")),
        }
    }
    check(
        failed.is_empty() && !configs.is_empty(),
        format!("{} shipped trajectories, failing: {failed:?}", configs.len()),
    )
}

fn operator_convergence() -> Outcome {
    let grid = Grid::new(8, 8.0).unwrap();
    let pot = PairPotential::gaussian(grid, 0.5, 1.0).unwrap();
    let params = ScaleParams::new(0.5, 1.0, 0.5, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = CorrelationHierarchy::random(grid, 3, 0.5, &mut rng).unwrap();
    let limit = apply_generator(&k, &params, &pot, GeneratorKind::VlasovLimit).unwrap();
    let (a1, a2) = (0.6, 0.9);
    let mut diffs = Vec::new();
    let mut bound_ok = true;
    for &eps in &DEFAULT_EPSILONS {
        let kind = GeneratorKind::Rescaled(eps);
        let resc = apply_generator(&k, &params, &pot, kind).unwrap();
        diffs.push(max_abs_difference(&resc, &limit).unwrap());
        let bound = vlasov_gap_bound(eps, &params, &pot, a1, a2).unwrap();
        for _ in 0..20 {
            let theta = random_theta(grid, &mut rng);
            let gap = (evaluate_generator_gf(&k, &theta, &params, &pot, kind).unwrap()
                - evaluate_generator_gf(&k, &theta, &params, &pot, GeneratorKind::VlasovLimit)
                    .unwrap())
            .abs();
            let rhs = bound * scale_norm(&k, a2) * (theta.l1_norm() / a1).exp();
            bound_ok &= gap <= rhs;
        }
    }
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    let slope = bgf_core::harness::commands::fit_log_log(&DEFAULT_EPSILONS, &diffs);
    check(
        decreasing && (0.8..=1.2).contains(&slope) && bound_ok,
        format!(
            "differences {}, slope {slope:.3}, sampled bound {}",
            sci(&diffs),
            if bound_ok { "held" } else { "violated" }
        ),
    )
}

fn scaling_study() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped_config("default.conf");
    let r = cmd_scaling_study(&cfg, &DEFAULT_EPSILONS, dir.path()).map_err(|e| e.to_string())?;
    let nonincreasing = r.gaps.windows(2).all(|w| w[1] <= w[0]);
    let secs = start.elapsed().as_secs_f64();
    check(
        nonincreasing && (0.8..=1.2).contains(&r.fitted_order) && secs < 300.0,
        format!("gaps {}, fitted order {:.3}, {secs:.2}s", sci(&r.gaps), r.fitted_order),
    )
}

fn chaos() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped_config("chaos.conf");
    let s = cmd_chaos_check(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let free = cmd_chaos_check(&shipped_config("chaos_free.conf"), dir.path())
        .map_err(|e| e.to_string())?;
    let setup = cfg.z == 0.5 && cfg.t_final == 0.5 && cfg.n_max == 5 && cfg.n_sites == 8;
    check(
        setup && s.dev1 <= 1e-3 && s.dev2 <= 1e-3 && free.dev1 <= 1e-9 && free.dev2 <= 1e-9,
        format!(
            "dev1 {:.2e}, dev2 {:.2e}, |phi*rho| {:.3}; control {:.1e}/{:.1e}",
            s.dev1, s.dev2, s.conv_linf, free.dev1, free.dev2
        ),
    )
}

fn inequality_suites() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = cmd_verify_bounds(&shipped_config("default.conf"), 100, dir.path())
        .map_err(|e| e.to_string())?;
    let detail: Vec<String> = r
        .suites
        .iter()
        .map(|s| format!("{} {}/{}", s.name, s.violations, s.checks))
        .collect();
    check(r.total_violations() == 0, format!("violations: {}", detail.join(", ")))
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn run_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let default = shipped_config("default.conf");
    cmd_evolve(&shipped_config("global.conf"), dir).unwrap();
    cmd_vlasov(&default, dir).unwrap();
    cmd_scaling_study(&default, &DEFAULT_EPSILONS, dir).unwrap();
    cmd_chaos_check(&shipped_config("chaos.conf"), dir).unwrap();
    cmd_verify_bounds(&default, 20, dir).unwrap();
    read_outputs(dir)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = run_all(a.path());
    let second = run_all(b.path());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| run_all(c.path()));
    let differing: Vec<&String> = first
        .keys()
        .filter(|k| second.get(*k) != first.get(*k) || single.get(*k) != first.get(*k))
        .collect();
    check(
        first.len() == 8 && first.keys().eq(single.keys()) && differing.is_empty(),
        format!(
            "{} CSV files compared across reruns and a 1-thread pool, differing: {differing:?}",
            first.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("duality identity", duality),
        ("epsilon = 1 coincidence", epsilon_one),
        ("solver vs exponentiation oracle", solver_vs_oracle),
        ("radius bookkeeping", radius_bookkeeping),
        ("equilibrium stationarity", equilibrium),
        ("kinetic closed form", vlasov_closed_form),
        ("L-infinity a-priori bound", linf_bound),
        ("operator-level limit convergence", operator_convergence),
        ("GF-level scaling study", scaling_study),
        ("chaos preservation", chaos),
        ("inequality suites", inequality_suites),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
