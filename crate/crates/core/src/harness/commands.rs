//! The experiment commands behind the CLI subcommands.
//!
//! Each command writes its CSV files into an output directory and returns a
//! summary. Outputs depend only on the configuration (including the seed).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bounds::{birth_bound, death_bound, generator_bound, vlasov_gap_check, ScalePair};
use super::config::{ExperimentConfig, SolverMode};
use super::{num, write_csv};
use crate::error::{Error, Result};
use crate::glauber::{norm_bound_m, Closure, GeneratorKind};
use crate::hierarchy::{cauchy_estimate_sides, evaluate_gf, CorrelationHierarchy};
use crate::lattice::GridField;
use crate::ovsjannikov::{evolve_global, solve_local, step_radius, SolveReport, StepRecord};
use crate::vlasov::{integrate, linf_bound_check, stationary_residual, Scheme, Trajectory, VlasovConfig};

/// Scaling parameters used when no list is given.
pub const DEFAULT_EPSILONS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

/// Number of seeded test functions in the scaling-study distance.
pub const SCALING_THETAS: usize = 20;

/// Pass threshold of the chaos check.
pub const CHAOS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSummary {
    pub report: SolveReport,
    /// `Local` or `Global`, whichever actually ran.
    pub mode: SolverMode,
}

fn initial_record(k: &CorrelationHierarchy, alpha: f64, z: f64) -> StepRecord {
    StepRecord {
        time: 0.0,
        terms_used: 0,
        tail_estimate: 0.0,
        ruelle_margin: crate::hierarchy::ruelle_margin(k, z),
        scale_norm: crate::hierarchy::scale_norm(k, alpha),
        order_maxima: k.order_maxima(),
    }
}

/// Evolves the configured initial hierarchy and writes `evolve_steps.csv`
/// (`t,n,max_abs,scale_norm,ruelle_margin`) and `evolve_snapshot.csv`.
pub fn cmd_evolve(cfg: &ExperimentConfig, out: &Path) -> Result<EvolveSummary> {
    let params = cfg.scale_params()?;
    let pot = cfg.potential()?;
    let kind = cfg.generator_kind()?;
    let u0 = cfg.initial_hierarchy()?;
    let radius = step_radius(norm_bound_m(&params, &pot), params.alpha, params.alpha0);
    let mode = match cfg.mode {
        SolverMode::Auto if cfg.t_final < radius => SolverMode::Local,
        SolverMode::Auto => SolverMode::Global,
        m => m,
    };
    let report = if mode == SolverMode::Local {
        let mut r = solve_local(&params, &pot, kind, &u0, cfg.t_final, cfg.m_max, cfg.tol)?;
        r.steps.insert(0, initial_record(&u0, params.alpha, params.z));
        r
    } else {
        evolve_global(
            &params,
            &pot,
            kind,
            &u0,
            cfg.t_final,
            cfg.substep_fraction,
            cfg.m_max,
            cfg.tol,
        )?
    };

    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for step in &report.steps {
        for (n, m) in step.order_maxima.iter().enumerate() {
            rows.push(vec![
                num(step.time),
                n.to_string(),
                num(*m),
                num(step.scale_norm),
                num(step.ruelle_margin),
            ]);
        }
    }
    write_csv(
        &out.join("evolve_steps.csv"),
        &["t", "n", "max_abs", "scale_norm", "ruelle_margin"],
        &rows,
    )?;
    report
        .solution
        .write_snapshot(BufWriter::new(File::create(out.join("evolve_snapshot.csv"))?))?;
    Ok(EvolveSummary { report, mode })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlasovSummary {
    pub trajectory: Trajectory,
    pub stationary_residual: f64,
    pub bound_ok: bool,
    /// Distance to `z + (ρ₀ − z)e^{−t}` at the final time; only for φ ≡ 0.
    pub closed_form_error: Option<f64>,
}

/// Integrates the kinetic equation from ρ₀ and writes
/// `vlasov_trajectory.csv` and `vlasov_summary.csv`.
pub fn cmd_vlasov(cfg: &ExperimentConfig, out: &Path) -> Result<VlasovSummary> {
    let pot = cfg.potential()?;
    let rho0 = cfg.initial_density_field()?;
    let dt = if cfg.t_final > 0.0 { cfg.vlasov_dt.min(cfg.t_final) } else { cfg.vlasov_dt };
    let vcfg = VlasovConfig::new(cfg.z, dt, Scheme::Rk4, cfg.t_final)?;
    let trajectory = integrate(&rho0, &vcfg, &pot)?;
    let last = trajectory.last();
    let residual = stationary_residual(last, cfg.z, &pot)?;
    let bound_ok = linf_bound_check(&trajectory, &rho0, cfg.z);
    let closed_form_error = pot.is_zero().then(|| {
        let decay = (-cfg.t_final).exp();
        rho0.values()
            .iter()
            .zip(last.values())
            .map(|(r0, r)| (r - (cfg.z + (r0 - cfg.z) * decay)).abs())
            .fold(0.0, f64::max)
    });

    fs::create_dir_all(out)?;
    trajectory.write_csv(BufWriter::new(File::create(out.join("vlasov_trajectory.csv"))?))?;
    write_csv(
        &out.join("vlasov_summary.csv"),
        &["t_final", "stationary_residual", "linf_bound", "closed_form_max_error"],
        &[vec![
            num(cfg.t_final),
            num(residual),
            if bound_ok { "pass" } else { "fail" }.to_string(),
            closed_form_error.map(num).unwrap_or_default(),
        ]],
    )?;
    Ok(VlasovSummary {
        trajectory,
        stationary_residual: residual,
        bound_ok,
        closed_form_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudyResult {
    pub epsilons: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Least-squares slope of `ln gap` against `ln ε`; NaN with fewer than
    /// two positive gaps.
    pub fitted_order: f64,
}

/// Least-squares slope of `ln y` against `ln x` over the positive pairs.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Seeded test functions with values uniform in `[−1/L, 1/L]`.
fn sample_thetas(cfg: &ExperimentConfig, count: usize) -> Result<Vec<GridField>> {
    let grid = cfg.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = 1.0 / grid.length();
    (0..count)
        .map(|_| GridField::from_fn(grid, |_| rng.gen_range(-s..=s)))
        .collect()
}

/// Evolves the common initial hierarchy under the rescaled generator for each
/// ε and under the limit generator, and records the weighted GF distance.
/// Writes `scaling_study.csv` (`epsilon,gap`) and `scaling_fit.csv`.
pub fn cmd_scaling_study(
    cfg: &ExperimentConfig,
    epsilons: &[f64],
    out: &Path,
) -> Result<ScalingStudyResult> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("epsilon list is empty".into()));
    }
    let params = cfg.scale_params()?;
    let pot = cfg.potential()?;
    let u0 = cfg.initial_hierarchy()?;
    let thetas = sample_thetas(cfg, SCALING_THETAS)?;
    let evolve = |kind| -> Result<Vec<f64>> {
        let r = solve_local(&params, &pot, kind, &u0, cfg.t_final, cfg.m_max, cfg.tol)?;
        thetas.iter().map(|th| evaluate_gf(&r.solution, th)).collect()
    };
    let limit = evolve(GeneratorKind::VlasovLimit)?;
    let kinds = epsilons
        .iter()
        .map(|&e| GeneratorKind::rescaled(e))
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<Result<Vec<f64>>> = kinds.par_iter().map(|&kind| evolve(kind)).collect();
    let mut gaps = Vec::with_capacity(epsilons.len());
    for run in runs {
        let values = run?;
        let gap = values
            .iter()
            .zip(&limit)
            .zip(&thetas)
            .map(|((b_eps, b_v), th)| (b_eps - b_v).abs() * (-th.l1_norm() / params.alpha).exp())
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    let fitted_order = fit_log_log(epsilons, &gaps);

    fs::create_dir_all(out)?;
    let rows: Vec<Vec<String>> = epsilons
        .iter()
        .zip(&gaps)
        .map(|(e, g)| vec![num(*e), num(*g)])
        .collect();
    write_csv(&out.join("scaling_study.csv"), &["epsilon", "gap"], &rows)?;
    write_csv(
        &out.join("scaling_fit.csv"),
        &["fitted_order", "points"],
        &[vec![num(fitted_order), epsilons.len().to_string()]],
    )?;
    Ok(ScalingStudyResult {
        epsilons: epsilons.to_vec(),
        gaps,
        fitted_order,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosSummary {
    pub t: f64,
    /// `‖k⁽¹⁾ − ρ_t‖_∞`.
    pub dev1: f64,
    /// `max|k⁽²⁾(x, y) − ρ_t(x)ρ_t(y)|`.
    pub dev2: f64,
    /// `‖φ*ρ‖_∞` maximized over the stored trajectory.
    pub conv_linf: f64,
    pub restarts: usize,
    pub pass: bool,
}

/// Evolves the product-form hierarchy of ρ₀ under the limit generator and
/// compares its first two orders with the kinetic equation. Writes
/// `chaos_check.csv`.
pub fn cmd_chaos_check(cfg: &ExperimentConfig, out: &Path) -> Result<ChaosSummary> {
    if cfg.n_max < 4 {
        return Err(Error::InvalidArgument(format!(
            "chaos check needs truncation.n_max >= 4, got {}",
            cfg.n_max
        )));
    }
    let params = cfg.scale_params()?;
    let pot = cfg.potential()?;
    let grid = cfg.grid()?;
    let rho0 = cfg.initial_density_field()?;
    let u0 = cfg.initial_hierarchy()?;
    let report = evolve_global(
        &params,
        &pot,
        GeneratorKind::VlasovLimit,
        &u0,
        cfg.t_final,
        cfg.substep_fraction,
        cfg.m_max,
        cfg.tol,
    )?;
    let dt = if cfg.t_final > 0.0 { cfg.vlasov_dt.min(cfg.t_final) } else { cfg.vlasov_dt };
    let traj = integrate(&rho0, &VlasovConfig::new(cfg.z, dt, Scheme::Rk4, cfg.t_final)?, &pot)?;
    let rho = traj.last().values();
    let k = &report.solution;
    let n = grid.n_sites();
    let mut dev1 = 0.0_f64;
    let mut dev2 = 0.0_f64;
    for x in 0..n {
        dev1 = dev1.max((k.get(&[x])? - rho[x]).abs());
        for y in 0..n {
            dev2 = dev2.max((k.get(&[x, y])? - rho[x] * rho[y]).abs());
        }
    }
    let mut conv_linf = 0.0_f64;
    for state in &traj.states {
        conv_linf = conv_linf.max(pot.convolve(state)?.linf_norm());
    }
    let pass = dev1 <= CHAOS_TOL && dev2 <= CHAOS_TOL;

    fs::create_dir_all(out)?;
    write_csv(
        &out.join("chaos_check.csv"),
        &["t", "dev1", "dev2", "conv_linf", "restarts", "verdict"],
        &[vec![
            num(cfg.t_final),
            num(dev1),
            num(dev2),
            num(conv_linf),
            report.restarts.to_string(),
            if pass { "pass" } else { "fail" }.to_string(),
        ]],
    )?;
    Ok(ChaosSummary {
        t: cfg.t_final,
        dev1,
        dev2,
        conv_linf,
        restarts: report.restarts,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    /// Largest observed `lhs/rhs`.
    pub max_ratio: f64,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            violations: 0,
            max_ratio: 0.0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.checks += 1;
        if !(lhs <= rhs) {
            self.violations += 1;
        }
        if rhs > 0.0 {
            self.max_ratio = self.max_ratio.max(lhs / rhs);
        } else if lhs > 0.0 {
            self.max_ratio = f64::INFINITY;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub cases: usize,
    pub suites: Vec<SuiteResult>,
}

impl BoundsReport {
    pub fn total_violations(&self) -> usize {
        self.suites.iter().map(|s| s.violations).sum()
    }
}

/// Test functions per random hierarchy in `verify-bounds`.
pub const THETAS_PER_CASE: usize = 5;

/// Runs the inequality suites on `n_cases` random hierarchies obeying the
/// Ruelle envelope `|k⁽ⁿ⁾| ≤ zⁿ`. Writes `verify_bounds.csv`
/// (`suite,checks,violations,max_ratio`).
pub fn cmd_verify_bounds(cfg: &ExperimentConfig, n_cases: usize, out: &Path) -> Result<BoundsReport> {
    if n_cases == 0 {
        return Err(Error::InvalidArgument("need at least one case".into()));
    }
    let params = cfg.scale_params()?;
    let pot = cfg.potential()?;
    let grid = cfg.grid()?;
    let (alpha, alpha0) = (params.alpha, params.alpha0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut death = SuiteResult::new("death");
    let mut birth = SuiteResult::new("birth");
    let mut generator = SuiteResult::new("generator");
    let mut gap = SuiteResult::new("limit_gap");
    let mut cauchy = SuiteResult::new("cauchy");

    for _ in 0..n_cases {
        let k = CorrelationHierarchy::random(grid, cfg.n_max, params.z, &mut rng)?;
        let a1 = rng.gen_range(alpha..alpha0);
        let a2 = rng.gen_range(a1..=alpha0);
        let s = match ScalePair::new(a1, a2) {
            Ok(s) => s,
            Err(_) => ScalePair::new(a1, alpha0)?,
        };
        let epsilon = rng.gen_range(0.01..=1.0);
        let kinds = [
            GeneratorKind::Glauber,
            GeneratorKind::rescaled(epsilon)?,
            GeneratorKind::VlasovLimit,
        ];
        for _ in 0..THETAS_PER_CASE {
            let spread = rng.gen_range(0.0..=3.0) * s.alpha_prime / grid.length();
            let theta = GridField::from_fn(grid, |_| rng.gen_range(-spread..=spread))?;
            let (l, r) = death_bound(&k, &theta, s)?;
            death.record(l, r);
            for closure in [Closure::Truncated, Closure::Full] {
                for kind in kinds {
                    if let Some((l, r)) = birth_bound(&k, &theta, &pot, kind, closure, s)? {
                        birth.record(l, r);
                    }
                    let (l, r) = generator_bound(&k, &theta, &params, &pot, kind, closure, s)?;
                    generator.record(l, r);
                }
                let (l, r) = vlasov_gap_check(&k, &theta, &params, &pot, epsilon, closure, s)?;
                gap.record(l, r);
            }
        }
        for n in 1..=cfg.n_max {
            let radius = rng.gen_range(0.1..=3.0);
            let (l, r) = cauchy_estimate_sides(&k, n, radius)?;
            cauchy.record(l, r);
        }
    }

    let report = BoundsReport {
        cases: n_cases,
        suites: vec![death, birth, generator, gap, cauchy],
    };
    fs::create_dir_all(out)?;
    let rows: Vec<Vec<String>> = report
        .suites
        .iter()
        .map(|s| {
            vec![
                s.name.to_string(),
                s.checks.to_string(),
                s.violations.to_string(),
                num(s.max_ratio),
            ]
        })
        .collect();
    write_csv(
        &out.join("verify_bounds.csv"),
        &["suite", "checks", "violations", "max_ratio"],
        &rows,
    )?;
    Ok(report)
}
