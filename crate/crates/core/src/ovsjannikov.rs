//! Taylor-series solver on a scale of norms.
//!
//! For `du/dt = A u` with `‖A u‖_{α′} ≤ M/(α″ − α′)·‖u‖_{α″}` the series
//! `Σ tᵐ/m!·Aᵐu₀` converges in `E_α` for `t < δ·(α₀ − α)`, `δ = 1/(e·M)`.
//! [`solve_local`] enforces that interval; [`evolve_global`] restarts from the
//! current state as long as the Ruelle bound keeps the scale fixed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glauber::{apply_generator, norm_bound_m, GeneratorKind, MATRIX_ENTRY_LIMIT};
use crate::hierarchy::{axpy, ruelle_margin, scale, scale_norm, CorrelationHierarchy, ScaleParams};
use crate::lattice::PairPotential;

/// Allowed initial excess of the Ruelle margin over 1 in global mode.
pub const RUELLE_TOL: f64 = 1e-6;

/// Margin excess at a restart that is reported as a violation.
pub const RUELLE_DRIFT_TOL: f64 = 1e-3;

pub const DEFAULT_SUBSTEP_FRACTION: f64 = 0.9;

const F_Q_MAX_TERMS: usize = 10_000_000;

/// Diagnostics of one Taylor step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub time: f64,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub ruelle_margin: f64,
    pub scale_norm: f64,
    /// `max|k⁽ⁿ⁾|` for each order of the state.
    pub order_maxima: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: CorrelationHierarchy,
    /// Terms summed; the total over all substeps in global mode.
    pub terms_used: usize,
    /// Norm of the last added term; the largest over substeps in global mode.
    pub tail_estimate: f64,
    /// Guaranteed interval length `δ·(α₀ − α)`, infinite when no guard applies.
    pub radius: f64,
    pub restarts: usize,
    pub steps: Vec<StepRecord>,
}

/// `δ·(α₀ − α)` with `δ = 1/(e·M)`.
pub fn step_radius(m: f64, alpha: f64, alpha0: f64) -> f64 {
    (alpha0 - alpha) / (std::f64::consts::E * m)
}

/// Sums `Σ_{m≤m*} tᵐ/m!·Aᵐu₀`, stopping at the first term whose
/// `scale_norm(·, alpha)` drops below `tol`.
pub fn taylor_evolve<F>(
    mut apply: F,
    u0: &CorrelationHierarchy,
    t: f64,
    alpha: f64,
    m_max: usize,
    tol: f64,
) -> Result<SolveReport>
where
    F: FnMut(&CorrelationHierarchy) -> Result<CorrelationHierarchy>,
{
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    let mut sum = u0.clone();
    let mut term = u0.clone();
    let mut terms_used = 0;
    let mut tail = 0.0;
    if t > 0.0 {
        tail = f64::INFINITY;
        for m in 1..=m_max {
            term = scale(t / m as f64, &apply(&term)?);
            sum = axpy(1.0, &term, &sum)?;
            terms_used = m;
            tail = scale_norm(&term, alpha);
            if !tail.is_finite() {
                return Err(Error::NonfiniteState { time: t });
            }
            if tail < tol {
                break;
            }
        }
        if !(tail < tol) {
            return Err(Error::NoConvergence {
                terms: terms_used,
                tail,
            });
        }
    }
    let record = StepRecord {
        time: t,
        terms_used,
        tail_estimate: tail,
        ruelle_margin: f64::NAN,
        scale_norm: scale_norm(&sum, alpha),
        order_maxima: sum.order_maxima(),
    };
    Ok(SolveReport {
        solution: sum,
        terms_used,
        tail_estimate: tail,
        radius: f64::INFINITY,
        restarts: 0,
        steps: vec![record],
    })
}

/// One Taylor step of the hierarchy dynamics inside the guaranteed interval.
pub fn solve_local(
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
    u0: &CorrelationHierarchy,
    t: f64,
    m_max: usize,
    tol: f64,
) -> Result<SolveReport> {
    let radius = step_radius(norm_bound_m(params, pot), params.alpha, params.alpha0);
    if t >= radius {
        return Err(Error::RadiusExceeded { t, radius });
    }
    let mut report = taylor_evolve(
        |k| apply_generator(k, params, pot, kind),
        u0,
        t,
        params.alpha,
        m_max,
        tol,
    )?;
    report.radius = radius;
    for step in &mut report.steps {
        step.ruelle_margin = ruelle_margin(&report.solution, params.z);
    }
    Ok(report)
}

/// Continues the local solution to `t_final` in equal substeps of at most
/// `substep_fraction` times the radius, with `α₀ = 1/z` and `α = α₀/2`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_global(
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
    u0: &CorrelationHierarchy,
    t_final: f64,
    substep_fraction: f64,
    m_max: usize,
    tol: f64,
) -> Result<SolveReport> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "final time must be non-negative, got {t_final}"
        )));
    }
    if !(substep_fraction > 0.0 && substep_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "substep fraction must lie in (0, 1), got {substep_fraction}"
        )));
    }
    let z = params.z;
    let alpha0 = 1.0 / z;
    let local = ScaleParams::new(alpha0 / 2.0, alpha0, z, params.epsilon)?;
    let radius = step_radius(norm_bound_m(&local, pot), local.alpha, local.alpha0);

    let margin = ruelle_margin(u0, z);
    if margin > 1.0 + RUELLE_TOL {
        return Err(Error::RuelleViolated { margin, time: 0.0 });
    }
    let n_steps = if t_final == 0.0 {
        0
    } else {
        (t_final / (substep_fraction * radius) - 1e-12).ceil().max(1.0) as usize
    };
    let h = if n_steps == 0 { 0.0 } else { t_final / n_steps as f64 };

    let mut state = u0.clone();
    let mut steps = vec![StepRecord {
        time: 0.0,
        terms_used: 0,
        tail_estimate: 0.0,
        ruelle_margin: margin,
        scale_norm: scale_norm(u0, local.alpha),
        order_maxima: u0.order_maxima(),
    }];
    let mut terms_used = 0;
    let mut tail = 0.0_f64;
    for i in 0..n_steps {
        let time = i as f64 * h;
        let margin = ruelle_margin(&state, z);
        if margin > 1.0 + RUELLE_DRIFT_TOL {
            return Err(Error::RuelleViolated { margin, time });
        }
        let step = solve_local(&local, pot, kind, &state, h, m_max, tol)?;
        terms_used += step.terms_used;
        tail = tail.max(step.tail_estimate);
        state = step.solution;
        let end = if i + 1 == n_steps { t_final } else { (i + 1) as f64 * h };
        steps.push(StepRecord {
            time: end,
            terms_used: step.terms_used,
            tail_estimate: step.tail_estimate,
            ruelle_margin: ruelle_margin(&state, z),
            scale_norm: scale_norm(&state, local.alpha),
            order_maxima: state.order_maxima(),
        });
    }
    Ok(SolveReport {
        solution: state,
        terms_used,
        tail_estimate: tail,
        radius,
        restarts: n_steps.saturating_sub(1),
        steps,
    })
}

/// `f_q(t) = Σ_{m≥1} m^q/m!·(x·m)^m` with `x = t·M/gap`, summed in log space.
pub fn f_q_series(q: u32, t: f64, m: f64, gap: f64, tol: f64) -> Result<f64> {
    if !(t >= 0.0 && m > 0.0 && gap > 0.0 && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "f_q needs t >= 0 and positive M, gap, tol (t = {t}, M = {m}, gap = {gap}, tol = {tol})"
        )));
    }
    let x = t * m / gap;
    if x >= std::f64::consts::E.recip() {
        return Err(Error::DivergentSeries { ratio: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ln_x = x.ln();
    let mut ln_fact = 0.0;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for j in 1..=F_Q_MAX_TERMS {
        let jf = j as f64;
        ln_fact += jf.ln();
        let term = (q as f64 * jf.ln() + jf * (ln_x + jf.ln()) - ln_fact).exp();
        sum += term;
        if term < tol && term <= prev {
            return Ok(sum);
        }
        prev = term;
    }
    Err(Error::NoConvergence {
        terms: F_Q_MAX_TERMS,
        tail: prev,
    })
}

/// `e^{tA}·v` by scaling and squaring of the dense matrix.
pub fn matrix_exp_oracle(matrix: &DMatrix<f64>, v: &[f64], t: f64) -> Result<Vec<f64>> {
    let (rows, cols) = matrix.shape();
    if rows != cols || cols != v.len() {
        return Err(Error::InvalidArgument(format!(
            "need a square matrix matching the vector, got {rows}x{cols} and {}",
            v.len()
        )));
    }
    if rows.checked_mul(cols).is_none_or(|e| e > MATRIX_ENTRY_LIMIT) {
        return Err(Error::MemoryGuard {
            entries: (rows as u128) * (cols as u128),
            limit: MATRIX_ENTRY_LIMIT as u128,
        });
    }
    let e = (matrix * t).exp();
    let out = e * DVector::from_column_slice(v);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonfiniteState { time: t });
    }
    Ok(out.as_slice().to_vec())
}
