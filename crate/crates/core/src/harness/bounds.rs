//! Sampled-θ inequality checks.
//!
//! Every check returns `(lhs, rhs)`; the inequality holds iff `lhs ≤ rhs`.
//! The surrogate `S = scale_norm(k, α″)` dominates the scale norm of the
//! functional, so it only ever appears on the right-hand side.

use crate::error::{Error, Result};
use crate::glauber::{
    evaluate_birth_gf, evaluate_death_gf, evaluate_generator_gf, evaluate_generator_gf_full,
    norm_bound_m, shift_constants, vlasov_gap_bound, Closure, GeneratorKind,
};
use crate::hierarchy::{scale_norm, CorrelationHierarchy, ScaleParams};
use crate::lattice::{GridField, PairPotential};

/// A pair of intermediate scale indices `α′ < α″`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePair {
    pub alpha_prime: f64,
    pub alpha_dprime: f64,
}

impl ScalePair {
    pub fn new(alpha_prime: f64, alpha_dprime: f64) -> Result<Self> {
        if !(alpha_prime > 0.0 && alpha_prime < alpha_dprime && alpha_dprime.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < alpha' < alpha'', got {alpha_prime}, {alpha_dprime}"
            )));
        }
        Ok(Self {
            alpha_prime,
            alpha_dprime,
        })
    }

    fn gap(&self) -> f64 {
        self.alpha_dprime - self.alpha_prime
    }

    /// `scale_norm(k, α″)·e^{‖θ‖₁/α′}`.
    fn majorant(&self, k: &CorrelationHierarchy, theta: &GridField) -> f64 {
        scale_norm(k, self.alpha_dprime) * (theta.l1_norm() / self.alpha_prime).exp()
    }
}

/// Death part: `|Σ Δx·θ·δB| ≤ α′/(α″ − α′)·S·e^{‖θ‖₁/α′}`.
pub fn death_bound(k: &CorrelationHierarchy, theta: &GridField, s: ScalePair) -> Result<(f64, f64)> {
    let lhs = evaluate_death_gf(k, theta)?.abs();
    Ok((lhs, s.alpha_prime / s.gap() * s.majorant(k, theta)))
}

/// Birth part: `|Σ Δx·θ(x)·B(a_x·θ + b_x)| ≤ α″α′/(α″ − c₀α′)·e^{c₁/α″ − 1}·S·e^{‖θ‖₁/α′}`
/// with `c₀ = max a`, `c₁ = max_x ‖b_x‖₁`. `None` when `c₀α′ ≥ α″`.
pub fn birth_bound(
    k: &CorrelationHierarchy,
    theta: &GridField,
    pot: &PairPotential,
    kind: GeneratorKind,
    closure: Closure,
    s: ScalePair,
) -> Result<Option<(f64, f64)>> {
    let (c0, c1) = shift_constants(pot, kind)?;
    let denom = s.alpha_dprime - c0 * s.alpha_prime;
    if denom <= 0.0 {
        return Ok(None);
    }
    let lhs = evaluate_birth_gf(k, theta, pot, kind, closure)?.abs();
    let rhs = s.alpha_dprime * s.alpha_prime / denom
        * (c1 / s.alpha_dprime - 1.0).exp()
        * s.majorant(k, theta);
    Ok(Some((lhs, rhs)))
}

fn generator_gf(
    k: &CorrelationHierarchy,
    theta: &GridField,
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
    closure: Closure,
) -> Result<f64> {
    match closure {
        Closure::Truncated => evaluate_generator_gf(k, theta, params, pot, kind),
        Closure::Full => evaluate_generator_gf_full(k, theta, params, pot, kind),
    }
}

/// Full generator: `|L̃B(θ)| ≤ M/(α″ − α′)·S·e^{‖θ‖₁/α′}`; needs `α ≤ α′ < α″ ≤ α₀`.
pub fn generator_bound(
    k: &CorrelationHierarchy,
    theta: &GridField,
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
    closure: Closure,
    s: ScalePair,
) -> Result<(f64, f64)> {
    check_inside(params, s)?;
    let lhs = generator_gf(k, theta, params, pot, kind, closure)?.abs();
    Ok((lhs, norm_bound_m(params, pot) / s.gap() * s.majorant(k, theta)))
}

/// Rescaled minus limit generator against `vlasov_gap_bound·S·e^{‖θ‖₁/α′}`.
pub fn vlasov_gap_check(
    k: &CorrelationHierarchy,
    theta: &GridField,
    params: &ScaleParams,
    pot: &PairPotential,
    epsilon: f64,
    closure: Closure,
    s: ScalePair,
) -> Result<(f64, f64)> {
    check_inside(params, s)?;
    let rescaled = generator_gf(k, theta, params, pot, GeneratorKind::rescaled(epsilon)?, closure)?;
    let limit = generator_gf(k, theta, params, pot, GeneratorKind::VlasovLimit, closure)?;
    let bound = vlasov_gap_bound(epsilon, params, pot, s.alpha_prime, s.alpha_dprime)?;
    Ok(((rescaled - limit).abs(), bound * s.majorant(k, theta)))
}

fn check_inside(params: &ScaleParams, s: ScalePair) -> Result<()> {
    if params.alpha <= s.alpha_prime && s.alpha_dprime <= params.alpha0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "need alpha <= alpha' < alpha'' <= alpha0, got {} <= {} < {} <= {}",
            params.alpha, s.alpha_prime, s.alpha_dprime, params.alpha0
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn suites_hold_on_random_cases() {
        let g = make_grid(6, 6.0).unwrap();
        let pot = PairPotential::gaussian(g, 0.8, 1.0).unwrap();
        let params = ScaleParams::new(0.5, 1.0, 0.6, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let k = CorrelationHierarchy::random(g, 3, 0.6, &mut rng).unwrap();
            let a1 = rng.gen_range(0.5..0.95);
            let s = ScalePair::new(a1, rng.gen_range(a1 + 0.01..=1.0)).unwrap();
            let spread = rng.gen_range(0.0..3.0) / 6.0;
            let theta = GridField::from_fn(g, |_| rng.gen_range(-spread..=spread)).unwrap();
            let (l, r) = death_bound(&k, &theta, s).unwrap();
            assert!(l <= r);
            for closure in [Closure::Truncated, Closure::Full] {
                for kind in [GeneratorKind::Glauber, GeneratorKind::Rescaled(0.3), GeneratorKind::VlasovLimit] {
                    let (l, r) = birth_bound(&k, &theta, &pot, kind, closure, s).unwrap().unwrap();
                    assert!(l <= r);
                    let (l, r) = generator_bound(&k, &theta, &params, &pot, kind, closure, s).unwrap();
                    assert!(l <= r);
                }
                let (l, r) = vlasov_gap_check(&k, &theta, &params, &pot, 0.2, closure, s).unwrap();
                assert!(l <= r);
            }
        }
    }

    #[test]
    fn zero_potential_constants() {
        let g = make_grid(4, 4.0).unwrap();
        let (c0, c1) = shift_constants(&PairPotential::zero(g), GeneratorKind::Glauber).unwrap();
        assert_eq!((c0, c1), (1.0, 0.0));
    }

    #[test]
    fn outside_scale_rejected() {
        let g = make_grid(4, 4.0).unwrap();
        let params = ScaleParams::new(0.5, 1.0, 1.0, 0.0).unwrap();
        let k = CorrelationHierarchy::vacuum(g, 1).unwrap();
        let theta = GridField::zeros(g);
        let s = ScalePair::new(0.2, 0.9).unwrap();
        let pot = PairPotential::zero(g);
        assert!(generator_bound(&k, &theta, &params, &pot, GeneratorKind::Glauber, Closure::Full, s).is_err());
        assert!(ScalePair::new(0.9, 0.9).is_err());
    }
}
