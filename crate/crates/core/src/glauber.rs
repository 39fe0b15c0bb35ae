//! Generators of the hierarchy dynamics.
//!
//! All three generators share the form
//!
//! ```text
//! (L̃B)(θ) = −Σ_x Δx·θ(x)·[ δB(θ; x) − z·B(a_x·θ + b_x) ]
//! ```
//!
//! and differ only in the shift fields `a_x`, `b_x`:
//!
//! | kind          | `a_x(y)`       | `b_x(y)`                  |
//! |---------------|----------------|---------------------------|
//! | Glauber       | `e^{−φ(x−y)}`  | `e^{−φ(x−y)} − 1`         |
//! | rescaled(ε)   | `e^{−εφ(x−y)}` | `(e^{−εφ(x−y)} − 1)/ε`    |
//! | Vlasov limit  | `1`            | `−φ(x−y)`                 |
//!
//! On tensors the death part multiplies `k⁽ⁿ⁾` by `n` and the birth part is
//! `out⁽ⁿ⁾(x₁..xₙ) = Σᵢ c_{xᵢ}⁽ⁿ⁻¹⁾(x₁..x̂ᵢ..xₙ)` with `c_x` the hierarchy of
//! `θ ↦ B(a_x·θ + b_x)`. The top order `n_max + 1` of the product
//! `θ(x)·B(…)` is dropped (closure by zero), which is why the GF-level
//! reference evaluation comes in a truncated and a full variant.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{
    self, evaluate_gf, evaluate_homogeneous, variational_derivative, CorrelationHierarchy,
    ScaleParams,
};
use crate::lattice::{Grid, GridField, PairPotential};
use crate::tensor;

/// Below this ε the rescaled b-field uses the series `−φ(1 − εφ/2)`.
const SMALL_EPSILON: f64 = 1e-8;

/// Upper bound on `D²` for dense generator matrices.
pub const MATRIX_ENTRY_LIMIT: usize = 16_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    Glauber,
    /// Vlasov-rescaled generator with `ε > 0`.
    Rescaled(f64),
    VlasovLimit,
}

impl GeneratorKind {
    pub fn rescaled(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(GeneratorKind::Rescaled(epsilon))
        } else {
            Err(Error::InvalidArgument(format!(
                "rescaled generator needs epsilon > 0, got {epsilon}"
            )))
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GeneratorKind::Rescaled(eps) => Self::rescaled(eps).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// Whether the GF-level birth term keeps the order `n_max + 1` part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// Drop everything above `n_max`, matching the tensor-level generators.
    Truncated,
    /// Evaluate the generator literally on the polynomial functional.
    Full,
}

/// Shift fields indexed by displacement `d = x − y`.
struct DisplacementShifts {
    a: Vec<f64>,
    b: Vec<f64>,
}

fn displacement_shifts(pot: &PairPotential, kind: GeneratorKind) -> DisplacementShifts {
    let phi = pot.values();
    let (a, b) = match kind {
        GeneratorKind::Glauber => (
            phi.iter().map(|p| (-p).exp()).collect(),
            phi.iter().map(|p| (-p).exp_m1()).collect(),
        ),
        GeneratorKind::Rescaled(eps) => (
            phi.iter().map(|p| (-eps * p).exp()).collect(),
            phi.iter()
                .map(|&p| {
                    if eps < SMALL_EPSILON {
                        -p * (1.0 - eps * p / 2.0)
                    } else {
                        (-eps * p).exp_m1() / eps
                    }
                })
                .collect(),
        ),
        GeneratorKind::VlasovLimit => (vec![1.0; phi.len()], phi.iter().map(|p| -p).collect()),
    };
    DisplacementShifts { a, b }
}

impl DisplacementShifts {
    fn at(&self, grid: &Grid, x: usize) -> (Vec<f64>, Vec<f64>) {
        let n = grid.n_sites();
        let a = (0..n).map(|y| self.a[grid.displacement(x, y)]).collect();
        let b = (0..n).map(|y| self.b[grid.displacement(x, y)]).collect();
        (a, b)
    }
}

/// The fields `(a_x, b_x)` of the birth term at site `x`.
pub fn shift_fields(pot: &PairPotential, kind: GeneratorKind, x: usize) -> Result<(GridField, GridField)> {
    kind.validate()?;
    pot.grid().check_index(x)?;
    let (a, b) = displacement_shifts(pot, kind).at(pot.grid(), x);
    Ok((GridField::new(*pot.grid(), a)?, GridField::new(*pot.grid(), b)?))
}

/// `(c₀, c₁) = (max_x ‖a_x‖_∞, max_x ‖b_x‖₁)`.
pub fn shift_constants(pot: &PairPotential, kind: GeneratorKind) -> Result<(f64, f64)> {
    kind.validate()?;
    let s = displacement_shifts(pot, kind);
    let c0 = tensor::max_abs(&s.a);
    let c1 = s.b.iter().map(|v| v.abs()).sum::<f64>() * pot.grid().spacing();
    Ok((c0, c1))
}

/// Death part: `out⁽ⁿ⁾ = n·k⁽ⁿ⁾`.
pub fn apply_death(k: &CorrelationHierarchy) -> CorrelationHierarchy {
    let tensors = k
        .tensors()
        .iter()
        .enumerate()
        .map(|(n, t)| t.iter().map(|v| n as f64 * v).collect())
        .collect();
    CorrelationHierarchy::from_tensors_unchecked(*k.grid(), tensors)
}

fn birth_tensors(
    k: &CorrelationHierarchy,
    pot: &PairPotential,
    kind: GeneratorKind,
) -> Result<Vec<Vec<f64>>> {
    k.grid().check_same(pot.grid())?;
    kind.validate()?;
    let grid = *k.grid();
    let n_sites = grid.n_sites();
    let n_max = k.n_max();
    let mut out = vec![vec![0.0]];
    if n_max == 0 {
        return Ok(out);
    }
    let shifts = displacement_shifts(pot, kind);
    // c_x for every distinguished site, collected in site order
    let per_site: Vec<Vec<Vec<f64>>> = (0..n_sites)
        .into_par_iter()
        .map(|x| {
            let (a, b) = shifts.at(&grid, x);
            hierarchy::substituted_tensors(k, &a, &b, n_max - 1)
        })
        .collect();
    let mut rest = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let t = tensor::fill_symmetric(n_sites, n, |idx| {
            let mut total = 0.0;
            for i in 0..n {
                rest.clear();
                rest.extend(idx.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v));
                total += per_site[idx[i]][n - 1][tensor::encode(&rest, n_sites)];
            }
            total
        });
        out.push(t);
    }
    Ok(out)
}

/// Birth part `θ ↦ Σ_x Δx·θ(x)·B(a_x·θ + b_x)` on tensors, closure by zero.
pub fn apply_birth(
    k: &CorrelationHierarchy,
    pot: &PairPotential,
    kind: GeneratorKind,
) -> Result<CorrelationHierarchy> {
    Ok(CorrelationHierarchy::from_tensors_unchecked(
        *k.grid(),
        birth_tensors(k, pot, kind)?,
    ))
}

/// `−apply_death(k) + z·apply_birth(k)`.
pub fn apply_generator(
    k: &CorrelationHierarchy,
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
) -> Result<CorrelationHierarchy> {
    let z = params.z;
    let birth = birth_tensors(k, pot, kind)?;
    let tensors = k
        .tensors()
        .iter()
        .zip(birth)
        .enumerate()
        .map(|(n, (t, b))| {
            let n = n as f64;
            t.iter().zip(b).map(|(kv, bv)| z * bv - n * kv).collect()
        })
        .collect();
    Ok(CorrelationHierarchy::from_tensors_unchecked(*k.grid(), tensors))
}

/// `Σ_x Δx·θ(x)·δB(θ; x)` evaluated directly on the functional.
pub fn evaluate_death_gf(k: &CorrelationHierarchy, theta: &GridField) -> Result<f64> {
    k.grid().check_same(theta.grid())?;
    let dx = k.grid().spacing();
    let mut total = 0.0;
    for (x, &t) in theta.values().iter().enumerate() {
        total += dx * t * variational_derivative(k, theta, x)?;
    }
    Ok(total)
}

/// `Σ_x Δx·θ(x)·B(a_x·θ + b_x)` evaluated directly on the functional.
///
/// With [`Closure::Truncated`] the degree-`n_max` part of `B(a_x·θ + b_x)`
/// in θ, namely `B_top(a_x·θ)`, is removed.
pub fn evaluate_birth_gf(
    k: &CorrelationHierarchy,
    theta: &GridField,
    pot: &PairPotential,
    kind: GeneratorKind,
    closure: Closure,
) -> Result<f64> {
    k.grid().check_same(theta.grid())?;
    k.grid().check_same(pot.grid())?;
    kind.validate()?;
    let grid = *k.grid();
    let shifts = displacement_shifts(pot, kind);
    let mut total = 0.0;
    for (x, &t) in theta.values().iter().enumerate() {
        let (a, b) = shifts.at(&grid, x);
        let a = GridField::new(grid, a)?;
        let b = GridField::new(grid, b)?;
        let scaled = a.pointwise_mul(theta)?;
        let arg = scaled.linear_combination(1.0, &b, 1.0)?;
        let mut value = evaluate_gf(k, &arg)?;
        if closure == Closure::Truncated {
            value -= evaluate_homogeneous(k, k.n_max(), &scaled)?;
        }
        total += grid.spacing() * t * value;
    }
    Ok(total)
}

/// Reference evaluation of `(L̃B)(θ)` on the functional under the shared
/// truncation; equals `evaluate_gf(apply_generator(k), θ)`.
pub fn evaluate_generator_gf(
    k: &CorrelationHierarchy,
    theta: &GridField,
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
) -> Result<f64> {
    let death = evaluate_death_gf(k, theta)?;
    let birth = evaluate_birth_gf(k, theta, pot, kind, Closure::Truncated)?;
    Ok(-(death - params.z * birth))
}

/// Literal `(L̃B)(θ)` for the polynomial functional B, without closure.
pub fn evaluate_generator_gf_full(
    k: &CorrelationHierarchy,
    theta: &GridField,
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
) -> Result<f64> {
    let death = evaluate_death_gf(k, theta)?;
    let birth = evaluate_birth_gf(k, theta, pot, kind, Closure::Full)?;
    Ok(-(death - params.z * birth))
}

/// Dense matrix of the generator on flattened hierarchies.
pub fn assemble_matrix(
    grid: Grid,
    n_max: usize,
    params: &ScaleParams,
    pot: &PairPotential,
    kind: GeneratorKind,
) -> Result<DMatrix<f64>> {
    let probe = CorrelationHierarchy::zeros(grid, n_max)?;
    let dim = probe.dimension();
    if dim.checked_mul(dim).is_none_or(|e| e > MATRIX_ENTRY_LIMIT) {
        return Err(Error::MemoryGuard {
            entries: (dim as u128) * (dim as u128),
            limit: MATRIX_ENTRY_LIMIT as u128,
        });
    }
    let mut m = DMatrix::zeros(dim, dim);
    let mut basis = vec![0.0; dim];
    for j in 0..dim {
        basis[j] = 1.0;
        let e = hierarchy::unflatten(grid, n_max, &basis)?;
        let col = hierarchy::flatten(&apply_generator(&e, params, pot, kind)?);
        m.column_mut(j).copy_from_slice(&col);
        basis[j] = 0.0;
    }
    Ok(m)
}

/// `M = α₀·(1 + z·α₀·e^{‖φ‖₁/α − 1})`, the constant in
/// `‖L̃B‖_{α′} ≤ M/(α″ − α′)·‖B‖_{α″}`; the same for all three kinds.
pub fn norm_bound_m(params: &ScaleParams, pot: &PairPotential) -> f64 {
    let a0 = params.alpha0;
    a0 * (1.0 + params.z * a0 * (pot.norm_l1() / params.alpha - 1.0).exp())
}

/// Bound on `‖L̃_ε B − L̃_V B‖_{α′} / ‖B‖_{α″}`.
pub fn vlasov_gap_bound(
    epsilon: f64,
    params: &ScaleParams,
    pot: &PairPotential,
    alpha_prime: f64,
    alpha_dprime: f64,
) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if !(params.alpha <= alpha_prime && alpha_prime < alpha_dprime && alpha_dprime <= params.alpha0) {
        return Err(Error::InvalidArgument(format!(
            "need alpha <= alpha' < alpha'' <= alpha0, got {} <= {alpha_prime} < {alpha_dprime} <= {}",
            params.alpha, params.alpha0
        )));
    }
    let gap = alpha_dprime - alpha_prime;
    let a0 = params.alpha0;
    let l1 = pot.norm_l1();
    Ok(epsilon
        * params.z
        * pot.norm_linf()
        * (l1 / params.alpha).exp()
        * (l1 * a0 / gap + 4.0 * a0.powi(3) / (gap * gap * std::f64::consts::E)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{exponential_hierarchy, max_abs_difference, substitute_affine};
    use crate::lattice::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, len: f64) -> (Grid, PairPotential, ScaleParams) {
        let g = make_grid(n, len).unwrap();
        let pot = PairPotential::gaussian(g, 0.5, 1.0).unwrap();
        let params = ScaleParams::new(0.5, 1.0, 0.7, 0.0).unwrap();
        (g, pot, params)
    }

    fn random_theta(g: Grid, rng: &mut ChaCha8Rng) -> GridField {
        let s = 1.5 / g.length();
        GridField::from_fn(g, |_| rng.gen_range(-s..s)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn death_cases() {
        let g = make_grid(4, 4.0).unwrap();
        let k = CorrelationHierarchy::vacuum(g, 0).unwrap();
        assert_eq!(apply_death(&k).constant_term(), 0.0);

        let c = 0.3;
        let k = exponential_hierarchy(&GridField::constant(g, c), 3).unwrap();
        assert!((apply_death(&k).get(&[1, 2]).unwrap() - 2.0 * c * c).abs() < 1e-16);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = CorrelationHierarchy::random(g, 3, 1.0, &mut rng).unwrap();
        let d = apply_death(&k);
        for _ in 0..10 {
            let theta = random_theta(g, &mut rng);
            let lhs = evaluate_gf(&d, &theta).unwrap();
            let rhs = evaluate_death_gf(&k, &theta).unwrap();
            assert!(rel(lhs, rhs) < 1e-10);
        }
    }

    #[test]
    fn birth_cases() {
        let (g, pot, _) = setup(5, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = CorrelationHierarchy::random(g, 3, 1.0, &mut rng).unwrap();

        let zero = PairPotential::zero(g);
        let out = apply_birth(&k, &zero, GeneratorKind::Glauber).unwrap();
        for x in 0..5 {
            assert_eq!(out.get(&[x]).unwrap(), k.constant_term());
            let expected = k.get(&[2]).unwrap() + k.get(&[x]).unwrap();
            assert!((out.get(&[x, 2]).unwrap() - expected).abs() < 1e-15);
        }

        let k1 = CorrelationHierarchy::random(g, 1, 1.0, &mut rng).unwrap();
        let out = apply_birth(&k1, &pot, GeneratorKind::VlasovLimit).unwrap();
        let k1_field = GridField::from_fn(g, |x| k1.get(&[x]).unwrap()).unwrap();
        let conv = pot.convolve(&k1_field).unwrap();
        for x in 0..5 {
            let expected = k1.constant_term() - conv.values()[x];
            assert!((out.get(&[x]).unwrap() - expected).abs() < 1e-14);
        }

        for kind in [GeneratorKind::Glauber, GeneratorKind::Rescaled(0.3), GeneratorKind::VlasovLimit] {
            let out = apply_birth(&k, &pot, kind).unwrap();
            assert_eq!(out.symmetry_defect(), 0.0);
            assert_eq!(out.constant_term(), 0.0);
            for _ in 0..10 {
                let theta = random_theta(g, &mut rng);
                let lhs = evaluate_gf(&out, &theta).unwrap();
                let rhs = evaluate_birth_gf(&k, &theta, &pot, kind, Closure::Truncated).unwrap();
                assert!(rel(lhs, rhs) < 1e-10, "{kind:?}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn truncated_and_full_birth_differ_by_top_order() {
        let (g, pot, _) = setup(4, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let k = CorrelationHierarchy::random(g, 2, 1.0, &mut rng).unwrap();
        let theta = random_theta(g, &mut rng);
        let kind = GeneratorKind::Glauber;
        let full = evaluate_birth_gf(&k, &theta, &pot, kind, Closure::Full).unwrap();
        let trunc = evaluate_birth_gf(&k, &theta, &pot, kind, Closure::Truncated).unwrap();
        let mut top = 0.0;
        for x in 0..4 {
            let (a, _) = shift_fields(&pot, kind, x).unwrap();
            let arg = a.pointwise_mul(&theta).unwrap();
            top += g.spacing() * theta.values()[x] * evaluate_homogeneous(&k, 2, &arg).unwrap();
        }
        assert!((full - trunc - top).abs() < 1e-14);
    }

    #[test]
    fn birth_matches_substitution_definition() {
        let (g, pot, _) = setup(4, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let k = CorrelationHierarchy::random(g, 3, 1.0, &mut rng).unwrap();
        let kind = GeneratorKind::Rescaled(0.6);
        let out = apply_birth(&k, &pot, kind).unwrap();
        let c: Vec<CorrelationHierarchy> = (0..4)
            .map(|x| {
                let (a, b) = shift_fields(&pot, kind, x).unwrap();
                substitute_affine(&k, &a, &b).unwrap()
            })
            .collect();
        let (x1, x2, x3) = (0, 3, 1);
        let expected = c[x1].get(&[x2, x3]).unwrap()
            + c[x2].get(&[x1, x3]).unwrap()
            + c[x3].get(&[x1, x2]).unwrap();
        assert!((out.get(&[x1, x2, x3]).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn generator_cases() {
        let (g, pot, params) = setup(5, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = CorrelationHierarchy::random(g, 3, 1.0, &mut rng).unwrap();
        for kind in [GeneratorKind::Glauber, GeneratorKind::Rescaled(0.2), GeneratorKind::VlasovLimit] {
            let out = apply_generator(&k, &params, &pot, kind).unwrap();
            assert_eq!(out.constant_term(), 0.0);
            assert_eq!(out.symmetry_defect(), 0.0);
        }

        let z = params.z;
        let eq = exponential_hierarchy(&GridField::constant(g, z), 3).unwrap();
        let zero = PairPotential::zero(g);
        let out = apply_generator(&eq, &params, &zero, GeneratorKind::Glauber).unwrap();
        assert!(out.order_maxima().iter().all(|&m| m <= 1e-15));
        let theta = random_theta(g, &mut rng);
        let v = evaluate_generator_gf(&eq, &theta, &params, &zero, GeneratorKind::Glauber).unwrap();
        assert!(v.abs() < 1e-15);

        let a = apply_generator(&k, &params, &pot, GeneratorKind::Rescaled(1.0)).unwrap();
        let b = apply_generator(&k, &params, &pot, GeneratorKind::Glauber).unwrap();
        assert!(max_abs_difference(&a, &b).unwrap() <= 1e-12);

        assert_eq!(
            evaluate_generator_gf(&k, &GridField::zeros(g), &params, &pot, GeneratorKind::Glauber).unwrap(),
            0.0
        );
        assert!(GeneratorKind::rescaled(0.0).is_err());
    }

    #[test]
    fn matrix_reproduces_generator() {
        let (g, pot, params) = setup(4, 4.0);
        let kind = GeneratorKind::Glauber;
        let zero_order = assemble_matrix(g, 0, &params, &pot, kind).unwrap();
        assert_eq!(zero_order.shape(), (1, 1));
        assert_eq!(zero_order[(0, 0)], 0.0);

        let m = assemble_matrix(g, 2, &params, &pot, kind).unwrap();
        assert_eq!(m.nrows(), 21);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = CorrelationHierarchy::random(g, 2, 1.0, &mut rng).unwrap();
        let v = nalgebra::DVector::from_vec(hierarchy::flatten(&k));
        let direct = hierarchy::flatten(&apply_generator(&k, &params, &pot, kind).unwrap());
        let via = &m * v;
        for (a, b) in direct.iter().zip(via.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn norm_constants() {
        let g = make_grid(8, 8.0).unwrap();
        let pot = PairPotential::from_samples(g, vec![0.125; 8]).unwrap();
        assert!((pot.norm_l1() - 1.0).abs() < 1e-15);
        let params = ScaleParams::new(0.5, 1.0, 1.0, 0.0).unwrap();
        let m = norm_bound_m(&params, &pot);
        assert!((m - (1.0 + std::f64::consts::E)).abs() < 1e-12);

        let zero = PairPotential::zero(g);
        let tiny = ScaleParams::new(0.5, 2.0, 1e-12, 0.0).unwrap();
        assert!((norm_bound_m(&tiny, &zero) - 2.0).abs() < 1e-10);

        let pot = PairPotential::from_samples(g, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((pot.norm_l1(), pot.norm_linf()), (1.0, 1.0));
        let e = std::f64::consts::E;
        let bound = vlasov_gap_bound(1.0, &params, &pot, 0.5, 1.0).unwrap();
        assert!((bound - e * e * (2.0 + 16.0 / e)).abs() < 1e-10);
        assert!((bound - 58.27).abs() < 0.01);
        assert_eq!(vlasov_gap_bound(0.0, &params, &pot, 0.5, 1.0).unwrap(), 0.0);
        let b2 = vlasov_gap_bound(0.2, &params, &pot, 0.6, 0.9).unwrap();
        let b1 = vlasov_gap_bound(0.1, &params, &pot, 0.6, 0.9).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-12 * b2);
        assert!(vlasov_gap_bound(0.1, &params, &pot, 0.9, 0.6).is_err());
    }

    #[test]
    fn small_epsilon_uses_series() {
        let (g, pot, _) = setup(6, 6.0);
        let (_, b) = shift_fields(&pot, GeneratorKind::Rescaled(1e-10), 0).unwrap();
        let (_, bv) = shift_fields(&pot, GeneratorKind::VlasovLimit, 0).unwrap();
        for (x, y) in b.values().iter().zip(bv.values()) {
            assert!((x - y).abs() < 1e-10);
        }
        let _ = g;
    }
}
