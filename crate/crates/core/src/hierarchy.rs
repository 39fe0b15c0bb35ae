//! Truncated correlation hierarchies and the generating functionals they
//! represent.
//!
//! Tensor `k⁽ⁿ⁾` is stored densely (`N^n` entries, row-major) and is kept
//! exactly symmetric: every constructor fills canonical (sorted) index tuples
//! and copies them to all permutations. Orders above `n_max` are identically
//! zero.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Grid, GridField};
use crate::tensor;

/// Default bound on the number of entries of the top tensor, `N^n_max`.
pub const DEFAULT_ENTRY_LIMIT: u128 = 10_000_000;

/// Central-difference step for first-order coefficients.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default stencil step for an order-`n` mixed difference.
///
/// Roundoff grows like `ε/hⁿ` and truncation like `h²`, so orders above one
/// use `h = ε^{1/(n+2)}` instead of the first-order step.
pub fn default_fd_step(n: usize) -> f64 {
    if n <= 1 {
        DEFAULT_FD_STEP
    } else {
        f64::EPSILON.powf(1.0 / (n as f64 + 2.0))
    }
}

const FD_SYMMETRY_TOL: f64 = 1e-6;

/// Banach-scale indices, activity and scaling parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    /// Target scale α.
    pub alpha: f64,
    /// Initial scale α₀.
    pub alpha0: f64,
    /// Activity z.
    pub z: f64,
    /// Scaling parameter ε; zero denotes the mean-field limit.
    pub epsilon: f64,
}

impl ScaleParams {
    pub fn new(alpha: f64, alpha0: f64, z: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < alpha0 && alpha0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale indices need 0 < alpha < alpha0, got alpha = {alpha}, alpha0 = {alpha0}"
            )));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "activity must be positive, got {z}"
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        Ok(Self {
            alpha,
            alpha0,
            z,
            epsilon,
        })
    }
}

/// Truncated family of symmetric correlation tensors `k⁽⁰⁾ … k⁽ⁿᵐᵃˣ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHierarchy {
    grid: Grid,
    n_max: usize,
    tensors: Vec<Vec<f64>>,
}

fn check_guard(grid: &Grid, n_max: usize, limit: u128) -> Result<()> {
    let entries = (grid.n_sites() as u128).checked_pow(n_max as u32);
    match entries {
        Some(e) if e <= limit => Ok(()),
        Some(e) => Err(Error::MemoryGuard { entries: e, limit }),
        None => Err(Error::MemoryGuard {
            entries: u128::MAX,
            limit,
        }),
    }
}

impl CorrelationHierarchy {
    /// All-zero hierarchy (including `k⁽⁰⁾ = 0`).
    pub fn zeros(grid: Grid, n_max: usize) -> Result<Self> {
        Self::zeros_with_limit(grid, n_max, DEFAULT_ENTRY_LIMIT)
    }

    pub fn zeros_with_limit(grid: Grid, n_max: usize, limit: u128) -> Result<Self> {
        check_guard(&grid, n_max, limit)?;
        let tensors = (0..=n_max)
            .map(|n| vec![0.0; tensor::len(grid.n_sites(), n)])
            .collect();
        Ok(Self {
            grid,
            n_max,
            tensors,
        })
    }

    /// Only `k⁽⁰⁾ = 1`: the functional `B ≡ 1` of the empty configuration.
    pub fn vacuum(grid: Grid, n_max: usize) -> Result<Self> {
        let mut k = Self::zeros(grid, n_max)?;
        k.tensors[0][0] = 1.0;
        Ok(k)
    }

    /// Hierarchy whose order-n tensor is `f(n, sorted index tuple)`.
    pub fn from_fn(
        grid: Grid,
        n_max: usize,
        mut f: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Self> {
        check_guard(&grid, n_max, DEFAULT_ENTRY_LIMIT)?;
        let n_sites = grid.n_sites();
        let tensors = (0..=n_max)
            .map(|n| tensor::fill_symmetric(n_sites, n, |idx| f(n, idx)))
            .collect();
        let k = Self {
            grid,
            n_max,
            tensors,
        };
        k.check_finite()?;
        Ok(k)
    }

    /// Random symmetric hierarchy with `k⁽⁰⁾ = 1` and entries of order n
    /// uniform in `[−envelopeⁿ, envelopeⁿ]`.
    pub fn random<R: Rng>(grid: Grid, n_max: usize, envelope: f64, rng: &mut R) -> Result<Self> {
        Self::from_fn(grid, n_max, |n, _| {
            if n == 0 {
                1.0
            } else {
                rng.gen_range(-1.0..=1.0) * envelope.powi(n as i32)
            }
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Dense storage of `k⁽ⁿ⁾`.
    pub fn tensor(&self, n: usize) -> &[f64] {
        &self.tensors[n]
    }

    /// Entry `k⁽ⁿ⁾(idx)`, `n = idx.len()`.
    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        let n = idx.len();
        if n > self.n_max {
            return Err(Error::InvalidArgument(format!(
                "order {n} exceeds truncation order {}",
                self.n_max
            )));
        }
        for &i in idx {
            self.grid.check_index(i)?;
        }
        Ok(self.tensors[n][tensor::encode(idx, self.grid.n_sites())])
    }

    /// `k⁽⁰⁾`
    pub fn constant_term(&self) -> f64 {
        self.tensors[0][0]
    }

    /// Total number of stored entries `Σₙ Nⁿ`.
    pub fn dimension(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub(crate) fn from_tensors_unchecked(grid: Grid, tensors: Vec<Vec<f64>>) -> Self {
        let n_max = tensors.len() - 1;
        Self {
            grid,
            n_max,
            tensors,
        }
    }

    pub(crate) fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    fn check_finite(&self) -> Result<()> {
        for (n, t) in self.tensors.iter().enumerate() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite entry in tensor of order {n}"
                )));
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.n_max != other.n_max {
            return Err(Error::InvalidArgument(format!(
                "truncation orders differ: {} vs {}",
                self.n_max, other.n_max
            )));
        }
        Ok(())
    }

    /// Largest deviation from permutation symmetry, zero for exactly symmetric tensors.
    pub fn symmetry_defect(&self) -> f64 {
        let n_sites = self.grid.n_sites();
        let mut worst = 0.0_f64;
        for (n, t) in self.tensors.iter().enumerate() {
            let mut idx = vec![0; n];
            for (flat, &v) in t.iter().enumerate() {
                tensor::decode(flat, n_sites, &mut idx);
                idx.sort_unstable();
                worst = worst.max((v - t[tensor::encode(&idx, n_sites)]).abs());
            }
        }
        worst
    }

    /// `max_entries |k⁽ⁿ⁾|` for each order.
    pub fn order_maxima(&self) -> Vec<f64> {
        self.tensors.iter().map(|t| tensor::max_abs(t)).collect()
    }

    /// Generating functional `B(θ)`.
    pub fn evaluate(&self, theta: &GridField) -> Result<f64> {
        evaluate_gf(self, theta)
    }

    /// Writes the plain-text snapshot: a two-line header followed by one
    /// line `n,i1,...,in,value` per tensor entry.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let n_sites = self.grid.n_sites();
        writeln!(w, "n_sites,length,n_max")?;
        writeln!(w, "{},{},{}", n_sites, self.grid.length(), self.n_max)?;
        let mut idx = Vec::new();
        for (n, t) in self.tensors.iter().enumerate() {
            idx.resize(n, 0);
            for (flat, v) in t.iter().enumerate() {
                tensor::decode(flat, n_sites, &mut idx);
                write!(w, "{n}")?;
                for i in &idx {
                    write!(w, ",{i}")?;
                }
                writeln!(w, ",{v:e}")?;
            }
        }
        Ok(())
    }

    /// Reads a snapshot written by [`write_snapshot`](Self::write_snapshot).
    pub fn read_snapshot<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| match l {
                Ok(s) => !s.trim().is_empty() && !s.trim_start().starts_with('#'),
                Err(_) => true,
            });
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let (ln, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty snapshot".into()))?;
        if header?.trim() != "n_sites,length,n_max" {
            return Err(parse_err(ln, "expected header `n_sites,length,n_max`".into()));
        }
        let (ln, dims) = lines
            .next()
            .ok_or_else(|| parse_err(2, "missing dimensions line".into()))?;
        let dims = dims?;
        let parts: Vec<&str> = dims.trim().split(',').collect();
        if parts.len() != 3 {
            return Err(parse_err(ln, "expected `n_sites,length,n_max`".into()));
        }
        let n_sites: usize = parts[0]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad n_sites `{}`", parts[0])))?;
        let length: f64 = parts[1]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad length `{}`", parts[1])))?;
        let n_max: usize = parts[2]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad n_max `{}`", parts[2])))?;
        let grid = Grid::new(n_sites, length)?;
        let mut k = Self::zeros(grid, n_max)?;
        let mut seen: Vec<Vec<bool>> = k.tensors.iter().map(|t| vec![false; t.len()]).collect();

        for (ln, line) in lines {
            let line = line?;
            let fields: Vec<&str> = line.trim().split(',').collect();
            let n: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(ln, format!("bad order `{}`", fields[0])))?;
            if n > n_max || fields.len() != n + 2 {
                return Err(parse_err(ln, format!("malformed entry of order {n}")));
            }
            let mut idx = Vec::with_capacity(n);
            for f in &fields[1..=n] {
                let i: usize = f
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad index `{f}`")))?;
                if i >= n_sites {
                    return Err(parse_err(ln, format!("index {i} out of range")));
                }
                idx.push(i);
            }
            let v: f64 = fields[n + 1]
                .parse()
                .map_err(|_| parse_err(ln, format!("bad value `{}`", fields[n + 1])))?;
            let flat = tensor::encode(&idx, n_sites);
            k.tensors[n][flat] = v;
            seen[n][flat] = true;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(parse_err(0, "snapshot does not list every entry".into()));
        }
        k.check_finite()?;
        if k.symmetry_defect() != 0.0 {
            return Err(Error::InvalidArgument("snapshot tensors are not symmetric".into()));
        }
        Ok(k)
    }
}

/// Product-form hierarchy `k⁽ⁿ⁾(x₁..xₙ) = ρ(x₁)…ρ(xₙ)`, `k⁽⁰⁾ = 1`.
pub fn exponential_hierarchy(rho: &GridField, n_max: usize) -> Result<CorrelationHierarchy> {
    let r = rho.values();
    CorrelationHierarchy::from_fn(*rho.grid(), n_max, |_, idx| {
        idx.iter().fold(1.0, |acc, &i| acc * r[i])
    })
}

fn weighted(theta: &GridField) -> Vec<f64> {
    let dx = theta.grid().spacing();
    theta.values().iter().map(|t| t * dx).collect()
}

/// Degree-n homogeneous part `(Δxⁿ/n!) Σ k⁽ⁿ⁾(x₁..xₙ) θ(x₁)…θ(xₙ)`.
pub fn evaluate_homogeneous(k: &CorrelationHierarchy, n: usize, theta: &GridField) -> Result<f64> {
    k.grid.check_same(theta.grid())?;
    if n > k.n_max {
        return Ok(0.0);
    }
    let w = weighted(theta);
    Ok(tensor::contract_all(&k.tensors[n], k.grid.n_sites(), n, &w) / tensor::factorial(n))
}

/// `B(θ) = Σₙ (Δxⁿ/n!) Σ_{x₁..xₙ} k⁽ⁿ⁾(x₁..xₙ) Π θ(xᵢ)`.
pub fn evaluate_gf(k: &CorrelationHierarchy, theta: &GridField) -> Result<f64> {
    k.grid.check_same(theta.grid())?;
    let w = weighted(theta);
    let n_sites = k.grid.n_sites();
    Ok(k.tensors
        .iter()
        .enumerate()
        .map(|(n, t)| tensor::contract_all(t, n_sites, n, &w) / tensor::factorial(n))
        .sum())
}

/// First variational derivative `δB(θ; x)`.
pub fn variational_derivative(k: &CorrelationHierarchy, theta: &GridField, x: usize) -> Result<f64> {
    k.grid.check_same(theta.grid())?;
    k.grid.check_index(x)?;
    let w = weighted(theta);
    let n_sites = k.grid.n_sites();
    let mut total = 0.0;
    for n in 0..k.n_max {
        let block = tensor::len(n_sites, n);
        let slice = &k.tensors[n + 1][x * block..(x + 1) * block];
        total += tensor::contract_all(slice, n_sites, n, &w) / tensor::factorial(n);
    }
    Ok(total)
}

/// Orders `0..=max_order` of the hierarchy of `θ ↦ B(a·θ + b)`, given the
/// raw field values of `a` and `b`.
pub(crate) fn substituted_tensors(
    k: &CorrelationHierarchy,
    a: &[f64],
    b: &[f64],
    max_order: usize,
) -> Vec<Vec<f64>> {
    let n_sites = k.grid.n_sites();
    let dx = k.grid.spacing();
    let bw: Vec<f64> = b.iter().map(|v| v * dx).collect();
    let b_is_zero = b.iter().all(|&v| v == 0.0);
    let max_order = max_order.min(k.n_max);

    let mut sums: Vec<Vec<f64>> = (0..=max_order)
        .map(|m| vec![0.0; tensor::len(n_sites, m)])
        .collect();
    for n in 0..=k.n_max {
        let mut t = k.tensors[n].clone();
        for j in 0..=n {
            let m = n - j;
            if m <= max_order {
                let inv_fact = 1.0 / tensor::factorial(j);
                for (s, v) in sums[m].iter_mut().zip(&t) {
                    *s += v * inv_fact;
                }
            }
            if m == 0 || b_is_zero {
                break;
            }
            t = tensor::contract_last(&t, n_sites, &bw);
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(m, s)| {
            tensor::fill_symmetric(n_sites, m, |idx| {
                let pa = idx.iter().fold(1.0, |acc, &i| acc * a[i]);
                s[tensor::encode(idx, n_sites)] * pa
            })
        })
        .collect()
}

/// Hierarchy of the functional `θ ↦ B(a·θ + b)` under the shared truncation.
pub fn substitute_affine(
    k: &CorrelationHierarchy,
    a: &GridField,
    b: &GridField,
) -> Result<CorrelationHierarchy> {
    k.grid.check_same(a.grid())?;
    k.grid.check_same(b.grid())?;
    let tensors = substituted_tensors(k, a.values(), b.values(), k.n_max);
    Ok(CorrelationHierarchy::from_tensors_unchecked(k.grid, tensors))
}

/// Mixed central finite-difference estimate of `k⁽ⁿ⁾(tuple)` from evaluations
/// of `B` alone, with [`default_fd_step`].
pub fn taylor_coefficient_fd(k: &CorrelationHierarchy, tuple: &[usize]) -> Result<f64> {
    taylor_coefficient_fd_with_step(k, tuple, default_fd_step(tuple.len()))
}

/// `∂ⁿ/∂z₁…∂zₙ B(Σ zᵢ·1_{xᵢ})|₀ / Δxⁿ` by a `2ⁿ`-point central stencil.
///
/// The estimate is repeated with the tuple reversed; a disagreement above
/// 1e-6 is reported as a precision failure.
pub fn taylor_coefficient_fd_with_step(
    k: &CorrelationHierarchy,
    tuple: &[usize],
    step: f64,
) -> Result<f64> {
    let n = tuple.len();
    if n > k.n_max {
        return Err(Error::InvalidArgument(format!(
            "order {n} exceeds truncation order {}",
            k.n_max
        )));
    }
    for &x in tuple {
        k.grid.check_index(x)?;
    }
    if n == 0 {
        return evaluate_gf(k, &GridField::zeros(k.grid));
    }
    let forward = mixed_difference(k, tuple, step)?;
    let reversed: Vec<usize> = tuple.iter().rev().copied().collect();
    let backward = mixed_difference(k, &reversed, step)?;
    let residual = (forward - backward).abs();
    if residual > FD_SYMMETRY_TOL {
        return Err(Error::FiniteDifferencePrecision { residual });
    }
    Ok(forward)
}

fn mixed_difference(k: &CorrelationHierarchy, tuple: &[usize], h: f64) -> Result<f64> {
    let n = tuple.len();
    let mut total = 0.0;
    for mask in 0..(1usize << n) {
        let mut theta = vec![0.0; k.grid.n_sites()];
        let mut sign = 1.0;
        for (bit, &x) in tuple.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                theta[x] -= h;
                sign = -sign;
            } else {
                theta[x] += h;
            }
        }
        total += sign * evaluate_gf(k, &GridField::new(k.grid, theta)?)?;
    }
    Ok(total / ((2.0 * h).powi(n as i32) * k.grid.spacing().powi(n as i32)))
}

/// Surrogate scale norm `sup_n αⁿ·max|k⁽ⁿ⁾|`.
pub fn scale_norm(k: &CorrelationHierarchy, alpha: f64) -> f64 {
    k.order_maxima()
        .iter()
        .enumerate()
        .fold(0.0, |acc, (n, m)| acc.max(alpha.powi(n as i32) * m))
}

/// `sup_n z⁻ⁿ·max|k⁽ⁿ⁾|`; at most 1 iff the Ruelle bound `|k(η)| ≤ z^{|η|}` holds.
pub fn ruelle_margin(k: &CorrelationHierarchy, z: f64) -> f64 {
    k.order_maxima()
        .iter()
        .enumerate()
        .fold(0.0, |acc, (n, m)| acc.max(m / z.powi(n as i32)))
}

/// Majorant `Σₙ max|k⁽ⁿ⁾|·rⁿ/n!` of `sup_{‖θ‖₁≤r} |B(θ)|`.
pub fn gf_upper_bound(k: &CorrelationHierarchy, r: f64) -> f64 {
    k.order_maxima()
        .iter()
        .enumerate()
        .map(|(n, m)| m * r.powi(n as i32) / tensor::factorial(n))
        .sum()
}

/// Checks the Cauchy estimates on `k⁽ⁿ⁾ = δⁿB(0)` against the majorant.
pub fn cauchy_estimate_check(k: &CorrelationHierarchy, n: usize, r: f64) -> Result<bool> {
    let (lhs, rhs) = cauchy_estimate_sides(k, n, r)?;
    Ok(lhs <= rhs)
}

/// `(max|k⁽ⁿ⁾|, bound)` with bound `G/r` for `n = 1` and `n!·(e/r)ⁿ·G` for
/// `n ≥ 2`, where `G = gf_upper_bound(k, r)`.
pub fn cauchy_estimate_sides(k: &CorrelationHierarchy, n: usize, r: f64) -> Result<(f64, f64)> {
    if n == 0 || n > k.n_max {
        return Err(Error::InvalidArgument(format!(
            "order must lie in 1..={}, got {n}",
            k.n_max
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let lhs = tensor::max_abs(&k.tensors[n]);
    let sup = gf_upper_bound(k, r);
    let rhs = if n == 1 {
        sup / r
    } else {
        tensor::factorial(n) * (std::f64::consts::E / r).powi(n as i32) * sup
    };
    Ok((lhs, rhs))
}

/// Entrywise `a·k1 + k2`.
pub fn axpy(a: f64, k1: &CorrelationHierarchy, k2: &CorrelationHierarchy) -> Result<CorrelationHierarchy> {
    k1.check_compatible(k2)?;
    let tensors = k1
        .tensors
        .iter()
        .zip(&k2.tensors)
        .map(|(t1, t2)| t1.iter().zip(t2).map(|(x, y)| a * x + y).collect())
        .collect();
    Ok(CorrelationHierarchy::from_tensors_unchecked(k1.grid, tensors))
}

/// Entrywise `s·k`.
pub fn scale(s: f64, k: &CorrelationHierarchy) -> CorrelationHierarchy {
    let tensors = k
        .tensors
        .iter()
        .map(|t| t.iter().map(|v| s * v).collect())
        .collect();
    CorrelationHierarchy::from_tensors_unchecked(k.grid, tensors)
}

/// Concatenation of all tensors in order of increasing n.
pub fn flatten(k: &CorrelationHierarchy) -> Vec<f64> {
    k.tensors.iter().flatten().copied().collect()
}

/// Inverse of [`flatten`]. Entries are taken verbatim; no symmetry is imposed.
pub fn unflatten(grid: Grid, n_max: usize, values: &[f64]) -> Result<CorrelationHierarchy> {
    check_guard(&grid, n_max, DEFAULT_ENTRY_LIMIT)?;
    let expected: usize = (0..=n_max).map(|n| tensor::len(grid.n_sites(), n)).sum();
    if values.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "flattened hierarchy needs {expected} values, got {}",
            values.len()
        )));
    }
    let mut offset = 0;
    let tensors = (0..=n_max)
        .map(|n| {
            let len = tensor::len(grid.n_sites(), n);
            let t = values[offset..offset + len].to_vec();
            offset += len;
            t
        })
        .collect();
    Ok(CorrelationHierarchy::from_tensors_unchecked(grid, tensors))
}

/// Averages each tensor over all permutations of its indices.
pub fn symmetrize(k: &CorrelationHierarchy) -> CorrelationHierarchy {
    let n_sites = k.grid.n_sites();
    let tensors = k
        .tensors
        .iter()
        .enumerate()
        .map(|(n, t)| {
            let mut perm = vec![0; n];
            tensor::fill_symmetric(n_sites, n, |idx| {
                let base = t[tensor::encode(idx, n_sites)];
                // base + mean of deviations, so already-symmetric input is a fixed point
                perm.copy_from_slice(idx);
                let mut dev = 0.0;
                let mut count = 0.0;
                loop {
                    dev += t[tensor::encode(&perm, n_sites)] - base;
                    count += 1.0;
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
                base + dev / count
            })
        })
        .collect();
    CorrelationHierarchy::from_tensors_unchecked(k.grid, tensors)
}

/// Lexicographic successor over distinct permutations; false after the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub fn max_abs_difference(k1: &CorrelationHierarchy, k2: &CorrelationHierarchy) -> Result<f64> {
    k1.check_compatible(k2)?;
    Ok(k1
        .tensors
        .iter()
        .zip(&k2.tensors)
        .flat_map(|(a, b)| a.iter().zip(b))
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())))
}
