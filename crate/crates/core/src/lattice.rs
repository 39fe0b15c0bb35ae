//! Periodic one-dimensional lattice: grids, grid functions, pair potentials
//! and the discrete L¹/L∞ structure that replaces the continuum.

use crate::error::{Error, Result};

/// Periodic grid of `n_sites` points on a box of length `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_sites: usize,
    length: f64,
    spacing: f64,
}

impl Grid {
    pub fn new(n_sites: usize, length: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 sites, got {n_sites}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        Ok(Self {
            n_sites,
            length,
            spacing: length / n_sites as f64,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Lattice spacing Δx.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Periodic displacement index `(x − y) mod n_sites`.
    #[inline]
    pub fn displacement(&self, x: usize, y: usize) -> usize {
        (x + self.n_sites - y) % self.n_sites
    }

    /// Minimum-image distance of displacement index `d`.
    pub fn min_image_distance(&self, d: usize) -> f64 {
        let d = d % self.n_sites;
        d.min(self.n_sites - d) as f64 * self.spacing
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({} sites, L = {}) vs ({} sites, L = {})",
                self.n_sites, self.length, other.n_sites, other.length
            )))
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n_sites {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                n_sites: self.n_sites,
            })
        }
    }
}

/// Builds a [`Grid`]; free-function form of [`Grid::new`].
pub fn make_grid(n_sites: usize, length: f64) -> Result<Grid> {
    Grid::new(n_sites, length)
}

/// A finite real-valued function on the sites of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_sites() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} sites",
                values.len(),
                grid.n_sites()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "field value at site {i} is not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_sites()],
        }
    }

    /// Field with value `f(site)` at every site.
    pub fn from_fn(grid: Grid, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.n_sites()).map(f).collect())
    }

    /// Indicator of a single site.
    pub fn indicator(grid: Grid, site: usize) -> Result<Self> {
        grid.check_index(site)?;
        let mut values = vec![0.0; grid.n_sites()];
        values[site] = 1.0;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Σ|f|·Δx
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.spacing()
    }

    /// max|f|
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Σ f·Δx
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &GridField, b: f64) -> Result<GridField> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridField::new(self.grid, values)
    }

    /// Pointwise product.
    pub fn pointwise_mul(&self, other: &GridField) -> Result<GridField> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        GridField::new(self.grid, values)
    }

    /// Cyclic shift: `out[x] = self[x − shift]`.
    pub fn shifted(&self, shift: usize) -> GridField {
        let n = self.grid.n_sites();
        let values = (0..n).map(|x| self.values[(x + n - shift % n) % n]).collect();
        GridField {
            grid: self.grid,
            values,
        }
    }
}

pub fn field_l1_norm(f: &GridField) -> f64 {
    f.l1_norm()
}

pub fn field_linf_norm(f: &GridField) -> f64 {
    f.linf_norm()
}

/// Non-negative even pair potential sampled by periodic displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    grid: Grid,
    values: Vec<f64>,
    norm_l1: f64,
    norm_linf: f64,
}

const EVENNESS_TOL: f64 = 1e-12;

impl PairPotential {
    /// Potential from samples `φ[d]`, `d = 0..n_sites−1` the periodic displacement.
    pub fn from_samples(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let n = grid.n_sites();
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "potential has {} samples for {} sites",
                values.len(),
                n
            )));
        }
        for (d, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "potential sample at displacement {d} is not finite"
                )));
            }
            if v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "potential is negative at displacement {d}: {v}"
                )));
            }
            let mirror = values[(n - d) % n];
            if (v - mirror).abs() > EVENNESS_TOL {
                return Err(Error::InvalidArgument(format!(
                    "potential is not even: φ[{d}] = {v}, φ[{}] = {mirror}",
                    (n - d) % n
                )));
            }
        }
        let norm_l1 = values.iter().map(|v| v.abs()).sum::<f64>() * grid.spacing();
        let norm_linf = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            grid,
            values,
            norm_l1,
            norm_linf,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_sites()],
            norm_l1: 0.0,
            norm_linf: 0.0,
        }
    }

    /// `A·exp(−r²/σ²)` with `r` the minimum-image distance.
    pub fn gaussian(grid: Grid, amplitude: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
        let values = (0..grid.n_sites())
            .map(|d| {
                let r = grid.min_image_distance(d);
                amplitude * (-(r * r) / (width * width)).exp()
            })
            .collect();
        Self::from_samples(grid, values)
    }

    /// `A` on minimum-image distance `≤ width`, zero elsewhere.
    pub fn tophat(grid: Grid, amplitude: f64, width: f64) -> Result<Self> {
        if width < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tophat width must be non-negative, got {width}"
            )));
        }
        let values = (0..grid.n_sites())
            .map(|d| {
                if grid.min_image_distance(d) <= width * (1.0 + 1e-12) {
                    amplitude
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_samples(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Samples indexed by periodic displacement.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// φ(x − y).
    #[inline]
    pub fn between(&self, x: usize, y: usize) -> f64 {
        self.values[self.grid.displacement(x, y)]
    }

    pub fn norm_l1(&self) -> f64 {
        self.norm_l1
    }

    pub fn norm_linf(&self) -> f64 {
        self.norm_linf
    }

    pub fn is_zero(&self) -> bool {
        self.norm_linf == 0.0
    }

    /// Periodic convolution `(φ * f)(x) = Σ_y φ(x − y)·f(y)·Δx`, direct summation.
    pub fn convolve(&self, f: &GridField) -> Result<GridField> {
        self.grid.check_same(f.grid())?;
        let n = self.grid.n_sites();
        let dx = self.grid.spacing();
        let fv = f.values();
        let values = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| self.between(x, y) * fv[y])
                    .sum::<f64>()
                    * dx
            })
            .collect();
        GridField::new(self.grid, values)
    }

    /// Relative energy `E(x, ξ) = Σ_{y∈ξ} φ(x − y)`, ξ counted with multiplicity.
    pub fn relative_energy(&self, x: usize, xi: &[usize]) -> Result<f64> {
        self.grid.check_index(x)?;
        let mut total = 0.0;
        for &y in xi {
            self.grid.check_index(y)?;
            total += self.between(x, y);
        }
        Ok(total)
    }
}

pub fn potential_from_samples(grid: Grid, values: Vec<f64>) -> Result<PairPotential> {
    PairPotential::from_samples(grid, values)
}

pub fn convolve(pot: &PairPotential, f: &GridField) -> Result<GridField> {
    pot.convolve(f)
}

pub fn relative_energy(pot: &PairPotential, x: usize, xi: &[usize]) -> Result<f64> {
    pot.relative_energy(x, xi)
}
