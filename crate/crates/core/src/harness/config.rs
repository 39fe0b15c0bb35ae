//! `key = value` experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::glauber::GeneratorKind;
use crate::hierarchy::{exponential_hierarchy, CorrelationHierarchy, ScaleParams};
use crate::lattice::{Grid, GridField, PairPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Zero,
    Gaussian,
    Tophat,
    File,
}

/// Generator used by `evolve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorChoice {
    Glauber,
    /// Rescaled generator at `model.epsilon`.
    Rescaled,
    Vlasov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    /// Single Taylor step when `t_final` lies inside the radius, continuation otherwise.
    Auto,
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_sites: usize,
    pub length: f64,
    pub potential_kind: PotentialKind,
    pub amplitude: f64,
    pub width: f64,
    pub potential_path: Option<PathBuf>,
    pub z: f64,
    pub epsilon: f64,
    pub generator: GeneratorChoice,
    pub n_max: usize,
    pub alpha: f64,
    pub alpha0: f64,
    pub m_max: usize,
    pub tol: f64,
    pub mode: SolverMode,
    pub t_final: f64,
    pub substep_fraction: f64,
    pub vlasov_dt: f64,
    pub seed: u64,
    /// Mean initial density ρ₀.
    pub initial_density: f64,
    /// Relative amplitude of a one-period cosine ripple on ρ₀.
    pub initial_modulation: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_sites: 8,
            length: 8.0,
            potential_kind: PotentialKind::Gaussian,
            amplitude: 0.5,
            width: 1.0,
            potential_path: None,
            z: 0.5,
            epsilon: 0.1,
            generator: GeneratorChoice::Glauber,
            n_max: 3,
            alpha: 0.5,
            alpha0: 1.0,
            m_max: 80,
            tol: 1e-14,
            mode: SolverMode::Auto,
            t_final: 0.05,
            substep_fraction: 0.9,
            vlasov_dt: 1e-3,
            seed: 42,
            initial_density: 0.1,
            initial_modulation: 0.0,
        }
    }
}

fn value<T: FromStr>(raw: &str, line: usize, key: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value `{raw}` for `{key}`"),
    })
}

fn unquote(raw: &str) -> &str {
    raw.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(raw)
}

impl ExperimentConfig {
    /// Parses configuration text; relative potential paths are kept as written.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, raw) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let raw = unquote(raw.trim());
            match key {
                "grid.n_sites" => cfg.n_sites = value(raw, line, key)?,
                "grid.length" => cfg.length = value(raw, line, key)?,
                "potential.kind" => {
                    cfg.potential_kind = match raw {
                        "zero" => PotentialKind::Zero,
                        "gaussian" => PotentialKind::Gaussian,
                        "tophat" => PotentialKind::Tophat,
                        "file" => PotentialKind::File,
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("unknown potential kind `{raw}`"),
                            })
                        }
                    }
                }
                "potential.amplitude" => cfg.amplitude = value(raw, line, key)?,
                "potential.width" => cfg.width = value(raw, line, key)?,
                "potential.path" => cfg.potential_path = Some(PathBuf::from(raw)),
                "model.z" => cfg.z = value(raw, line, key)?,
                "model.epsilon" => cfg.epsilon = value(raw, line, key)?,
                "model.generator" => {
                    cfg.generator = match raw {
                        "glauber" => GeneratorChoice::Glauber,
                        "rescaled" => GeneratorChoice::Rescaled,
                        "vlasov" => GeneratorChoice::Vlasov,
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("unknown generator `{raw}`"),
                            })
                        }
                    }
                }
                "truncation.n_max" => cfg.n_max = value(raw, line, key)?,
                "solver.alpha" => cfg.alpha = value(raw, line, key)?,
                "solver.alpha0" => cfg.alpha0 = value(raw, line, key)?,
                "solver.m_max" => cfg.m_max = value(raw, line, key)?,
                "solver.tol" => cfg.tol = value(raw, line, key)?,
                "solver.mode" => {
                    cfg.mode = match raw {
                        "auto" => SolverMode::Auto,
                        "local" => SolverMode::Local,
                        "global" => SolverMode::Global,
                        _ => {
                            return Err(Error::Parse {
                                line,
                                message: format!("unknown solver mode `{raw}`"),
                            })
                        }
                    }
                }
                "time.t_final" => cfg.t_final = value(raw, line, key)?,
                "time.substep_fraction" => cfg.substep_fraction = value(raw, line, key)?,
                "vlasov.dt" => cfg.vlasov_dt = value(raw, line, key)?,
                "rng.seed" => cfg.seed = value(raw, line, key)?,
                "initial.density" => cfg.initial_density = value(raw, line, key)?,
                "initial.modulation" => cfg.initial_modulation = value(raw, line, key)?,
                _ => {
                    return Err(Error::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the constraints of the underlying types.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        Grid::new(self.n_sites, self.length)?;
        ScaleParams::new(self.alpha, self.alpha0, self.z, self.epsilon)?;
        if self.generator == GeneratorChoice::Rescaled {
            GeneratorKind::rescaled(self.epsilon)?;
        }
        if self.potential_kind == PotentialKind::File && self.potential_path.is_none() {
            return fail("potential.kind = file needs potential.path".into());
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return fail(format!("potential.amplitude must be non-negative, got {}", self.amplitude));
        }
        if self.m_max == 0 {
            return fail("solver.m_max must be positive".into());
        }
        if !(self.tol > 0.0) {
            return fail(format!("solver.tol must be positive, got {}", self.tol));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return fail(format!("time.t_final must be non-negative, got {}", self.t_final));
        }
        if !(self.substep_fraction > 0.0 && self.substep_fraction < 1.0) {
            return fail(format!(
                "time.substep_fraction must lie in (0, 1), got {}",
                self.substep_fraction
            ));
        }
        if !(self.vlasov_dt > 0.0) {
            return fail(format!("vlasov.dt must be positive, got {}", self.vlasov_dt));
        }
        if !(self.initial_density >= 0.0 && self.initial_density.is_finite()) {
            return fail(format!(
                "initial.density must be non-negative, got {}",
                self.initial_density
            ));
        }
        if !(self.initial_modulation.abs() <= 1.0) {
            return fail(format!(
                "initial.modulation must lie in [-1, 1], got {}",
                self.initial_modulation
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n_sites, self.length)
    }

    /// The pair potential; a `file` potential lists one sample per
    /// displacement `0..n_sites`, separated by whitespace or commas.
    pub fn potential(&self) -> Result<PairPotential> {
        let grid = self.grid()?;
        match self.potential_kind {
            PotentialKind::Zero => Ok(PairPotential::zero(grid)),
            PotentialKind::Gaussian => PairPotential::gaussian(grid, self.amplitude, self.width),
            PotentialKind::Tophat => PairPotential::tophat(grid, self.amplitude, self.width),
            PotentialKind::File => {
                let path = self.potential_path.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("potential.kind = file needs potential.path".into())
                })?;
                let text = fs::read_to_string(path)?;
                let values = text
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| {
                            Error::InvalidArgument(format!(
                                "potential file {}: invalid sample `{s}`",
                                path.display()
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                PairPotential::from_samples(grid, values)
            }
        }
    }

    pub fn scale_params(&self) -> Result<ScaleParams> {
        ScaleParams::new(self.alpha, self.alpha0, self.z, self.epsilon)
    }

    pub fn generator_kind(&self) -> Result<GeneratorKind> {
        match self.generator {
            GeneratorChoice::Glauber => Ok(GeneratorKind::Glauber),
            GeneratorChoice::Rescaled => GeneratorKind::rescaled(self.epsilon),
            GeneratorChoice::Vlasov => Ok(GeneratorKind::VlasovLimit),
        }
    }

    /// `ρ₀(x) = density·(1 + modulation·cos(2πx/N))`.
    pub fn initial_density_field(&self) -> Result<GridField> {
        let grid = self.grid()?;
        let n = self.n_sites as f64;
        GridField::from_fn(grid, |x| {
            let phase = 2.0 * std::f64::consts::PI * x as f64 / n;
            self.initial_density * (1.0 + self.initial_modulation * phase.cos())
        })
    }

    /// Product-form hierarchy `k⁽ⁿ⁾ = ρ₀^{⊗n}`.
    pub fn initial_hierarchy(&self) -> Result<CorrelationHierarchy> {
        exponential_hierarchy(&self.initial_density_field()?, self.n_max)
    }
}

/// Reads a configuration file. A relative `potential.path` is resolved
/// against the directory of the configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::parse_str(&text)?;
    if let Some(p) = &cfg.potential_path {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.potential_path = Some(dir.join(p));
            }
        }
    }
    Ok(cfg)
}
