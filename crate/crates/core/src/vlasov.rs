//! The kinetic equation `∂ₜρ = −ρ + z·exp(−φ*ρ)` and its exponential
//! generating functional `B(θ) = exp(∫ρθ)`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{GridField, PairPotential};

pub const DEFAULT_DT: f64 = 1e-3;

/// Default spacing in time between stored trajectory samples.
pub const DEFAULT_SAMPLE_INTERVAL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlasovConfig {
    pub z: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    pub sample_interval: f64,
}

impl VlasovConfig {
    pub fn new(z: f64, dt: f64, scheme: Scheme, t_final: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!("activity must be positive, got {z}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be non-negative, got {t_final}"
            )));
        }
        if t_final > 0.0 && dt > t_final {
            return Err(Error::InvalidArgument(format!(
                "dt = {dt} exceeds the final time {t_final}"
            )));
        }
        Ok(Self {
            z,
            dt,
            scheme,
            t_final,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
        })
    }

    pub fn with_sample_interval(mut self, interval: f64) -> Result<Self> {
        if !(interval > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample interval must be positive, got {interval}"
            )));
        }
        self.sample_interval = interval;
        Ok(self)
    }
}

/// Sampled states `(tᵢ, ρ_{tᵢ})`, always including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridField>,
}

impl Trajectory {
    pub fn last(&self) -> &GridField {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// CSV with columns `t,site_index,rho_value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["t", "site_index", "rho_value"])?;
        for (t, rho) in self.times.iter().zip(&self.states) {
            for (i, v) in rho.values().iter().enumerate() {
                out.write_record([format!("{t:.6}"), i.to_string(), format!("{v:.12e}")])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// `−ρ(x) + z·exp(−(φ*ρ)(x))`.
pub fn vlasov_rhs(rho: &GridField, z: f64, pot: &PairPotential) -> Result<GridField> {
    let grid = *rho.grid();
    grid.check_same(pot.grid())?;
    let r = rho.values();
    let dx = grid.spacing();
    let out = (0..grid.n_sites())
        .into_par_iter()
        .map(|x| {
            let conv: f64 = r.iter().enumerate().map(|(y, v)| pot.between(x, y) * v).sum::<f64>() * dx;
            -r[x] + z * (-conv).exp()
        })
        .collect();
    GridField::new(grid, out).map_err(|_| Error::NonfiniteState { time: f64::NAN })
}

fn step(rho: &GridField, h: f64, cfg: &VlasovConfig, pot: &PairPotential) -> Result<GridField> {
    let f = |r: &GridField| vlasov_rhs(r, cfg.z, pot);
    match cfg.scheme {
        Scheme::Euler => rho.linear_combination(1.0, &f(rho)?, h),
        Scheme::Rk4 => {
            let k1 = f(rho)?;
            let k2 = f(&rho.linear_combination(1.0, &k1, h / 2.0)?)?;
            let k3 = f(&rho.linear_combination(1.0, &k2, h / 2.0)?)?;
            let k4 = f(&rho.linear_combination(1.0, &k3, h)?)?;
            let values = rho
                .values()
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r + h / 6.0
                        * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i])
                })
                .collect();
            GridField::new(*rho.grid(), values)
        }
    }
}

/// Fixed-step integration to `cfg.t_final`.
///
/// The step is `t_final / ⌈t_final/dt⌉`, so the last step lands exactly on
/// the final time.
pub fn integrate(rho0: &GridField, cfg: &VlasovConfig, pot: &PairPotential) -> Result<Trajectory> {
    rho0.grid().check_same(pot.grid())?;
    if let Some(v) = rho0.values().iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "initial density must be non-negative, found {v}"
        )));
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![rho0.clone()],
    };
    if cfg.t_final == 0.0 {
        return Ok(traj);
    }
    let n_steps = (cfg.t_final / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let h = cfg.t_final / n_steps as f64;
    let every = ((cfg.sample_interval / h).round() as usize).max(1);
    let mut rho = rho0.clone();
    for i in 1..=n_steps {
        let t = if i == n_steps { cfg.t_final } else { i as f64 * h };
        rho = step(&rho, h, cfg, pot).map_err(|_| Error::NonfiniteState { time: t })?;
        if i % every == 0 || i == n_steps {
            traj.times.push(t);
            traj.states.push(rho.clone());
        }
    }
    Ok(traj)
}

/// `‖ρ_t‖_∞ ≤ max(‖ρ₀‖_∞, z) + 1e-9` and `ρ_t ≥ −1e-9` on every sample.
pub fn linf_bound_check(traj: &Trajectory, rho0: &GridField, z: f64) -> bool {
    let bound = rho0.linf_norm().max(z) + 1e-9;
    traj.states
        .iter()
        .all(|rho| rho.values().iter().all(|&v| v <= bound && v >= -1e-9))
}

/// `‖vlasov_rhs(ρ)‖_∞`.
pub fn stationary_residual(rho: &GridField, z: f64, pot: &PairPotential) -> Result<f64> {
    Ok(vlasov_rhs(rho, z, pot)?.linf_norm())
}

/// `exp(Σ_x ρ(x)·θ(x)·Δx)`.
pub fn exponential_gf_eval(rho: &GridField, theta: &GridField) -> Result<f64> {
    Ok(rho.pointwise_mul(theta)?.integral().exp())
}
