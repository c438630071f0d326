//! Master equation for network occupation probabilities.
//!
//! The full description tracks all `2^N` states (see [`generator`]); identical
//! devices in series or parallel collapse to an `N+1`-level chain ([`chain`])
//! with closed-form solutions. [`analytic`] holds the two-device and parallel
//! special cases.

pub mod analytic;
pub mod chain;
pub mod generator;
pub mod ode;

pub use analytic::{
    harmonic, memristor1_stats, parallel_all_on, parallel_mean_time, parallel_switching_pdf,
    two_series_moments, two_series_solution, TwoSeries,
};
pub use chain::{
    binomial, chain_for, closed_form_pm, coefficients, mean_switch_time_chain, reduce_chain,
    switching_time_cdf, switching_time_pdf, variance_switch_time_chain, ChainKind, ChainRates,
};
pub use generator::{build_generator, Generator, Transition, MAX_FULL_DEVICES};
pub use ode::{Method, SolverOptions};

use crate::devices::DeviceModel;
use crate::error::{Error, Result};
use crate::network::Network;
use ode::{Constant, Varying};

/// Tolerance on individual probabilities leaving `[0, 1]`.
pub const PROBABILITY_SLACK: f64 = 1e-9;
/// Tolerance on total probability.
pub const CONSERVATION_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    /// One entry per bitmask state.
    Full { devices: usize },
    /// One per-state entry `p_m` per on-count level `m`.
    Reduced { devices: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub space: StateSpace,
    pub times: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
    /// Rate of change of the all-on probability at each grid time.
    pub density: Vec<f64>,
}

impl MasterSolution {
    pub fn devices(&self) -> usize {
        match self.space {
            StateSpace::Full { devices } | StateSpace::Reduced { devices } => devices,
        }
    }

    /// Total probability at grid index `k`.
    pub fn total(&self, k: usize) -> f64 {
        match self.space {
            StateSpace::Full { .. } => self.probs[k].iter().sum(),
            StateSpace::Reduced { devices } => (0..=devices).map(|m| self.level_total(k, m)).sum(),
        }
    }

    /// Probability of having exactly `m` devices on at grid index `k`.
    pub fn level_total(&self, k: usize, m: usize) -> f64 {
        match self.space {
            StateSpace::Full { .. } => self.probs[k]
                .iter()
                .enumerate()
                .filter(|(s, _)| s.count_ones() as usize == m)
                .map(|(_, p)| p)
                .sum(),
            StateSpace::Reduced { devices } => binomial(devices, m) * self.probs[k][m],
        }
    }

    /// Probability that `device` is on at grid index `k`.
    pub fn marginal_on(&self, k: usize, device: usize) -> f64 {
        match self.space {
            StateSpace::Full { .. } => self.probs[k]
                .iter()
                .enumerate()
                .filter(|(s, _)| s >> device & 1 == 1)
                .map(|(_, p)| p)
                .sum(),
            // a fixed device is on in C(N-1, m-1) of the C(N, m) level-m states
            StateSpace::Reduced { devices } => (1..=devices)
                .map(|m| binomial(devices - 1, m - 1) * self.probs[k][m])
                .sum(),
        }
    }

    /// Probability of the all-on state at grid index `k`.
    pub fn all_on(&self, k: usize) -> f64 {
        let p = &self.probs[k];
        p[p.len() - 1]
    }

    pub fn check_invariants(&self) -> Result<()> {
        for (k, p) in self.probs.iter().enumerate() {
            if let Some(x) = p
                .iter()
                .find(|x| !(**x >= -PROBABILITY_SLACK && **x <= 1.0 + PROBABILITY_SLACK))
            {
                return Err(Error::Accuracy(format!(
                    "probability {x} out of range at t = {}",
                    self.times[k]
                )));
            }
            let total = self.total(k);
            if (total - 1.0).abs() > CONSERVATION_SLACK {
                return Err(Error::Accuracy(format!(
                    "total probability {total} at t = {}",
                    self.times[k]
                )));
            }
        }
        Ok(())
    }
}

/// `steps + 1` uniformly spaced times from 0 to `t_end`.
pub fn time_grid(t_end: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::domain(format!(
            "t_end = {t_end} must be finite and > 0"
        )));
    }
    if steps == 0 {
        return Err(Error::domain("at least one time step is required"));
    }
    Ok((0..=steps)
        .map(|k| t_end * k as f64 / steps as f64)
        .collect())
}

fn check_distribution(p: &[f64], dim: usize) -> Result<()> {
    if p.len() != dim {
        return Err(Error::domain(format!(
            "initial vector has {} entries, expected {dim}",
            p.len()
        )));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > CONSERVATION_SLACK {
        return Err(Error::domain(
            "initial vector is not a probability distribution",
        ));
    }
    Ok(())
}

/// Point mass on the network's initial state.
pub fn initial_distribution(network: &Network) -> Result<Vec<f64>> {
    let n = network.device_count();
    if n > MAX_FULL_DEVICES {
        return Err(Error::Capacity(format!(
            "{n} devices exceed the full-state cap"
        )));
    }
    let mut p = vec![0.0; 1 << n];
    p[network.initial.bits() as usize] = 1.0;
    Ok(p)
}

/// Solve the full master equation of `network` from `p_init` (the network's
/// initial state when `None`). Time-varying drives rebuild the generator at
/// every stage time. The device models are used as given; parameter spreads
/// apply to Monte Carlo sampling only.
pub fn integrate_master(
    network: &Network,
    p_init: Option<&[f64]>,
    t_end: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<MasterSolution> {
    let grid = time_grid(t_end, steps)?;
    let n = network.device_count();
    let p0 = match p_init {
        Some(p) => p.to_vec(),
        None => initial_distribution(network)?,
    };
    let all_on = (1usize << n) - 1;
    if network.topology.is_dc() {
        let q = build_generator(network, 0.0)?;
        check_distribution(&p0, q.dim())?;
        let probs = ode::integrate(&Constant(&q), &p0, &grid, opts)?;
        let density = probs.iter().map(|p| flow(&q, p, all_on)).collect();
        finish(StateSpace::Full { devices: n }, grid, probs, density)
    } else {
        check_distribution(&p0, 1 << n)?;
        let dynamics = Varying(|t| build_generator(network, t));
        let probs = ode::integrate(&dynamics, &p0, &grid, opts)?;
        let density = grid
            .iter()
            .zip(&probs)
            .map(|(&t, p)| Ok(flow(&build_generator(network, t)?, p, all_on)))
            .collect::<Result<_>>()?;
        finish(StateSpace::Full { devices: n }, grid, probs, density)
    }
}

/// Solve `dp/dt = p Q` for an explicit generator over `steps` intervals.
pub fn integrate_generator(
    q: &Generator,
    p_init: &[f64],
    t_end: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let grid = time_grid(t_end, steps)?;
    check_distribution(p_init, q.dim())?;
    let probs = ode::integrate(&Constant(q), p_init, &grid, opts)?;
    Ok((grid, probs))
}

/// Solve the reduced chain numerically, returning per-state `p_m(t)`.
pub fn integrate_chain(
    chain: &ChainRates,
    t_end: f64,
    steps: usize,
    opts: &SolverOptions,
) -> Result<MasterSolution> {
    let grid = time_grid(t_end, steps)?;
    let n = chain.devices();
    // integrate level totals, whose birth rates are simply a_m
    let transitions: Vec<Transition> = (0..n)
        .map(|m| Transition {
            from: m,
            to: m + 1,
            rate: chain.a[m],
        })
        .collect();
    let q = Generator::from_transitions(n + 1, &transitions)?;
    let mut p0 = vec![0.0; n + 1];
    p0[0] = 1.0;
    let levels = ode::integrate(&Constant(&q), &p0, &grid, opts)?;
    let density = levels.iter().map(|p| chain.a[n - 1] * p[n - 1]).collect();
    let probs = levels
        .into_iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(m, x)| x / binomial(n, m))
                .collect()
        })
        .collect();
    finish(StateSpace::Reduced { devices: n }, grid, probs, density)
}

fn flow(q: &Generator, p: &[f64], target: usize) -> f64 {
    q.inflow(p, target) - q.exit_rate(target) * p[target]
}

fn finish(
    space: StateSpace,
    times: Vec<f64>,
    probs: Vec<Vec<f64>>,
    density: Vec<f64>,
) -> Result<MasterSolution> {
    let sol = MasterSolution {
        space,
        times,
        probs,
        density,
    };
    sol.check_invariants()?;
    Ok(sol)
}

/// Expected resistance of `device` at every grid time.
pub fn marginal_resistance(
    solution: &MasterSolution,
    device: usize,
    models: &[DeviceModel],
) -> Result<Vec<f64>> {
    let n = solution.devices();
    if device >= n || models.len() != n {
        return Err(Error::domain(format!(
            "device {device} / {} models for a {n}-device solution",
            models.len()
        )));
    }
    let (r_on, r_off) = (models[device].r_on(), models[device].r_off());
    Ok((0..solution.times.len())
        .map(|k| {
            let on = solution.marginal_on(k, device);
            r_off * (1.0 - on) + r_on * on
        })
        .collect())
}
