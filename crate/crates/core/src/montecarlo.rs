//! Stochastic trajectories of memristor networks.
//!
//! Two samplers are provided. The fixed-step scheme advances time in steps of
//! `dt`, recomputes device voltages for the current state, and switches each
//! device with probability `dt·γ` against one uniform draw per switchable
//! device, in device order. The event-driven scheme samples exact holding
//! times and is free of discretization bias, but needs a DC drive.
//!
//! Ensembles give trial `i` its own ChaCha8 stream `i` under the ensemble
//! seed, so results do not depend on scheduling or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::devices::{sample_params, DeviceModel};
use crate::error::{Error, Result};
use crate::network::{transition_rates, Network, NetworkState};

/// Step probability above which a fixed-step run is flagged as coarse.
pub const WARN_STEP_PROBABILITY: f64 = 0.1;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MEMKIN_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    FixedStep { dt: f64 },
    EventDriven,
}

/// How per-device `tau0`/`V0` spreads are applied across an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParamMode {
    /// Ignore spreads; use the network's models.
    Identical,
    /// Draw fresh parameters for every device in every trial.
    #[default]
    RedrawnPerTrial,
    /// Draw once per ensemble and reuse the draw in every trial.
    DrawnOnce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// First switching time of each device; `+∞` if it never switched.
    pub device_switch_times: Vec<f64>,
    /// First time every device is on; `+∞` if never reached.
    pub network_switch_time: f64,
    /// `(time, state)` after each change, starting with `(0, initial)`.
    pub trajectory: Option<Vec<(f64, NetworkState)>>,
}

impl TrialRecord {
    pub fn completed(&self) -> bool {
        self.network_switch_time.is_finite()
    }
}

struct Recorder {
    device: Vec<f64>,
    network: f64,
    trajectory: Option<Vec<(f64, NetworkState)>>,
}

impl Recorder {
    fn new(initial: &NetworkState, record: bool) -> Self {
        Recorder {
            device: vec![f64::INFINITY; initial.len()],
            network: if initial.is_all_on() {
                0.0
            } else {
                f64::INFINITY
            },
            trajectory: record.then(|| vec![(0.0, *initial)]),
        }
    }

    fn change(&mut self, t: f64, before: &NetworkState, after: &NetworkState) {
        let flipped = before.bits() ^ after.bits();
        for m in 0..before.len() {
            if flipped >> m & 1 == 1 && self.device[m].is_infinite() {
                self.device[m] = t;
            }
        }
        if after.is_all_on() && self.network.is_infinite() {
            self.network = t;
        }
        if let Some(tr) = &mut self.trajectory {
            tr.push((t, *after));
        }
    }

    fn finish(self) -> TrialRecord {
        TrialRecord {
            device_switch_times: self.device,
            network_switch_time: self.network,
            trajectory: self.trajectory,
        }
    }
}

fn check_models(network: &Network, models: &[DeviceModel]) -> Result<()> {
    if models.len() != network.device_count() {
        return Err(Error::domain(format!(
            "{} models for {} devices",
            models.len(),
            network.device_count()
        )));
    }
    Ok(())
}

/// Largest per-device switching probability `dt·γ` in the initial state.
pub fn initial_step_probability(network: &Network, models: &[DeviceModel], dt: f64) -> Result<f64> {
    check_models(network, models)?;
    let rates = transition_rates(&network.topology, models, &network.initial, 0.0)?;
    Ok(rates.iter().fold(0.0, |acc: f64, r| acc.max(dt * r)))
}

/// Fixed-step trajectory up to `horizon` or absorption.
pub fn simulate_fixed_step<R: Rng + ?Sized>(
    network: &Network,
    models: &[DeviceModel],
    dt: f64,
    horizon: f64,
    rng: &mut R,
    record: bool,
) -> Result<TrialRecord> {
    simulate_fixed_step_observed(network, models, dt, horizon, rng, record, |_, _| {})
}

/// As [`simulate_fixed_step`], calling `observe(t, state)` at `t = 0` and
/// after every step.
pub fn simulate_fixed_step_observed<R, F>(
    network: &Network,
    models: &[DeviceModel],
    dt: f64,
    horizon: f64,
    rng: &mut R,
    record: bool,
    mut observe: F,
) -> Result<TrialRecord>
where
    R: Rng + ?Sized,
    F: FnMut(f64, &NetworkState),
{
    check_models(network, models)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!("dt = {dt} must be finite and > 0")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain("fixed-step runs need a finite horizon"));
    }
    let p_max = initial_step_probability(network, models, dt)?;
    if p_max > 1.0 {
        return Err(Error::StepSize(format!(
            "dt·γ = {p_max} > 1 in the initial state; reduce dt below {}",
            dt / p_max
        )));
    }
    let dc = network.topology.is_dc();
    let n = models.len();
    let mut state = network.initial;
    let mut rec = Recorder::new(&state, record);
    observe(0.0, &state);
    let mut k: u64 = 0;
    while (k as f64) * dt < horizon {
        let t = k as f64 * dt;
        let rates = transition_rates(&network.topology, models, &state, t)?;
        if dc && rates.iter().all(|r| *r == 0.0) {
            break;
        }
        let mut next = state;
        for (m, &r) in rates.iter().enumerate().take(n) {
            if r > 0.0 {
                // later states may saturate; they switch within the step
                let p = (dt * r).min(1.0);
                if rng.random::<f64>() < p {
                    next = next.flip(m);
                }
            }
        }
        k += 1;
        let t_new = k as f64 * dt;
        if next != state {
            rec.change(t_new, &state, &next);
            state = next;
        }
        observe(t_new, &state);
    }
    Ok(rec.finish())
}

/// Exact (kinetic Monte Carlo) trajectory under DC drive.
pub fn simulate_event_driven<R: Rng + ?Sized>(
    network: &Network,
    models: &[DeviceModel],
    horizon: f64,
    rng: &mut R,
    record: bool,
) -> Result<TrialRecord> {
    check_models(network, models)?;
    if !network.topology.is_dc() {
        return Err(Error::domain(
            "event-driven sampling needs a DC drive; use the fixed-step scheme",
        ));
    }
    if !(horizon > 0.0) {
        return Err(Error::domain("horizon must be > 0"));
    }
    let mut state = network.initial;
    let mut rec = Recorder::new(&state, record);
    let mut t = 0.0;
    loop {
        let rates = transition_rates(&network.topology, models, &state, t)?;
        let total: f64 = rates.iter().sum();
        if total == 0.0 {
            break;
        }
        let u: f64 = rng.random();
        // holding times far below one ulp of t still advance the clock
        t = (t + -(1.0 - u).ln() / total).max(t.next_up());
        if t > horizon {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (m, &r) in rates.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                chosen = Some(m);
                if target < acc {
                    break;
                }
            }
        }
        let m = chosen.expect("a positive rate exists");
        let next = state.flip(m);
        rec.change(t, &state, &next);
        state = next;
    }
    Ok(rec.finish())
}

/// RNG stream of trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Device models with spreads applied from `rng`.
pub fn draw_models<R: Rng + ?Sized>(network: &Network, rng: &mut R) -> Result<Vec<DeviceModel>> {
    network
        .models
        .iter()
        .zip(&network.spreads)
        .map(|(model, spread)| match (model, spread) {
            (DeviceModel::Poisson(p), Some(s)) => {
                Ok(DeviceModel::Poisson(sample_params(p, s, rng)?))
            }
            _ => Ok(*model),
        })
        .collect()
}

/// Default fixed-step `dt`: one hundredth of the mean holding time of the
/// initial state under DC, or a thousandth of the shortest drive period.
pub fn default_dt(network: &Network, horizon: f64) -> Result<f64> {
    let periods: Vec<f64> = network
        .topology
        .drives()
        .iter()
        .filter_map(|d| match *d {
            crate::network::DriveSpec::Sine { frequency, .. } => Some(1.0 / frequency),
            _ => None,
        })
        .collect();
    if let Some(p) = periods.into_iter().reduce(f64::min) {
        return Ok(p / 1000.0);
    }
    let total: f64 = network.rates(&network.initial, 0.0)?.iter().sum();
    Ok(if total > 0.0 {
        0.01 / total
    } else {
        horizon / 1000.0
    })
}

/// Default horizon: `10^4` initial holding times under DC, 100 drive periods otherwise.
pub fn default_horizon(network: &Network) -> Result<f64> {
    let longest_period = network
        .topology
        .drives()
        .iter()
        .filter_map(|d| match *d {
            crate::network::DriveSpec::Sine { frequency, .. } => Some(1.0 / frequency),
            _ => None,
        })
        .reduce(f64::max);
    if let Some(p) = longest_period {
        return Ok(100.0 * p);
    }
    let total: f64 = network.rates(&network.initial, 0.0)?.iter().sum();
    Ok(if total > 0.0 { 1e4 / total } else { 1.0 })
}

/// Worker-thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Run `f` on a pool honouring [`thread_limit`].
pub fn with_thread_limit<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_limit().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub network: Network,
    pub scheme: Scheme,
    pub seed: u64,
    pub param_mode: ParamMode,
    pub horizon: f64,
    pub record_trajectory: bool,
}

impl EnsembleConfig {
    /// Event-driven, redrawn-per-trial, default horizon.
    pub fn new(network: Network, seed: u64) -> Result<Self> {
        let horizon = default_horizon(&network)?;
        Ok(EnsembleConfig {
            network,
            scheme: Scheme::EventDriven,
            seed,
            param_mode: ParamMode::RedrawnPerTrial,
            horizon,
            record_trajectory: false,
        })
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn param_mode(mut self, mode: ParamMode) -> Self {
        self.param_mode = mode;
        self
    }

    pub fn horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn record_trajectory(mut self, record: bool) -> Self {
        self.record_trajectory = record;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trials: Vec<TrialRecord>,
    pub seed: u64,
    pub scheme: Scheme,
    pub param_mode: ParamMode,
    pub horizon: f64,
    /// Coarse-step notices for fixed-step runs.
    pub warnings: Vec<String>,
}

impl Ensemble {
    pub fn network_times(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.network_switch_time).collect()
    }

    pub fn device_times(&self, device: usize) -> Vec<f64> {
        self.trials
            .iter()
            .map(|t| t.device_switch_times[device])
            .collect()
    }
}

/// Stream index reserved for the shared draw of [`ParamMode::DrawnOnce`].
const SHARED_DRAW_STREAM: u64 = u64::MAX;

/// Simulate `n_trials` independent trials.
pub fn run_ensemble(config: &EnsembleConfig, n_trials: usize) -> Result<Ensemble> {
    if n_trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let net = &config.network;
    net.topology.validate()?;
    let shared = match config.param_mode {
        ParamMode::DrawnOnce => Some(draw_models(
            net,
            &mut trial_rng(config.seed, SHARED_DRAW_STREAM),
        )?),
        _ => None,
    };
    let mut warnings = Vec::new();
    if let Scheme::FixedStep { dt } = config.scheme {
        let p = initial_step_probability(net, shared.as_deref().unwrap_or(&net.models), dt)?;
        if p > WARN_STEP_PROBABILITY {
            warnings.push(format!(
                "dt·γ = {p:.3} in the initial state exceeds {WARN_STEP_PROBABILITY}; results carry discretization bias"
            ));
        }
    }
    let trial = |i: usize| -> Result<TrialRecord> {
        let mut rng = trial_rng(config.seed, i as u64);
        let drawn;
        let models: &[DeviceModel] = match (config.param_mode, &shared) {
            (ParamMode::RedrawnPerTrial, _) if net.has_spread() => {
                drawn = draw_models(net, &mut rng)?;
                &drawn
            }
            (ParamMode::DrawnOnce, Some(m)) => m,
            _ => &net.models,
        };
        match config.scheme {
            Scheme::FixedStep { dt } => simulate_fixed_step(
                net,
                models,
                dt,
                config.horizon,
                &mut rng,
                config.record_trajectory,
            ),
            Scheme::EventDriven => simulate_event_driven(
                net,
                models,
                config.horizon,
                &mut rng,
                config.record_trajectory,
            ),
        }
    };
    let trials = with_thread_limit(|| {
        (0..n_trials)
            .into_par_iter()
            .map(trial)
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Ensemble {
        trials,
        seed: config.seed,
        scheme: config.scheme,
        param_mode: config.param_mode,
        horizon: config.horizon,
        warnings,
    })
}
