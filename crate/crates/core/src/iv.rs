//! Current-voltage loops under sinusoidal drive.

use rayon::prelude::*;

use crate::devices::DeviceState;
use crate::error::{Error, Result};
use crate::montecarlo::{
    draw_models, simulate_fixed_step_observed, trial_rng, with_thread_limit, ParamMode,
};
use crate::network::{device_voltages, source_current, DriveSpec, Network, NetworkState};

/// Sampling points per drive period when no `dt` is given.
pub const DEFAULT_STEPS_PER_CYCLE: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct IvConfig {
    pub network: Network,
    /// Requested step; rounded so that a whole number of steps fits one period.
    pub dt: Option<f64>,
    pub cycles: usize,
    pub trials: usize,
    pub seed: u64,
    pub param_mode: ParamMode,
    /// Keep every sample of every trial in [`IvSweepResult::raw`].
    pub keep_raw: bool,
}

impl IvConfig {
    pub fn new(network: Network, cycles: usize, seed: u64) -> Self {
        IvConfig {
            network,
            dt: None,
            cycles,
            trials: 1,
            seed,
            param_mode: ParamMode::default(),
            keep_raw: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvPoint {
    pub t: f64,
    pub v: f64,
    pub i: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvSweepResult {
    pub frequency: f64,
    pub dt: f64,
    pub steps_per_cycle: usize,
    /// Source voltage at each phase point of one period.
    pub voltage: Vec<f64>,
    /// Current at each phase point, averaged over cycles and trials.
    pub current: Vec<f64>,
    /// Per-trial samples; empty unless `keep_raw`.
    pub raw: Vec<Vec<IvPoint>>,
    /// `|V|` across each device when its switching step began.
    pub switch_voltages: Vec<f64>,
    /// `|∮ I dV|` of the positive lobe plus that of the negative lobe.
    pub loop_area: f64,
    pub warnings: Vec<String>,
}

struct TrialOutput {
    current_sum: Vec<f64>,
    raw: Vec<IvPoint>,
    switch_voltages: Vec<f64>,
}

fn sine_drive(network: &Network) -> Result<DriveSpec> {
    let drives = network.topology.drives();
    match drives.first() {
        Some(d @ DriveSpec::Sine { .. }) => Ok(*d),
        _ => Err(Error::domain("I-V sweeps need a sinusoidal first source")),
    }
}

/// Average I-V loop of `config.trials` fixed-step runs of `config.cycles` periods each.
pub fn iv_sweep(config: &IvConfig) -> Result<IvSweepResult> {
    let net = &config.network;
    net.topology.validate()?;
    let drive = sine_drive(net)?;
    let DriveSpec::Sine { frequency, .. } = drive else {
        unreachable!()
    };
    if config.cycles == 0 || config.trials == 0 {
        return Err(Error::domain("cycles and trials must be >= 1"));
    }
    let period = 1.0 / frequency;
    let steps_per_cycle = match config.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => ((period / dt).round() as usize).max(2),
        Some(dt) => return Err(Error::domain(format!("dt = {dt} must be finite and > 0"))),
        None => DEFAULT_STEPS_PER_CYCLE,
    };
    let dt = period / steps_per_cycle as f64;
    let total_steps = config.cycles * steps_per_cycle;
    let horizon = total_steps as f64 * dt;
    let shared = match config.param_mode {
        ParamMode::DrawnOnce => Some(draw_models(net, &mut trial_rng(config.seed, u64::MAX))?),
        _ => None,
    };

    let trial = |index: usize| -> Result<TrialOutput> {
        let mut rng = trial_rng(config.seed, index as u64);
        let models = match (config.param_mode, &shared) {
            (ParamMode::RedrawnPerTrial, _) if net.has_spread() => draw_models(net, &mut rng)?,
            (ParamMode::DrawnOnce, Some(m)) => m.clone(),
            _ => net.models.clone(),
        };
        let mut out = TrialOutput {
            current_sum: vec![0.0; steps_per_cycle],
            raw: Vec::new(),
            switch_voltages: Vec::new(),
        };
        let mut failure = None;
        let mut previous: Option<(usize, NetworkState)> = None;
        let mut observe = |t: f64, state: &NetworkState| {
            if failure.is_some() {
                return;
            }
            let k = (t / dt).round() as usize;
            let mut step = || -> Result<()> {
                if let Some((k_prev, before)) = previous {
                    if before != *state {
                        let t_prev = k_prev as f64 * dt;
                        let v = device_voltages(&net.topology, &models, &before, t_prev)?;
                        for m in 0..state.len() {
                            if before.get(m) != state.get(m) {
                                out.switch_voltages.push(v[m].abs());
                            }
                        }
                    }
                }
                previous = Some((k, *state));
                if k < total_steps {
                    let i = source_current(&net.topology, &models, state, t)?;
                    out.current_sum[k % steps_per_cycle] += i;
                    if config.keep_raw {
                        out.raw.push(IvPoint {
                            t,
                            v: drive.voltage(t),
                            i,
                        });
                    }
                }
                Ok(())
            };
            if let Err(e) = step() {
                failure = Some(e);
            }
        };
        simulate_fixed_step_observed(net, &models, dt, horizon, &mut rng, false, &mut observe)?;
        match failure {
            Some(e) => Err(e),
            None => Ok(out),
        }
    };

    let outputs = with_thread_limit(|| {
        (0..config.trials)
            .into_par_iter()
            .map(trial)
            .collect::<Result<Vec<_>>>()
    })?;
    let samples = (config.cycles * config.trials) as f64;
    let mut current = vec![0.0; steps_per_cycle];
    let mut raw = Vec::new();
    let mut switch_voltages = Vec::new();
    for out in outputs {
        for (acc, s) in current.iter_mut().zip(&out.current_sum) {
            *acc += s;
        }
        if config.keep_raw {
            raw.push(out.raw);
        }
        switch_voltages.extend(out.switch_voltages);
    }
    current.iter_mut().for_each(|c| *c /= samples);
    let voltage: Vec<f64> = (0..steps_per_cycle)
        .map(|k| drive.voltage(k as f64 * dt))
        .collect();
    let loop_area = loop_area(&voltage, &current);

    let mut warnings = Vec::new();
    let peak_rate = net
        .models
        .iter()
        .map(|m| {
            let a = drive_amplitude(&drive);
            Ok(m.rate(a, DeviceState::Off)?
                .max(m.rate(-a, DeviceState::On)?))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if dt * peak_rate > crate::montecarlo::WARN_STEP_PROBABILITY {
        warnings.push(format!(
            "dt·γ reaches {:.3} at the drive peak; results carry discretization bias",
            dt * peak_rate
        ));
    }
    Ok(IvSweepResult {
        frequency,
        dt,
        steps_per_cycle,
        voltage,
        current,
        raw,
        switch_voltages,
        loop_area,
        warnings,
    })
}

fn drive_amplitude(drive: &DriveSpec) -> f64 {
    match *drive {
        DriveSpec::Sine { amplitude, .. } => amplitude.abs(),
        DriveSpec::Dc { v_a } => v_a.abs(),
    }
}

/// Enclosed area of a closed trace, split into the `V >= 0` and `V < 0` lobes
/// by the sign of each segment's midpoint voltage.
pub fn loop_area(voltage: &[f64], current: &[f64]) -> f64 {
    let n = voltage.len().min(current.len());
    let (mut pos, mut neg) = (0.0, 0.0);
    for k in 0..n {
        let j = (k + 1) % n;
        let contribution = 0.5 * (current[k] + current[j]) * (voltage[j] - voltage[k]);
        if voltage[k] + voltage[j] >= 0.0 {
            pos += contribution;
        } else {
            neg += contribution;
        }
    }
    f64::abs(pos) + f64::abs(neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{AptmModel, DeviceModel, PoissonExpModel};
    use std::f64::consts::PI;

    #[test]
    fn ohmic_trace_has_no_area() {
        let v: Vec<f64> = (0..400)
            .map(|k| (2.0 * PI * k as f64 / 400.0).sin())
            .collect();
        let i: Vec<f64> = v.iter().map(|x| x / 1e3).collect();
        assert!(loop_area(&v, &i) < 1e-15);
    }

    #[test]
    fn pinched_loop_area() {
        // conductance g1 on the rising quarter, g2 on the falling quarter
        let n = 4000;
        let (g1, g2) = (1.0, 3.0);
        let v: Vec<f64> = (0..n)
            .map(|k| (2.0 * PI * k as f64 / n as f64).sin())
            .collect();
        let i: Vec<f64> = (0..n)
            .map(|k| {
                let phase = k as f64 / n as f64;
                let g = if phase < 0.25 || (0.5..0.75).contains(&phase) {
                    g1
                } else {
                    g2
                };
                g * v[k]
            })
            .collect();
        // each lobe encloses (g2 - g1)/2 between the two branches
        assert!((loop_area(&v, &i) - 2.0 * (g2 - g1) / 2.0).abs() < 1e-2);
    }

    #[test]
    fn threshold_device_never_switches_below_threshold() {
        let model: DeviceModel = AptmModel::reference().into();
        let net = Network::series(1, DriveSpec::sine(1.5, 1e3), model);
        let mut cfg = IvConfig::new(net, 20, 5);
        cfg.trials = 4;
        let res = iv_sweep(&cfg).unwrap();
        assert!(!res.switch_voltages.is_empty());
        assert!(res.switch_voltages.iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn raw_samples_and_determinism() {
        let net = Network::series(
            1,
            DriveSpec::sine(1.5, 1e3),
            PoissonExpModel::reference().into(),
        );
        let mut cfg = IvConfig::new(net, 3, 9);
        cfg.keep_raw = true;
        cfg.dt = Some(1e-5);
        let a = iv_sweep(&cfg).unwrap();
        assert_eq!(a.steps_per_cycle, 100);
        assert_eq!(a.raw[0].len(), 300);
        assert_eq!(a, iv_sweep(&cfg).unwrap());
        assert!(a.raw[0].iter().all(|p| p.i.abs() <= 1.5 / 1e3 + 1e-15));
    }

    #[test]
    fn dc_rejected() {
        let net = Network::series(1, DriveSpec::dc(1.0), PoissonExpModel::reference().into());
        assert!(iv_sweep(&IvConfig::new(net, 1, 0)).is_err());
    }
}
