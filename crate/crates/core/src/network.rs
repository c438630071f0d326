//! Circuit topologies and per-state device voltages and rates.

use std::f64::consts::PI;

use crate::devices::{resistance, DeviceModel, DeviceState, ParamSpread};
use crate::error::{Error, Result};
use crate::netlist::{Element, Netlist};
use crate::nodal::nodal_solve;

/// Largest device count a [`NetworkState`] can hold.
pub const MAX_DEVICES: usize = 64;

/// Time dependence of an applied voltage source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveSpec {
    Dc {
        v_a: f64,
    },
    Sine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl DriveSpec {
    pub fn dc(v_a: f64) -> Self {
        DriveSpec::Dc { v_a }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        DriveSpec::Sine {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn voltage(&self, t: f64) -> f64 {
        match *self {
            DriveSpec::Dc { v_a } => v_a,
            DriveSpec::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
        }
    }

    pub fn is_dc(&self) -> bool {
        matches!(self, DriveSpec::Dc { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DriveSpec::Dc { v_a } if !v_a.is_finite() => {
                Err(Error::domain("DC voltage not finite"))
            }
            DriveSpec::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                if !(frequency.is_finite() && frequency > 0.0) {
                    return Err(Error::domain("sine frequency must be > 0"));
                }
                if !(amplitude.is_finite() && phase.is_finite()) {
                    return Err(Error::domain("sine amplitude/phase not finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Joint on/off configuration of `len` devices. Bit `m` is device `m`; 1 = on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkState {
    bits: u64,
    len: usize,
}

impl NetworkState {
    pub fn new(bits: u64, len: usize) -> Self {
        assert!(len <= MAX_DEVICES, "at most {MAX_DEVICES} devices");
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        NetworkState {
            bits: bits & mask,
            len,
        }
    }

    pub fn all_off(len: usize) -> Self {
        NetworkState::new(0, len)
    }

    pub fn all_on(len: usize) -> Self {
        NetworkState::new(u64::MAX, len)
    }

    pub fn from_states(states: &[DeviceState]) -> Self {
        let bits = states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_on())
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        NetworkState::new(bits, states.len())
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, m: usize) -> DeviceState {
        DeviceState::from_bit(self.bits >> m & 1 == 1)
    }

    pub fn flip(&self, m: usize) -> Self {
        NetworkState::new(self.bits ^ (1 << m), self.len)
    }

    pub fn on_count(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_all_on(&self) -> bool {
        self.on_count() as usize == self.len
    }
}

/// Circuit shape. Series and parallel chains orient every device with its
/// positive terminal toward the positive source terminal.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Series { n: usize, drive: DriveSpec },
    Parallel { n: usize, drive: DriveSpec },
    General { netlist: Netlist },
}

impl Topology {
    pub fn device_count(&self) -> usize {
        match self {
            Topology::Series { n, .. } | Topology::Parallel { n, .. } => *n,
            Topology::General { netlist } => netlist.memristor_count(),
        }
    }

    /// Drives of all sources, in netlist order.
    pub fn drives(&self) -> Vec<DriveSpec> {
        match self {
            Topology::Series { drive, .. } | Topology::Parallel { drive, .. } => vec![*drive],
            Topology::General { netlist } => netlist
                .elements
                .iter()
                .filter_map(|e| match e {
                    Element::Source { drive, .. } => Some(*drive),
                    _ => None,
                })
                .collect(),
        }
    }

    /// Whether every source in the circuit is DC.
    pub fn is_dc(&self) -> bool {
        match self {
            Topology::Series { drive, .. } | Topology::Parallel { drive, .. } => drive.is_dc(),
            Topology::General { netlist } => netlist.elements.iter().all(|e| match e {
                Element::Source { drive, .. } => drive.is_dc(),
                _ => true,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Topology::Series { n, drive } | Topology::Parallel { n, drive } => {
                if *n == 0 {
                    return Err(Error::domain("device count must be >= 1"));
                }
                if *n > MAX_DEVICES {
                    return Err(Error::Capacity(format!("at most {MAX_DEVICES} devices")));
                }
                drive.validate()
            }
            Topology::General { netlist } => netlist.validate(),
        }
    }
}

fn check_len(topology: &Topology, models: &[DeviceModel], state: &NetworkState) -> Result<usize> {
    let n = topology.device_count();
    if state.len() != n || models.len() != n {
        return Err(Error::domain(format!(
            "state/model length mismatch: topology has {n} devices, state {}, models {}",
            state.len(),
            models.len()
        )));
    }
    Ok(n)
}

/// Voltage across every memristor for network state `state` at time `t`.
pub fn device_voltages(
    topology: &Topology,
    models: &[DeviceModel],
    state: &NetworkState,
    t: f64,
) -> Result<Vec<f64>> {
    let n = check_len(topology, models, state)?;
    match topology {
        Topology::Parallel { drive, .. } => Ok(vec![drive.voltage(t); n]),
        Topology::Series { drive, .. } => {
            let r: Vec<f64> = (0..n)
                .map(|m| resistance(state.get(m), &models[m]))
                .collect();
            let total: f64 = r.iter().sum();
            let v = drive.voltage(t);
            Ok(r.iter().map(|rm| v * rm / total).collect())
        }
        Topology::General { netlist } => {
            let res: Vec<f64> = (0..n)
                .map(|m| resistance(state.get(m), &models[m]))
                .collect();
            let sol = nodal_solve(netlist, &res, t)?;
            Ok(netlist
                .memristors()
                .map(|(pos, neg)| sol.voltage(pos) - sol.voltage(neg))
                .collect())
        }
    }
}

/// Rate of the single available transition of each device in `state`.
pub fn transition_rates(
    topology: &Topology,
    models: &[DeviceModel],
    state: &NetworkState,
    t: f64,
) -> Result<Vec<f64>> {
    let v = device_voltages(topology, models, state, t)?;
    v.iter()
        .enumerate()
        .map(|(m, &vm)| models[m].rate(vm, state.get(m)))
        .collect()
}

/// Current delivered by the (first) source into the circuit.
pub fn source_current(
    topology: &Topology,
    models: &[DeviceModel],
    state: &NetworkState,
    t: f64,
) -> Result<f64> {
    let n = check_len(topology, models, state)?;
    let res = (0..n).map(|m| resistance(state.get(m), &models[m]));
    match topology {
        Topology::Series { drive, .. } => Ok(drive.voltage(t) / res.sum::<f64>()),
        Topology::Parallel { drive, .. } => {
            Ok(drive.voltage(t) * res.map(|r| 1.0 / r).sum::<f64>())
        }
        Topology::General { netlist } => {
            let res: Vec<f64> = res.collect();
            let sol = nodal_solve(netlist, &res, t)?;
            // branch unknowns carry the current flowing into the + terminal
            Ok(-sol.source_currents[0])
        }
    }
}

/// A circuit plus the devices that populate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub topology: Topology,
    pub models: Vec<DeviceModel>,
    pub initial: NetworkState,
    /// Device-to-device spread of `tau0`/`V0`; `None` keeps the model values.
    pub spreads: Vec<Option<ParamSpread>>,
}

impl Network {
    /// `n` identical devices in series, all off.
    pub fn series(n: usize, drive: DriveSpec, model: DeviceModel) -> Self {
        Network {
            topology: Topology::Series { n, drive },
            models: vec![model; n],
            initial: NetworkState::all_off(n),
            spreads: vec![None; n],
        }
    }

    /// `n` identical devices in parallel, all off.
    pub fn parallel(n: usize, drive: DriveSpec, model: DeviceModel) -> Self {
        Network {
            topology: Topology::Parallel { n, drive },
            models: vec![model; n],
            initial: NetworkState::all_off(n),
            spreads: vec![None; n],
        }
    }

    /// Network described by a netlist; device order is memristor order in the file.
    pub fn from_netlist(netlist: Netlist) -> Result<Self> {
        netlist.validate()?;
        let models = netlist.memristor_models();
        let initial = NetworkState::from_states(&netlist.memristor_initial_states());
        let spreads = netlist.memristor_spreads();
        Ok(Network {
            topology: Topology::General { netlist },
            models,
            initial,
            spreads,
        })
    }

    /// Apply the same spread to every Poisson device.
    pub fn with_spread(mut self, spread: ParamSpread) -> Self {
        for (s, m) in self.spreads.iter_mut().zip(&self.models) {
            if matches!(m, DeviceModel::Poisson(_)) {
                *s = Some(spread);
            }
        }
        self
    }

    pub fn has_spread(&self) -> bool {
        self.spreads.iter().any(Option::is_some)
    }

    pub fn device_count(&self) -> usize {
        self.topology.device_count()
    }

    pub fn voltages(&self, state: &NetworkState, t: f64) -> Result<Vec<f64>> {
        device_voltages(&self.topology, &self.models, state, t)
    }

    pub fn rates(&self, state: &NetworkState, t: f64) -> Result<Vec<f64>> {
        transition_rates(&self.topology, &self.models, state, t)
    }

    pub fn current(&self, state: &NetworkState, t: f64) -> Result<f64> {
        source_current(&self.topology, &self.models, state, t)
    }

    /// Whether all devices share one model.
    pub fn is_identical(&self) -> bool {
        self.models.windows(2).all(|w| w[0] == w[1])
    }

    /// Equivalent general netlist; the identity for general topologies.
    pub fn to_netlist(&self) -> Netlist {
        let mut nl = match &self.topology {
            Topology::General { netlist } => return netlist.clone(),
            Topology::Series { n, drive } => {
                Netlist::series(*n, *drive, &self.models, &self.initial)
            }
            Topology::Parallel { n, drive } => {
                Netlist::parallel(*n, *drive, &self.models, &self.initial)
            }
        };
        nl.set_spreads(&self.spreads);
        nl
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{rate_off_on, PoissonExpModel};
    use proptest::prelude::*;

    fn reference() -> DeviceModel {
        PoissonExpModel::reference().into()
    }

    #[test]
    fn series_two_examples() {
        let net = Network::series(2, DriveSpec::dc(2.0), reference());
        let v = net.voltages(&NetworkState::new(0b00, 2), 0.0).unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
        // device 0 on, device 1 off
        let v = net.voltages(&NetworkState::new(0b01, 2), 0.0).unwrap();
        assert!((v[1] - 10.0 / 11.0 * 2.0).abs() < 1e-15);
        assert!((v[0] - 1.0 / 11.0 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn parallel_sees_source() {
        let net = Network::parallel(10, DriveSpec::dc(1.0), reference());
        for bits in [0u64, 0b1010, 0x3ff] {
            let v = net.voltages(&NetworkState::new(bits, 10), 0.0).unwrap();
            assert_eq!(v, vec![1.0; 10]);
        }
    }

    #[test]
    fn rate_examples() {
        let m = PoissonExpModel::reference();
        let g = rate_off_on(1.0, &m).unwrap();
        let net = Network::series(2, DriveSpec::dc(2.0), m.into());
        let r = net.rates(&NetworkState::all_off(2), 0.0).unwrap();
        assert!((r[0] - g).abs() < 1e-9 * g && (r[1] - g).abs() < 1e-9 * g);
        assert!((g - 1617.2173180326342).abs() < 1e-9);

        let neg = Network::series(3, DriveSpec::dc(-2.0), m.into());
        assert_eq!(
            neg.rates(&NetworkState::all_off(3), 0.0).unwrap(),
            vec![0.0; 3]
        );

        let par = Network::parallel(4, DriveSpec::dc(1.0), m.into());
        let r = par.rates(&NetworkState::all_off(4), 0.0).unwrap();
        assert!(r.iter().all(|&x| x == g));
    }

    #[test]
    fn length_mismatch_is_error() {
        let net = Network::series(2, DriveSpec::dc(2.0), reference());
        assert!(net.voltages(&NetworkState::all_off(3), 0.0).is_err());
    }

    #[test]
    fn sine_drive_value() {
        let d = DriveSpec::sine(1.5, 1e3);
        assert!((d.voltage(0.25e-3) - 1.5).abs() < 1e-12);
        assert!(DriveSpec::sine(1.0, 0.0).validate().is_err());
    }

    #[test]
    fn series_matches_general_netlist() {
        for n in 1..=6 {
            let net = Network::series(n, DriveSpec::dc(3.0), reference());
            let general = Network::from_netlist(net.to_netlist()).unwrap();
            for bits in 0..(1u64 << n) {
                let s = NetworkState::new(bits, n);
                let a = net.voltages(&s, 0.0).unwrap();
                let b = general.voltages(&s, 0.0).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!(
                        (x - y).abs() <= 1e-12 * 3.0,
                        "n={n} bits={bits:b}: {x} vs {y}"
                    );
                }
            }
        }
    }

    #[test]
    fn parallel_matches_general_netlist() {
        let net = Network::parallel(4, DriveSpec::dc(1.0), reference());
        let general = Network::from_netlist(net.to_netlist()).unwrap();
        for bits in 0..16 {
            let s = NetworkState::new(bits, 4);
            let b = general.voltages(&s, 0.0).unwrap();
            assert!(b.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    proptest! {
        #[test]
        fn series_kvl(n in 1usize..12, bits in any::<u64>(), va in -20.0f64..20.0) {
            let net = Network::series(n, DriveSpec::dc(va), reference());
            let v = net.voltages(&NetworkState::new(bits, n), 0.0).unwrap();
            let sum: f64 = v.iter().sum();
            prop_assert!((sum - va).abs() <= 1e-12 * va.abs().max(1e-300));
        }

        #[test]
        fn divider_cascade(n in 2usize..10, bits in any::<u64>(), pick in any::<usize>()) {
            let net = Network::series(n, DriveSpec::dc(5.0), reference());
            let s = NetworkState::new(bits, n);
            let off: Vec<usize> = (0..n).filter(|&m| !s.get(m).is_on()).collect();
            prop_assume!(off.len() >= 2);
            let flip = off[pick % off.len()];
            let before = net.voltages(&s, 0.0).unwrap();
            let after = net.voltages(&s.flip(flip), 0.0).unwrap();
            for &m in off.iter().filter(|&&m| m != flip) {
                prop_assert!(after[m] > before[m]);
            }
        }

        #[test]
        fn rates_finite_nonnegative(n in 1usize..8, bits in any::<u64>(), va in -50.0f64..50.0) {
            for net in [
                Network::series(n, DriveSpec::dc(va), reference()),
                Network::parallel(n, DriveSpec::dc(va), reference()),
            ] {
                let r = net.rates(&NetworkState::new(bits, n), 0.0).unwrap();
                prop_assert!(r.iter().all(|x| x.is_finite() && *x >= 0.0));
            }
        }
    }
}
