//! Rate laws for binary probabilistic memristors.
//!
//! Two laws are provided. The Poisson-exponential law makes the characteristic
//! switching time an activated function of voltage, `tau(V) = tau0 * exp(-V/V0)`,
//! and allows off-to-on switching only under positive bias and on-to-off only
//! under negative bias. The adaptive probabilistic threshold model (APTM) has
//! hard thresholds and a power-law dependence on overdrive.
//!
//! Units are SI throughout: seconds, volts, ohms, hertz.

use rand::Rng;

use crate::error::{Error, Result};

/// Upper bound on any switching rate, in hertz.
///
/// Activated rates overflow `f64` for `V/V0 > ~700`. Anything above this cap
/// is treated as an instantaneous switch.
pub const MAX_RATE: f64 = 1e300;

/// Binary state of a single device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DeviceState {
    #[default]
    Off,
    On,
}

impl DeviceState {
    pub fn flipped(self) -> Self {
        match self {
            DeviceState::Off => DeviceState::On,
            DeviceState::On => DeviceState::Off,
        }
    }

    pub fn is_on(self) -> bool {
        self == DeviceState::On
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            DeviceState::On
        } else {
            DeviceState::Off
        }
    }
}

/// Poisson-exponential rate law with two resistance levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonExpModel {
    pub tau0: f64,
    pub v0: f64,
    pub tau1: f64,
    pub v1: f64,
    pub r_on: f64,
    pub r_off: f64,
}

impl PoissonExpModel {
    pub fn new(tau0: f64, v0: f64, tau1: f64, v1: f64, r_on: f64, r_off: f64) -> Result<Self> {
        let m = PoissonExpModel {
            tau0,
            v0,
            tau1,
            v1,
            r_on,
            r_off,
        };
        m.validate()?;
        Ok(m)
    }

    /// Parameters used throughout the reference experiments:
    /// `tau0 = tau1 = 3e5 s`, `V0 = V1 = 0.05 V`, `R_on = 1 kΩ`, `R_off = 10 kΩ`.
    pub fn reference() -> Self {
        PoissonExpModel {
            tau0: 3e5,
            v0: 0.05,
            tau1: 3e5,
            v1: 0.05,
            r_on: 1e3,
            r_off: 1e4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau0", self.tau0),
            ("v0", self.v0),
            ("tau1", self.tau1),
            ("v1", self.v1),
            ("ron", self.r_on),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.r_off.is_finite() && self.r_off > self.r_on) {
            return Err(Error::domain(format!(
                "roff must exceed ron ({} <= {})",
                self.r_off, self.r_on
            )));
        }
        Ok(())
    }
}

/// Adaptive probabilistic threshold model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AptmModel {
    pub k_on: f64,
    pub k_off: f64,
    pub v_on: f64,
    pub v_off: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    pub r_on: f64,
    pub r_off: f64,
}

impl AptmModel {
    /// Parameter set of the reference APTM I–V loop:
    /// `k = 1e5 Hz`, thresholds ±1 V, unit exponents, 1 kΩ / 10 kΩ.
    pub fn reference() -> Self {
        AptmModel {
            k_on: 1e5,
            k_off: 1e5,
            v_on: 1.0,
            v_off: -1.0,
            alpha_on: 1.0,
            alpha_off: 1.0,
            r_on: 1e3,
            r_off: 1e4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kon", self.k_on),
            ("koff", self.k_off),
            ("von", self.v_on),
            ("aon", self.alpha_on),
            ("aoff", self.alpha_off),
            ("ron", self.r_on),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.v_off.is_finite() && self.v_off < 0.0) {
            return Err(Error::domain(format!(
                "voff must be < 0, got {}",
                self.v_off
            )));
        }
        if !(self.r_off.is_finite() && self.r_off > self.r_on) {
            return Err(Error::domain("roff must exceed ron"));
        }
        Ok(())
    }
}

/// Closed uniform intervals for the device-to-device spread of `tau0` and `V0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpread {
    pub tau0_range: (f64, f64),
    pub v0_range: (f64, f64),
}

impl ParamSpread {
    /// `tau0 ∈ [2e5, 4e5] s`, `V0 ∈ [0.04, 0.06] V`.
    pub fn reference() -> Self {
        ParamSpread {
            tau0_range: (2e5, 4e5),
            v0_range: (0.04, 0.06),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("tau0", self.tau0_range), ("v0", self.v0_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0) {
                return Err(Error::domain(format!(
                    "{name} spread bounds must be positive"
                )));
            }
            if lo > hi {
                return Err(Error::domain(format!(
                    "{name} spread interval [{lo}, {hi}] is empty"
                )));
            }
        }
        Ok(())
    }
}

/// Either rate law, as attached to a concrete device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceModel {
    Poisson(PoissonExpModel),
    Aptm(AptmModel),
}

impl DeviceModel {
    /// Rate of leaving `from` when `v` is applied across the device.
    pub fn rate(&self, v: f64, from: DeviceState) -> Result<f64> {
        match (self, from) {
            (DeviceModel::Poisson(m), DeviceState::Off) => rate_off_on(v, m),
            (DeviceModel::Poisson(m), DeviceState::On) => rate_on_off(v, m),
            (DeviceModel::Aptm(m), s) => aptm_rate(v, m, s),
        }
    }

    pub fn r_on(&self) -> f64 {
        match self {
            DeviceModel::Poisson(m) => m.r_on,
            DeviceModel::Aptm(m) => m.r_on,
        }
    }

    pub fn r_off(&self) -> f64 {
        match self {
            DeviceModel::Poisson(m) => m.r_off,
            DeviceModel::Aptm(m) => m.r_off,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DeviceModel::Poisson(m) => m.validate(),
            DeviceModel::Aptm(m) => m.validate(),
        }
    }
}

impl From<PoissonExpModel> for DeviceModel {
    fn from(m: PoissonExpModel) -> Self {
        DeviceModel::Poisson(m)
    }
}

impl From<AptmModel> for DeviceModel {
    fn from(m: AptmModel) -> Self {
        DeviceModel::Aptm(m)
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} is not finite ({x})")))
    }
}

/// Characteristic switching time `tau0 * exp(-V/V0)`.
///
/// Underflows toward zero (never to a negative or NaN value) for large `V/V0`.
pub fn tau_of_voltage(v: f64, tau0: f64, v0: f64) -> Result<f64> {
    check_finite("voltage", v)?;
    check_finite("tau0", tau0)?;
    check_finite("v0", v0)?;
    if tau0 <= 0.0 || v0 <= 0.0 {
        return Err(Error::domain("tau0 and v0 must be > 0"));
    }
    let tau = tau0 * (-v / v0).exp();
    Ok(if tau.is_finite() { tau } else { f64::MAX })
}

/// Reciprocal of the activated switching time, evaluated in log space and
/// clamped to [`MAX_RATE`].
fn activated_rate(v_abs: f64, tau: f64, v_scale: f64) -> f64 {
    let log_rate = v_abs / v_scale - tau.ln();
    if log_rate >= MAX_RATE.ln() {
        MAX_RATE
    } else {
        log_rate.exp()
    }
}

/// Off-to-on rate of the Poisson-exponential law. Zero for `V <= 0`.
pub fn rate_off_on(v: f64, model: &PoissonExpModel) -> Result<f64> {
    check_finite("voltage", v)?;
    if v > 0.0 {
        Ok(activated_rate(v, model.tau0, model.v0))
    } else {
        Ok(0.0)
    }
}

/// On-to-off rate of the Poisson-exponential law. Zero for `V >= 0`.
pub fn rate_on_off(v: f64, model: &PoissonExpModel) -> Result<f64> {
    check_finite("voltage", v)?;
    if v < 0.0 {
        Ok(activated_rate(-v, model.tau1, model.v1))
    } else {
        Ok(0.0)
    }
}

/// APTM rate for a device currently in state `from`.
pub fn aptm_rate(v: f64, model: &AptmModel, from: DeviceState) -> Result<f64> {
    check_finite("voltage", v)?;
    let r = match from {
        DeviceState::Off if v > model.v_on => {
            model.k_on * (v / model.v_on - 1.0).powf(model.alpha_on)
        }
        DeviceState::On if v < model.v_off => {
            model.k_off * (v / model.v_off - 1.0).powf(model.alpha_off)
        }
        _ => 0.0,
    };
    Ok(r.min(MAX_RATE))
}

/// Copy of `base` with `tau0` and `V0` drawn uniformly from `spread`.
pub fn sample_params<R: Rng + ?Sized>(
    base: &PoissonExpModel,
    spread: &ParamSpread,
    rng: &mut R,
) -> Result<PoissonExpModel> {
    spread.validate()?;
    let draw = |rng: &mut R, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    };
    let tau0 = draw(rng, spread.tau0_range);
    let v0 = draw(rng, spread.v0_range);
    Ok(PoissonExpModel { tau0, v0, ..*base })
}

/// Resistance of a device in the given state.
pub fn resistance(state: DeviceState, model: &DeviceModel) -> f64 {
    match state {
        DeviceState::Off => model.r_off(),
        DeviceState::On => model.r_on(),
    }
}
