//! Reduced birth chain for `N` identical devices.
//!
//! Level `m` is any state with `m` devices on. Per-state occupations `p_m`
//! obey `dp_m/dt = b_m p_{m-1} - a_m p_m` with `a_m = (N-m) γ_m` and
//! `b_m = m γ_{m-1}`, and the level totals are `C(N,m) p_m`.

use crate::devices::{DeviceModel, DeviceState};
use crate::error::{Error, Result};
use crate::network::{Network, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Series,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRates {
    /// Per-device switching rate with `j` devices already on, `j = 0..N-1`.
    pub gamma: Vec<f64>,
    /// `a[m]` for `m = 0..=N`; `a[N] = 0`.
    pub a: Vec<f64>,
    /// `b[m]` for `m = 0..=N`; `b[0]` is unused and set to 0.
    pub b: Vec<f64>,
}

impl ChainRates {
    pub fn from_gamma(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::domain("chain needs at least one device"));
        }
        if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::domain("chain rates must be finite and >= 0"));
        }
        let n = gamma.len();
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for m in 0..n {
            a[m] = (n - m) as f64 * gamma[m];
        }
        for m in 1..=n {
            b[m] = m as f64 * gamma[m - 1];
        }
        Ok(ChainRates { gamma, a, b })
    }

    pub fn devices(&self) -> usize {
        self.gamma.len()
    }

    /// The common rate when every level switches at the same per-device rate.
    pub fn uniform_rate(&self) -> Option<f64> {
        let g = self.gamma[0];
        (g > 0.0 && self.gamma.iter().all(|x| *x == g)).then_some(g)
    }
}

/// Chain rates for `n` identical devices in series or parallel under DC `v_a`.
pub fn reduce_chain(
    kind: ChainKind,
    model: &DeviceModel,
    v_a: f64,
    n: usize,
) -> Result<ChainRates> {
    model.validate()?;
    if n == 0 {
        return Err(Error::domain("chain needs at least one device"));
    }
    let (r_on, r_off) = (model.r_on(), model.r_off());
    let gamma = (0..n)
        .map(|j| {
            let v = match kind {
                ChainKind::Parallel => v_a,
                ChainKind::Series => v_a * r_off / (j as f64 * r_on + (n - j) as f64 * r_off),
            };
            model.rate(v, DeviceState::Off)
        })
        .collect::<Result<Vec<_>>>()?;
    ChainRates::from_gamma(gamma)
}

/// Chain of a network, when it reduces: identical devices, all off, DC drive,
/// no parameter spread, series or parallel layout.
pub fn chain_for(network: &Network) -> Result<ChainRates> {
    let refuse = |why: &str| Err(Error::NotReducible(why.to_string()));
    if !network.is_identical() {
        return refuse("devices are not identical");
    }
    if network.has_spread() {
        return refuse("device parameters are spread");
    }
    if network.initial.on_count() != 0 {
        return refuse("the chain starts from the all-off state");
    }
    let (kind, n, drive) = match &network.topology {
        Topology::Series { n, drive } => (ChainKind::Series, *n, drive),
        Topology::Parallel { n, drive } => (ChainKind::Parallel, *n, drive),
        Topology::General { .. } => return refuse("general circuits have no symmetric chain"),
    };
    let v_a = match *drive {
        crate::network::DriveSpec::Dc { v_a } => v_a,
        _ => return refuse("drive is not DC"),
    };
    reduce_chain(kind, &network.models[0], v_a, n)
}

/// Relative gap below which two rates are treated as coincident.
pub const DEGENERACY_GAP: f64 = 1e-9;

// Gaps are measured against the larger rate of each pair: series cascades
// mix rates 30+ decades apart, so a global scale would flag every chain.
fn check_distinct(a: &[f64]) -> Result<()> {
    let mut sorted = a.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] - w[0] <= DEGENERACY_GAP * w[1] {
            return Err(Error::Degenerate(format!(
                "rates {} and {} nearly coincide; integrate the master equation instead",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `ln Π_{k=1}^{m} b_k`, or `None` when a factor vanishes.
fn log_b_product(chain: &ChainRates, m: usize) -> Option<f64> {
    let mut s = 0.0;
    for k in 1..=m {
        if chain.b[k] <= 0.0 {
            return None;
        }
        s += chain.b[k].ln();
    }
    Some(s)
}

/// `(ln |Π_{j≠i} 1/(a_j - a_i)|, sign)` over `j = 0..=m`.
fn log_reciprocal_product(a: &[f64], i: usize) -> (f64, f64) {
    let mut log = 0.0;
    let mut sign = 1.0;
    for (j, &aj) in a.iter().enumerate() {
        if j != i {
            let d = aj - a[i];
            log -= d.abs().ln();
            if d < 0.0 {
                sign = -sign;
            }
        }
    }
    (log, sign)
}

/// Pre-exponential factors `C_i^m`, `i = 0..=m`, of `p_m(t) = Σ_i C_i^m e^{-a_i t}`.
pub fn coefficients(chain: &ChainRates, m: usize) -> Result<Vec<f64>> {
    let n = chain.devices();
    if m > n {
        return Err(Error::domain(format!("level {m} exceeds {n} devices")));
    }
    let a = &chain.a[..=m];
    let Some(log_b) = log_b_product(chain, m) else {
        return Ok(vec![0.0; m + 1]);
    };
    check_distinct(a)?;
    Ok((0..=m)
        .map(|i| {
            let (log_r, sign) = log_reciprocal_product(a, i);
            sign * (log_b + log_r).exp()
        })
        .collect())
}

fn closed_form_scaled(chain: &ChainRates, m: usize, t: f64, extra_log: f64) -> Result<f64> {
    let n = chain.devices();
    if m > n {
        return Err(Error::domain(format!("level {m} exceeds {n} devices")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time {t} must be finite and >= 0")));
    }
    if m == 0 {
        return Ok((extra_log - chain.a[0] * t).exp());
    }
    let a = &chain.a[..=m];
    let Some(log_b) = log_b_product(chain, m) else {
        return Ok(0.0);
    };
    if let Some(g) = chain.uniform_rate() {
        // independent devices: product form, free of alternating cancellation
        let on = -(-g * t).exp_m1();
        return Ok(extra_log.exp() * on.powi(m as i32) * (-g * (n - m) as f64 * t).exp());
    }
    check_distinct(a)?;
    let mut sum = 0.0;
    for i in 0..=m {
        let (log_r, sign) = log_reciprocal_product(a, i);
        sum += sign * (extra_log + log_b + log_r - a[i] * t).exp();
    }
    Ok(sum)
}

/// Per-state occupation `p_m(t)` of a state with `m` devices on.
pub fn closed_form_pm(chain: &ChainRates, m: usize, t: f64) -> Result<f64> {
    closed_form_scaled(chain, m, t, 0.0)
}

/// Density of the network completion time, `b_N p_{N-1}(t)`.
pub fn switching_time_pdf(chain: &ChainRates, t: f64) -> Result<f64> {
    let n = chain.devices();
    if chain.b[n] == 0.0 {
        return Ok(0.0);
    }
    // b_N is folded into the log product to keep large N finite
    closed_form_scaled(chain, n - 1, t, chain.b[n].ln())
}

/// Probability that all devices are on by time `t`.
pub fn switching_time_cdf(chain: &ChainRates, t: f64) -> Result<f64> {
    closed_form_pm(chain, chain.devices(), t)
}

/// Mean completion time `Σ_j 1/a_j`.
pub fn mean_switch_time_chain(chain: &ChainRates) -> Result<f64> {
    let n = chain.devices();
    let mut s = 0.0;
    for j in 0..n {
        if chain.a[j] == 0.0 {
            return Err(Error::InfiniteTime(format!(
                "level {j} has no way out; the network never completes"
            )));
        }
        s += 1.0 / chain.a[j];
    }
    Ok(s)
}

/// Variance of the completion time, a sum of independent exponential stages.
pub fn variance_switch_time_chain(chain: &ChainRates) -> Result<f64> {
    mean_switch_time_chain(chain)?;
    Ok(chain.a[..chain.devices()]
        .iter()
        .map(|a| 1.0 / (a * a))
        .sum())
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{rate_off_on, PoissonExpModel};
    use crate::quad::{integrate_to_infinity, Tolerance};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> DeviceModel {
        PoissonExpModel::reference().into()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn series_two_rates() {
        let c = reduce_chain(ChainKind::Series, &reference(), 2.0, 2).unwrap();
        let m = PoissonExpModel::reference();
        assert_eq!(c.gamma[0], rate_off_on(1.0, &m).unwrap());
        assert!(rel(c.gamma[1], rate_off_on(20.0 / 11.0, &m).unwrap()) < 1e-14);
        assert_eq!(c.a[2], 0.0);
        assert_eq!(c.b[1], c.gamma[0]);
    }

    #[test]
    fn series_ten_last_voltage() {
        // cross-check the divider formula against a nodal solve
        use crate::network::{DriveSpec, NetworkState};
        let net = Network::series(10, DriveSpec::dc(10.0), reference());
        let state = NetworkState::new(0b01_1111_1111, 10);
        let v = net.to_netlist();
        let res: Vec<f64> = (0..10)
            .map(|m| crate::devices::resistance(state.get(m), &reference()))
            .collect();
        let sol = crate::nodal::nodal_solve(&v, &res, 0.0).unwrap();
        let (p, q) = v.memristors().nth(9).unwrap();
        let v_off = sol.voltage(p) - sol.voltage(q);
        assert!(rel(v_off, 100.0 / 19.0) < 1e-12);
        let c = reduce_chain(ChainKind::Series, &reference(), 10.0, 10).unwrap();
        let m = PoissonExpModel::reference();
        assert!(rel(c.gamma[9], rate_off_on(v_off, &m).unwrap()) < 1e-9);
    }

    #[test]
    fn parallel_rates_constant() {
        let c = reduce_chain(ChainKind::Parallel, &reference(), 1.0, 4).unwrap();
        for j in 0..4 {
            assert_eq!(c.a[j], (4 - j) as f64 * c.gamma[0]);
        }
    }

    #[test]
    fn reference_means() {
        let s2 = reduce_chain(ChainKind::Series, &reference(), 2.0, 2).unwrap();
        assert!(rel(mean_switch_time_chain(&s2).unwrap(), 309.173e-6) < 1e-5);
        let p2 = reduce_chain(ChainKind::Parallel, &reference(), 1.0, 2).unwrap();
        assert!(rel(mean_switch_time_chain(&p2).unwrap(), 927.519e-6) < 1e-5);
        let s10 = reduce_chain(ChainKind::Series, &reference(), 10.0, 10).unwrap();
        assert!(rel(mean_switch_time_chain(&s10).unwrap(), 72.3532e-6) < 1e-5);
    }

    #[test]
    fn first_levels() {
        let c = ChainRates::from_gamma(vec![3.0, 5.0, 7.0]).unwrap();
        let t = 0.37;
        assert!((closed_form_pm(&c, 0, t).unwrap() - (-c.a[0] * t).exp()).abs() < 1e-15);
        let p1 = c.b[1]
            * ((-c.a[0] * t).exp() / (c.a[1] - c.a[0]) + (-c.a[1] * t).exp() / (c.a[0] - c.a[1]));
        assert!((closed_form_pm(&c, 1, t).unwrap() - p1).abs() < 1e-14);
        assert_eq!(closed_form_pm(&c, 0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn levels_sum_with_multiplicities() {
        let c = reduce_chain(ChainKind::Series, &reference(), 10.0, 10).unwrap();
        for t in [0.0, 1e-6, 3e-5, 7e-5, 2e-4, 1e-3] {
            let s: f64 = (0..=10)
                .map(|m| binomial(10, m) * closed_form_pm(&c, m, t).unwrap())
                .sum();
            assert!((s - 1.0).abs() < 1e-9, "t={t}: {s}");
        }
    }

    #[test]
    fn degenerate_rates_rejected() {
        let c = ChainRates::from_gamma(vec![1.0, 2.0]).unwrap(); // a = [2, 2, 0]
        assert!(matches!(
            closed_form_pm(&c, 1, 0.1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_b_gives_zero() {
        let c = ChainRates::from_gamma(vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(closed_form_pm(&c, 3, 1.0).unwrap(), 0.0);
        assert!(matches!(
            mean_switch_time_chain(&c),
            Err(Error::InfiniteTime(_))
        ));
    }

    #[test]
    fn pdf_mean_matches_sum_for_reference_chains() {
        for c in [
            reduce_chain(ChainKind::Parallel, &reference(), 1.0, 10).unwrap(),
            reduce_chain(ChainKind::Series, &reference(), 10.0, 10).unwrap(),
        ] {
            let rates = &c.a[..c.devices()];
            let tol = Tolerance::new(1e-16, 1e-10);
            let norm =
                integrate_to_infinity(|t| switching_time_pdf(&c, t).unwrap(), 0.0, rates, tol)
                    .unwrap();
            let mean =
                integrate_to_infinity(|t| t * switching_time_pdf(&c, t).unwrap(), 0.0, rates, tol)
                    .unwrap();
            assert!((norm.value - 1.0).abs() < 1e-8);
            assert!(rel(mean.value, mean_switch_time_chain(&c).unwrap()) < 1e-6);
        }
    }

    #[test]
    fn parallel_pdf_shape() {
        let g = 1617.0;
        let c = ChainRates::from_gamma(vec![g; 10]).unwrap();
        for t in [1e-4, 1e-3, 4e-3] {
            let x = 1.0 - (-g * t).exp();
            let expect = 10.0 * g * x.powi(9) * (-g * t).exp();
            assert!(rel(switching_time_pdf(&c, t).unwrap(), expect) < 1e-9);
        }
    }

    #[test]
    fn coefficient_sum_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = rng.random_range(1..=8);
            let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..10.0)).collect();
            let Ok(c) = ChainRates::from_gamma(gamma) else {
                continue;
            };
            let Ok(coef) = coefficients(&c, m) else {
                continue;
            };
            let largest = coef.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let s: f64 = coef.iter().sum();
            assert!(s.abs() <= 1e-9 * largest);
        }
    }

    proptest! {
        #[test]
        fn pdf_is_cdf_derivative(g in proptest::collection::vec(0.5f64..5.0, 2..6), t in 0.05f64..2.0) {
            let c = ChainRates::from_gamma(g).unwrap();
            prop_assume!(check_distinct(&c.a).is_ok());
            let h = 1e-5;
            let fd = (switching_time_cdf(&c, t + h).unwrap() - switching_time_cdf(&c, t - h).unwrap()) / (2.0 * h);
            let pdf = switching_time_pdf(&c, t).unwrap();
            prop_assert!((fd - pdf).abs() < 1e-6 * (1.0 + pdf.abs()));
        }
    }
}
