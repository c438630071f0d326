//! Closed forms for two devices in series and for parallel networks.

use crate::error::{Error, Result};

/// Per-state occupations of a two-device series network started all off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSeries {
    pub p00: f64,
    /// Either single-on state; `p01 = p10` by symmetry.
    pub p01: f64,
    pub p11: f64,
}

fn check_rates(gamma00: f64, gamma01: f64) -> Result<()> {
    if !(gamma00 > 0.0 && gamma01 > 0.0 && gamma00.is_finite() && gamma01.is_finite()) {
        return Err(Error::domain("two-series rates must be finite and > 0"));
    }
    Ok(())
}

/// `gamma00`: per-device rate with both off; `gamma01`: rate of the
/// remaining off device once the other is on.
pub fn two_series_solution(gamma00: f64, gamma01: f64, t: f64) -> Result<TwoSeries> {
    check_rates(gamma00, gamma01)?;
    if gamma01 == 2.0 * gamma00 {
        return Err(Error::Degenerate(
            "gamma01 = 2 gamma00 (confluent case)".into(),
        ));
    }
    let e0 = (-2.0 * gamma00 * t).exp();
    let e1 = (-gamma01 * t).exp();
    let p01 = gamma00 / (gamma01 - 2.0 * gamma00) * (e0 - e1);
    Ok(TwoSeries {
        p00: e0,
        p01,
        p11: 1.0 - e0 - 2.0 * p01,
    })
}

/// Mean and variance of the completion time of two devices in series.
pub fn two_series_moments(gamma00: f64, gamma01: f64) -> Result<(f64, f64)> {
    check_rates(gamma00, gamma01)?;
    let mean = 1.0 / (2.0 * gamma00) + 1.0 / gamma01;
    let var = 1.0 / (4.0 * gamma00 * gamma00) + 1.0 / (gamma01 * gamma01);
    Ok((mean, var))
}

/// Switching-time density of device 1 at `t` and its mean switching time.
pub fn memristor1_stats(gamma00: f64, gamma01: f64, t: f64) -> Result<(f64, f64)> {
    let s = two_series_solution(gamma00, gamma01, t)?;
    let phi1 = gamma00 * s.p00 + gamma01 * s.p01;
    let mean = 1.0 / (2.0 * gamma00) + 1.0 / (2.0 * gamma01);
    Ok((phi1, mean))
}

/// Probability that all `n` independent parallel devices are on at `t`.
pub fn parallel_all_on(n: usize, gamma: f64, t: f64) -> f64 {
    (-(-gamma * t).exp_m1()).powi(n as i32)
}

/// Harmonic number `H_n`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// Mean completion time of `n` parallel devices, `H_n / γ`.
pub fn parallel_mean_time(n: usize, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("parallel network needs at least one device"));
    }
    if gamma <= 0.0 {
        return Err(Error::InfiniteTime("zero switching rate".into()));
    }
    Ok(harmonic(n) / gamma)
}

/// Completion-time density `nγ(1-e^{-γt})^{n-1} e^{-γt}`.
pub fn parallel_switching_pdf(n: usize, gamma: f64, t: f64) -> f64 {
    let x = -(-gamma * t).exp_m1();
    n as f64 * gamma * x.powi(n as i32 - 1) * (-gamma * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{rate_off_on, PoissonExpModel};
    use crate::quad::{integrate_to_infinity, Tolerance};
    use proptest::prelude::*;

    fn reference_rates() -> (f64, f64) {
        let m = PoissonExpModel::reference();
        (
            rate_off_on(1.0, &m).unwrap(),
            rate_off_on(20.0 / 11.0, &m).unwrap(),
        )
    }

    #[test]
    fn initial_and_final() {
        let (g0, g1) = reference_rates();
        let s = two_series_solution(g0, g1, 0.0).unwrap();
        assert_eq!((s.p00, s.p01, s.p11), (1.0, 0.0, 0.0));
        let s = two_series_solution(g0, g1, 1.0).unwrap();
        assert!(s.p00 < 1e-300 && s.p01.abs() < 1e-300 && (s.p11 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn confluent_rejected() {
        assert!(matches!(
            two_series_solution(1.0, 2.0, 0.5),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn reference_mean() {
        let (g0, g1) = reference_rates();
        let (mean, _) = two_series_moments(g0, g1).unwrap();
        assert!(((mean - 309.173e-6) / 309.173e-6).abs() < 1e-5);
        let (m, _) = two_series_moments(2.0, 2.0).unwrap();
        assert_eq!(m, 3.0 / 4.0);
    }

    #[test]
    fn variance_by_quadrature() {
        let (g0, g1) = reference_rates();
        let (mean, var) = two_series_moments(g0, g1).unwrap();
        // completion density is the flow into 11: 2 γ01 p01
        let pdf = |t: f64| 2.0 * g1 * two_series_solution(g0, g1, t).unwrap().p01;
        let tol = Tolerance::new(0.0, 1e-11);
        let v = integrate_to_infinity(|t| (t - mean).powi(2) * pdf(t), 0.0, &[2.0 * g0, g1], tol)
            .unwrap();
        assert!(((v.value - var) / var).abs() < 1e-6);
    }

    #[test]
    fn memristor1_density_normalized() {
        let (g0, g1) = reference_rates();
        let tol = Tolerance::new(0.0, 1e-11);
        let norm = integrate_to_infinity(
            |t| memristor1_stats(g0, g1, t).unwrap().0,
            0.0,
            &[2.0 * g0, g1],
            tol,
        )
        .unwrap();
        assert!((norm.value - 1.0).abs() < 1e-9);
        let mean = integrate_to_infinity(
            |t| t * memristor1_stats(g0, g1, t).unwrap().0,
            0.0,
            &[2.0 * g0, g1],
            tol,
        )
        .unwrap();
        let (_, t1) = memristor1_stats(g0, g1, 0.0).unwrap();
        assert!(((mean.value - t1) / t1).abs() < 1e-8);
        assert!(t1 <= two_series_moments(g0, g1).unwrap().0);
        let (_, same) = memristor1_stats(3.0, 3.0, 0.0).unwrap();
        assert!((same - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parallel_examples() {
        let g = rate_off_on(1.0, &PoissonExpModel::reference()).unwrap();
        assert_eq!(parallel_all_on(3, g, 0.0), 0.0);
        let t = 1.81e-3;
        let single = 1.0 - (-g * t).exp();
        assert!((parallel_all_on(10, g, t) - single.powi(10)).abs() < 1e-14);
        assert!((parallel_mean_time(1, g).unwrap() - 1.0 / g).abs() < 1e-18);
        assert!(((parallel_mean_time(2, g).unwrap() - 927.519e-6) / 927.519e-6).abs() < 1e-5);
        assert!(((parallel_mean_time(10, g).unwrap() - 1.811116e-3) / 1.811116e-3).abs() < 1e-5);
    }

    #[test]
    fn harmonic_asymptote() {
        for n in [10usize, 100, 1000, 10000] {
            let d = harmonic(n) - (n as f64).ln();
            assert!((d - 0.5772156649).abs() < 1.0 / n as f64);
        }
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(g0 in 0.1f64..10.0, g1 in 0.1f64..10.0, t in 0.0f64..10.0) {
            prop_assume!((g1 - 2.0 * g0).abs() > 1e-3);
            let s = two_series_solution(g0, g1, t).unwrap();
            prop_assert!((s.p00 + 2.0 * s.p01 + s.p11 - 1.0).abs() < 1e-12);
            prop_assert!(s.p01 >= -1e-15);
        }
    }
}
