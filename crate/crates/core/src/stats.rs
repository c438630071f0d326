//! Switching-time statistics and resistance correlation functions.
//!
//! Resistances are reconstructed from switching times as step functions,
//! `R_i(t) = r_off + (r_on - r_off) H(t - t_i)`, so normalized correlations
//! `K̃_ij = cov(R_i, R_j) / ΔR²` reduce to covariances of the indicators.

use crate::error::{Error, Result};
use crate::master::two_series_solution;
use crate::montecarlo::Ensemble;
use crate::quad::{integrate_decaying, Estimate, Tolerance};

/// Critical value coefficient of the Kolmogorov–Smirnov test at the 1% level.
pub const KS_ALPHA_1PCT: f64 = 1.628;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of finite samples.
    pub n_total: u64,
    pub mean: f64,
    /// Unbiased sample variance; 0 for a single sample.
    pub variance: f64,
}

impl Histogram {
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.n_total as f64).sqrt()
    }
}

/// Uniform-bin histogram from 0 plus exact moments of the finite samples.
pub fn summarize(samples: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::domain(format!(
            "bin width {bin_width} must be finite and > 0"
        )));
    }
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::domain("no finite samples to summarize"));
    }
    if finite.iter().any(|x| *x < 0.0) {
        return Err(Error::domain("switching times must be >= 0"));
    }
    let (mean, variance) = mean_variance(&finite);
    let max = finite.iter().copied().fold(0.0, f64::max);
    let bins = ((max / bin_width).ceil() as usize).max(1);
    let mut counts = vec![0u64; bins];
    for x in &finite {
        let k = ((x / bin_width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram {
        bin_edges: (0..=bins).map(|k| k as f64 * bin_width).collect(),
        counts,
        n_total: finite.len() as u64,
        mean,
        variance,
    })
}

/// Sample mean and unbiased variance.
pub fn mean_variance(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Sample mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let (m, v) = mean_variance(x);
    (m, (v / x.len() as f64).sqrt())
}

/// Sample covariance of paired samples and its standard error.
pub fn covariance_se(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain(
            "covariance needs two equal-length samples of size >= 2",
        ));
    }
    let (mx, _) = mean_variance(x);
    let (my, _) = mean_variance(y);
    let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    Ok(mean_se(&products))
}

/// One-sample Kolmogorov–Smirnov statistic against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0, |d: f64, (i, &xi)| {
        let f = cdf(xi);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// 1% critical value of the KS statistic for `n` samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    KS_ALPHA_1PCT / (n as f64).sqrt()
}

fn off_probability(gamma00: f64, gamma01: f64, t: f64) -> Result<f64> {
    let s = two_series_solution(gamma00, gamma01, t)?;
    Ok(s.p00 + s.p01)
}

/// Normalized cross-correlation `K_12(t, t+s) / ΔR²` of two devices in series.
pub fn corr_two_series_normalized(gamma00: f64, gamma01: f64, t: f64, s: f64) -> Result<f64> {
    check_times(t, s)?;
    let p0_t = off_probability(gamma00, gamma01, t)?;
    let p0_ts = off_probability(gamma00, gamma01, t + s)?;
    let p01 = two_series_solution(gamma00, gamma01, t)?.p01;
    Ok((1.0 - p0_t) * p0_ts - p01 * (-gamma01 * s).exp())
}

/// Cross-correlation `K_12(t, t+s)` in ohms².
pub fn corr_two_series(gamma00: f64, gamma01: f64, t: f64, s: f64, delta_r: f64) -> Result<f64> {
    Ok(delta_r * delta_r * corr_two_series_normalized(gamma00, gamma01, t, s)?)
}

/// Normalized auto-correlation `K_ii(t, t+s) / ΔR²`.
pub fn autocorr_two_series_normalized(gamma00: f64, gamma01: f64, t: f64, s: f64) -> Result<f64> {
    check_times(t, s)?;
    let p0_t = off_probability(gamma00, gamma01, t)?;
    let p0_ts = off_probability(gamma00, gamma01, t + s)?;
    Ok((1.0 - p0_t) * p0_ts)
}

/// Auto-correlation `K_ii(t, t+s)` in ohms².
pub fn autocorr_two_series(
    gamma00: f64,
    gamma01: f64,
    t: f64,
    s: f64,
    delta_r: f64,
) -> Result<f64> {
    Ok(delta_r * delta_r * autocorr_two_series_normalized(gamma00, gamma01, t, s)?)
}

fn check_times(t: f64, s: f64) -> Result<()> {
    if !(t >= 0.0 && s >= 0.0 && t.is_finite() && s.is_finite()) {
        return Err(Error::domain(format!(
            "times t = {t}, s = {s} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrEstimate {
    pub value: f64,
    pub se: f64,
}

fn switched(t_switch: f64, t: f64) -> f64 {
    if t_switch <= t {
        1.0
    } else {
        0.0
    }
}

/// Pair-averaged normalized covariance at `t` over the given device pairs.
fn pair_corr(ensemble: &Ensemble, pairs: &[(usize, usize)], t: f64) -> Result<CorrEstimate> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time {t} must be >= 0")));
    }
    let n = ensemble.trials.len();
    if n < 2 {
        return Err(Error::domain("correlations need at least two trials"));
    }
    if pairs.is_empty() {
        return Err(Error::domain("no device pairs to correlate"));
    }
    let devices = ensemble.trials[0].device_switch_times.len();
    if pairs.iter().any(|&(i, j)| i >= devices || j >= devices) {
        return Err(Error::domain(format!(
            "device index out of range for {devices} devices"
        )));
    }
    let h: Vec<Vec<f64>> = ensemble
        .trials
        .iter()
        .map(|tr| {
            tr.device_switch_times
                .iter()
                .map(|&ti| switched(ti, t))
                .collect()
        })
        .collect();
    let means: Vec<f64> = (0..devices)
        .map(|d| h.iter().map(|row| row[d]).sum::<f64>() / n as f64)
        .collect();
    let per_trial: Vec<f64> = h
        .iter()
        .map(|row| {
            pairs
                .iter()
                .map(|&(i, j)| (row[i] - means[i]) * (row[j] - means[j]))
                .sum::<f64>()
                / pairs.len() as f64
        })
        .collect();
    let (value, var_products) = mean_variance(&per_trial);
    // Without correlation the per-trial product variance is v_i·v_j, known
    // from the marginals. Late in a run the joint "both still off" cell is
    // rare and often empty in the sample, which makes the raw product
    // variance far too small, so this value serves as a floor.
    let marginal: Vec<f64> = means
        .iter()
        .map(|m| m * (1.0 - m) * n as f64 / (n as f64 - 1.0))
        .collect();
    let uncorrelated = pairs
        .iter()
        .map(|&(i, j)| marginal[i] * marginal[j])
        .sum::<f64>()
        / (pairs.len() as f64).powi(2);
    let se = (var_products.max(uncorrelated) / n as f64).sqrt();
    Ok(CorrEstimate { value, se })
}

/// Normalized one-time correlation `K̃_ij(t)` of devices `i` and `j`.
pub fn empirical_corr(ensemble: &Ensemble, i: usize, j: usize, t: f64) -> Result<CorrEstimate> {
    pair_corr(ensemble, &[(i, j)], t)
}

/// `K̃_ij(t)` averaged over all unordered pairs `i < j`.
pub fn empirical_corr_all_pairs(ensemble: &Ensemble, t: f64) -> Result<CorrEstimate> {
    let n = ensemble
        .trials
        .first()
        .map_or(0, |tr| tr.device_switch_times.len());
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    pair_corr(ensemble, &pairs, t)
}

/// Joint density of the two switching times in a two-device series network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPdf2 {
    pub gamma00: f64,
    pub gamma01: f64,
}

impl JointPdf2 {
    pub fn new(gamma00: f64, gamma01: f64) -> Result<Self> {
        if !(gamma00 > 0.0 && gamma01 > 0.0 && gamma00.is_finite() && gamma01.is_finite()) {
            return Err(Error::domain("joint density rates must be finite and > 0"));
        }
        Ok(JointPdf2 { gamma00, gamma01 })
    }

    /// `Φ(t1, t2)`: the first switch at `min`, the second at `max`.
    pub fn density(&self, t1: f64, t2: f64) -> f64 {
        if t1 < 0.0 || t2 < 0.0 {
            return 0.0;
        }
        let (first, second) = if t1 > t2 { (t2, t1) } else { (t1, t2) };
        self.split(first, second - first)
    }

    /// Density by first switching time and the gap to the second. Taking the
    /// gap directly keeps `γ01` transients resolvable when `1/γ01` is below
    /// the spacing of floats near `first`.
    fn split(&self, first: f64, gap: f64) -> f64 {
        self.gamma00
            * (-2.0 * self.gamma00 * first).exp()
            * self.gamma01
            * (-self.gamma01 * gap).exp()
    }

    fn rates(&self) -> [f64; 3] {
        let g0 = 2.0 * self.gamma00;
        [g0, self.gamma01, (self.gamma01 - g0).abs()]
    }
}

/// Residuals of the joint-density identities at one `(γ00, γ01, t)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointIdentityReport {
    /// Normalization over both orderings.
    pub normalization: f64,
    /// Mean completion time, `∬ max(t1,t2) Φ` against the closed form.
    pub mean_time: f64,
    /// Marginal density of device 1 at `t`.
    pub marginal_density: f64,
    /// `p11`, `p01`, `p00` from the square, strip and quadrant integrals.
    pub p11: f64,
    pub p01: f64,
    pub p00: f64,
}

impl JointIdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.normalization,
            self.mean_time,
            self.marginal_density,
            self.p11,
            self.p01,
            self.p00,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn relative(num: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        num.abs()
    } else {
        ((num - exact) / exact).abs()
    }
}

/// Check the two-device joint density against the closed forms by adaptive
/// quadrature. Every integral runs over offsets that start at 0 where the
/// integrand is steepest, so transients at rate `γ01` are resolved even
/// when they are many decades faster than `γ00`.
pub fn joint_pdf_identities(
    gamma00: f64,
    gamma01: f64,
    t: f64,
    tol: Tolerance,
) -> Result<JointIdentityReport> {
    let phi = JointPdf2::new(gamma00, gamma01)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time {t} must be finite and >= 0")));
    }
    let rates = phi.rates();
    let inner_tol = Tolerance {
        abs: tol.abs * 1e-3,
        rel: tol.rel * 0.1,
        ..tol
    };
    let nested =
        |outer_lo: f64, outer_hi: f64, inner: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            let mut failure = None;
            let est = integrate_decaying(
                |x| {
                    inner(x).unwrap_or_else(|e| {
                        failure.get_or_insert(e);
                        0.0
                    })
                },
                outer_lo,
                outer_hi,
                &rates,
                tol,
            )?;
            failure.map_or(Ok(est.value), Err)
        };
    let inner_tail = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(integrate_decaying(g, 0.0, f64::INFINITY, &rates, inner_tol)?.value)
    };
    let inner_upto = |hi: f64, g: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(integrate_decaying(g, 0.0, hi, &rates, inner_tol)?.value)
    };

    // both orderings contribute equally: 2 ∬ split(first, gap)
    let norm = 2.0 * nested(0.0, f64::INFINITY, &|f| inner_tail(&|g| phi.split(f, g)))?;
    let mean = 2.0
        * nested(0.0, f64::INFINITY, &|f| {
            inner_tail(&|g| (f + g) * phi.split(f, g))
        })?;
    let (mean_exact, _) = crate::master::two_series_moments(gamma00, gamma01)?;

    // marginal of device 1: partner earlier by u in [0, t], or later by g
    let earlier = inner_upto(t, &|u| phi.split(t - u, u))?;
    let later = inner_tail(&|g| phi.split(t, g))?;
    let (phi1_exact, _) = crate::master::memristor1_stats(gamma00, gamma01, t)?;

    let exact = two_series_solution(gamma00, gamma01, t)?;
    // second switch at s <= t, first one u earlier
    let p11 = if t == 0.0 {
        0.0
    } else {
        2.0 * nested(0.0, t, &|s| inner_upto(s, &|u| phi.split(s - u, u)))?
    };
    // device 1 at t - u, device 2 at t + w
    let p01 = if t == 0.0 {
        0.0
    } else {
        nested(0.0, t, &|u| inner_tail(&|w| phi.split(t - u, u + w)))?
    };
    let p00 = 2.0
        * nested(0.0, f64::INFINITY, &|x| {
            inner_tail(&|g| phi.split(t + x, g))
        })?;

    Ok(JointIdentityReport {
        normalization: (norm - 1.0).abs(),
        mean_time: relative(mean, mean_exact),
        marginal_density: relative(earlier + later, phi1_exact),
        p11: relative(p11, exact.p11),
        p01: relative(p01, exact.p01),
        p00: relative(p00, exact.p00),
    })
}

/// Estimate of a double integral of the joint density over a rectangle
/// `[0, a] × [0, b]`, used to build correlation oracles.
pub fn joint_cdf(gamma00: f64, gamma01: f64, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    let phi = JointPdf2::new(gamma00, gamma01)?;
    let rates = phi.rates();
    if a <= 0.0 || b <= 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let inner_tol = Tolerance {
        abs: tol.abs * 1e-3,
        rel: tol.rel * 0.1,
        ..tol
    };
    let mut failure = None;
    // split the inner range at the diagonal, where the density has a kink
    let mut inner = |t1: f64| -> f64 {
        let below = t1.min(b);
        let mut part = |lo: f64, hi: f64, flip: bool| -> f64 {
            if hi <= lo {
                return 0.0;
            }
            let g = |x: f64| {
                if flip {
                    phi.density(t1, t1 - x)
                } else {
                    phi.density(t1, x)
                }
            };
            let (lo, hi) = if flip { (t1 - hi, t1 - lo) } else { (lo, hi) };
            match integrate_decaying(g, lo, hi, &rates, inner_tol) {
                Ok(e) => e.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        part(0.0, below, true) + part(t1, b, false)
    };
    let est = integrate_decaying(&mut inner, 0.0, a, &rates, tol)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{rate_off_on, PoissonExpModel};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_rates() -> (f64, f64) {
        let m = PoissonExpModel::reference();
        (
            rate_off_on(1.0, &m).unwrap(),
            rate_off_on(20.0 / 11.0, &m).unwrap(),
        )
    }

    #[test]
    fn summary_basics() {
        let h = summarize(&[2.5e-4], 1e-4).unwrap();
        assert_eq!((h.mean, h.variance, h.n_total), (2.5e-4, 0.0, 1));
        let h = summarize(&[1.0, 3.0, f64::INFINITY], 0.5).unwrap();
        assert_eq!(h.mean, 2.0);
        assert_eq!(h.n_total, 2);
        assert_eq!(h.counts.iter().sum::<u64>(), 2);
        assert_eq!(h.bin_edges.len(), h.counts.len() + 1);
        assert_eq!(*h.bin_edges.last().unwrap(), 3.0);
        assert!(summarize(&[f64::INFINITY], 1.0).is_err());
    }

    #[test]
    fn ks_against_own_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_statistic(&x, |v| v.clamp(0.0, 1.0)) < ks_critical_1pct(x.len()));
        assert!(ks_statistic(&x, |v| (v * v).clamp(0.0, 1.0)) > ks_critical_1pct(x.len()));
    }

    #[test]
    fn analytic_correlation_limits() {
        let (g0, g1) = reference_rates();
        assert_eq!(corr_two_series_normalized(g0, g1, 0.0, 1e-4).unwrap(), 0.0);
        assert_eq!(
            autocorr_two_series_normalized(g0, g1, 0.0, 0.0).unwrap(),
            0.0
        );
        assert!(corr_two_series_normalized(g0, g1, 0.5, 0.0).unwrap().abs() < 1e-300);
        assert!(corr_two_series(g0, g1, -1.0, 0.0, 9e3).is_err());
    }

    #[test]
    fn autocorr_variance_and_bound() {
        let (g0, g1) = reference_rates();
        let mut best: f64 = 0.0;
        for k in 0..2000 {
            let t = k as f64 * 1e-6;
            let s = two_series_solution(g0, g1, t).unwrap();
            let p_off = s.p00 + s.p01;
            let var = p_off * (1.0 - p_off);
            let auto = autocorr_two_series_normalized(g0, g1, t, 0.0).unwrap();
            assert!((auto - var).abs() < 1e-9);
            assert!(auto <= 0.25);
            best = best.max(auto);
            for s in [0.0, 1e-5, 1e-4, 1e-3] {
                let kii = autocorr_two_series_normalized(g0, g1, t, s).unwrap();
                let k12 = corr_two_series_normalized(g0, g1, t, s).unwrap();
                assert!(kii >= k12);
            }
        }
        assert!((best - 0.25).abs() < 1e-3);
    }

    #[test]
    fn empty_joint_cell_keeps_honest_error() {
        use crate::montecarlo::{Ensemble, ParamMode, Scheme, TrialRecord};
        // 1000 trials: device 0 late in trials 0..10, device 1 late in 10..20,
        // never both, so the sample covariance is -q0 q1 = -1e-4
        let trials = (0..1000)
            .map(|k| {
                let d0 = if k < 10 { 5.0 } else { 1.0 };
                let d1 = if (10..20).contains(&k) { 5.0 } else { 1.0 };
                TrialRecord {
                    device_switch_times: vec![d0, d1],
                    network_switch_time: f64::max(d0, d1),
                    trajectory: None,
                }
            })
            .collect();
        let ens = Ensemble {
            trials,
            seed: 0,
            scheme: Scheme::EventDriven,
            param_mode: ParamMode::Identical,
            horizon: 10.0,
            warnings: Vec::new(),
        };
        let e = empirical_corr(&ens, 0, 1, 2.0).unwrap();
        assert!((e.value + 1e-4).abs() < 1e-15);
        let v = 0.01 * 0.99 * 1000.0 / 999.0;
        assert!(e.se >= v / 1000f64.sqrt());
        assert!(e.value.abs() < 3.0 * e.se);
        assert_eq!(
            empirical_corr(&ens, 0, 1, 0.5).unwrap(),
            CorrEstimate {
                value: 0.0,
                se: 0.0
            }
        );
    }

    #[test]
    fn joint_identities_at_reference_rates() {
        let (g0, g1) = reference_rates();
        for t in [0.0, 1e-4, 3.09e-4, 1e-3] {
            let r = joint_pdf_identities(g0, g1, t, Tolerance::new(1e-15, 1e-10)).unwrap();
            assert!(r.max_residual() < 1e-6, "t={t}: {r:?}");
        }
    }

    #[test]
    fn joint_identities_far_apart_rates() {
        let r = joint_pdf_identities(1.0, 1e12, 0.7, Tolerance::new(1e-15, 1e-10)).unwrap();
        assert!(r.max_residual() < 1e-9, "{r:?}");
    }

    #[test]
    fn joint_identities_equal_rates() {
        let r = joint_pdf_identities(3.0, 3.0, 0.4, Tolerance::new(1e-15, 1e-10)).unwrap();
        assert!(r.max_residual() < 1e-6, "{r:?}");
    }

    #[test]
    fn cross_correlation_matches_joint_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let g0: f64 = rng.random_range(0.5..3.0);
            let g1: f64 = rng.random_range(0.5..8.0);
            if (g1 - 2.0 * g0).abs() < 1e-3 {
                continue;
            }
            let t = rng.random_range(0.05..2.0);
            let s = rng.random_range(0.0..1.0);
            let tol = Tolerance::new(1e-15, 1e-11);
            let both = joint_cdf(g0, g1, t, t + s, tol).unwrap().value;
            let on_t = 1.0 - off_probability(g0, g1, t).unwrap();
            let on_ts = 1.0 - off_probability(g0, g1, t + s).unwrap();
            let oracle = both - on_t * on_ts;
            let k = corr_two_series_normalized(g0, g1, t, s).unwrap();
            assert!((k - oracle).abs() < 1e-6, "{k} vs {oracle}");
        }
    }

    proptest! {
        #[test]
        fn diagonal_variance_bounded(g0 in 0.1f64..10.0, g1 in 0.1f64..10.0, t in 0.0f64..5.0) {
            prop_assume!((g1 - 2.0 * g0).abs() > 1e-3);
            let v = autocorr_two_series_normalized(g0, g1, t, 0.0).unwrap();
            prop_assert!((-1e-15..=0.25).contains(&v));
        }
    }
}
