use memkin::devices::{rate_off_on, DeviceModel, PoissonExpModel};
use memkin::master::two_series_moments;
use memkin::montecarlo::{run_ensemble, EnsembleConfig, Scheme};
use memkin::network::{DriveSpec, Network, NetworkState};
use memkin::stats::{covariance_se, ks_critical_1pct, ks_statistic, mean_se};

fn model() -> DeviceModel {
    PoissonExpModel::reference().into()
}

/// Exact mean completion time of the fixed-step scheme: a discrete-time chain
/// in which every off device flips independently with probability `dt·γ`.
/// States only gain on-bits, so expected step counts follow by back
/// substitution from the all-on state.
fn fixed_step_mean(network: &Network, dt: f64) -> f64 {
    let n = network.device_count();
    let full = (1usize << n) - 1;
    let mut steps = vec![0.0; full + 1];
    let mut states: Vec<usize> = (0..full).collect();
    states.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for s in states {
        let state = NetworkState::new(s as u64, n);
        let p: Vec<f64> = network
            .rates(&state, 0.0)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(m, r)| {
                if s >> m & 1 == 1 {
                    0.0
                } else {
                    (dt * r).min(1.0)
                }
            })
            .collect();
        let off: Vec<usize> = (0..n).filter(|m| s >> m & 1 == 0).collect();
        let (mut stay, mut onward) = (0.0, 0.0);
        for subset in 0..1usize << off.len() {
            let mut prob = 1.0;
            let mut next = s;
            for (k, &m) in off.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    prob *= p[m];
                    next |= 1 << m;
                } else {
                    prob *= 1.0 - p[m];
                }
            }
            if next == s {
                stay = prob;
            } else {
                onward += prob * steps[next];
            }
        }
        steps[s] = (1.0 + onward) / (1.0 - stay);
    }
    dt * steps[0]
}

#[test]
fn fixed_step_bias_is_first_order() {
    let net = Network::series(2, DriveSpec::dc(2.0), model());
    let p = model();
    let DeviceModel::Poisson(params) = p else {
        unreachable!()
    };
    let g00 = rate_off_on(1.0, &params).unwrap();
    let g01 = rate_off_on(2.0 * 1e4 / 1.1e4, &params).unwrap();
    let (exact, _) = two_series_moments(g00, g01).unwrap();

    // With γ01·dt ≥ 1 the second device flips on the very next step, so the
    // chain has a closed form in p = γ00·dt:
    //   gap = p (5/2 - 2p) / (γ00 (2 - p)) - 1/γ01.
    // The gap is first order in dt, and gap(dt) / gap(dt/2) rises toward 2 from
    // below, so halving dt cuts the gap by slightly less than half.
    let closed = |dt: f64| {
        let p = g00 * dt;
        p * (2.5 - 2.0 * p) / (g00 * (2.0 - p)) - 1.0 / g01
    };
    let dt0 = 0.4 / g00;
    assert!(g01 * dt0 / 8.0 >= 1.0);
    let gaps: Vec<f64> = (0..4)
        .map(|k| fixed_step_mean(&net, dt0 / f64::powi(2.0, k)) - exact)
        .collect();
    for (k, gap) in gaps.iter().enumerate() {
        let dt = dt0 / f64::powi(2.0, k as i32);
        assert!(
            (gap - closed(dt)).abs() <= 1e-9 * gap,
            "{gap} vs {}",
            closed(dt)
        );
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    assert!(ratios.windows(2).all(|r| r[1] > r[0]), "{ratios:?}");
    assert!(ratios.iter().all(|r| (1.8..2.0).contains(r)), "{ratios:?}");
    // at the default step the ratio is within 0.1% of 2
    let dt = 0.01 / (2.0 * g00);
    assert!(
        (fixed_step_mean(&net, dt) - exact) / (fixed_step_mean(&net, dt / 2.0) - exact) > 1.998
    );

    // the sampler realizes that chain: its mean sits on the exact discrete value
    for (k, gap) in gaps.iter().enumerate().take(3) {
        let dt = dt0 / f64::powi(2.0, k as i32);
        let cfg = EnsembleConfig::new(net.clone(), 70 + k as u64)
            .unwrap()
            .scheme(Scheme::FixedStep { dt });
        let (mean, se) = mean_se(&run_ensemble(&cfg, 200_000).unwrap().network_times());
        let target = exact + gap;
        assert!(
            (mean - target).abs() <= 3.0 * se,
            "dt {dt}: {mean} vs {target} ± {se}"
        );
        // and the bias is resolved: the exact continuous mean is rejected
        if k == 0 {
            assert!((mean - exact).abs() > 3.0 * se);
        }
    }
}

#[test]
fn event_driven_two_series_mean() {
    let net = Network::series(2, DriveSpec::dc(2.0), model());
    let cfg = EnsembleConfig::new(net, 5).unwrap();
    let (mean, se) = mean_se(&run_ensemble(&cfg, 100_000).unwrap().network_times());
    assert!((mean - 309.173e-6).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn single_device_holding_time_is_exponential() {
    let net = Network::series(1, DriveSpec::dc(1.0), model());
    let g = rate_off_on(1.0, &PoissonExpModel::reference()).unwrap();
    let cfg = EnsembleConfig::new(net, 8).unwrap();
    let times = run_ensemble(&cfg, 10_000).unwrap().network_times();
    let d = ks_statistic(&times, |t| -(-g * t).exp_m1());
    assert!(d < ks_critical_1pct(times.len()), "D = {d}");
}

#[test]
fn parallel_devices_are_independent() {
    let net = Network::parallel(4, DriveSpec::dc(1.0), model());
    let cfg = EnsembleConfig::new(net, 12).unwrap();
    let e = run_ensemble(&cfg, 20_000).unwrap();
    for (i, j) in [(0, 1), (1, 3), (2, 3)] {
        let (cov, se) = covariance_se(&e.device_times(i), &e.device_times(j)).unwrap();
        assert!(cov.abs() <= 3.0 * se, "({i},{j}): {cov} ± {se}");
    }
}

#[test]
fn on_count_never_decreases() {
    for scheme in [Scheme::EventDriven, Scheme::FixedStep { dt: 2e-7 }] {
        let net = Network::series(5, DriveSpec::dc(5.0), model());
        let cfg = EnsembleConfig::new(net, 3)
            .unwrap()
            .scheme(scheme)
            .record_trajectory(true);
        for trial in run_ensemble(&cfg, 300).unwrap().trials {
            let path = trial.trajectory.unwrap();
            assert!(path
                .windows(2)
                .all(|w| w[1].1.on_count() >= w[0].1.on_count() && w[1].0 > w[0].0));
            assert!(path.last().unwrap().1.is_all_on());
        }
    }
}
