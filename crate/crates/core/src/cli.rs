//! The `memkin` command line: scenario parsing, the four subcommands and
//! their CSV outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::devices::{AptmModel, DeviceModel, ParamSpread, PoissonExpModel};
use crate::error::{Error, Result};
use crate::iv::{iv_sweep, IvConfig};
use crate::master::{
    chain_for, integrate_chain, integrate_master, marginal_resistance, mean_switch_time_chain,
    MasterSolution, SolverOptions, StateSpace, MAX_FULL_DEVICES,
};
use crate::montecarlo::{
    default_dt, default_horizon, run_ensemble, Ensemble, EnsembleConfig, ParamMode, Scheme,
};
use crate::netlist::parse_netlist;
use crate::network::{DriveSpec, Network, NetworkState, Topology};
use crate::stats::{
    corr_two_series_normalized, empirical_corr, empirical_corr_all_pairs, mean_se, summarize,
};

#[derive(Debug, Parser)]
#[command(
    name = "memkin",
    version,
    about = "Switching statistics of probabilistic memristor networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Monte Carlo switching times and histogram.
    Mc(ScenarioArgs),
    /// Master-equation occupation probabilities.
    Master(ScenarioArgs),
    /// I-V loop under sinusoidal drive (needs --freq).
    Iv(ScenarioArgs),
    /// One-time device correlation K̃(t) from Monte Carlo.
    Correlate(ScenarioArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Fixed,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ParamArg {
    Identical,
    #[default]
    Redraw,
    Once,
}

impl From<ParamArg> for ParamMode {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Identical => ParamMode::Identical,
            ParamArg::Redraw => ParamMode::RedrawnPerTrial,
            ParamArg::Once => ParamMode::DrawnOnce,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("circuit").required(true).args(["netlist", "series", "parallel"])))]
pub struct ScenarioArgs {
    /// Netlist file.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// N identical devices in series.
    #[arg(long)]
    pub series: Option<usize>,
    /// N identical devices in parallel.
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Device model as `k=v,...`; `kind=poisson|aptm` selects the law, other
    /// keys override the reference parameters.
    #[arg(long, default_value = "")]
    pub model: String,
    /// Applied voltage (DC), or amplitude with --freq.
    #[arg(long, allow_negative_numbers = true)]
    pub va: Option<f64>,
    /// Sine drive frequency in Hz.
    #[arg(long)]
    pub freq: Option<f64>,
    /// Trials (mc, correlate: 10000; iv: 1).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fixed step in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Default: event for DC drives, fixed otherwise.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Simulation horizon (mc) or output span (master, correlate).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Output intervals for master and correlate.
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Histogram bin width in seconds.
    #[arg(long)]
    pub bin: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Treatment of parameter spreads across trials.
    #[arg(long, value_enum, default_value_t)]
    pub params: ParamArg,
    /// Uniform tau0 spread `lo,hi` for every Poisson device.
    #[arg(long, value_parser = parse_range)]
    pub spread_tau0: Option<(f64, f64)>,
    /// Uniform V0 spread `lo,hi` for every Poisson device.
    #[arg(long, value_parser = parse_range)]
    pub spread_v0: Option<(f64, f64)>,
    /// Drive periods per trial (iv).
    #[arg(long, default_value_t = 100)]
    pub cycles: usize,
    /// Device pair `i,j` (correlate); all pairs are averaged by default.
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(usize, usize)>,
    /// Use the reduced chain of an identical series/parallel network (master).
    #[arg(long)]
    pub reduced: bool,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((lo, hi))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    let i: usize = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let j: usize = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((i, j))
}

fn usage(message: impl Into<String>) -> Error {
    Error::Semantic {
        line: 0,
        message: message.into(),
    }
}

/// Parse `k=v,...` into a device model. `kind` defaults to `poisson`.
pub fn parse_model(spec: &str) -> Result<DeviceModel> {
    let mut pairs = Vec::new();
    let mut offset = 0;
    for item in spec.split(',') {
        let column = offset + 1;
        offset += item.len() + 1;
        if item.trim().is_empty() {
            continue;
        }
        let (k, v) = item.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            column,
            message: format!("expected key=value, found `{item}`"),
        })?;
        pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string(), column));
    }
    let kind = pairs
        .iter()
        .find(|(k, ..)| k == "kind")
        .map_or("poisson".to_string(), |(_, v, _)| v.to_ascii_lowercase());
    let number = |v: &str, column: usize| -> Result<f64> {
        v.parse::<f64>().map_err(|e| Error::Parse {
            line: 0,
            column,
            message: format!("`{v}`: {e}"),
        })
    };
    let unknown = |k: &str, column: usize| Error::Parse {
        line: 0,
        column,
        message: format!("unknown {kind} model key `{k}`"),
    };
    let model: DeviceModel = match kind.as_str() {
        "poisson" => {
            let mut m = PoissonExpModel::reference();
            for (k, v, c) in &pairs {
                let slot = match k.as_str() {
                    "kind" => continue,
                    "tau0" => &mut m.tau0,
                    "v0" => &mut m.v0,
                    "tau1" => &mut m.tau1,
                    "v1" => &mut m.v1,
                    "ron" => &mut m.r_on,
                    "roff" => &mut m.r_off,
                    _ => return Err(unknown(k, *c)),
                };
                *slot = number(v, *c)?;
            }
            m.into()
        }
        "aptm" => {
            let mut m = AptmModel::reference();
            for (k, v, c) in &pairs {
                let slot = match k.as_str() {
                    "kind" => continue,
                    "kon" => &mut m.k_on,
                    "koff" => &mut m.k_off,
                    "von" => &mut m.v_on,
                    "voff" => &mut m.v_off,
                    "aon" => &mut m.alpha_on,
                    "aoff" => &mut m.alpha_off,
                    "ron" => &mut m.r_on,
                    "roff" => &mut m.r_off,
                    _ => return Err(unknown(k, *c)),
                };
                *slot = number(v, *c)?;
            }
            m.into()
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                column: 1,
                message: format!("unknown model kind `{other}`"),
            })
        }
    };
    model.validate().map_err(|e| usage(e.to_string()))?;
    Ok(model)
}

/// Build the network described by the circuit, model, drive and spread options.
pub fn build_network(args: &ScenarioArgs) -> Result<Network> {
    let drive = match (args.va, args.freq) {
        (v, Some(f)) => DriveSpec::sine(v.unwrap_or(1.0), f),
        (v, None) => DriveSpec::dc(v.unwrap_or(1.0)),
    };
    let mut network = if let Some(path) = &args.netlist {
        if args.va.is_some() || args.freq.is_some() || !args.model.is_empty() {
            return Err(usage(
                "--va, --freq and --model do not apply to --netlist circuits",
            ));
        }
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Network::from_netlist(parse_netlist(&text)?)?
    } else {
        let model = parse_model(&args.model)?;
        match (args.series, args.parallel) {
            (Some(n), None) => Network::series(n, drive, model),
            (None, Some(n)) => Network::parallel(n, drive, model),
            _ => return Err(usage("give exactly one of --netlist, --series, --parallel")),
        }
    };
    network
        .topology
        .validate()
        .map_err(|e| usage(e.to_string()))?;
    if args.spread_tau0.is_some() || args.spread_v0.is_some() {
        let poisson = network.models.iter().find_map(|m| match m {
            DeviceModel::Poisson(p) => Some(*p),
            _ => None,
        });
        let Some(p) = poisson else {
            return Err(usage("parameter spreads need a Poisson device model"));
        };
        let spread = ParamSpread {
            tau0_range: args.spread_tau0.unwrap_or((p.tau0, p.tau0)),
            v0_range: args.spread_v0.unwrap_or((p.v0, p.v0)),
        };
        spread.validate().map_err(|e| usage(e.to_string()))?;
        network = network.with_spread(spread);
    }
    Ok(network)
}

/// Summary lines, warnings and files written by one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Format with 17 significant digits, so values round-trip exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

pub fn run(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::Mc(a) => cmd_mc(&a),
        Command::Master(a) => cmd_master(&a),
        Command::Iv(a) => cmd_iv(&a),
        Command::Correlate(a) => cmd_correlate(&a),
    }
}

fn positive(name: &str, x: Option<f64>) -> Result<Option<f64>> {
    match x {
        Some(v) if !(v > 0.0 && v.is_finite()) => {
            Err(usage(format!("--{name} must be finite and > 0")))
        }
        _ => Ok(x),
    }
}

fn ensemble_for(args: &ScenarioArgs, network: Network, default_trials: usize) -> Result<Ensemble> {
    let trials = args.trials.unwrap_or(default_trials);
    if trials == 0 {
        return Err(usage("--trials must be >= 1"));
    }
    let horizon = match positive("t-end", args.t_end)? {
        Some(h) => h,
        None => default_horizon(&network)?,
    };
    let fixed = |network: &Network| -> Result<Scheme> {
        let dt = match positive("dt", args.dt)? {
            Some(dt) => dt,
            None => default_dt(network, horizon)?,
        };
        Ok(Scheme::FixedStep { dt })
    };
    let dc = network.topology.is_dc();
    let scheme = match args.scheme {
        Some(SchemeArg::Event) if !dc => {
            return Err(usage("the event-driven scheme needs a DC drive"))
        }
        Some(SchemeArg::Event) => Scheme::EventDriven,
        Some(SchemeArg::Fixed) => fixed(&network)?,
        // a step size alone asks for the fixed-step scheme
        None if dc && args.dt.is_none() => Scheme::EventDriven,
        None => fixed(&network)?,
    };
    let config = EnsembleConfig::new(network, args.seed)?
        .scheme(scheme)
        .param_mode(args.params.into())
        .horizon(horizon);
    run_ensemble(&config, trials)
}

fn cmd_mc(args: &ScenarioArgs) -> Result<Report> {
    let network = build_network(args)?;
    let n = network.device_count();
    positive("bin", args.bin)?;
    let ensemble = ensemble_for(args, network, 10_000)?;
    prepare_out(&args.out)?;
    let mut report = Report {
        warnings: ensemble.warnings.clone(),
        ..Report::default()
    };

    let path = args.out.join("switch_times.csv");
    let mut header = vec!["trial".to_string()];
    header.extend((0..n).map(|d| format!("device_{d}")));
    header.push("network_time".into());
    let rows = ensemble.trials.iter().enumerate().map(|(i, tr)| {
        let mut row = vec![i.to_string()];
        row.extend(tr.device_switch_times.iter().map(|t| fmt17(*t)));
        row.push(fmt17(tr.network_switch_time));
        row
    });
    write_csv(&path, &header, rows)?;
    report.files.push(path);

    let times = ensemble.network_times();
    let finished = times.iter().filter(|t| t.is_finite()).count();
    report.lines.push(format!(
        "{finished} of {} trials switched within {} s",
        times.len(),
        fmt17(ensemble.horizon)
    ));
    if finished == 0 {
        return Ok(report);
    }
    let finite: Vec<f64> = times.iter().copied().filter(|t| t.is_finite()).collect();
    let (mean, _) = mean_se(&finite);
    let bin = args
        .bin
        .unwrap_or(if mean > 0.0 { mean / 10.0 } else { 1.0 });
    let hist = summarize(&finite, bin)?;
    let path = args.out.join("histogram.csv");
    let header = ["bin_lo", "bin_hi", "count"].map(String::from);
    let rows = hist.counts.iter().enumerate().map(|(k, c)| {
        vec![
            fmt17(hist.bin_edges[k]),
            fmt17(hist.bin_edges[k + 1]),
            c.to_string(),
        ]
    });
    write_csv(&path, &header, rows)?;
    report.files.push(path);
    report.lines.push(format!(
        "mean switching time {} s ± {} s (standard error)",
        fmt17(hist.mean),
        fmt17(hist.standard_error())
    ));
    Ok(report)
}

fn state_label(bits: usize, n: usize) -> String {
    (0..n)
        .rev()
        .map(|d| if bits >> d & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn default_master_span(network: &Network) -> Result<f64> {
    if let Ok(chain) = chain_for(network) {
        if let Ok(mean) = mean_switch_time_chain(&chain) {
            if mean.is_finite() && mean > 0.0 {
                return Ok(8.0 * mean);
            }
        }
    }
    if !network.topology.is_dc() {
        return Ok(0.1 * default_horizon(network)?);
    }
    let total: f64 = network.rates(&network.initial, 0.0)?.iter().sum();
    if total > 0.0 {
        Ok(50.0 / total)
    } else {
        Err(Error::InfiniteTime(
            "no transition is possible from the initial state; give --t-end".into(),
        ))
    }
}

fn cmd_master(args: &ScenarioArgs) -> Result<Report> {
    let network = build_network(args)?;
    let n = network.device_count();
    if args.steps == 0 {
        return Err(usage("--steps must be >= 1"));
    }
    let t_end = match positive("t-end", args.t_end)? {
        Some(t) => t,
        None => default_master_span(&network)?,
    };
    let opts = SolverOptions::default();
    let solution: MasterSolution = if args.reduced || n > MAX_FULL_DEVICES {
        integrate_chain(&chain_for(&network)?, t_end, args.steps, &opts)?
    } else {
        integrate_master(&network, None, t_end, args.steps, &opts)?
    };
    let resistance = (0..n)
        .map(|d| marginal_resistance(&solution, d, &network.models))
        .collect::<Result<Vec<_>>>()?;

    prepare_out(&args.out)?;
    let mut header = vec!["t".to_string()];
    match solution.space {
        StateSpace::Full { .. } => {
            header.extend((0..1usize << n).map(|s| format!("p_{}", state_label(s, n))))
        }
        StateSpace::Reduced { .. } => header.extend((0..=n).map(|m| format!("p_m{m}"))),
    }
    header.push("density".into());
    header.extend((0..n).map(|d| format!("avg_resistance_{d}")));
    let rows = (0..solution.times.len()).map(|k| {
        let mut row = vec![fmt17(solution.times[k])];
        row.extend(solution.probs[k].iter().map(|p| fmt17(*p)));
        row.push(fmt17(solution.density[k]));
        row.extend(resistance.iter().map(|r| fmt17(r[k])));
        row
    });
    let path = args.out.join("master.csv");
    write_csv(&path, &header, rows)?;

    let last = solution.times.len() - 1;
    Ok(Report {
        lines: vec![format!(
            "P(all on) at t = {} s: {}",
            fmt17(t_end),
            fmt17(solution.all_on(last))
        )],
        warnings: Vec::new(),
        files: vec![path],
    })
}

fn cmd_iv(args: &ScenarioArgs) -> Result<Report> {
    let network = build_network(args)?;
    if network.topology.is_dc() {
        return Err(usage(
            "iv needs a sinusoidal drive (--freq, or a SIN source in the netlist)",
        ));
    }
    let trials = args.trials.unwrap_or(1);
    if trials == 0 || args.cycles == 0 {
        return Err(usage("--trials and --cycles must be >= 1"));
    }
    let config = IvConfig {
        network,
        dt: positive("dt", args.dt)?,
        cycles: args.cycles,
        trials,
        seed: args.seed,
        param_mode: args.params.into(),
        keep_raw: true,
    };
    let res = iv_sweep(&config)?;
    prepare_out(&args.out)?;

    let raw_path = args.out.join("iv_raw.csv");
    let header = ["trial", "cycle", "phase", "t", "v", "i"].map(String::from);
    let per_cycle = res.steps_per_cycle;
    let rows = res.raw.iter().enumerate().flat_map(|(trial, pts)| {
        pts.iter().enumerate().map(move |(k, p)| {
            vec![
                trial.to_string(),
                (k / per_cycle).to_string(),
                (k % per_cycle).to_string(),
                fmt17(p.t),
                fmt17(p.v),
                fmt17(p.i),
            ]
        })
    });
    write_csv(&raw_path, &header, rows)?;

    let avg_path = args.out.join("iv_avg.csv");
    let header = ["phase", "v", "i"].map(String::from);
    let rows = (0..res.steps_per_cycle)
        .map(|k| vec![k.to_string(), fmt17(res.voltage[k]), fmt17(res.current[k])]);
    write_csv(&avg_path, &header, rows)?;

    Ok(Report {
        lines: vec![
            format!("loop area {} V·A", fmt17(res.loop_area)),
            format!("{} switching events", res.switch_voltages.len()),
        ],
        warnings: res.warnings,
        files: vec![raw_path, avg_path],
    })
}

/// Normalized analytic `K̃(t)` for two identical devices in series under DC.
fn analytic_two_series(
    network: &Network,
    params: ParamMode,
) -> Result<Option<Box<dyn Fn(f64) -> Result<f64>>>> {
    let eligible = matches!(network.topology, Topology::Series { n: 2, .. })
        && network.topology.is_dc()
        && network.is_identical()
        && (!network.has_spread() || params == ParamMode::Identical);
    if !eligible {
        return Ok(None);
    }
    let g00 = network.rates(&NetworkState::all_off(2), 0.0)?[0];
    let g01 = network.rates(&NetworkState::new(0b01, 2), 0.0)?[1];
    if !(g00 > 0.0 && g01 > 0.0) || g01 == 2.0 * g00 {
        return Ok(None);
    }
    Ok(Some(Box::new(move |t| {
        corr_two_series_normalized(g00, g01, t, 0.0)
    })))
}

fn cmd_correlate(args: &ScenarioArgs) -> Result<Report> {
    let network = build_network(args)?;
    let n = network.device_count();
    if n < 2 {
        return Err(usage("correlations need at least two devices"));
    }
    if let Some((i, j)) = args.pair {
        if i >= n || j >= n {
            return Err(usage(format!(
                "--pair {i},{j} out of range for {n} devices"
            )));
        }
    }
    if args.steps == 0 {
        return Err(usage("--steps must be >= 1"));
    }
    let analytic = analytic_two_series(&network, args.params.into())?;
    let span = args.t_end;
    let mut mc_args = args.clone();
    mc_args.t_end = None;
    let ensemble = ensemble_for(&mc_args, network, 10_000)?;
    let finite: Vec<f64> = ensemble
        .network_times()
        .into_iter()
        .filter(|t| t.is_finite())
        .collect();
    let t_end = match positive("t-end", span)? {
        Some(t) => t,
        None if !finite.is_empty() => 3.0 * mean_se(&finite).0,
        None => ensemble.horizon,
    };

    let mut header = ["t", "k_tilde", "se"].map(String::from).to_vec();
    if analytic.is_some() {
        header.push("analytic".into());
    }
    let mut rows = Vec::with_capacity(args.steps + 1);
    for k in 0..=args.steps {
        let t = t_end * k as f64 / args.steps as f64;
        let est = match args.pair {
            Some((i, j)) => empirical_corr(&ensemble, i, j, t)?,
            None => empirical_corr_all_pairs(&ensemble, t)?,
        };
        let mut row = vec![fmt17(t), fmt17(est.value), fmt17(est.se)];
        if let Some(f) = &analytic {
            row.push(fmt17(f(t)?));
        }
        rows.push(row);
    }
    prepare_out(&args.out)?;
    let path = args.out.join("corr.csv");
    write_csv(&path, &header, rows)?;
    Ok(Report {
        lines: vec![format!(
            "K̃(t) on {} points up to {} s",
            args.steps + 1,
            fmt17(t_end)
        )],
        warnings: ensemble.warnings,
        files: vec![path],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("memkin").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn model_keys() {
        let m = parse_model("tau0=1e5, v0=0.1,ron=500").unwrap();
        let DeviceModel::Poisson(p) = m else { panic!() };
        assert_eq!((p.tau0, p.v0, p.r_on, p.r_off), (1e5, 0.1, 500.0, 1e4));
        assert!(
            matches!(parse_model("kind=aptm,kon=10").unwrap(), DeviceModel::Aptm(a) if a.k_on == 10.0)
        );
        assert_eq!(
            parse_model("").unwrap(),
            PoissonExpModel::reference().into()
        );
    }

    #[test]
    fn model_errors_are_parse_errors() {
        let e = parse_model("tau0=1,bogus=2").unwrap_err();
        assert!(matches!(e, Error::Parse { column: 8, .. }));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(parse_model("tau0").unwrap_err().exit_code(), 2);
        assert_eq!(parse_model("tau0=x").unwrap_err().exit_code(), 2);
        assert_eq!(parse_model("tau0=-1").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn circuit_is_required_and_exclusive() {
        let bare = ["memkin", "mc"];
        assert!(Cli::try_parse_from(bare).is_err());
        assert!(Cli::try_parse_from(["memkin", "mc", "--series", "2", "--parallel", "2"]).is_err());
    }

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 309.173e-6, 1.0 / 3.0, 6.02214076e23, -0.0] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }

    #[test]
    fn drive_from_flags() {
        let Command::Mc(a) = parse(&["mc", "--series", "3", "--va", "2", "--freq", "50"]).command
        else {
            panic!()
        };
        let net = build_network(&a).unwrap();
        assert_eq!(net.topology.drives()[0], DriveSpec::sine(2.0, 50.0));
        let Command::Mc(a) = parse(&["mc", "--parallel", "2", "--spread-tau0", "1e5,2e5"]).command
        else {
            panic!()
        };
        let net = build_network(&a).unwrap();
        assert_eq!(net.spreads[1].unwrap().tau0_range, (1e5, 2e5));
        assert_eq!(net.spreads[1].unwrap().v0_range, (0.05, 0.05));
    }

    #[test]
    fn dt_selects_fixed_step_for_dc() {
        let Command::Mc(a) =
            parse(&["mc", "--series", "1", "--dt", "1e-6", "--trials", "3"]).command
        else {
            panic!()
        };
        let e = ensemble_for(&a, build_network(&a).unwrap(), 1).unwrap();
        assert_eq!(e.scheme, Scheme::FixedStep { dt: 1e-6 });
        let Command::Mc(a) = parse(&["mc", "--series", "1", "--trials", "3"]).command else {
            panic!()
        };
        let e = ensemble_for(&a, build_network(&a).unwrap(), 1).unwrap();
        assert_eq!(e.scheme, Scheme::EventDriven);
    }
}
