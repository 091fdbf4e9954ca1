use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::args::{DistanceArgs, EstimateArgs, InspectArgs, OtocArgs, ScalingArgs, ThermalizeArgs};
use super::output::{fmt_f64, Csv, OutputSet};
use super::{check_dim, CliError};
use crate::channels::json::{ChannelSpec, ObservableSpec};
use crate::channels::{validate, ChannelDiagnostics, QuantumChannel};
use crate::moments::{otoc_all_pairs, otoc_estimate, otoc_exact, OtocReport, OtocSpec};
use crate::rdual::{estimate_observable, variance_bound, DualSampler, EstimatorReport};
use crate::spinchain::{
    channel_distance_scaling, distance_scaling_experiment, scaling_slope, summarize_scaling, thermalization_experiment,
    time_grid, IsingConfig, PauliAxis, Polarization, ScalingConfig, ScalingRow, ThermalizationRun, DEFAULT_SPIN_CAP,
};
use crate::ComplexMatrix;

type CliResult<T> = Result<T, CliError>;

fn spin_cap(force: bool) -> usize {
    if force {
        usize::MAX
    } else {
        DEFAULT_SPIN_CAP
    }
}

fn load_channel(path: &Path, checked: bool, force: bool) -> CliResult<(ChannelSpec, QuantumChannel)> {
    let spec = ChannelSpec::from_path(path)?;
    check_dim(spec.working_dim(), force)?;
    let ch = spec.build_with(checked, spin_cap(force))?;
    Ok((spec, ch))
}

fn load_observable(path: &Path) -> CliResult<(ObservableSpec, ComplexMatrix)> {
    let spec = ObservableSpec::from_path(path)?;
    let m = spec.to_matrix()?;
    Ok((spec, m))
}

/// Stdout writes ignore errors so a closed pipe does not abort the run.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json<T: Serialize>(value: &T) {
    say(&serde_json::to_string_pretty(value).expect("serializable report"));
}

fn distance_csv(rows: &[ScalingRow]) -> Vec<u8> {
    let mut csv = Csv::new(&["N", "trial", "hs_distance", "trace_distance", "bound"]);
    for r in rows {
        csv.push(vec![
            r.n_samples.to_string(),
            r.trial.to_string(),
            fmt_f64(r.hs_distance),
            fmt_f64(r.trace_distance),
            fmt_f64(r.bound),
        ]);
    }
    csv.into_bytes()
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&PathBuf>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct InspectOutput<'a> {
    spec: &'a ChannelSpec,
    #[serde(flatten)]
    diagnostics: &'a ChannelDiagnostics,
}

pub fn channel_inspect(args: InspectArgs) -> CliResult<()> {
    let (spec, ch) = load_channel(&args.spec, false, args.force)?;
    let diag = validate(&ch)?;
    print_json(&diag);
    if let Some(dir) = &args.output_dir {
        let mut out = OutputSet::create(dir)?;
        out.write_json("inspect.json", &InspectOutput {
            spec: &spec,
            diagnostics: &diag,
        })?;
        out.finish("channel-inspect", &serde_json::json!({ "spec": spec }), 0)?;
    }
    if !diag.passed {
        return Err(CliError::validation(format!(
            "channel is not CPTP: trace-preservation residual {:e}, min Choi eigenvalue {:e}",
            diag.trace_preservation_residual, diag.choi_min_eigenvalue
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateConfig<'a> {
    channel: &'a ChannelSpec,
    observable_a: &'a ObservableSpec,
    observable_b: &'a ObservableSpec,
    n_samples: usize,
    seed: u64,
}

#[derive(Serialize)]
struct EstimateOutput {
    ensemble: crate::rdual::EnsembleKind,
    #[serde(flatten)]
    report: EstimatorReport,
    exact: f64,
}

pub fn estimate(args: EstimateArgs) -> CliResult<()> {
    let (spec, ch) = load_channel(&args.channel, true, args.common.force)?;
    let (spec_a, a) = load_observable(&args.observable_a)?;
    let (spec_b, b) = load_observable(&args.observable_b)?;
    let sampler = DualSampler::new(&ch)?;
    let ens = sampler.ensemble(args.n_samples, args.seed)?;
    let mut report = estimate_observable(&ens, &a, &b)?;
    if matches!(ch, QuantumChannel::UnitaryInduced { .. }) {
        report = report.with_bound(variance_bound(&ch, &a, &b)?.max(0.0).sqrt());
    }
    let exact = ch.apply(&a)?.trace_product(&b).re;
    let result = EstimateOutput {
        ensemble: ens.kind(),
        report,
        exact,
    };
    print_json(&result);
    let mut out = OutputSet::create(&args.common.output_dir)?;
    out.write_json("estimate.json", &result)?;
    let config = EstimateConfig {
        channel: &spec,
        observable_a: &spec_a,
        observable_b: &spec_b,
        n_samples: args.n_samples,
        seed: args.seed,
    };
    out.finish("estimate", &config, args.seed)?;
    Ok(())
}

#[derive(Serialize)]
struct DistanceConfig<'a> {
    channel: &'a ChannelSpec,
    n_values: &'a [usize],
    trials: usize,
    seed: u64,
}

pub fn dual_distance(args: DistanceArgs) -> CliResult<()> {
    if args.trials == 0 || args.n_values.is_empty() {
        return Err(CliError::config("need at least one trial and one N value"));
    }
    let (spec, ch) = load_channel(&args.channel, true, args.common.force)?;
    let rows = channel_distance_scaling(&ch, &args.n_values, args.trials, args.seed)?;
    let mut out = OutputSet::create(&args.common.output_dir)?;
    out.write("distance.csv", &distance_csv(&rows))?;
    for s in summarize_scaling(&rows) {
        say(&format!("N={} mean_hs={:.6} bound={:.6}", s.n_samples, s.mean_hs, s.bound));
    }
    let config = DistanceConfig {
        channel: &spec,
        n_values: &args.n_values,
        trials: args.trials,
        seed: args.seed,
    };
    out.finish("dual-distance", &config, args.seed)?;
    Ok(())
}

#[derive(Serialize)]
struct OtocConfig<'a> {
    channel: &'a ChannelSpec,
    observable_a: &'a ObservableSpec,
    observable_b: &'a ObservableSpec,
    pairs: usize,
    seed: u64,
    all_pairs: bool,
}

#[derive(Serialize)]
struct OtocOutput {
    #[serde(flatten)]
    report: OtocReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_pairs_estimate: Option<f64>,
}

pub fn otoc(args: OtocArgs) -> CliResult<()> {
    if args.pairs == 0 {
        return Err(CliError::config("--pairs must be positive"));
    }
    let (spec, ch) = load_channel(&args.channel, true, args.common.force)?;
    let (spec_a, a) = load_observable(&args.observable_a)?;
    let (spec_b, b) = load_observable(&args.observable_b)?;
    let sampler = DualSampler::new(&ch)?;
    let otoc_spec = OtocSpec::new(ch, a, b, true)?;
    let ens = sampler.ensemble(2 * args.pairs, args.seed)?;
    let rep = otoc_estimate(&otoc_spec, &ens)?;
    let all_pairs_estimate = if args.all_pairs {
        Some(otoc_all_pairs(&otoc_spec, &ens)?)
    } else {
        None
    };
    let result = OtocOutput {
        report: OtocReport::new(&rep, Some(otoc_exact(&otoc_spec)?)),
        all_pairs_estimate,
    };
    print_json(&result);
    let mut out = OutputSet::create(&args.common.output_dir)?;
    out.write_json("otoc.json", &result)?;
    let config = OtocConfig {
        channel: &spec,
        observable_a: &spec_a,
        observable_b: &spec_b,
        pairs: args.pairs,
        seed: args.seed,
        all_pairs: args.all_pairs,
    };
    out.finish("otoc", &config, args.seed)?;
    Ok(())
}

/// Thermalization config file; every field is optional and flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermalizeFile {
    n: Option<usize>,
    g: Option<f64>,
    h: Option<f64>,
    #[serde(alias = "pol")]
    polarization: Option<String>,
    observable: Option<String>,
    n_samples: Option<usize>,
    seed: Option<u64>,
    times: Option<Vec<f64>>,
    t_max: Option<f64>,
    dt: Option<f64>,
}

pub fn thermalize(args: ThermalizeArgs) -> CliResult<()> {
    let file: ThermalizeFile = read_config(args.config.as_ref())?;
    let force = args.common.force;
    let n = args.n.or(file.n).unwrap_or(8);
    let g = args.g.or(file.g).unwrap_or(1.05);
    let h = args.h.or(file.h).unwrap_or(0.5);
    let polarization = Polarization::parse(args.pol.or(file.polarization).as_deref().unwrap_or("z"))?;
    let observable = match args.observable.or(file.observable) {
        Some(s) => PauliAxis::parse(&s)?,
        None => polarization.axis(),
    };
    let times = match args.times.or(file.times) {
        Some(t) => t,
        None => time_grid(args.t_max.or(file.t_max).unwrap_or(10.0), args.dt.or(file.dt).unwrap_or(0.25))?,
    };
    let config = IsingConfig::new(n, g, h)?.with_spin_cap(spin_cap(force));
    check_dim(config.dim(), force)?;
    let run = ThermalizationRun {
        config,
        polarization,
        observable,
        times,
        n_samples: args.n_samples.or(file.n_samples).unwrap_or(200),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let rows = thermalization_experiment(&run)?;
    let mut csv = Csv::new(&[
        "time",
        "exact",
        "estimate",
        "sigma_n",
        "bound",
        "empirical_sigma",
        "sigma_bound",
    ]);
    let mut covered = 0;
    for r in &rows {
        if (r.estimate - r.exact).abs() <= r.bound {
            covered += 1;
        }
        csv.push(vec![
            fmt_f64(r.time),
            fmt_f64(r.exact),
            fmt_f64(r.estimate),
            fmt_f64(r.sigma_n),
            fmt_f64(r.bound),
            fmt_f64(r.empirical_sigma),
            fmt_f64(r.sigma_bound),
        ]);
    }
    say(&format!("{covered}/{} time points within 3 sigma", rows.len()));
    let mut out = OutputSet::create(&args.common.output_dir)?;
    out.write("thermalize.csv", &csv.into_bytes())?;
    out.finish("thermalize", &run, run.seed)?;
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingFile {
    n: Option<usize>,
    #[serde(alias = "n_a")]
    na: Option<usize>,
    #[serde(alias = "n_b")]
    nb: Option<usize>,
    g: Option<f64>,
    h: Option<f64>,
    t: Option<f64>,
    #[serde(alias = "N_values")]
    n_values: Option<Vec<usize>>,
    trials: Option<usize>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ScalingFit {
    slope: f64,
    n_values: Vec<usize>,
}

pub fn scaling(args: ScalingArgs) -> CliResult<()> {
    let file: ScalingFile = read_config(args.config.as_ref())?;
    let force = args.common.force;
    let n = args.n.or(file.n).unwrap_or(6);
    let config = IsingConfig::new(n, args.g.or(file.g).unwrap_or(1.05), args.h.or(file.h).unwrap_or(0.5))?
        .with_spin_cap(spin_cap(force));
    check_dim(config.dim(), force)?;
    let sc = ScalingConfig {
        config,
        n_a: args.na.or(file.na).unwrap_or(n),
        n_b: args.nb.or(file.nb).unwrap_or(1),
        t: args.t.or(file.t).unwrap_or(5.0),
        n_values: args.n_values.or(file.n_values).unwrap_or_else(|| vec![10, 50, 100, 500]),
        trials: args.trials.or(file.trials).unwrap_or(20),
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let rows = distance_scaling_experiment(&sc)?;
    let summary = summarize_scaling(&rows);
    let mut csv = Csv::new(&["N", "mean_hs", "mean_hs_sq", "mean_trace", "bound"]);
    for s in &summary {
        csv.push(vec![
            s.n_samples.to_string(),
            fmt_f64(s.mean_hs),
            fmt_f64(s.mean_hs_sq),
            fmt_f64(s.mean_trace),
            fmt_f64(s.bound),
        ]);
    }
    let fit = ScalingFit {
        slope: if summary.len() >= 2 { scaling_slope(&summary) } else { f64::NAN },
        n_values: sc.n_values.clone(),
    };
    if summary.len() >= 2 {
        say(&format!("log-log slope of mean HS distance: {:.4}", fit.slope));
    }
    let mut out = OutputSet::create(&args.common.output_dir)?;
    out.write("scaling.csv", &distance_csv(&rows))?;
    out.write("scaling_summary.csv", &csv.into_bytes())?;
    if summary.len() >= 2 {
        out.write_json("scaling_fit.json", &fit)?;
    }
    out.finish("scaling", &sc, sc.seed)?;
    Ok(())
}
