use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use devlab_core::belief::Belief;
use devlab_core::diagnostics::{run_diagnostics, DiagnosticsSummary};
use devlab_core::engine::{
    for_each_trial, run_batch, single_round_experiment, BatchAccumulator, RecordGranularity,
    SimConfig, DEFAULT_HORIZON, DEFAULT_TRIALS,
};
use devlab_core::io::{self, fmt_f64, CsvTable, PlotSeries, RunManifest};
use devlab_core::policies::{myopic_threshold, myopic_value_and_case, DEFAULT_C_EPS};
use devlab_core::{PolicyKind, PolicySpec};

const WORKERS_ENV: &str = "DEVLAB_WORKERS";

#[derive(Parser)]
#[command(name = "devlab", version, about = "Recommender simulations where users reveal knowledge by deviating")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-trial regret curves for one policy.
    Simulate(SimulateArgs),
    /// Expected one-round percentage shrink of the belief, by width.
    ShrinkExperiment(SingleRoundArgs),
    /// Expected one-round regret, by width.
    PerRoundRegret(SingleRoundArgs),
    /// The myopic user's expected payoff as a function of the threshold.
    MyopicProfile(ProfileArgs),
    /// Update counts and the accuracy decomposition by update source.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to DEVLAB_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "c-eps")]
    c_eps: Option<f64>,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long = "T", alias = "horizon")]
    horizon: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Use the same draws for every policy at a given seed.
    #[arg(long)]
    paired_seeds: bool,
    /// Write every round of every trial to rounds.csv.
    #[arg(long)]
    full_records: bool,
}

#[derive(Args)]
struct SingleRoundArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated policies, or "all".
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    u_fixed: Option<f64>,
    /// Comma-separated widths; defaults to 0.015, 0.03, ..., 1.5.
    #[arg(long)]
    widths: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    /// Comma-separated lower ends of the belief.
    #[arg(long = "l-list", allow_hyphen_values = true)]
    l_list: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct DiagnosticsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated policies, or "all".
    #[arg(long)]
    policy: Option<String>,
    #[arg(long = "T", alias = "horizon")]
    horizon: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    paired_seeds: bool,
}

/// Resolves settings with precedence flag > config file > default.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                io::parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        for key in file.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!("unknown config key `{key}` (expected one of {})", allowed.join(", "));
            }
        }
        Ok(Self { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, keys: &[&str], default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        for key in keys {
            if let Some(raw) = self.file.get(*key) {
                return raw.parse().map_err(|e| anyhow!("config key `{key}` = `{raw}`: {e}"));
            }
        }
        Ok(default)
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        self.get(None, &[key], false)
    }

    fn workers(&self, flag: Option<usize>) -> Result<Option<usize>> {
        if flag.is_some() {
            return Ok(flag);
        }
        if let Ok(raw) = std::env::var(WORKERS_ENV) {
            let n = raw.parse().map_err(|e| anyhow!("{WORKERS_ENV}=`{raw}`: {e}"))?;
            return Ok(Some(n));
        }
        match self.file.get("workers") {
            Some(raw) => Ok(Some(raw.parse().map_err(|e| anyhow!("config key `workers`: {e}"))?)),
            None => Ok(None),
        }
    }
}

const COMMON_KEYS: &[&str] = &["out", "seed", "workers", "c_eps", "svg"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    COMMON_KEYS.iter().chain(extra).copied().collect()
}

fn parse_policies(raw: &str) -> Result<Vec<PolicyKind>> {
    if raw.trim() == "all" {
        return Ok(PolicyKind::ALL.to_vec());
    }
    raw.split(',')
        .map(|s| s.trim().parse::<PolicyKind>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn parse_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("`{s}`: {e}")))
        .collect()
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write_table(out: &Path, name: &str, table: &CsvTable, manifest: &mut RunManifest) -> Result<()> {
    table
        .write_to(&out.join(name))
        .with_context(|| format!("writing {name}"))?;
    manifest.outputs.push(name.to_owned());
    Ok(())
}

fn finish_manifest(out: &Path, mut manifest: RunManifest, started: Instant) -> Result<()> {
    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    manifest.write_to(&out.join("manifest.json"))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let s = Settings::load(
        args.common.config.as_deref(),
        &keys(&["policy", "t", "horizon", "trials", "paired_seeds", "full_records"]),
    )?;
    let policy_name: String = s.get(args.policy, &["policy"], String::new())?;
    if policy_name.is_empty() {
        bail!("--policy is required (straightforward, ternary, myopic or eve)");
    }
    let kind: PolicyKind = policy_name.parse()?;
    let horizon = s.get(args.horizon, &["t", "horizon"], DEFAULT_HORIZON)?;
    let trials = s.get(args.trials, &["trials"], DEFAULT_TRIALS)?;
    let seed = s.get(args.common.seed, &["seed"], 0)?;
    let c_eps = s.get(args.common.c_eps, &["c_eps"], DEFAULT_C_EPS)?;
    let out: PathBuf = s.get(args.common.out, &["out"], PathBuf::from("out"))?;
    let paired = s.flag(args.paired_seeds, "paired_seeds")?;
    let full = s.flag(args.full_records, "full_records")?;
    let svg = s.flag(args.common.svg, "svg")?;

    let mut config = SimConfig::new(PolicySpec::from_kind(kind, c_eps, horizon)?, horizon, trials, seed);
    config.paired_seeds = paired;
    config.workers = s.workers(args.common.workers)?;
    config.validate()?;
    prepare_out(&out)?;

    let mut manifest = RunManifest::new(
        "simulate",
        json!({
            "policy": config.policy,
            "T": horizon,
            "trials": trials,
            "seed": seed,
            "paired_seeds": paired,
            "full_records": full,
        }),
    );
    let run_id = manifest.run_id.clone();

    let agg = if full {
        let config = config.with_granularity(RecordGranularity::Full);
        let mut acc = BatchAccumulator::new(horizon, trials);
        let file = fs::File::create(out.join("rounds.csv")).context("creating rounds.csv")?;
        let mut rounds = BufWriter::new(file);
        writeln!(rounds, "# run_id: {run_id}")?;
        writeln!(
            rounds,
            "trial,t,x,z,message,z_mean,chosen,optimal,reg,l_before,u_before,l_after,u_after,update_source"
        )?;
        let mut write_err = None;
        for_each_trial(&config, Ok, |mut trial| {
            for r in trial.rounds.take().unwrap_or_default() {
                let line = writeln!(
                    rounds,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    trial.trial_index,
                    r.t,
                    fmt_f64(r.x),
                    fmt_f64(r.z),
                    r.message.as_i8(),
                    fmt_f64(r.z_mean),
                    r.chosen.as_i8(),
                    r.optimal.as_i8(),
                    fmt_f64(r.reg),
                    fmt_f64(r.belief_before.lower()),
                    fmt_f64(r.belief_before.upper()),
                    fmt_f64(r.belief_after.lower()),
                    fmt_f64(r.belief_after.upper()),
                    r.update_source.as_str(),
                );
                if let Err(e) = line {
                    write_err.get_or_insert(e);
                }
            }
            acc.push_trial(trial);
        })?;
        if let Some(e) = write_err {
            return Err(e).context("writing rounds.csv");
        }
        rounds.flush()?;
        manifest.outputs.push("rounds.csv".into());
        acc.finish()?
    } else {
        run_batch(&config)?
    };

    write_table(&out, "regret_curve.csv", &io::regret_curve_table(&run_id, &agg), &mut manifest)?;
    write_table(&out, "final_summary.csv", &io::final_summary_table(&run_id, &agg), &mut manifest)?;
    if svg {
        let plot = io::render_svg(
            &format!("Mean cumulative regret ({kind})"),
            &[PlotSeries {
                label: kind.name(),
                y: &agg.mean_cum_regret,
                band: Some((&agg.p25, &agg.p75)),
            }],
        );
        fs::write(out.join("regret_curve.svg"), plot)?;
        manifest.outputs.push("regret_curve.svg".into());
    }
    if agg.clamp_events > 0 {
        log::warn!("{} rounds hit the belief collapse guard", agg.clamp_events);
    }
    println!(
        "policy={kind} T={horizon} trials={trials} final_mean={:.6} two_sigma={:.6} mean_final_width={:.6e}",
        agg.final_mean, agg.final_two_sigma, agg.mean_final_width
    );
    finish_manifest(&out, manifest, started)
}

fn default_widths() -> Vec<f64> {
    (1..=100).map(|k| k as f64 * 3.0 / 200.0).collect()
}

fn single_round(args: SingleRoundArgs, command: &str, stem: &str) -> Result<()> {
    let started = Instant::now();
    let s = Settings::load(
        args.common.config.as_deref(),
        &keys(&["policy", "u_fixed", "widths", "samples"]),
    )?;
    let policies = parse_policies(&s.get(args.policy, &["policy"], "all".to_string())?)?;
    let u_fixed = s.get(args.u_fixed, &["u_fixed"], 0.5)?;
    let widths = match s.get(args.widths, &["widths"], String::new())? {
        raw if raw.is_empty() => default_widths(),
        raw => parse_list(&raw)?,
    };
    let samples = s.get(args.samples, &["samples"], 10_000)?;
    let seed = s.get(args.common.seed, &["seed"], 0)?;
    let c_eps = s.get(args.common.c_eps, &["c_eps"], DEFAULT_C_EPS)?;
    let out: PathBuf = s.get(args.common.out, &["out"], PathBuf::from("out"))?;
    let svg = s.flag(args.common.svg, "svg")?;
    prepare_out(&out)?;

    let mut manifest = RunManifest::new(
        command,
        json!({
            "policies": policies.iter().map(|p| p.name()).collect::<Vec<_>>(),
            "u_fixed": u_fixed,
            "widths": widths,
            "samples": samples,
            "seed": seed,
            "c_eps": c_eps,
        }),
    );
    let run_id = manifest.run_id.clone();
    let mut curves = Vec::new();
    for kind in policies {
        // EvE is measured in its exploration phase.
        let policy = match kind {
            PolicyKind::Eve => PolicySpec::eve_exploration(),
            other => PolicySpec::from_kind(other, c_eps, DEFAULT_HORIZON)?,
        };
        let rows = single_round_experiment(policy, u_fixed, &widths, samples, seed)?;
        write_table(
            &out,
            &format!("{stem}_{kind}.csv"),
            &io::single_round_table(&run_id, &rows),
            &mut manifest,
        )?;
        let y: Vec<f64> = rows
            .iter()
            .map(|r| if stem == "shrink" { r.mean_shrink_pct } else { r.mean_regret })
            .collect();
        curves.push((kind, y));
    }
    if svg {
        let series: Vec<PlotSeries> = curves
            .iter()
            .map(|(k, y)| PlotSeries { label: k.name(), y, band: None })
            .collect();
        fs::write(out.join(format!("{stem}.svg")), io::render_svg(command, &series))?;
        manifest.outputs.push(format!("{stem}.svg"));
    }
    finish_manifest(&out, manifest, started)
}

fn myopic_profile(args: ProfileArgs) -> Result<()> {
    let started = Instant::now();
    let s = Settings::load(
        args.common.config.as_deref(),
        &keys(&["x", "u", "l_list", "rho_min", "rho_max", "points"]),
    )?;
    let x = s.get(args.x, &["x"], 3.0)?;
    let u = s.get(args.u, &["u"], 0.5)?;
    let ls = parse_list(&s.get(args.l_list, &["l_list"], "-0.8,-0.4,-0.2,0,0.2,0.4".to_string())?)?;
    let rho_min = s.get(args.rho_min, &["rho_min"], -3.0)?;
    let rho_max = s.get(args.rho_max, &["rho_max"], 3.0)?;
    let points = s.get(args.points, &["points"], 601usize)?;
    let out: PathBuf = s.get(args.common.out, &["out"], PathBuf::from("out"))?;
    let svg = s.flag(args.common.svg, "svg")?;
    if x == 0.0 || !x.is_finite() {
        bail!("--x must be finite and nonzero");
    }
    if !(rho_min < rho_max) || points < 2 {
        bail!("need rho_min < rho_max and at least 2 points");
    }
    prepare_out(&out)?;

    let mut manifest = RunManifest::new(
        "myopic-profile",
        json!({"x": x, "u": u, "l_list": ls, "rho_min": rho_min, "rho_max": rho_max, "points": points}),
    );
    let run_id = manifest.run_id.clone();
    let mut profile = CsvTable::new(&run_id, &["l", "rho", "value", "case"]);
    let mut optima = CsvTable::new(&run_id, &["l", "rho_star", "value_star", "case", "minus_x_m"]);
    let mut curves = Vec::new();
    for &l in &ls {
        let belief = Belief::new(l, u)?;
        let mut ys = Vec::with_capacity(points);
        for i in 0..points {
            let rho = rho_min + (rho_max - rho_min) * i as f64 / (points - 1) as f64;
            let (v, case) = myopic_value_and_case(rho, x, &belief)?;
            profile.push(vec![fmt_f64(l), fmt_f64(rho), fmt_f64(v), case.number().to_string()]);
            ys.push(v);
        }
        let rho_star = myopic_threshold(&belief, x)?;
        let (v_star, case) = myopic_value_and_case(rho_star, x, &belief)?;
        optima.push(vec![
            fmt_f64(l),
            fmt_f64(rho_star),
            fmt_f64(v_star),
            case.number().to_string(),
            fmt_f64(-x * belief.midpoint()),
        ]);
        println!("l={l} rho*={rho_star:.6} V*={v_star:.6} case={}", case.number());
        curves.push((format!("l = {l}"), ys));
    }
    write_table(&out, "myopic_profile.csv", &profile, &mut manifest)?;
    write_table(&out, "myopic_optima.csv", &optima, &mut manifest)?;
    if svg {
        let series: Vec<PlotSeries> = curves
            .iter()
            .map(|(label, y)| PlotSeries { label, y, band: None })
            .collect();
        fs::write(out.join("myopic_profile.svg"), io::render_svg("V(rho)", &series))?;
        manifest.outputs.push("myopic_profile.svg".into());
    }
    finish_manifest(&out, manifest, started)
}

fn diagnostics(args: DiagnosticsArgs) -> Result<()> {
    let started = Instant::now();
    let s = Settings::load(
        args.common.config.as_deref(),
        &keys(&["policy", "t", "horizon", "trials", "paired_seeds"]),
    )?;
    let policies = parse_policies(&s.get(args.policy, &["policy"], "straightforward,ternary".to_string())?)?;
    let horizon = s.get(args.horizon, &["t", "horizon"], DEFAULT_HORIZON)?;
    let trials = s.get(args.trials, &["trials"], DEFAULT_TRIALS)?;
    let seed = s.get(args.common.seed, &["seed"], 0)?;
    let c_eps = s.get(args.common.c_eps, &["c_eps"], DEFAULT_C_EPS)?;
    let out: PathBuf = s.get(args.common.out, &["out"], PathBuf::from("out"))?;
    let paired = s.flag(args.paired_seeds, "paired_seeds")?;
    let svg = s.flag(args.common.svg, "svg")?;
    let workers = s.workers(args.common.workers)?;
    prepare_out(&out)?;

    let mut manifest = RunManifest::new(
        "diagnostics",
        json!({
            "policies": policies.iter().map(|p| p.name()).collect::<Vec<_>>(),
            "T": horizon,
            "trials": trials,
            "seed": seed,
            "c_eps": c_eps,
            "paired_seeds": paired,
        }),
    );
    let run_id = manifest.run_id.clone();
    let mut summary = CsvTable::new(
        &run_id,
        &[
            "policy",
            "trials",
            "mean_final_acc",
            "acc_obey",
            "acc_deviate",
            "acc_otf",
            "count_obey",
            "count_deviate",
            "count_otf",
            "deviate_dominant_fraction",
        ],
    );
    let mut acc_curves: Vec<(PolicyKind, DiagnosticsSummary)> = Vec::new();
    for kind in policies {
        let mut config = SimConfig::new(PolicySpec::from_kind(kind, c_eps, horizon)?, horizon, trials, seed);
        config.paired_seeds = paired;
        config.workers = workers;
        let d = run_diagnostics(&config)?;
        write_table(&out, &format!("diagnostics_{kind}.csv"), &io::diagnostics_table(&run_id, &d), &mut manifest)?;
        let last = DiagnosticsSummary::final_value;
        summary.push(vec![
            kind.name().to_owned(),
            d.trials.to_string(),
            fmt_f64(d.mean_final_acc()),
            fmt_f64(last(&d.acc_obey)),
            fmt_f64(last(&d.acc_deviate)),
            fmt_f64(last(&d.acc_otf)),
            fmt_f64(last(&d.count_obey)),
            fmt_f64(last(&d.count_deviate)),
            fmt_f64(last(&d.count_otf)),
            fmt_f64(d.deviate_dominant as f64 / d.trials as f64),
        ]);
        println!(
            "policy={kind} trials={} ACC={:.4} obey={:.4} deviate={:.4} otf={:.4}",
            d.trials,
            d.mean_final_acc(),
            last(&d.acc_obey),
            last(&d.acc_deviate),
            last(&d.acc_otf)
        );
        acc_curves.push((kind, d));
    }
    write_table(&out, "diagnostics_summary.csv", &summary, &mut manifest)?;
    if svg {
        let series: Vec<PlotSeries> = acc_curves
            .iter()
            .map(|(k, d)| PlotSeries { label: k.name(), y: &d.acc_total, band: None })
            .collect();
        fs::write(out.join("accuracy.svg"), io::render_svg("ACC(t)", &series))?;
        manifest.outputs.push("accuracy.svg".into());
    }
    finish_manifest(&out, manifest, started)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::ShrinkExperiment(args) => single_round(args, "shrink-experiment", "shrink"),
        Command::PerRoundRegret(args) => single_round(args, "per-round-regret", "per_round_regret"),
        Command::MyopicProfile(args) => myopic_profile(args),
        Command::Diagnostics(args) => diagnostics(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
