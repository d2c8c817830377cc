//! Argument handling and subcommand dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use irsjam::sim::{
    run_point_trial, sweep, ScenarioConfig, Scheme, SchemeKind, SweepAxis, TrialEnv,
};
use irsjam::units::linear_to_db;

use crate::config::{echo, parse_config, parse_override};
use crate::output::{summary, to_csv, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "irsjam",
    version,
    about = "Monte Carlo simulator for IRS-based jamming of ZF downlinks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Args)]
pub struct Options {
    /// Scenario file (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `run.master_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per sweep point (overrides `run.n_trials`).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output directory for CSV files and the manifest.
    #[arg(long, global = true, env = "IRSJAM_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated schemes: no_jammer, aj, csi_pj, fpj.
    #[arg(long, global = true)]
    pub schemes: Option<String>,
    /// Worker threads; the results do not depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    pub parallel: usize,
    /// Extra `key=value` assignment, applied after the file; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a parameter sweep and write `sweep_<axis>.csv`.
    Sweep { axis: AxisArg },
    /// Run a single trial of one scheme at the configured operating point.
    Trial {
        /// no_jammer, aj (first configured AJ/N), aj_<x>db, csi_pj or fpj.
        scheme: String,
        /// Trial index; selects the channel realization.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Print the resolved configuration in scenario-file form.
    EchoConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Power,
    Bits,
    Elements,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Power => SweepAxis::Power,
            AxisArg::Bits => SweepAxis::Bits,
            AxisArg::Elements => SweepAxis::Elements,
        }
    }
}

/// Resolves the scenario: defaults, then the file, then `--set`, then the
/// dedicated flags.
pub fn load_config(opts: &Options) -> Result<ScenarioConfig> {
    let text = match &opts.config {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut overrides = opts
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = opts.seed {
        overrides.push(("run.master_seed".into(), seed.to_string()));
    }
    if let Some(n) = opts.trials {
        overrides.push(("run.n_trials".into(), n.to_string()));
    }
    if let Some(s) = &opts.schemes {
        overrides.push(("run.schemes".into(), s.clone()));
    }
    parse_config(&text, &overrides).map_err(|e| match (e.line, &opts.config) {
        (Some(line), Some(p)) => anyhow::anyhow!("{}:{line}: {e}", p.display()),
        _ => e.into(),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.opts)?;
    match cli.command {
        Command::EchoConfig => {
            print!("{}", echo(&cfg));
            Ok(())
        }
        Command::Sweep { axis } => run_sweep(&cfg, axis.into(), &cli.opts.out, cli.opts.parallel),
        Command::Trial { scheme, index } => run_trial(&cfg, &scheme, index),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn axis_label(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Power => "power",
        SweepAxis::Bits => "bits",
        SweepAxis::Elements => "elements",
    }
}

/// Writes the CSV and manifest; an aborted sweep leaves its completed points
/// in `sweep_<axis>.partial.csv` and exits with an error.
pub fn run_sweep(cfg: &ScenarioConfig, axis: SweepAxis, out: &Path, threads: usize) -> Result<()> {
    if threads == 0 {
        bail!("--parallel must be at least 1");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let label = axis_label(axis);
    let manifest_path = out.join(format!("manifest_{label}.cfg"));
    match sweep(cfg, axis, threads) {
        Ok(result) => {
            let csv_path = out.join(format!("sweep_{label}.csv"));
            write(&csv_path, &to_csv(&result))?;
            let manifest = RunManifest::new(cfg.clone(), vec![csv_path.display().to_string()]);
            write(&manifest_path, &manifest.render())?;
            print!("{}", summary(&result));
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Err(failure) => {
            let csv_path = out.join(format!("sweep_{label}.partial.csv"));
            write(&csv_path, &to_csv(&failure.partial))?;
            let manifest = RunManifest::new(cfg.clone(), vec![csv_path.display().to_string()]);
            write(&manifest_path, &manifest.render())?;
            Err(anyhow::Error::new(*failure))
                .context(format!("partial results in {}", csv_path.display()))
        }
    }
}

fn resolve_scheme(cfg: &ScenarioConfig, name: &str) -> Result<Scheme> {
    let all = ScenarioConfig {
        schemes: SchemeKind::ALL.to_vec(),
        ..cfg.clone()
    }
    .enabled_schemes();
    if name == "aj" {
        return all
            .into_iter()
            .find(|s| s.kind() == SchemeKind::ActiveJammer)
            .context("no AJ/N value configured (jammer.aj_over_n_db)");
    }
    if let Some(s) = all.iter().find(|s| s.id() == name) {
        return Ok(*s);
    }
    if let Some(db) = name.strip_prefix("aj_").and_then(|r| r.strip_suffix("db")) {
        let aj_over_n_db: f64 = db
            .parse()
            .with_context(|| format!("bad AJ/N in {name:?}"))?;
        return Ok(Scheme::ActiveJammer { aj_over_n_db });
    }
    bail!("unknown scheme {name:?} (expected no_jammer, aj, aj_<x>db, csi_pj or fpj)")
}

/// One trial at `power.p0_dbm` and `reflect.bits`. The numbers equal the
/// matching trial of a power sweep containing that power.
pub fn run_trial(cfg: &ScenarioConfig, name: &str, index: usize) -> Result<()> {
    let scheme = resolve_scheme(cfg, name)?;
    let env = TrialEnv::new(cfg, cfg.base_point()?);
    let (resamples, runs) = run_point_trial(&env, &[scheme], cfg.p0_dbm, index)?;
    let m = &runs[0].metrics;
    println!("scheme        {}", scheme.id());
    println!("trial         {index}");
    println!("p0_dbm        {}", cfg.p0_dbm);
    println!("sum_rate      {:.6} bit/s/Hz", m.sum_rate);
    println!("i_over_n_db   {:.4}", m.i_over_n_db());
    let sinr: Vec<String> = m
        .sinr
        .iter()
        .map(|&s| format!("{:.3}", linear_to_db(s)))
        .collect();
    println!("sinr_db       {}", sinr.join(" "));
    println!("resamples     {}", resamples + runs[0].resamples);
    Ok(())
}
