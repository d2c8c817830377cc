//! Monte Carlo engine for the four schemes.
//!
//! * no jammer: ZF on `H_d`, evaluated on `H_d`;
//! * active jammer: as above with jamming power `P_J = σ² · AJ/N` added at
//!   every receiver;
//! * CSI-aided passive jammer: ZF on `H_d`, evaluated on the combined
//!   channel for the optimized reflect vector;
//! * fully-passive jammer (FPJ): the AP designs ZF on the combined channel
//!   for a random `φ¹` (pilot phase) and transmits while the IRS shows an
//!   independent random `φ²` (data phase).
//!
//! Randomness is drawn from substreams keyed by the trial coordinates, see
//! [`SweepAxis`] and [`sweep`]. The channel substream is keyed by
//! `(trial, N_I,y, N_I,z)` only, so every scheme and every power or bit
//! value at a given trial index sees the same channel realization.

use std::fmt;

use rayon::prelude::*;

use crate::beamforming::{
    evaluate, zf_beamformer_with, zf_directions, Beamformer, TrialMetrics, ZfOptions,
};
use crate::channel::{sample_channels, ArraySpec, ChannelSet, Deployment, FadingSpec};
use crate::pj_opt::{csi_pj_attack, PjProblem, RcgOptions};
use crate::reflect::{random_reflect, PhaseAlphabet, ReflectVector};
use crate::rng::{substream, SimRng};
use crate::units::{db_to_linear, dbm_to_watts, noise_power_watts};
use crate::{Error, Result};

/// Singular draws tolerated per trial before the trial is aborted.
pub const MAX_RESAMPLES: usize = 16;

const CHANNEL_TAG: u64 = 0x4348_414e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    NoJammer,
    ActiveJammer,
    CsiPj,
    Fpj,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [Self::NoJammer, Self::ActiveJammer, Self::CsiPj, Self::Fpj];

    pub fn name(&self) -> &'static str {
        match self {
            Self::NoJammer => "no_jammer",
            Self::ActiveJammer => "aj",
            Self::CsiPj => "csi_pj",
            Self::Fpj => "fpj",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A concrete scheme; the active jammer carries its AJ/N ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    NoJammer,
    ActiveJammer { aj_over_n_db: f64 },
    CsiPj,
    Fpj,
}

impl Scheme {
    pub fn kind(&self) -> SchemeKind {
        match self {
            Self::NoJammer => SchemeKind::NoJammer,
            Self::ActiveJammer { .. } => SchemeKind::ActiveJammer,
            Self::CsiPj => SchemeKind::CsiPj,
            Self::Fpj => SchemeKind::Fpj,
        }
    }

    /// Identifier used in CSV output, e.g. `aj_5db`.
    pub fn id(&self) -> String {
        match self {
            Self::ActiveJammer { aj_over_n_db } => format!("aj_{aj_over_n_db}db"),
            other => other.kind().name().to_string(),
        }
    }

    fn stream_key(&self) -> [u64; 2] {
        match self {
            Self::NoJammer => [1, 0],
            Self::ActiveJammer { aj_over_n_db } => [2, aj_over_n_db.to_bits()],
            Self::CsiPj => [3, 0],
            Self::Fpj => [4, 0],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Every physical and experiment parameter of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub arrays: ArraySpec,
    pub deployment: Deployment,
    pub fading: FadingSpec,
    pub k_users: usize,
    /// Transmit power used when power is not the swept axis.
    pub p0_dbm: f64,
    pub bandwidth_hz: f64,
    /// Phase bits used when bits are not the swept axis.
    pub quant_bits: u32,
    pub zf: ZfOptions,
    pub rcg: RcgOptions,
    pub aj_over_n_db: Vec<f64>,
    pub p0_sweep_dbm: Vec<f64>,
    pub quant_bits_sweep: Vec<u32>,
    pub n_elements_sweep: Vec<(usize, usize)>,
    pub n_trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<SchemeKind>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            arrays: ArraySpec::default(),
            deployment: Deployment::default(),
            fading: FadingSpec::default(),
            k_users: 4,
            p0_dbm: 20.0,
            bandwidth_hz: 180e3,
            quant_bits: 1,
            zf: ZfOptions::default(),
            rcg: RcgOptions::default(),
            aj_over_n_db: vec![5.0, 10.0],
            p0_sweep_dbm: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
            quant_bits_sweep: vec![1, 2, 3, 4],
            n_elements_sweep: vec![(8, 8), (16, 16), (32, 32)],
            n_trials: 200,
            master_seed: 2022,
            schemes: SchemeKind::ALL.to_vec(),
        }
    }
}

impl ScenarioConfig {
    /// Noise power in watts, always derived from the bandwidth.
    pub fn noise_watts(&self) -> f64 {
        noise_power_watts(self.bandwidth_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        self.arrays.validate()?;
        self.fading.validate()?;
        self.rcg.validate()?;
        if self.k_users == 0 {
            return bad("users.k must be at least 1".into());
        }
        if self.k_users > self.arrays.n_ap {
            return Err(Error::TooManyUsers {
                users: self.k_users,
                antennas: self.arrays.n_ap,
            });
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return bad(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            ));
        }
        if !(self.deployment.lu_cluster_radius >= 0.0) {
            return bad("cluster radius must be non-negative".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if !self.p0_dbm.is_finite() || self.p0_sweep_dbm.iter().any(|p| !p.is_finite()) {
            return bad("transmit powers must be finite".into());
        }
        if self.aj_over_n_db.iter().any(|a| a.is_nan()) {
            return bad("AJ/N values must not be NaN".into());
        }
        PhaseAlphabet::new(self.quant_bits)?;
        for &b in &self.quant_bits_sweep {
            if b == 0 {
                return bad("swept phase bits must be at least 1".into());
            }
            PhaseAlphabet::new(b)?;
        }
        if self.n_elements_sweep.iter().any(|&(y, z)| y == 0 || z == 0) {
            return bad("IRS dimensions must be at least 1".into());
        }
        Ok(())
    }

    /// Schemes in configuration order, the active jammer expanded over
    /// `aj_over_n_db`.
    pub fn enabled_schemes(&self) -> Vec<Scheme> {
        let mut out = Vec::new();
        for kind in &self.schemes {
            match kind {
                SchemeKind::NoJammer => out.push(Scheme::NoJammer),
                SchemeKind::ActiveJammer => out.extend(
                    self.aj_over_n_db
                        .iter()
                        .map(|&aj_over_n_db| Scheme::ActiveJammer { aj_over_n_db }),
                ),
                SchemeKind::CsiPj => out.push(Scheme::CsiPj),
                SchemeKind::Fpj => out.push(Scheme::Fpj),
            }
        }
        out
    }

    /// Parameters of a single trial outside any sweep.
    pub fn base_point(&self) -> Result<OperatingPoint> {
        Ok(OperatingPoint {
            arrays: self.arrays,
            p0_watts: dbm_to_watts(self.p0_dbm),
            alphabet: PhaseAlphabet::new(self.quant_bits)?,
        })
    }
}

/// The swept quantities resolved for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub arrays: ArraySpec,
    pub p0_watts: f64,
    pub alphabet: PhaseAlphabet,
}

/// Everything a trial needs besides its random streams.
#[derive(Debug, Clone, Copy)]
pub struct TrialEnv<'a> {
    pub cfg: &'a ScenarioConfig,
    pub point: OperatingPoint,
    pub noise: f64,
}

impl<'a> TrialEnv<'a> {
    pub fn new(cfg: &'a ScenarioConfig, point: OperatingPoint) -> Self {
        Self {
            cfg,
            point,
            noise: cfg.noise_watts(),
        }
    }

    fn beamformer(&self, h: &crate::CMatrix) -> Result<Beamformer> {
        zf_beamformer_with(h, self.point.p0_watts, self.noise, self.cfg.zf)
    }
}

/// A channel realization together with how many singular draws preceded it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialChannels {
    pub channels: ChannelSet,
    pub resamples: usize,
}

/// Drops users, samples channels and redraws while `H_d` is rank deficient.
pub fn draw_channels(env: &TrialEnv<'_>, rng: &mut SimRng) -> Result<TrialChannels> {
    let cfg = env.cfg;
    for resamples in 0..=MAX_RESAMPLES {
        let geometry = cfg.deployment.place_users(rng, cfg.k_users)?;
        let channels = sample_channels(rng, &geometry, &env.point.arrays, &cfg.fading)?;
        match zf_directions(&channels.h_direct) {
            Ok(_) => {
                return Ok(TrialChannels {
                    channels,
                    resamples,
                })
            }
            Err(Error::SingularChannel { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleLimit {
        attempts: MAX_RESAMPLES + 1,
    })
}

/// Outcome of one scheme in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeTrial {
    pub metrics: TrialMetrics,
    /// Scheme-specific redraws (FPJ pilot-phase vectors), excluding the
    /// shared channel redraws.
    pub resamples: usize,
}

pub fn no_jammer(env: &TrialEnv<'_>, channels: &ChannelSet) -> Result<TrialMetrics> {
    active_jammer(env, channels, f64::NEG_INFINITY)
}

/// `aj_over_n_db = -∞` gives `P_J = 0`, i.e. the no-jammer baseline.
pub fn active_jammer(
    env: &TrialEnv<'_>,
    channels: &ChannelSet,
    aj_over_n_db: f64,
) -> Result<TrialMetrics> {
    let w_d = env.beamformer(&channels.h_direct)?;
    let p_j = env.noise * db_to_linear(aj_over_n_db);
    Ok(evaluate(&channels.h_direct, &w_d, env.noise, p_j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiPjTrial {
    pub metrics: TrialMetrics,
    pub reflect: ReflectVector,
    pub line_search_failed: bool,
}

pub fn csi_pj(env: &TrialEnv<'_>, channels: &ChannelSet, rng: &mut SimRng) -> Result<CsiPjTrial> {
    let w_d = env.beamformer(&channels.h_direct)?;
    let prob = PjProblem::with_beamformer(channels.clone(), w_d, env.noise)?;
    let attack = csi_pj_attack(&prob, env.point.alphabet, &env.cfg.rcg, rng)?;
    if attack.line_search_failed {
        log::warn!("csi_pj: line search failed, keeping best iterate");
    }
    let h = channels.assemble_combined(attack.reflect.entries())?;
    let metrics = evaluate(&h, prob.beamformer(), env.noise, 0.0);
    let baseline = evaluate(&channels.h_direct, prob.beamformer(), env.noise, 0.0);
    if metrics.sum_rate > baseline.sum_rate {
        log::warn!(
            "csi_pj: attacked sum rate {:.4} exceeds no-jammer {:.4}",
            metrics.sum_rate,
            baseline.sum_rate
        );
    }
    Ok(CsiPjTrial {
        metrics,
        reflect: attack.reflect,
        line_search_failed: attack.line_search_failed,
    })
}

/// Whether the IRS changes its reflect vector between the pilot and data
/// phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aging {
    /// Independent `φ²` (the attack).
    #[default]
    Active,
    /// `φ² = φ¹`; a control with no channel aging.
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpjTrial {
    pub metrics: TrialMetrics,
    pub pilot_reflect: ReflectVector,
    pub data_reflect: ReflectVector,
    pub resamples: usize,
}

pub fn fpj(
    env: &TrialEnv<'_>,
    channels: &ChannelSet,
    rng: &mut SimRng,
    aging: Aging,
) -> Result<FpjTrial> {
    let n = channels.n_irs();
    let alphabet = env.point.alphabet;
    let mut resamples = 0;
    let (phi1, w1) = loop {
        let phi1 = random_reflect(rng, n, alphabet);
        let h1 = channels.assemble_combined(phi1.entries())?;
        match env.beamformer(&h1) {
            Ok(w1) => break (phi1, w1),
            Err(Error::SingularChannel { .. }) if resamples < MAX_RESAMPLES => resamples += 1,
            Err(Error::SingularChannel { .. }) => {
                return Err(Error::ResampleLimit {
                    attempts: resamples + 1,
                })
            }
            Err(e) => return Err(e),
        }
    };
    let phi2 = match aging {
        Aging::Active => random_reflect(rng, n, alphabet),
        Aging::Frozen => phi1.clone(),
    };
    let h2 = channels.assemble_combined(phi2.entries())?;
    let metrics = evaluate(&h2, &w1, env.noise, 0.0);
    Ok(FpjTrial {
        metrics,
        pilot_reflect: phi1,
        data_reflect: phi2,
        resamples,
    })
}

/// Runs `scheme` on a fixed channel realization.
pub fn run_scheme(
    env: &TrialEnv<'_>,
    scheme: Scheme,
    channels: &ChannelSet,
    rng: &mut SimRng,
) -> Result<SchemeTrial> {
    let (metrics, resamples) = match scheme {
        Scheme::NoJammer => (no_jammer(env, channels)?, 0),
        Scheme::ActiveJammer { aj_over_n_db } => (active_jammer(env, channels, aj_over_n_db)?, 0),
        Scheme::CsiPj => (csi_pj(env, channels, rng)?.metrics, 0),
        Scheme::Fpj => {
            let t = fpj(env, channels, rng, Aging::Active)?;
            (t.metrics, t.resamples)
        }
    };
    Ok(SchemeTrial { metrics, resamples })
}

pub fn run_trial_no_jammer(env: &TrialEnv<'_>, rng: &mut SimRng) -> Result<TrialMetrics> {
    no_jammer(env, &draw_channels(env, rng)?.channels)
}

pub fn run_trial_active_jammer(
    env: &TrialEnv<'_>,
    rng: &mut SimRng,
    aj_over_n_db: f64,
) -> Result<TrialMetrics> {
    active_jammer(env, &draw_channels(env, rng)?.channels, aj_over_n_db)
}

pub fn run_trial_csi_pj(env: &TrialEnv<'_>, rng: &mut SimRng) -> Result<TrialMetrics> {
    let ch = draw_channels(env, rng)?;
    Ok(csi_pj(env, &ch.channels, rng)?.metrics)
}

pub fn run_trial_fpj(env: &TrialEnv<'_>, rng: &mut SimRng) -> Result<TrialMetrics> {
    let ch = draw_channels(env, rng)?;
    Ok(fpj(env, &ch.channels, rng, Aging::Active)?.metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Power,
    Bits,
    Elements,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Power => "p0_dbm",
            Self::Bits => "quant_bits",
            Self::Elements => "n_elements",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "power" | "p0_dbm" => Some(Self::Power),
            "bits" | "quant_bits" => Some(Self::Bits),
            "elements" | "n_elements" => Some(Self::Elements),
            _ => None,
        }
    }

    /// `(axis value, operating point)` for every configured sweep value.
    pub fn points(&self, cfg: &ScenarioConfig) -> Result<Vec<(f64, OperatingPoint)>> {
        let base = cfg.base_point()?;
        let pts: Vec<(f64, OperatingPoint)> = match self {
            Self::Power => cfg
                .p0_sweep_dbm
                .iter()
                .map(|&p| {
                    (
                        p,
                        OperatingPoint {
                            p0_watts: dbm_to_watts(p),
                            ..base
                        },
                    )
                })
                .collect(),
            Self::Bits => cfg
                .quant_bits_sweep
                .iter()
                .map(|&b| {
                    Ok((
                        b as f64,
                        OperatingPoint {
                            alphabet: PhaseAlphabet::new(b)?,
                            ..base
                        },
                    ))
                })
                .collect::<Result<_>>()?,
            Self::Elements => cfg
                .n_elements_sweep
                .iter()
                .map(|&(y, z)| {
                    let arrays = ArraySpec {
                        n_irs_y: y,
                        n_irs_z: z,
                        ..cfg.arrays
                    };
                    ((y * z) as f64, OperatingPoint { arrays, ..base })
                })
                .collect(),
        };
        if pts.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no values configured for the {} sweep",
                self.name()
            )));
        }
        Ok(pts)
    }
}

/// Per-scheme aggregate at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSeries {
    pub scheme: Scheme,
    pub mean_sum_rate: f64,
    pub stderr_sum_rate: f64,
    /// Mean over trials of the per-trial I/N in dB (floored at -120 dB).
    pub mean_i_over_n_db: f64,
    pub stderr_i_over_n_db: f64,
    pub n_trials: usize,
    /// Channel redraws plus scheme-specific redraws.
    pub n_resamples: usize,
    /// Trials in index order.
    pub trials: Vec<TrialMetrics>,
}

/// Sample mean and standard error (zero for a single sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl SchemeSeries {
    fn aggregate(scheme: Scheme, trials: Vec<TrialMetrics>, n_resamples: usize) -> Self {
        let rates: Vec<f64> = trials.iter().map(|t| t.sum_rate).collect();
        let inr: Vec<f64> = trials.iter().map(|t| t.i_over_n_db()).collect();
        let (mean_sum_rate, stderr_sum_rate) = mean_stderr(&rates);
        let (mean_i_over_n_db, stderr_i_over_n_db) = mean_stderr(&inr);
        Self {
            scheme,
            mean_sum_rate,
            stderr_sum_rate,
            mean_i_over_n_db,
            stderr_i_over_n_db,
            n_trials: trials.len(),
            n_resamples,
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub series: Vec<SchemeSeries>,
}

impl SweepPoint {
    pub fn series(&self, scheme: Scheme) -> Option<&SchemeSeries> {
        self.series.iter().find(|s| s.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, axis_value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.axis_value == axis_value)
    }
}

/// A sweep that stopped early. `partial` holds the points completed before
/// the failing one.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sweep aborted at {axis_name} = {axis_value}: {source}")]
pub struct SweepFailure {
    pub axis_name: &'static str,
    pub axis_value: f64,
    pub source: Error,
    pub partial: SweepResult,
}

fn channel_stream(master: u64, trial: usize, arrays: &ArraySpec) -> SimRng {
    substream(
        master,
        &[
            CHANNEL_TAG,
            trial as u64,
            arrays.n_irs_y as u64,
            arrays.n_irs_z as u64,
        ],
    )
}

fn scheme_stream(
    master: u64,
    scheme: Scheme,
    axis_value: f64,
    trial: usize,
    arrays: &ArraySpec,
) -> SimRng {
    let [a, b] = scheme.stream_key();
    substream(
        master,
        &[
            a,
            b,
            axis_value.to_bits(),
            trial as u64,
            arrays.n_irs_y as u64,
            arrays.n_irs_z as u64,
        ],
    )
}

/// One trial of every scheme on a shared channel draw.
pub fn run_point_trial(
    env: &TrialEnv<'_>,
    schemes: &[Scheme],
    axis_value: f64,
    trial: usize,
) -> Result<(usize, Vec<SchemeTrial>)> {
    let master = env.cfg.master_seed;
    let arrays = env.point.arrays;
    let ch = draw_channels(env, &mut channel_stream(master, trial, &arrays))?;
    let runs = schemes
        .iter()
        .map(|&s| {
            run_scheme(
                env,
                s,
                &ch.channels,
                &mut scheme_stream(master, s, axis_value, trial, &arrays),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ch.resamples, runs))
}

/// The channel realization trial `trial` uses at `point`.
pub fn trial_channels(
    cfg: &ScenarioConfig,
    point: OperatingPoint,
    trial: usize,
) -> Result<TrialChannels> {
    let env = TrialEnv::new(cfg, point);
    draw_channels(
        &env,
        &mut channel_stream(cfg.master_seed, trial, &point.arrays),
    )
}

fn run_point(
    env: &TrialEnv<'_>,
    schemes: &[Scheme],
    axis_value: f64,
    threads: usize,
) -> Result<SweepPoint> {
    let n = env.cfg.n_trials;
    let outcomes: Vec<Result<(usize, Vec<SchemeTrial>)>> = if threads <= 1 {
        (0..n)
            .map(|t| run_point_trial(env, schemes, axis_value, t))
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|t| run_point_trial(env, schemes, axis_value, t))
            .collect()
    };
    let mut per_scheme: Vec<(Vec<TrialMetrics>, usize)> =
        vec![(Vec::with_capacity(n), 0); schemes.len()];
    for outcome in outcomes {
        let (channel_resamples, runs) = outcome?;
        for ((trials, resamples), run) in per_scheme.iter_mut().zip(runs) {
            trials.push(run.metrics);
            *resamples += channel_resamples + run.resamples;
        }
    }
    let series = schemes
        .iter()
        .zip(per_scheme)
        .map(|(&s, (trials, resamples))| SchemeSeries::aggregate(s, trials, resamples))
        .collect();
    Ok(SweepPoint { axis_value, series })
}

/// Runs `cfg.n_trials` trials of every enabled scheme at every value of
/// `axis`. The result does not depend on `threads`.
pub fn sweep(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    threads: usize,
) -> Result<SweepResult, Box<SweepFailure>> {
    let fail = |axis_value: f64, source: Error, points: Vec<SweepPoint>| {
        Box::new(SweepFailure {
            axis_name: axis.name(),
            axis_value,
            source,
            partial: SweepResult { axis, points },
        })
    };
    if let Err(e) = cfg.validate() {
        return Err(fail(f64::NAN, e, Vec::new()));
    }
    let pts = axis
        .points(cfg)
        .map_err(|e| fail(f64::NAN, e, Vec::new()))?;
    let schemes = cfg.enabled_schemes();
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| fail(f64::NAN, Error::InvalidParameter(e.to_string()), Vec::new()))?,
        )
    } else {
        None
    };
    let mut points = Vec::with_capacity(pts.len());
    for (value, point) in pts {
        let env = TrialEnv::new(cfg, point);
        let res = match &pool {
            Some(pool) => pool.install(|| run_point(&env, &schemes, value, threads)),
            None => run_point(&env, &schemes, value, 1),
        };
        match res {
            Ok(p) => points.push(p),
            Err(e) => return Err(fail(value, e, points)),
        }
    }
    Ok(SweepResult { axis, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            arrays: ArraySpec {
                n_ap: 6,
                n_irs_y: 4,
                n_irs_z: 4,
                element_spacing: 0.5,
            },
            k_users: 3,
            n_trials: 4,
            p0_sweep_dbm: vec![0.0, 20.0],
            n_elements_sweep: vec![(2, 2), (4, 4)],
            quant_bits_sweep: vec![1, 2],
            rcg: RcgOptions {
                max_iters: 30,
                starts: 2,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let too_many = ScenarioConfig {
            k_users: 20,
            ..Default::default()
        };
        let err = too_many.validate().unwrap_err();
        assert!(err.to_string().contains("K exceeds antenna count"));
        assert!(ScenarioConfig {
            n_trials: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ScenarioConfig {
            bandwidth_hz: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ScenarioConfig {
            quant_bits_sweep: vec![0],
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn scheme_ids() {
        let ids: Vec<String> = ScenarioConfig::default()
            .enabled_schemes()
            .iter()
            .map(Scheme::id)
            .collect();
        assert_eq!(ids, ["no_jammer", "aj_5db", "aj_10db", "csi_pj", "fpj"]);
        assert_eq!(Scheme::ActiveJammer { aj_over_n_db: 2.5 }.id(), "aj_2.5db");
    }

    #[test]
    fn no_jammer_has_no_interference() {
        let cfg = small_cfg();
        let env = TrialEnv::new(&cfg, cfg.base_point().unwrap());
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..20 {
            assert!(run_trial_no_jammer(&env, &mut rng).unwrap().i_over_n < 1e-9);
        }
    }

    #[test]
    fn doubling_power_raises_rate() {
        let cfg = small_cfg();
        let point = cfg.base_point().unwrap();
        let ch = trial_channels(&cfg, point, 0).unwrap().channels;
        let lo = no_jammer(&TrialEnv::new(&cfg, point), &ch).unwrap();
        let hi = no_jammer(
            &TrialEnv::new(
                &cfg,
                OperatingPoint {
                    p0_watts: 2.0 * point.p0_watts,
                    ..point
                },
            ),
            &ch,
        )
        .unwrap();
        assert!(hi.sum_rate > lo.sum_rate);
    }

    #[test]
    fn single_user_rate_is_closed_form() {
        let cfg = ScenarioConfig {
            k_users: 1,
            ..small_cfg()
        };
        let point = cfg.base_point().unwrap();
        let env = TrialEnv::new(&cfg, point);
        let ch = trial_channels(&cfg, point, 3).unwrap().channels;
        let m = no_jammer(&env, &ch).unwrap();
        let expect = (1.0 + point.p0_watts * ch.h_direct.norm_squared() / env.noise).log2();
        assert_relative_eq!(m.sum_rate, expect, max_relative = 1e-10);
    }

    #[test]
    fn active_jammer_limits() {
        let cfg = small_cfg();
        let point = cfg.base_point().unwrap();
        let env = TrialEnv::new(&cfg, point);
        let ch = trial_channels(&cfg, point, 1).unwrap().channels;
        let clean = no_jammer(&env, &ch).unwrap();
        assert_eq!(active_jammer(&env, &ch, f64::NEG_INFINITY).unwrap(), clean);
        let aj5 = active_jammer(&env, &ch, 5.0).unwrap();
        let aj10 = active_jammer(&env, &ch, 10.0).unwrap();
        assert!(aj10.sum_rate < aj5.sum_rate && aj5.sum_rate < clean.sum_rate);
        let mut last = 0.0;
        for p in [0.0, 20.0, 40.0, 60.0] {
            let env = TrialEnv::new(
                &cfg,
                OperatingPoint {
                    p0_watts: dbm_to_watts(p),
                    ..point
                },
            );
            let r = active_jammer(&env, &ch, 5.0).unwrap().sum_rate;
            assert!(r > last + 1.0);
            last = r;
        }
    }

    #[test]
    fn schemes_reduce_to_baseline_without_irs() {
        let cfg = small_cfg();
        let point = cfg.base_point().unwrap();
        let env = TrialEnv::new(&cfg, point);
        let ch = trial_channels(&cfg, point, 2)
            .unwrap()
            .channels
            .without_irs();
        let clean = no_jammer(&env, &ch).unwrap();
        let mut rng = SimRng::seed_from_u64(4);
        let pj = csi_pj(&env, &ch, &mut rng).unwrap().metrics;
        let fp = fpj(&env, &ch, &mut rng, Aging::Active).unwrap().metrics;
        for m in [pj, fp] {
            assert_relative_eq!(m.sum_rate, clean.sum_rate, max_relative = 1e-9);
            assert!(m.i_over_n < 1e-9);
        }
    }

    #[test]
    fn frozen_reflection_keeps_zero_forcing_intact() {
        let cfg = small_cfg();
        let point = cfg.base_point().unwrap();
        let env = TrialEnv::new(&cfg, point);
        let mut rng = SimRng::seed_from_u64(5);
        for t in 0..10 {
            let ch = trial_channels(&cfg, point, t).unwrap().channels;
            let frozen = fpj(&env, &ch, &mut rng, Aging::Frozen).unwrap();
            assert!(frozen.metrics.i_over_n < 1e-9);
            assert_eq!(frozen.pilot_reflect, frozen.data_reflect);
            let aged = fpj(&env, &ch, &mut rng, Aging::Active).unwrap();
            assert!(aged.metrics.i_over_n > 1e-6);
        }
    }

    #[test]
    fn csi_pj_does_not_beat_baseline() {
        let cfg = small_cfg();
        let point = cfg.base_point().unwrap();
        let env = TrialEnv::new(&cfg, point);
        for t in 0..4 {
            let ch = trial_channels(&cfg, point, t).unwrap().channels;
            let clean = no_jammer(&env, &ch).unwrap();
            let pj = csi_pj(&env, &ch, &mut SimRng::seed_from_u64(t as u64)).unwrap();
            assert!(pj.metrics.sum_rate <= clean.sum_rate);
        }
    }

    #[test]
    fn single_trial_sweep_wraps_one_metric() {
        let cfg = ScenarioConfig {
            n_trials: 1,
            p0_sweep_dbm: vec![10.0],
            schemes: vec![SchemeKind::NoJammer],
            ..small_cfg()
        };
        let r = sweep(&cfg, SweepAxis::Power, 1).unwrap();
        assert_eq!(r.points.len(), 1);
        let s = &r.points[0].series[0];
        assert_eq!(s.n_trials, 1);
        assert_eq!(s.trials.len(), 1);
        assert_eq!(s.mean_sum_rate, s.trials[0].sum_rate);
        assert_eq!(s.stderr_sum_rate, 0.0);
        let env = TrialEnv::new(
            &cfg,
            OperatingPoint {
                p0_watts: dbm_to_watts(10.0),
                ..cfg.base_point().unwrap()
            },
        );
        let ch = trial_channels(&cfg, env.point, 0).unwrap().channels;
        assert_eq!(no_jammer(&env, &ch).unwrap(), s.trials[0]);
    }

    #[test]
    fn sweeps_are_deterministic_and_thread_independent() {
        let cfg = small_cfg();
        for axis in [SweepAxis::Power, SweepAxis::Bits, SweepAxis::Elements] {
            let a = sweep(&cfg, axis, 1).unwrap();
            let b = sweep(&cfg, axis, 1).unwrap();
            let c = sweep(&cfg, axis, 3).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
            assert_eq!(a.points.len(), 2);
        }
    }

    #[test]
    fn schemes_share_channels_across_power_values() {
        let cfg = small_cfg();
        let pts = SweepAxis::Power.points(&cfg).unwrap();
        let a = trial_channels(&cfg, pts[0].1, 2).unwrap();
        let b = trial_channels(&cfg, pts[1].1, 2).unwrap();
        assert_eq!(a, b);
        let r = sweep(&cfg, SweepAxis::Power, 1).unwrap();
        for (pt, (_, op)) in r.points.iter().zip(&pts) {
            let env = TrialEnv::new(&cfg, *op);
            for t in 0..cfg.n_trials {
                let ch = trial_channels(&cfg, *op, t).unwrap().channels;
                let nj = no_jammer(&env, &ch).unwrap();
                assert_eq!(pt.series(Scheme::NoJammer).unwrap().trials[t], nj);
                let aj = active_jammer(&env, &ch, 5.0).unwrap();
                assert_eq!(
                    pt.series(Scheme::ActiveJammer { aj_over_n_db: 5.0 })
                        .unwrap()
                        .trials[t],
                    aj
                );
            }
        }
    }

    #[test]
    fn empty_axis_is_an_error() {
        let cfg = ScenarioConfig {
            p0_sweep_dbm: vec![],
            ..small_cfg()
        };
        let err = sweep(&cfg, SweepAxis::Power, 1).unwrap_err();
        assert!(err.partial.points.is_empty());
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(s, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
    }
}
