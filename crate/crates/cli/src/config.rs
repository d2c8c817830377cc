//! Scenario file format.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Keys are dotted (`section.name`). Lists and coordinates are
//! comma separated, IRS sizes are written `NYxNZ`. Every key is optional and
//! falls back to the built-in default scenario. See [`KEYS`] for the full
//! list and [`echo`] for the canonical rendering.

use std::fmt::Write as _;

use irsjam::beamforming::{PowerAllocation, ZfNormalization};
use irsjam::channel::PathLossModel;
use irsjam::channel::MAX_RICIAN_FACTOR;
use irsjam::nalgebra::Point3;
use irsjam::pj_opt::GradientRoute;
use irsjam::sim::{ScenarioConfig, SchemeKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
    /// 1-based line in the scenario file, when the error came from one.
    pub line: Option<usize>,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
            line: None,
        }
    }
}

/// All recognised keys, in canonical order.
pub const KEYS: &[&str] = &[
    "arrays.n_ap",
    "arrays.n_irs_y",
    "arrays.n_irs_z",
    "arrays.element_spacing",
    "geometry.ap_position",
    "geometry.irs_position",
    "geometry.cluster_center",
    "geometry.cluster_radius",
    "fading.kappa_g",
    "fading.kappa_i",
    "pathloss.direct",
    "pathloss.ap_irs",
    "pathloss.irs_lu",
    "users.k",
    "channel.bandwidth_hz",
    "power.p0_dbm",
    "power.allocation",
    "beamforming.normalization",
    "reflect.bits",
    "jammer.aj_over_n_db",
    "sweep.p0_dbm",
    "sweep.bits",
    "sweep.n_elements",
    "rcg.max_iters",
    "rcg.grad_tol",
    "rcg.initial_step",
    "rcg.shrink",
    "rcg.slope",
    "rcg.max_backtracks",
    "rcg.restart_period",
    "rcg.starts",
    "rcg.gradient",
    "run.n_trials",
    "run.master_seed",
    "run.schemes",
];

type Res<T> = std::result::Result<T, ConfigError>;

fn parse_f64(key: &str, v: &str) -> Res<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError::new(key, format!("expected a number, got {v:?}")))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Res<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| ConfigError::new(key, format!("expected a non-negative integer, got {v:?}")))
}

fn split_list(v: &str) -> Vec<&str> {
    let v = v.trim();
    if v.is_empty() {
        Vec::new()
    } else {
        v.split(',').map(str::trim).collect()
    }
}

fn parse_f64_list(key: &str, v: &str) -> Res<Vec<f64>> {
    split_list(v)
        .into_iter()
        .map(|x| parse_f64(key, x))
        .collect()
}

fn parse_fixed<const N: usize>(key: &str, v: &str) -> Res<[f64; N]> {
    let xs = parse_f64_list(key, v)?;
    xs.try_into().map_err(|xs: Vec<f64>| {
        ConfigError::new(
            key,
            format!("expected {N} comma-separated numbers, got {}", xs.len()),
        )
    })
}

fn finite(key: &str, x: f64) -> Res<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(key, format!("must be finite, got {x}")))
    }
}

fn positive(key: &str, x: f64) -> Res<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(key, format!("must be positive, got {x}")))
    }
}

fn at_least<T: PartialOrd + std::fmt::Display>(key: &str, x: T, min: T) -> Res<T> {
    if x >= min {
        Ok(x)
    } else {
        Err(ConfigError::new(
            key,
            format!("must be at least {min}, got {x}"),
        ))
    }
}

fn open_unit(key: &str, x: f64) -> Res<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(
            key,
            format!("must lie strictly between 0 and 1, got {x}"),
        ))
    }
}

fn point(key: &str, v: &str) -> Res<Point3<f64>> {
    let [x, y, z] = parse_fixed::<3>(key, v)?;
    for c in [x, y, z] {
        finite(key, c)?;
    }
    Ok(Point3::new(x, y, z))
}

fn pathloss(key: &str, v: &str) -> Res<PathLossModel> {
    let [a, b] = parse_fixed::<2>(key, v)?;
    Ok(PathLossModel::new(finite(key, a)?, finite(key, b)?))
}

fn kappa(key: &str, v: &str) -> Res<f64> {
    let k = parse_f64(key, v)?;
    if (0.0..=MAX_RICIAN_FACTOR).contains(&k) {
        Ok(k)
    } else {
        Err(ConfigError::new(
            key,
            format!("must lie in [0, {MAX_RICIAN_FACTOR:e}], got {k}"),
        ))
    }
}

fn bits(key: &str, v: &str, min: u32) -> Res<u32> {
    let b: u32 = parse_int(key, v)?;
    if (min..=16).contains(&b) {
        Ok(b)
    } else {
        Err(ConfigError::new(
            key,
            format!("must lie in [{min}, 16], got {b}"),
        ))
    }
}

fn irs_size(key: &str, v: &str) -> Res<(usize, usize)> {
    let bad = || {
        ConfigError::new(
            key,
            format!("expected NYxNZ with both sides at least 1, got {v:?}"),
        )
    };
    let (y, z) = v.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let y: usize = y.trim().parse().map_err(|_| bad())?;
    let z: usize = z.trim().parse().map_err(|_| bad())?;
    if y == 0 || z == 0 {
        return Err(bad());
    }
    Ok((y, z))
}

pub fn parse_schemes(key: &str, v: &str) -> Res<Vec<SchemeKind>> {
    let mut out: Vec<SchemeKind> = Vec::new();
    for name in split_list(v) {
        let kind = SchemeKind::from_name(name).ok_or_else(|| {
            ConfigError::new(
                key,
                format!("unknown scheme {name:?} (expected no_jammer, aj, csi_pj or fpj)"),
            )
        })?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(ConfigError::new(key, "at least one scheme is required"));
    }
    Ok(out)
}

/// Applies one `key = value` assignment.
pub fn set(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Res<()> {
    let v = value.trim();
    match key {
        "arrays.n_ap" => cfg.arrays.n_ap = at_least(key, parse_int(key, v)?, 1)?,
        "arrays.n_irs_y" => cfg.arrays.n_irs_y = at_least(key, parse_int(key, v)?, 1)?,
        "arrays.n_irs_z" => cfg.arrays.n_irs_z = at_least(key, parse_int(key, v)?, 1)?,
        "arrays.element_spacing" => cfg.arrays.element_spacing = positive(key, parse_f64(key, v)?)?,
        "geometry.ap_position" => cfg.deployment.ap_position = point(key, v)?,
        "geometry.irs_position" => cfg.deployment.irs_position = point(key, v)?,
        "geometry.cluster_center" => cfg.deployment.lu_cluster_center = point(key, v)?,
        "geometry.cluster_radius" => {
            let r = finite(key, parse_f64(key, v)?)?;
            cfg.deployment.lu_cluster_radius = at_least(key, r, 0.0)?;
        }
        "fading.kappa_g" => cfg.fading.kappa_g = kappa(key, v)?,
        "fading.kappa_i" => cfg.fading.kappa_i = kappa(key, v)?,
        "pathloss.direct" => cfg.fading.pathloss_direct = pathloss(key, v)?,
        "pathloss.ap_irs" => cfg.fading.pathloss_ap_irs = pathloss(key, v)?,
        "pathloss.irs_lu" => cfg.fading.pathloss_irs_lu = pathloss(key, v)?,
        "users.k" => cfg.k_users = at_least(key, parse_int(key, v)?, 1)?,
        "channel.bandwidth_hz" => cfg.bandwidth_hz = positive(key, parse_f64(key, v)?)?,
        "power.p0_dbm" => cfg.p0_dbm = finite(key, parse_f64(key, v)?)?,
        "power.allocation" => {
            cfg.zf.allocation = match v {
                "water_filling" => PowerAllocation::WaterFilling,
                "equal" => PowerAllocation::EqualPower,
                _ => {
                    return Err(ConfigError::new(
                        key,
                        format!("expected water_filling or equal, got {v:?}"),
                    ))
                }
            }
        }
        "beamforming.normalization" => {
            cfg.zf.normalization = match v {
                "per_column" => ZfNormalization::PerColumn,
                "literal" => ZfNormalization::Literal,
                _ => {
                    return Err(ConfigError::new(
                        key,
                        format!("expected per_column or literal, got {v:?}"),
                    ))
                }
            }
        }
        "reflect.bits" => cfg.quant_bits = bits(key, v, 0)?,
        "jammer.aj_over_n_db" => {
            cfg.aj_over_n_db = parse_f64_list(key, v)?
                .into_iter()
                .map(|x| finite(key, x))
                .collect::<Res<_>>()?;
        }
        "sweep.p0_dbm" => {
            cfg.p0_sweep_dbm = parse_f64_list(key, v)?
                .into_iter()
                .map(|x| finite(key, x))
                .collect::<Res<_>>()?;
        }
        "sweep.bits" => {
            cfg.quant_bits_sweep = split_list(v)
                .into_iter()
                .map(|b| bits(key, b, 1))
                .collect::<Res<_>>()?
        }
        "sweep.n_elements" => {
            cfg.n_elements_sweep = split_list(v)
                .into_iter()
                .map(|s| irs_size(key, s))
                .collect::<Res<_>>()?;
        }
        "rcg.max_iters" => cfg.rcg.max_iters = at_least(key, parse_int(key, v)?, 1)?,
        "rcg.grad_tol" => cfg.rcg.grad_tol = at_least(key, finite(key, parse_f64(key, v)?)?, 0.0)?,
        "rcg.initial_step" => cfg.rcg.initial_step = positive(key, parse_f64(key, v)?)?,
        "rcg.shrink" => cfg.rcg.shrink = open_unit(key, parse_f64(key, v)?)?,
        "rcg.slope" => cfg.rcg.slope = open_unit(key, parse_f64(key, v)?)?,
        "rcg.max_backtracks" => cfg.rcg.max_backtracks = at_least(key, parse_int(key, v)?, 1)?,
        "rcg.restart_period" => cfg.rcg.restart_period = at_least(key, parse_int(key, v)?, 1)?,
        "rcg.starts" => cfg.rcg.starts = at_least(key, parse_int(key, v)?, 1)?,
        "rcg.gradient" => {
            cfg.rcg.gradient = match v {
                "factored" => GradientRoute::Factored,
                "lifted" => GradientRoute::Lifted,
                _ => {
                    return Err(ConfigError::new(
                        key,
                        format!("expected factored or lifted, got {v:?}"),
                    ))
                }
            }
        }
        "run.n_trials" => cfg.n_trials = at_least(key, parse_int(key, v)?, 1)?,
        "run.master_seed" => cfg.master_seed = parse_int(key, v)?,
        "run.schemes" => cfg.schemes = parse_schemes(key, v)?,
        _ => return Err(ConfigError::new(key, "unknown key")),
    }
    Ok(())
}

/// Cross-field checks, reported against the key most likely at fault.
pub fn check(cfg: &ScenarioConfig) -> Res<()> {
    if cfg.k_users > cfg.arrays.n_ap {
        return Err(ConfigError::new(
            "users.k",
            format!(
                "K exceeds antenna count ({} > {})",
                cfg.k_users, cfg.arrays.n_ap
            ),
        ));
    }
    cfg.validate()
        .map_err(|e| ConfigError::new("config", e.to_string()))
}

/// Parses scenario text, then applies `overrides` in order.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Res<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let with_line = |mut e: ConfigError| {
            e.line = Some(i + 1);
            e
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| with_line(ConfigError::new(line, "expected `key = value`")))?;
        set(&mut cfg, key.trim(), value).map_err(with_line)?;
    }
    for (key, value) in overrides {
        set(&mut cfg, key.trim(), value)?;
    }
    check(&cfg)?;
    Ok(cfg)
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Res<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ConfigError::new(s, "expected key=value"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn pt(p: &Point3<f64>) -> String {
    join([p.x, p.y, p.z])
}

fn pl(m: &PathLossModel) -> String {
    join([m.intercept_db, m.slope_db])
}

/// Canonical text form; `parse_config(&echo(c), &[]) == Ok(c)` for every
/// valid `c`.
pub fn echo(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("arrays.n_ap", cfg.arrays.n_ap.to_string());
    kv("arrays.n_irs_y", cfg.arrays.n_irs_y.to_string());
    kv("arrays.n_irs_z", cfg.arrays.n_irs_z.to_string());
    kv(
        "arrays.element_spacing",
        cfg.arrays.element_spacing.to_string(),
    );
    kv("geometry.ap_position", pt(&cfg.deployment.ap_position));
    kv("geometry.irs_position", pt(&cfg.deployment.irs_position));
    kv(
        "geometry.cluster_center",
        pt(&cfg.deployment.lu_cluster_center),
    );
    kv(
        "geometry.cluster_radius",
        cfg.deployment.lu_cluster_radius.to_string(),
    );
    kv("fading.kappa_g", cfg.fading.kappa_g.to_string());
    kv("fading.kappa_i", cfg.fading.kappa_i.to_string());
    kv("pathloss.direct", pl(&cfg.fading.pathloss_direct));
    kv("pathloss.ap_irs", pl(&cfg.fading.pathloss_ap_irs));
    kv("pathloss.irs_lu", pl(&cfg.fading.pathloss_irs_lu));
    kv("users.k", cfg.k_users.to_string());
    kv("channel.bandwidth_hz", cfg.bandwidth_hz.to_string());
    kv("power.p0_dbm", cfg.p0_dbm.to_string());
    kv(
        "power.allocation",
        match cfg.zf.allocation {
            PowerAllocation::WaterFilling => "water_filling",
            PowerAllocation::EqualPower => "equal",
        }
        .into(),
    );
    kv(
        "beamforming.normalization",
        match cfg.zf.normalization {
            ZfNormalization::PerColumn => "per_column",
            ZfNormalization::Literal => "literal",
        }
        .into(),
    );
    kv("reflect.bits", cfg.quant_bits.to_string());
    kv("jammer.aj_over_n_db", join(&cfg.aj_over_n_db));
    kv("sweep.p0_dbm", join(&cfg.p0_sweep_dbm));
    kv("sweep.bits", join(&cfg.quant_bits_sweep));
    kv(
        "sweep.n_elements",
        join(cfg.n_elements_sweep.iter().map(|(y, z)| format!("{y}x{z}"))),
    );
    kv("rcg.max_iters", cfg.rcg.max_iters.to_string());
    kv("rcg.grad_tol", cfg.rcg.grad_tol.to_string());
    kv("rcg.initial_step", cfg.rcg.initial_step.to_string());
    kv("rcg.shrink", cfg.rcg.shrink.to_string());
    kv("rcg.slope", cfg.rcg.slope.to_string());
    kv("rcg.max_backtracks", cfg.rcg.max_backtracks.to_string());
    kv("rcg.restart_period", cfg.rcg.restart_period.to_string());
    kv("rcg.starts", cfg.rcg.starts.to_string());
    kv(
        "rcg.gradient",
        match cfg.rcg.gradient {
            GradientRoute::Factored => "factored",
            GradientRoute::Lifted => "lifted",
        }
        .into(),
    );
    kv("run.n_trials", cfg.n_trials.to_string());
    kv("run.master_seed", cfg.master_seed.to_string());
    kv("run.schemes", join(cfg.schemes.iter().map(|k| k.name())));
    s
}
