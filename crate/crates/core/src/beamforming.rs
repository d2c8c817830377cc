//! Zero-forcing precoding, water-filling and per-user link metrics.

use nalgebra::SVD;

use crate::units::linear_to_db;
use crate::{CMatrix, Complex64, Error, Result};

/// Channels whose smallest-to-largest singular value ratio falls below this
/// are treated as rank deficient.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// I/N values at or below this are reported as [`I_OVER_N_FLOOR_DB`].
pub const I_OVER_N_FLOOR: f64 = 1e-12;
pub const I_OVER_N_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerAllocation {
    #[default]
    WaterFilling,
    EqualPower,
}

/// How the pseudoinverse columns are scaled into beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZfNormalization {
    /// `w_k = sqrt(p_k) a_k / ‖a_k‖`, so `‖w_k‖² = p_k`.
    #[default]
    PerColumn,
    /// `W = A P^{1/2} / ‖A‖_F²`, the printed textbook form. Same directions,
    /// but the radiated power no longer equals `Σ p_k`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ZfOptions {
    pub allocation: PowerAllocation,
    pub normalization: ZfNormalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    /// N_A × K, column k is w_k.
    pub w: CMatrix,
    /// Power allocated to each user (W).
    pub p: Vec<f64>,
    /// Effective gains `1 / ‖a_k‖²` seen by the power allocation.
    pub gains: Vec<f64>,
}

impl Beamformer {
    pub fn total_power(&self) -> f64 {
        self.w.norm_squared()
    }
}

/// Pseudoinverse `h^H (h h^H)^{-1}` of a full-row-rank K × N_A channel.
pub fn zf_directions(h: &CMatrix) -> Result<CMatrix> {
    let (k, n_a) = h.shape();
    if k > n_a {
        return Err(Error::TooManyUsers {
            users: k,
            antennas: n_a,
        });
    }
    if k == 0 {
        return Err(Error::Dimension("channel has no users".into()));
    }
    let svd = SVD::new(h.clone(), true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(ratio >= RANK_THRESHOLD) {
        return Err(Error::SingularChannel { ratio });
    }
    svd.pseudo_inverse(0.0)
        .map_err(|e| Error::Dimension(e.to_string()))
}

pub fn zf_beamformer(h: &CMatrix, p0: f64, noise: f64) -> Result<Beamformer> {
    zf_beamformer_with(h, p0, noise, ZfOptions::default())
}

pub fn zf_beamformer_with(h: &CMatrix, p0: f64, noise: f64, opts: ZfOptions) -> Result<Beamformer> {
    if !(p0 > 0.0) || !(noise > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power and noise must be positive (p0 = {p0}, noise = {noise})"
        )));
    }
    let a = zf_directions(h)?;
    let k = a.ncols();
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let gains: Vec<f64> = norms.iter().map(|n| 1.0 / (n * n)).collect();
    let p = match opts.allocation {
        PowerAllocation::WaterFilling => water_filling(&gains, p0, noise),
        PowerAllocation::EqualPower => vec![p0 / k as f64; k],
    };
    let mut w = a.clone();
    match opts.normalization {
        ZfNormalization::PerColumn => {
            for (j, mut col) in w.column_iter_mut().enumerate() {
                col *= Complex64::from(p[j].sqrt() / norms[j]);
            }
        }
        ZfNormalization::Literal => {
            let fro2 = a.norm_squared();
            for (j, mut col) in w.column_iter_mut().enumerate() {
                col *= Complex64::from(p[j].sqrt() / fro2);
            }
        }
    }
    Ok(Beamformer { w, p, gains })
}

/// Floors `noise / g_k` sorted ascending, and how many of them lie below
/// the water level.
fn active_floors(gains: &[f64], p0: f64, noise: f64) -> (Vec<f64>, usize) {
    let mut floors: Vec<f64> = gains.iter().map(|g| noise / g).collect();
    floors.sort_by(f64::total_cmp);
    let mut prefix = 0.0;
    let mut active = 0;
    for (m, &f) in floors.iter().enumerate() {
        // The level of the first m floors submerges floor m iff it exceeds it.
        if m > 0 && (p0 + prefix) / m as f64 <= f {
            break;
        }
        prefix += f;
        active = m + 1;
    }
    (floors, active)
}

/// Water level `μ` of the allocation `p_k = max(0, μ - noise/g_k)`.
pub fn water_level(gains: &[f64], p0: f64, noise: f64) -> f64 {
    let (floors, m) = active_floors(gains, p0, noise);
    (p0 + floors[..m].iter().sum::<f64>()) / m as f64
}

/// Power allocation maximizing `Σ log2(1 + p_k g_k / noise)` under `Σ p_k = p0`.
///
/// Exact sort-based floor removal; no iteration tolerance is involved.
pub fn water_filling(gains: &[f64], p0: f64, noise: f64) -> Vec<f64> {
    assert!(
        !gains.is_empty() && gains.iter().all(|&g| g > 0.0),
        "gains must be positive"
    );
    let (floors, m) = active_floors(gains, p0, noise);
    let cutoff = floors[m - 1];
    let active = &floors[..m];
    gains
        .iter()
        .map(|g| {
            let f = noise / g;
            if f > cutoff {
                0.0
            } else {
                // (p0 + Σ (f_i - f)) / m is exact for equal floors.
                (p0 + active.iter().map(|fi| fi - f).sum::<f64>()) / m as f64
            }
        })
        .collect()
}

pub fn capacity_objective(p: &[f64], gains: &[f64], noise: f64) -> f64 {
    p.iter()
        .zip(gains)
        .map(|(p, g)| (1.0 + p * g / noise).log2())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub sinr: Vec<f64>,
    /// bit/s/Hz
    pub sum_rate: f64,
    /// Aggregate inter-user interference over noise, linear.
    pub i_over_n: f64,
}

impl TrialMetrics {
    pub fn from_sinr(sinr: Vec<f64>, i_over_n: f64) -> Self {
        let sum_rate = sinr.iter().map(|s| (1.0 + s).log2()).sum();
        Self {
            sinr,
            sum_rate,
            i_over_n,
        }
    }

    /// I/N in dB, clamped to [`I_OVER_N_FLOOR_DB`].
    pub fn i_over_n_db(&self) -> f64 {
        i_over_n_to_db(self.i_over_n)
    }
}

pub fn i_over_n_to_db(x: f64) -> f64 {
    if x <= I_OVER_N_FLOOR {
        I_OVER_N_FLOOR_DB
    } else {
        linear_to_db(x)
    }
}

/// SINR, sum rate and I/N of precoder `bf` over channel `h_eval`.
///
/// `extra_interference` is added to every user's denominator (active
/// jamming) but is not part of the reported I/N.
pub fn evaluate(
    h_eval: &CMatrix,
    bf: &Beamformer,
    noise: f64,
    extra_interference: f64,
) -> TrialMetrics {
    evaluate_precoder(h_eval, &bf.w, noise, extra_interference)
}

pub fn evaluate_precoder(
    h_eval: &CMatrix,
    w: &CMatrix,
    noise: f64,
    extra_interference: f64,
) -> TrialMetrics {
    assert_eq!(
        h_eval.ncols(),
        w.nrows(),
        "channel/precoder antenna mismatch"
    );
    assert_eq!(h_eval.nrows(), w.ncols(), "channel/precoder user mismatch");
    let m = h_eval * w;
    let k = m.nrows();
    let mut sinr = Vec::with_capacity(k);
    let mut interference = 0.0;
    for r in 0..k {
        let signal = m[(r, r)].norm_sqr();
        let leak: f64 = (0..k)
            .filter(|&u| u != r)
            .map(|u| m[(r, u)].norm_sqr())
            .sum();
        interference += leak;
        sinr.push(signal / (leak + extra_interference + noise));
    }
    TrialMetrics::from_sinr(sinr, interference / noise)
}
