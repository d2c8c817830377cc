//! IRS reflect vectors and B-bit phase alphabets.
//!
//! The reflection matrix is `diag(entries)` with `entries[n] = exp(j φ_n)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::{Complex64, Error, Result};

/// Tolerance on `| |x| - 1 |` accepted for inputs claimed to be unit modulus.
pub const UNIT_MODULUS_TOL: f64 = 1e-6;

/// Uniform alphabet `{2πm / 2^B : m = 0..2^B}`.
///
/// `bits == 0` is the single-point alphabet `{0}`, which is only useful for
/// tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseAlphabet {
    bits: u32,
}

impl PhaseAlphabet {
    pub const MAX_BITS: u32 = 16;

    pub fn new(bits: u32) -> Result<Self> {
        if bits > Self::MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "phase alphabet supports at most {} bits, got {bits}",
                Self::MAX_BITS
            )));
        }
        Ok(Self { bits })
    }

    pub fn one_bit() -> Self {
        Self { bits: 1 }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn step(&self) -> f64 {
        TAU / self.levels() as f64
    }

    pub fn phase(&self, level: u32) -> f64 {
        self.step() * level as f64
    }

    pub fn phases(&self) -> Vec<f64> {
        (0..self.levels()).map(|m| self.phase(m)).collect()
    }

    /// Worst-case chordal error `|exp(jπ/2^B) - 1|` of nearest-point rounding.
    pub fn max_chordal_error(&self) -> f64 {
        (Complex64::from_polar(1.0, self.step() / 2.0) - 1.0).norm()
    }

    /// Nearest level to `angle` (any real); ties go to the smaller level.
    pub fn nearest_level(&self, angle: f64) -> u32 {
        let l = self.levels();
        let a = angle.rem_euclid(TAU);
        let lo = ((a / self.step()).floor() as u32).min(l - 1);
        let hi = (lo + 1) % l;
        let dist = |m: u32| {
            let d = (a - self.phase(m)).abs();
            d.min(TAU - d)
        };
        let (dl, dh) = (dist(lo), dist(hi));
        if dh < dl || (dh == dl && hi < lo) {
            hi
        } else {
            lo
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectVector {
    phases: Vec<f64>,
    entries: Vec<Complex64>,
    discrete: Option<(PhaseAlphabet, Vec<u32>)>,
}

impl ReflectVector {
    /// All phases zero (the identity reflection).
    pub fn zeros(n: usize) -> Self {
        Self::from_phases(vec![0.0; n])
    }

    /// Continuous vector from arbitrary phases.
    pub fn from_phases(phases: Vec<f64>) -> Self {
        let entries = phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        Self {
            phases,
            entries,
            discrete: None,
        }
    }

    pub fn from_levels(alphabet: PhaseAlphabet, levels: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = levels.iter().find(|&&m| m >= alphabet.levels()) {
            return Err(Error::InvalidParameter(format!(
                "level {bad} outside a {}-bit alphabet",
                alphabet.bits()
            )));
        }
        let phases: Vec<f64> = levels.iter().map(|&m| alphabet.phase(m)).collect();
        let entries = phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        Ok(Self {
            phases,
            entries,
            discrete: Some((alphabet, levels)),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn alphabet(&self) -> Option<PhaseAlphabet> {
        self.discrete.as_ref().map(|(a, _)| *a)
    }

    pub fn levels(&self) -> Option<&[u32]> {
        self.discrete.as_ref().map(|(_, l)| l.as_slice())
    }

    /// `‖self - other‖²`.
    pub fn squared_distance(&self, other: &[Complex64]) -> f64 {
        self.entries
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }
}

/// Each phase drawn independently and uniformly from `alphabet`.
pub fn random_reflect<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    alphabet: PhaseAlphabet,
) -> ReflectVector {
    let levels = (0..n)
        .map(|_| rng.random_range(0..alphabet.levels()))
        .collect();
    ReflectVector::from_levels(alphabet, levels).expect("levels drawn inside the alphabet")
}

pub fn check_unit_modulus(x: &[Complex64], tol: f64) -> Result<()> {
    for (index, z) in x.iter().enumerate() {
        let modulus = z.norm();
        if !((modulus - 1.0).abs() <= tol) {
            return Err(Error::NotUnitModulus { index, modulus });
        }
    }
    Ok(())
}

/// Element-wise nearest point of `alphabet`, which is also the global
/// minimizer of `‖φ - φ̄‖²` over `Ω_B^N` since the objective separates.
pub fn quantize(continuous: &[Complex64], alphabet: PhaseAlphabet) -> Result<ReflectVector> {
    check_unit_modulus(continuous, UNIT_MODULUS_TOL)?;
    let levels = continuous
        .iter()
        .map(|z| alphabet.nearest_level(z.arg()))
        .collect();
    ReflectVector::from_levels(alphabet, levels)
}

/// Wraps to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}
