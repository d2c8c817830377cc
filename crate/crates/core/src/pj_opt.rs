//! CSI-aided passive jammer: choose the IRS phases that minimize the users'
//! sum rate when the AP precodes on the direct channel only.
//!
//! The discrete problem is relaxed to the complex circle manifold
//! `{φ̄ : |φ̄_n| = 1}`, solved there by Riemannian conjugate gradient (RCG),
//! and rounded back to the phase alphabet.
//!
//! With `z_{k,u}(φ̄) = Σ_n φ̄_n b_{k,u,n} + c_{k,u}` the received amplitude of
//! beam `u` at user `k`, where `b_{k,u,n} = [H_I]_{k,n} [G w_u]_n` and
//! `c_{k,u} = h_{d,k}^H w_u`, the objective is
//!
//! ```text
//! f(φ̄) = Σ_k log2( (Σ_u |z_{k,u}|² + σ²) / (Σ_{u≠k} |z_{k,u}|² + σ²) )
//! ```
//!
//! and its conjugate-coordinate (Wirtinger) gradient is
//!
//! ```text
//! ∂f/∂φ̄* = (1/ln 2) Σ_k Σ_u ( 1/T_k − [u≠k]/(I_k+σ²) ) z_{k,u} conj(b_{k,u})
//! ```
//!
//! Two evaluations of this gradient are provided. [`PjProblem`] uses the
//! factored form above, `O(K² N_I)` per call. [`LiftedPjProblem`] lifts
//! `v = [φ̄; 1]` and writes every power as a Hermitian form `v^H R v` with
//! dense `(N_I+1)²` matrices, which costs `O(K N_I²)` per call after an
//! `O(K² N_I²)` build. The two share no code path past the coefficient
//! vectors and are cross-checked in tests.

use std::f64::consts::{LN_2, TAU};

use rand::Rng;

use crate::beamforming::{zf_beamformer, Beamformer};
use crate::channel::ChannelSet;
use crate::reflect::{
    check_unit_modulus, quantize, PhaseAlphabet, ReflectVector, UNIT_MODULUS_TOL,
};
use crate::{CMatrix, Complex64, Error, Result};

/// Limit on `B · N_I` for exhaustive search.
pub const BRUTE_FORCE_MAX_EXPONENT: u64 = 20;

/// A differentiable sum-rate model over reflect vectors.
pub trait RateModel {
    fn dim(&self) -> usize;

    fn objective(&self, phi: &[Complex64]) -> f64;

    /// `(f, ∂f/∂φ̄*)`.
    fn objective_and_gradient(&self, phi: &[Complex64]) -> (f64, Vec<Complex64>);

    fn euclidean_gradient(&self, phi: &[Complex64]) -> Vec<Complex64> {
        self.objective_and_gradient(phi).1
    }
}

/// The attacker's view: all channels plus the AP's direct-channel precoder.
#[derive(Debug, Clone)]
pub struct PjProblem {
    channels: ChannelSet,
    w_d: Beamformer,
    noise: f64,
    k: usize,
    n: usize,
    /// `b_{k,u}/σ`, pair-major: pair `k*K + u` occupies `[pair*n, (pair+1)*n)`.
    cascade: Vec<Complex64>,
    /// `c_{k,u}/σ`.
    offset: Vec<Complex64>,
}

impl PjProblem {
    /// Designs `W_d` by zero-forcing on `H_d`, as the AP does when it is
    /// unaware of the IRS.
    pub fn new(channels: ChannelSet, p0: f64, noise: f64) -> Result<Self> {
        let w_d = zf_beamformer(&channels.h_direct, p0, noise)?;
        Self::with_beamformer(channels, w_d, noise)
    }

    pub fn with_beamformer(channels: ChannelSet, w_d: Beamformer, noise: f64) -> Result<Self> {
        let (k, n) = (channels.k(), channels.n_irs());
        if w_d.w.nrows() != channels.n_ap() || w_d.w.ncols() != k {
            return Err(Error::Dimension(format!(
                "precoder is {}x{}, expected {}x{}",
                w_d.w.nrows(),
                w_d.w.ncols(),
                channels.n_ap(),
                k
            )));
        }
        if !(noise > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise must be positive, got {noise}"
            )));
        }
        let scale = Complex64::from(1.0 / noise.sqrt());
        // G W_d is N_I x K; column u is G w_u.
        let gw = &channels.g_ap_irs * &w_d.w;
        let hw = &channels.h_direct * &w_d.w;
        let mut cascade = Vec::with_capacity(k * k * n);
        let mut offset = Vec::with_capacity(k * k);
        for user in 0..k {
            for beam in 0..k {
                cascade
                    .extend((0..n).map(|i| channels.h_irs_lu[(user, i)] * gw[(i, beam)] * scale));
                offset.push(hw[(user, beam)] * scale);
            }
        }
        Ok(Self {
            channels,
            w_d,
            noise,
            k,
            n,
            cascade,
            offset,
        })
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn beamformer(&self) -> &Beamformer {
        &self.w_d
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn users(&self) -> usize {
        self.k
    }

    fn pair(&self, user: usize, beam: usize) -> (&[Complex64], Complex64) {
        let p = user * self.k + beam;
        (&self.cascade[p * self.n..(p + 1) * self.n], self.offset[p])
    }

    /// Noise-normalized amplitudes `z_{k,u}/σ`, pair-major.
    fn amplitudes(&self, phi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(phi.len(), self.n, "reflect vector length");
        (0..self.k * self.k)
            .map(|p| {
                let (b, c) = self.pair(p / self.k, p % self.k);
                b.iter().zip(phi).fold(c, |acc, (b, x)| acc + b * x)
            })
            .collect()
    }

    /// Per-user `(T_k, I_k + σ²)` in noise units from the amplitudes.
    fn powers(&self, z: &[Complex64]) -> Vec<(f64, f64)> {
        (0..self.k)
            .map(|user| {
                let row = &z[user * self.k..(user + 1) * self.k];
                let interf: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(beam, _)| beam != user)
                    .map(|(_, a)| a.norm_sqr())
                    .sum::<f64>()
                    + 1.0;
                (interf + row[user].norm_sqr(), interf)
            })
            .collect()
    }
}

fn rate_from_powers(powers: &[(f64, f64)]) -> f64 {
    powers.iter().map(|(t, i)| (t / i).log2()).sum()
}

impl RateModel for PjProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn objective(&self, phi: &[Complex64]) -> f64 {
        rate_from_powers(&self.powers(&self.amplitudes(phi)))
    }

    fn objective_and_gradient(&self, phi: &[Complex64]) -> (f64, Vec<Complex64>) {
        let z = self.amplitudes(phi);
        let powers = self.powers(&z);
        let mut grad = vec![Complex64::new(0.0, 0.0); self.n];
        for (user, &(total, interf)) in powers.iter().enumerate() {
            for beam in 0..self.k {
                let mut coef = 1.0 / total;
                if beam != user {
                    coef -= 1.0 / interf;
                }
                let w = z[user * self.k + beam] * (coef / LN_2);
                let (b, _) = self.pair(user, beam);
                for (g, b) in grad.iter_mut().zip(b) {
                    *g += w * b.conj();
                }
            }
        }
        (rate_from_powers(&powers), grad)
    }
}

/// Dense Hermitian-form evaluation of the same objective.
#[derive(Debug, Clone)]
pub struct LiftedPjProblem {
    n: usize,
    /// `Σ_u conj(β_{k,u}) β_{k,u}^T` for each user.
    total: Vec<CMatrix>,
    /// `Σ_{u≠k} conj(β_{k,u}) β_{k,u}^T` for each user.
    interference: Vec<CMatrix>,
}

impl LiftedPjProblem {
    pub fn new(prob: &PjProblem) -> Self {
        let (k, n) = (prob.k, prob.n);
        let mut total = Vec::with_capacity(k);
        let mut interference = Vec::with_capacity(k);
        for user in 0..k {
            let mut t = CMatrix::zeros(n + 1, n + 1);
            let mut i = CMatrix::zeros(n + 1, n + 1);
            for beam in 0..k {
                let (b, c) = prob.pair(user, beam);
                let beta: Vec<Complex64> = b.iter().copied().chain(std::iter::once(c)).collect();
                let r = CMatrix::from_fn(n + 1, n + 1, |row, col| beta[row].conj() * beta[col]);
                if beam != user {
                    i += &r;
                }
                t += r;
            }
            total.push(t);
            interference.push(i);
        }
        Self {
            n,
            total,
            interference,
        }
    }

    fn lift(&self, phi: &[Complex64]) -> nalgebra::DVector<Complex64> {
        assert_eq!(phi.len(), self.n, "reflect vector length");
        nalgebra::DVector::from_iterator(
            self.n + 1,
            phi.iter()
                .copied()
                .chain(std::iter::once(Complex64::new(1.0, 0.0))),
        )
    }
}

impl RateModel for LiftedPjProblem {
    fn dim(&self) -> usize {
        self.n
    }

    fn objective(&self, phi: &[Complex64]) -> f64 {
        let v = self.lift(phi);
        self.total
            .iter()
            .zip(&self.interference)
            .map(|(t, i)| {
                let tp = v.dotc(&(t * &v)).re + 1.0;
                let ip = v.dotc(&(i * &v)).re + 1.0;
                (tp / ip).log2()
            })
            .sum()
    }

    fn objective_and_gradient(&self, phi: &[Complex64]) -> (f64, Vec<Complex64>) {
        let v = self.lift(phi);
        let mut f = 0.0;
        let mut grad = nalgebra::DVector::<Complex64>::zeros(self.n + 1);
        for (t, i) in self.total.iter().zip(&self.interference) {
            let tv = t * &v;
            let iv = i * &v;
            let tp = v.dotc(&tv).re + 1.0;
            let ip = v.dotc(&iv).re + 1.0;
            f += (tp / ip).log2();
            grad +=
                tv * Complex64::from(1.0 / (tp * LN_2)) - iv * Complex64::from(1.0 / (ip * LN_2));
        }
        (f, grad.iter().take(self.n).copied().collect())
    }
}

/// Sum rate at `phi_bar` under the fixed direct-channel precoder.
pub fn pj_objective<M: RateModel + ?Sized>(phi_bar: &[Complex64], model: &M) -> Result<f64> {
    check_input(phi_bar, model.dim())?;
    Ok(model.objective(phi_bar))
}

/// `∂f/∂φ̄*` at `phi_bar`. The directional derivative along `d` is
/// `2 Re(gradᴴ d)`.
pub fn pj_euclidean_gradient<M: RateModel + ?Sized>(
    phi_bar: &[Complex64],
    model: &M,
) -> Result<Vec<Complex64>> {
    check_input(phi_bar, model.dim())?;
    Ok(model.euclidean_gradient(phi_bar))
}

fn check_input(phi: &[Complex64], n: usize) -> Result<()> {
    if phi.len() != n {
        return Err(Error::Dimension(format!(
            "reflect vector has {} entries, expected {n}",
            phi.len()
        )));
    }
    check_unit_modulus(phi, UNIT_MODULUS_TOL)
}

/// Which gradient evaluation the solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientRoute {
    #[default]
    Factored,
    Lifted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcgOptions {
    pub max_iters: usize,
    /// Threshold on `‖grad_R f‖ / sqrt(N_I)`.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease coefficient.
    pub slope: f64,
    pub max_backtracks: usize,
    /// Conjugate directions are reset to steepest descent every this many
    /// iterations.
    pub restart_period: usize,
    /// Number of RCG starts in [`csi_pj_attack`]: the all-ones vector plus
    /// `starts - 1` uniformly random points.
    pub starts: usize,
    pub gradient: GradientRoute,
}

impl Default for RcgOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            slope: 1e-4,
            max_backtracks: 30,
            restart_period: 50,
            starts: 4,
            gradient: GradientRoute::Factored,
        }
    }
}

impl RcgOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("rcg: {what}")));
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return bad("slope must lie in (0, 1)");
        }
        if !(self.initial_step > 0.0) || !(self.grad_tol >= 0.0) {
            return bad("initial_step must be positive and grad_tol non-negative");
        }
        if self.restart_period < 1 || self.starts < 1 {
            return bad("restart_period and starts must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcgOutcome {
    pub phi: Vec<Complex64>,
    /// Objective at the start point and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Set when no step satisfying the Armijo condition was found even along
    /// steepest descent; `phi` is then the best iterate reached.
    pub line_search_failed: bool,
}

impl RcgOutcome {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("trace holds the start point")
    }
}

fn re_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

fn norm(a: &[Complex64]) -> f64 {
    re_inner(a, a).sqrt()
}

/// Tangent-space projection at `x`: `v_n − Re(v_n conj(x_n)) x_n`.
fn project(x: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    x.iter()
        .zip(v)
        .map(|(x, v)| v - x * (v * x.conj()).re)
        .collect()
}

fn retract(x: &[Complex64], d: &[Complex64], t: f64) -> Vec<Complex64> {
    x.iter()
        .zip(d)
        .map(|(x, d)| {
            let y = x + d * t;
            let r = y.norm();
            if r > 0.0 {
                y / r
            } else {
                *x
            }
        })
        .collect()
}

/// Riemannian gradient in real coordinates, i.e. the projection of
/// `2 ∂f/∂φ̄*`.
fn riemannian_gradient(x: &[Complex64], wirtinger: &[Complex64]) -> Vec<Complex64> {
    let doubled: Vec<Complex64> = wirtinger.iter().map(|g| g * 2.0).collect();
    project(x, &doubled)
}

/// Minimizes `model` over the complex circle manifold from `init`.
///
/// Polak–Ribière+ directions with projection transport and periodic restart,
/// Armijo backtracking on the retraction `x ↦ x/|x|` element-wise. The trial
/// step of each line search starts at twice the previously accepted step
/// (at `initial_step` on the first iteration).
pub fn rcg_minimize<M: RateModel + ?Sized>(
    model: &M,
    opts: &RcgOptions,
    init: &[Complex64],
) -> Result<RcgOutcome> {
    opts.validate()?;
    check_input(init, model.dim())?;
    let n = model.dim();
    let scale = (n as f64).sqrt();

    let mut x: Vec<Complex64> = init.iter().map(|z| z / z.norm()).collect();
    let (mut f, wg) = model.objective_and_gradient(&x);
    let mut g = riemannian_gradient(&x, &wg);
    let mut d: Vec<Complex64> = g.iter().map(|v| -v).collect();
    let mut trace = vec![f];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut line_search_failed = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let gnorm = norm(&g);
        if gnorm / scale <= opts.grad_tol {
            converged = true;
            break;
        }
        let mut slope = re_inner(&g, &d);
        let mut steepest = false;
        if !(slope < 0.0) {
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            steepest = true;
        }

        let mut accepted = armijo(model, opts, &x, f, &d, slope, step);
        if accepted.is_none() && !steepest {
            d = g.iter().map(|v| -v).collect();
            accepted = armijo(model, opts, &x, f, &d, -gnorm * gnorm, opts.initial_step);
        }
        let Some((t, x_new, f_new)) = accepted else {
            line_search_failed = true;
            break;
        };

        let (_, wg_new) = model.objective_and_gradient(&x_new);
        let g_new = riemannian_gradient(&x_new, &wg_new);
        let g_old = project(&x_new, &g);
        let d_old = project(&x_new, &d);
        let diff: Vec<Complex64> = g_new.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        let mut beta = (re_inner(&g_new, &diff) / (gnorm * gnorm)).max(0.0);
        if iterations % opts.restart_period == 0 || !beta.is_finite() {
            beta = 0.0;
        }
        d = g_new
            .iter()
            .zip(&d_old)
            .map(|(g, d)| -g + d * beta)
            .collect();

        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(f);
        step = 2.0 * t;
    }

    Ok(RcgOutcome {
        grad_norm: norm(&g),
        phi: x,
        trace,
        iterations,
        converged,
        line_search_failed,
    })
}

fn armijo<M: RateModel + ?Sized>(
    model: &M,
    opts: &RcgOptions,
    x: &[Complex64],
    f: f64,
    d: &[Complex64],
    slope: f64,
    first: f64,
) -> Option<(f64, Vec<Complex64>, f64)> {
    let mut t = first;
    for _ in 0..=opts.max_backtracks {
        let y = retract(x, d, t);
        let fy = model.objective(&y);
        if fy <= f + opts.slope * t * slope && fy < f {
            return Some((t, y, fy));
        }
        t *= opts.shrink;
    }
    None
}

/// Result of the relaxed-then-rounded attack.
#[derive(Debug, Clone, PartialEq)]
pub struct PjAttack {
    pub reflect: ReflectVector,
    /// Sum rate of `reflect`.
    pub objective: f64,
    /// Continuous optimum of the start that produced `reflect`.
    pub relaxed_objective: f64,
    pub line_search_failed: bool,
}

/// RCG on the relaxation, then element-wise rounding to `alphabet`.
///
/// Starts are the all-ones vector followed by `opts.starts - 1` points with
/// phases uniform on `[0, 2π)` drawn from `rng`. The start whose rounded
/// vector has the lowest discrete sum rate wins; ties go to the earlier start.
pub fn csi_pj_attack<R: Rng + ?Sized>(
    prob: &PjProblem,
    alphabet: PhaseAlphabet,
    opts: &RcgOptions,
    rng: &mut R,
) -> Result<PjAttack> {
    opts.validate()?;
    let n = prob.n;
    let lifted;
    let model: &dyn RateModel = match opts.gradient {
        GradientRoute::Factored => prob,
        GradientRoute::Lifted => {
            lifted = LiftedPjProblem::new(prob);
            &lifted
        }
    };
    let mut best: Option<PjAttack> = None;
    for start in 0..opts.starts {
        let init: Vec<Complex64> = if start == 0 {
            vec![Complex64::new(1.0, 0.0); n]
        } else {
            (0..n)
                .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * TAU))
                .collect()
        };
        let run = rcg_minimize(model, opts, &init)?;
        let reflect = quantize(&run.phi, alphabet)?;
        let objective = prob.objective(reflect.entries());
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(PjAttack {
                reflect,
                objective,
                relaxed_objective: run.objective(),
                line_search_failed: run.line_search_failed,
            });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Exact discrete minimizer by enumeration.
///
/// Candidate `i` assigns element `n` the level `(i / L^n) mod L`, so the
/// all-zero-phase vector comes first; ties keep the earliest candidate.
pub fn brute_force_pj(prob: &PjProblem, alphabet: PhaseAlphabet) -> Result<ReflectVector> {
    let n = prob.n;
    let exponent = alphabet.bits() as u64 * n as u64;
    if exponent > BRUTE_FORCE_MAX_EXPONENT {
        return Err(Error::InstanceTooLarge { exponent });
    }
    let l = alphabet.levels() as usize;
    let points: Vec<Complex64> = alphabet
        .phases()
        .iter()
        .map(|&p| Complex64::from_polar(1.0, p))
        .collect();
    let mut levels = vec![0u32; n];
    let mut phi = vec![points[0]; n];
    let mut best = (prob.objective(&phi), levels.clone());
    let candidates = l.pow(n as u32);
    for _ in 1..candidates {
        // Odometer increment over the digits.
        for (lv, x) in levels.iter_mut().zip(phi.iter_mut()) {
            *lv += 1;
            if (*lv as usize) < l {
                *x = points[*lv as usize];
                break;
            }
            *lv = 0;
            *x = points[0];
        }
        let f = prob.objective(&phi);
        if f < best.0 {
            best = (f, levels.clone());
        }
    }
    ReflectVector::from_levels(alphabet, best.1)
}
