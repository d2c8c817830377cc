//! Channel realizations for the AP → LU direct link and the AP → IRS → LU
//! reflected link.
//!
//! The direct link is Rayleigh; both IRS hops are Rician with a geometric
//! line-of-sight (LOS) part built from array responses. Geometry conventions:
//!
//! * the AP carries a uniform linear array along the y axis;
//! * the IRS is a uniform planar array in the y–z plane;
//! * phases are referenced to element 0 and spacing is given in wavelengths.
//!
//! Large-scale loss enters as an amplitude `sqrt(10^(-L/10))` on the whole
//! small-scale matrix.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, Complex64, Error, Result};

/// Log-distance path-loss law `intercept + slope * log10(d)` in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl PathLossModel {
    pub const fn new(intercept_db: f64, slope_db: f64) -> Self {
        Self {
            intercept_db,
            slope_db,
        }
    }

    pub fn loss_db(&self, distance_m: f64) -> Result<f64> {
        path_loss_db(*self, distance_m)
    }

    /// Amplitude factor `sqrt(10^(-L/10))` applied to a unit-variance channel.
    pub fn amplitude(&self, distance_m: f64) -> Result<f64> {
        Ok(10f64.powf(-self.loss_db(distance_m)? / 20.0))
    }
}

pub fn path_loss_db(model: PathLossModel, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    Ok(model.intercept_db + model.slope_db * distance_m.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    /// AP ULA elements.
    pub n_ap: usize,
    pub n_irs_y: usize,
    pub n_irs_z: usize,
    /// Inter-element spacing in wavelengths.
    pub element_spacing: f64,
}

impl ArraySpec {
    pub fn n_irs(&self) -> usize {
        self.n_irs_y * self.n_irs_z
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ap == 0 || self.n_irs() == 0 {
            return Err(Error::InvalidParameter(
                "array sizes must be at least 1".into(),
            ));
        }
        if !(self.element_spacing > 0.0) || !self.element_spacing.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "element_spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        Ok(())
    }
}

impl Default for ArraySpec {
    fn default() -> Self {
        Self {
            n_ap: 12,
            n_irs_y: 32,
            n_irs_z: 32,
            element_spacing: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec {
    /// Rician factor of the AP → IRS hop (linear).
    pub kappa_g: f64,
    /// Rician factor of the IRS → LU hops (linear).
    pub kappa_i: f64,
    pub pathloss_direct: PathLossModel,
    pub pathloss_ap_irs: PathLossModel,
    pub pathloss_irs_lu: PathLossModel,
}

impl Default for FadingSpec {
    fn default() -> Self {
        Self {
            kappa_g: 2.0,
            kappa_i: 2.0,
            pathloss_direct: PathLossModel::new(32.6, 22.0),
            pathloss_ap_irs: PathLossModel::new(35.6, 20.0),
            pathloss_irs_lu: PathLossModel::new(35.6, 22.0),
        }
    }
}

/// Largest Rician factor accepted. Beyond this the NLOS weight is below
/// 1e-6 in amplitude and the channel is LOS for every practical purpose.
pub const MAX_RICIAN_FACTOR: f64 = 1e12;

/// LOS and NLOS amplitude weights `(sqrt(κ/(1+κ)), sqrt(1/(1+κ)))`.
pub fn rician_weights(kappa: f64) -> Result<(f64, f64)> {
    if !(0.0..=MAX_RICIAN_FACTOR).contains(&kappa) {
        return Err(Error::InvalidParameter(format!(
            "Rician factor must lie in [0, {MAX_RICIAN_FACTOR:e}], got {kappa}"
        )));
    }
    let los = kappa / (1.0 + kappa);
    let nlos = 1.0 / (1.0 + kappa);
    debug_assert!((los + nlos - 1.0).abs() < 1e-15);
    Ok((los.sqrt(), nlos.sqrt()))
}

impl FadingSpec {
    pub fn validate(&self) -> Result<()> {
        rician_weights(self.kappa_g)?;
        rician_weights(self.kappa_i)?;
        Ok(())
    }
}

/// Fixed part of the layout: AP and IRS positions plus the disk the users
/// are dropped in (z = 0 plane).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deployment {
    pub ap_position: Point3<f64>,
    pub irs_position: Point3<f64>,
    pub lu_cluster_center: Point3<f64>,
    pub lu_cluster_radius: f64,
}

impl Default for Deployment {
    fn default() -> Self {
        Self {
            ap_position: Point3::new(0.0, 0.0, 0.0),
            irs_position: Point3::new(5.0, 5.0, 2.0),
            lu_cluster_center: Point3::new(200.0, 0.0, 0.0),
            lu_cluster_radius: 10.0,
        }
    }
}

impl Deployment {
    /// Drops `k` users uniformly over the cluster disk.
    pub fn place_users<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Result<Geometry> {
        let lu_positions = (0..k)
            .map(|_| {
                let r = self.lu_cluster_radius * rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                Point3::new(
                    self.lu_cluster_center.x + r * theta.cos(),
                    self.lu_cluster_center.y + r * theta.sin(),
                    self.lu_cluster_center.z,
                )
            })
            .collect();
        Geometry::new(*self, lu_positions)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub deployment: Deployment,
    pub lu_positions: Vec<Point3<f64>>,
}

impl Geometry {
    pub fn new(deployment: Deployment, lu_positions: Vec<Point3<f64>>) -> Result<Self> {
        if lu_positions.is_empty() {
            return Err(Error::DegenerateGeometry(
                "at least one user is required".into(),
            ));
        }
        let g = Self {
            deployment,
            lu_positions,
        };
        if g.ap_irs_distance() <= 0.0 {
            return Err(Error::DegenerateGeometry("AP and IRS coincide".into()));
        }
        for k in 0..g.k() {
            if g.ap_lu_distance(k) <= 0.0 || g.irs_lu_distance(k) <= 0.0 {
                return Err(Error::DegenerateGeometry(format!(
                    "user {k} coincides with the AP or the IRS"
                )));
            }
        }
        Ok(g)
    }

    pub fn k(&self) -> usize {
        self.lu_positions.len()
    }

    pub fn ap_irs_distance(&self) -> f64 {
        (self.deployment.irs_position - self.deployment.ap_position).norm()
    }

    pub fn ap_lu_distance(&self, k: usize) -> f64 {
        (self.lu_positions[k] - self.deployment.ap_position).norm()
    }

    pub fn irs_lu_distance(&self, k: usize) -> f64 {
        (self.lu_positions[k] - self.deployment.irs_position).norm()
    }
}

/// One channel draw. Rows of `h_direct` and `h_irs_lu` are the conjugated
/// per-user channel vectors, so `h_direct * w` is already the received
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// K × N_A direct channels (row k is h_{d,k}^H).
    pub h_direct: CMatrix,
    /// N_I × N_A AP → IRS channel.
    pub g_ap_irs: CMatrix,
    /// K × N_I IRS → LU channels (row k is h_{I,k}^H).
    pub h_irs_lu: CMatrix,
}

impl ChannelSet {
    pub fn new(h_direct: CMatrix, g_ap_irs: CMatrix, h_irs_lu: CMatrix) -> Result<Self> {
        let (k, n_a) = h_direct.shape();
        if g_ap_irs.ncols() != n_a || h_irs_lu.nrows() != k || h_irs_lu.ncols() != g_ap_irs.nrows()
        {
            return Err(Error::Dimension(format!(
                "H_d {}x{}, G {}x{}, H_I {}x{}",
                k,
                n_a,
                g_ap_irs.nrows(),
                g_ap_irs.ncols(),
                h_irs_lu.nrows(),
                h_irs_lu.ncols()
            )));
        }
        Ok(Self {
            h_direct,
            g_ap_irs,
            h_irs_lu,
        })
    }

    pub fn k(&self) -> usize {
        self.h_direct.nrows()
    }

    pub fn n_ap(&self) -> usize {
        self.h_direct.ncols()
    }

    pub fn n_irs(&self) -> usize {
        self.g_ap_irs.nrows()
    }

    /// Copy with the IRS → LU link removed.
    pub fn without_irs(&self) -> Self {
        let mut c = self.clone();
        c.h_irs_lu.fill(Complex64::new(0.0, 0.0));
        c
    }

    /// The reflected part `H_I diag(φ) G` alone.
    pub fn reflected(&self, phi: &[Complex64]) -> Result<CMatrix> {
        if phi.len() != self.n_irs() {
            return Err(Error::Dimension(format!(
                "reflect vector has {} entries, IRS has {}",
                phi.len(),
                self.n_irs()
            )));
        }
        let mut scaled = self.h_irs_lu.clone();
        for (mut col, &p) in scaled.column_iter_mut().zip(phi) {
            col *= p;
        }
        Ok(scaled * &self.g_ap_irs)
    }

    /// Combined channel `H_I diag(φ) G + H_d`; row k is h_{com,k}^H.
    pub fn assemble_combined(&self, phi: &[Complex64]) -> Result<CMatrix> {
        Ok(self.reflected(phi)? + &self.h_direct)
    }

    pub fn is_finite(&self) -> bool {
        [&self.h_direct, &self.g_ap_irs, &self.h_irs_lu]
            .iter()
            .all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// ULA response with element `m` equal to `exp(j 2π s m sin(angle))`.
pub fn ula_response(n: usize, angle: f64, spacing: f64) -> Vec<Complex64> {
    let k = std::f64::consts::TAU * spacing * angle.sin();
    (0..n)
        .map(|m| Complex64::from_polar(1.0, k * m as f64))
        .collect()
}

/// UPA response for a y–z planar array.
///
/// Entry `(m_y, m_z)` is `exp(j 2π s (m_y sin(el) sin(az) + m_z cos(el)))`,
/// where `el` is measured from the z axis and `az` from the x axis in the
/// x–y plane. The returned vector is z-major: index `m_z * ny + m_y`.
pub fn upa_response(
    ny: usize,
    nz: usize,
    azimuth: f64,
    elevation: f64,
    spacing: f64,
) -> Vec<Complex64> {
    let ky = std::f64::consts::TAU * spacing * elevation.sin() * azimuth.sin();
    let kz = std::f64::consts::TAU * spacing * elevation.cos();
    let mut out = Vec::with_capacity(ny * nz);
    for mz in 0..nz {
        for my in 0..ny {
            out.push(Complex64::from_polar(1.0, ky * my as f64 + kz * mz as f64));
        }
    }
    out
}

fn unit_direction(from: &Point3<f64>, to: &Point3<f64>) -> Result<Vector3<f64>> {
    let v = to - from;
    let n = v.norm();
    if n <= 0.0 {
        return Err(Error::DegenerateGeometry("zero-length LOS ray".into()));
    }
    Ok(v / n)
}

/// ULA angle (from broadside) of the ray `from → to` for an array along y.
pub fn ula_angle(from: &Point3<f64>, to: &Point3<f64>) -> Result<f64> {
    Ok(unit_direction(from, to)?.y.clamp(-1.0, 1.0).asin())
}

/// `(azimuth, elevation)` of the ray `from → to` for a y–z planar array.
pub fn upa_angles(from: &Point3<f64>, to: &Point3<f64>) -> Result<(f64, f64)> {
    let u = unit_direction(from, to)?;
    Ok((u.y.atan2(u.x), u.z.clamp(-1.0, 1.0).acos()))
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Unit-modulus LOS matrix `a_I a_A^H`, i.e. `sqrt(N_I N_A) α_I α_A^H` with
/// unit-norm responses α.
pub fn ap_irs_los(geometry: &Geometry, arrays: &ArraySpec) -> Result<CMatrix> {
    let d = &geometry.deployment;
    let (az, el) = upa_angles(&d.irs_position, &d.ap_position)?;
    let a_irs = upa_response(
        arrays.n_irs_y,
        arrays.n_irs_z,
        az,
        el,
        arrays.element_spacing,
    );
    let a_ap = ula_response(
        arrays.n_ap,
        ula_angle(&d.ap_position, &d.irs_position)?,
        arrays.element_spacing,
    );
    Ok(CMatrix::from_fn(arrays.n_irs(), arrays.n_ap, |i, j| {
        a_irs[i] * a_ap[j].conj()
    }))
}

/// Samples one [`ChannelSet`]. Draw order is fixed (H_d row-major, then G
/// row-major, then H_I row-major) so equal streams give equal channels.
pub fn sample_channels<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: &Geometry,
    arrays: &ArraySpec,
    fading: &FadingSpec,
) -> Result<ChannelSet> {
    arrays.validate()?;
    let k = geometry.k();
    let (n_a, n_i) = (arrays.n_ap, arrays.n_irs());
    let (los_g, nlos_g) = rician_weights(fading.kappa_g)?;
    let (los_i, nlos_i) = rician_weights(fading.kappa_i)?;

    let direct_amp: Vec<f64> = (0..k)
        .map(|u| fading.pathloss_direct.amplitude(geometry.ap_lu_distance(u)))
        .collect::<Result<_>>()?;
    let mut h_direct = CMatrix::zeros(k, n_a);
    for u in 0..k {
        for a in 0..n_a {
            h_direct[(u, a)] = complex_normal(rng) * direct_amp[u];
        }
    }

    let g_amp = fading
        .pathloss_ap_irs
        .amplitude(geometry.ap_irs_distance())?;
    let g_los = ap_irs_los(geometry, arrays)?;
    let mut g_ap_irs = CMatrix::zeros(n_i, n_a);
    for i in 0..n_i {
        for a in 0..n_a {
            g_ap_irs[(i, a)] = (g_los[(i, a)] * los_g + complex_normal(rng) * nlos_g) * g_amp;
        }
    }

    let d = &geometry.deployment;
    let mut h_irs_lu = CMatrix::zeros(k, n_i);
    for u in 0..k {
        let amp = fading
            .pathloss_irs_lu
            .amplitude(geometry.irs_lu_distance(u))?;
        let (az, el) = upa_angles(&d.irs_position, &geometry.lu_positions[u])?;
        let los = upa_response(
            arrays.n_irs_y,
            arrays.n_irs_z,
            az,
            el,
            arrays.element_spacing,
        );
        for i in 0..n_i {
            // Row k holds h_{I,k}^H, so the LOS response enters conjugated.
            let h = los[i] * los_i + complex_normal(rng) * nlos_i;
            h_irs_lu[(u, i)] = h.conj() * amp;
        }
    }

    ChannelSet::new(h_direct, g_ap_irs, h_irs_lu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn path_loss_values() {
        let direct = PathLossModel::new(32.6, 22.0);
        assert_relative_eq!(direct.loss_db(1.0).unwrap(), 32.6, epsilon = 1e-12);
        assert_relative_eq!(
            direct.loss_db(200.0).unwrap(),
            32.6 + 22.0 * 200f64.log10(),
            epsilon = 1e-12
        );
        assert_relative_eq!(direct.loss_db(200.0).unwrap(), 83.2227, epsilon = 1e-4);
        assert_relative_eq!(
            PathLossModel::new(35.6, 20.0).loss_db(10.0).unwrap(),
            55.6,
            epsilon = 1e-12
        );
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let m = PathLossModel::new(32.6, 22.0);
        assert_eq!(m.loss_db(0.0), Err(Error::NonPositiveDistance(0.0)));
        assert!(m.loss_db(-3.0).is_err());
        assert!(m.loss_db(f64::NAN).is_err());
    }

    #[test]
    fn ula_simple_cases() {
        for z in ula_response(4, 0.0, 0.5) {
            assert_relative_eq!(z.re, 1.0);
            assert_relative_eq!(z.im, 0.0);
        }
        let v = ula_response(2, FRAC_PI_2, 0.5);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ula_matches_scalar_evaluation() {
        let v = ula_response(8, 0.3, 0.5);
        for (m, z) in v.iter().enumerate() {
            let phase = TAU * 0.5 * m as f64 * 0.3f64.sin();
            let expect = c(phase.cos(), phase.sin());
            assert!((z - expect).norm() < 1e-13);
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn upa_simple_cases() {
        for z in upa_response(2, 2, 0.0, FRAC_PI_2, 0.5) {
            assert!((z - c(1.0, 0.0)).norm() < 1e-15);
        }
        assert_eq!(upa_response(1, 1, 1.3, 0.2, 0.5), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn upa_matches_double_loop() {
        let (az, el) = (0.7f64, 1.1f64);
        let v = upa_response(4, 4, az, el, 0.5);
        for my in 0..4 {
            for mz in 0..4 {
                let phase = TAU * 0.5 * (my as f64 * el.sin() * az.sin() + mz as f64 * el.cos());
                let expect = c(phase.cos(), phase.sin());
                assert!((v[mz * 4 + my] - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn los_matrix_has_expected_energy() {
        let geo = Geometry::new(Deployment::default(), vec![Point3::new(200.0, 3.0, 0.0)]).unwrap();
        for arrays in [
            ArraySpec::default(),
            ArraySpec {
                n_ap: 5,
                n_irs_y: 3,
                n_irs_z: 7,
                element_spacing: 0.5,
            },
        ] {
            let los = ap_irs_los(&geo, &arrays).unwrap();
            let energy = los.norm_squared();
            let expect = (arrays.n_irs() * arrays.n_ap) as f64;
            assert!((energy - expect).abs() / expect < 1e-9);
        }
    }

    #[test]
    fn rician_weights_sum_to_one() {
        for kappa in [0.0, 0.5, 2.0, 1e6, MAX_RICIAN_FACTOR] {
            let (a, b) = rician_weights(kappa).unwrap();
            assert_relative_eq!(a * a + b * b, 1.0, epsilon = 1e-15);
        }
        assert!(rician_weights(-1.0).is_err());
        assert!(rician_weights(f64::INFINITY).is_err());
    }

    #[test]
    fn geometry_rejects_coincident_points() {
        let dep = Deployment::default();
        assert!(Geometry::new(dep, vec![dep.irs_position]).is_err());
        assert!(Geometry::new(dep, vec![]).is_err());
        let bad = Deployment {
            irs_position: dep.ap_position,
            ..dep
        };
        assert!(Geometry::new(bad, vec![Point3::new(1.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn users_land_inside_the_disk() {
        let dep = Deployment::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = dep.place_users(&mut rng, 4).unwrap();
            for p in &g.lu_positions {
                assert!((p - dep.lu_cluster_center).norm() <= dep.lu_cluster_radius + 1e-12);
                assert_eq!(p.z, 0.0);
            }
        }
    }

    fn small_geometry(k: usize, seed: u64) -> Geometry {
        Deployment::default()
            .place_users(&mut ChaCha8Rng::seed_from_u64(seed), k)
            .unwrap()
    }

    #[test]
    fn equal_seeds_give_equal_channels() {
        let geo = small_geometry(3, 1);
        let arrays = ArraySpec {
            n_ap: 4,
            n_irs_y: 2,
            n_irs_z: 3,
            element_spacing: 0.5,
        };
        let fading = FadingSpec::default();
        let a = sample_channels(&mut ChaCha8Rng::seed_from_u64(5), &geo, &arrays, &fading).unwrap();
        let b = sample_channels(&mut ChaCha8Rng::seed_from_u64(5), &geo, &arrays, &fading).unwrap();
        let d = sample_channels(&mut ChaCha8Rng::seed_from_u64(6), &geo, &arrays, &fading).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert!(a.is_finite());
        assert_eq!(a.h_direct.shape(), (3, 4));
        assert_eq!(a.g_ap_irs.shape(), (6, 4));
        assert_eq!(a.h_irs_lu.shape(), (3, 6));
    }

    #[test]
    fn rayleigh_limit_matches_path_loss_variance() {
        let geo = small_geometry(1, 2);
        let arrays = ArraySpec {
            n_ap: 2,
            n_irs_y: 2,
            n_irs_z: 1,
            element_spacing: 0.5,
        };
        let fading = FadingSpec {
            kappa_g: 0.0,
            kappa_i: 0.0,
            ..FadingSpec::default()
        };
        let gain = fading
            .pathloss_ap_irs
            .amplitude(geo.ap_irs_distance())
            .unwrap()
            .powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws = 10_000;
        let mut acc = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        for _ in 0..draws {
            let ch = sample_channels(&mut rng, &geo, &arrays, &fading).unwrap();
            acc += ch.g_ap_irs.norm_squared() / 4.0;
            mean += ch.g_ap_irs.sum() / 4.0;
        }
        let var = acc / draws as f64;
        assert!((var / gain - 1.0).abs() < 0.05, "ratio {}", var / gain);
        // No LOS part: the entry mean vanishes relative to the amplitude.
        assert!(mean.norm() / draws as f64 / gain.sqrt() < 0.05);
    }

    #[test]
    fn strong_los_makes_g_rank_one() {
        let geo = small_geometry(2, 4);
        let arrays = ArraySpec {
            n_ap: 6,
            n_irs_y: 4,
            n_irs_z: 4,
            element_spacing: 0.5,
        };
        let fading = FadingSpec {
            kappa_g: 1e6,
            ..FadingSpec::default()
        };
        let ch =
            sample_channels(&mut ChaCha8Rng::seed_from_u64(1), &geo, &arrays, &fading).unwrap();
        let sv = ch.g_ap_irs.clone().singular_values();
        let total: f64 = sv.iter().map(|s| s * s).sum();
        let residual = (total - sv.max().powi(2)).max(0.0).sqrt() / total.sqrt();
        assert!(residual < 1e-3, "residual {residual}");
    }

    #[test]
    fn assemble_without_irs_is_direct() {
        let geo = small_geometry(2, 5);
        let arrays = ArraySpec {
            n_ap: 3,
            n_irs_y: 2,
            n_irs_z: 2,
            element_spacing: 0.5,
        };
        let ch = sample_channels(
            &mut ChaCha8Rng::seed_from_u64(2),
            &geo,
            &arrays,
            &FadingSpec::default(),
        )
        .unwrap()
        .without_irs();
        let phi = vec![c(0.0, 1.0); 4];
        assert_eq!(ch.assemble_combined(&phi).unwrap(), ch.h_direct);
        assert!(ch.assemble_combined(&phi[..3]).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn assemble_matches_triple_loop() {
        let geo = small_geometry(2, 6);
        let arrays = ArraySpec {
            n_ap: 3,
            n_irs_y: 2,
            n_irs_z: 2,
            element_spacing: 0.5,
        };
        let ch = sample_channels(
            &mut ChaCha8Rng::seed_from_u64(8),
            &geo,
            &arrays,
            &FadingSpec::default(),
        )
        .unwrap();
        let phi: Vec<Complex64> = [0.3, 2.0, -1.1, 4.0]
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        let got = ch.assemble_combined(&phi).unwrap();
        for k in 0..2 {
            for a in 0..3 {
                let mut acc = ch.h_direct[(k, a)];
                for n in 0..4 {
                    acc += ch.h_irs_lu[(k, n)] * phi[n] * ch.g_ap_irs[(n, a)];
                }
                assert!((got[(k, a)] - acc).norm() <= 1e-12 * acc.norm());
            }
        }
    }

    #[test]
    fn zero_cascade_column_makes_element_irrelevant() {
        let geo = small_geometry(1, 7);
        let arrays = ArraySpec {
            n_ap: 3,
            n_irs_y: 3,
            n_irs_z: 1,
            element_spacing: 0.5,
        };
        let mut ch = sample_channels(
            &mut ChaCha8Rng::seed_from_u64(3),
            &geo,
            &arrays,
            &FadingSpec::default(),
        )
        .unwrap();
        ch.h_irs_lu[(0, 1)] = c(0.0, 0.0);
        let a = vec![c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        let b = vec![c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)];
        assert_eq!(
            ch.assemble_combined(&a).unwrap(),
            ch.assemble_combined(&b).unwrap()
        );
    }
}
