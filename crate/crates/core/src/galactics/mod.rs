//! Initial conditions: Plummer, Hernquist, NFW and exponential-disk
//! samplers, and an M31-like composite with equal particle masses.
//!
//! Code units throughout are kpc, 10^10 solar masses and G = 1.

mod jeans;
mod profiles;

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::system::ParticleSystem;
use crate::vec3::Vec3;

pub use jeans::{JeansTable, MassModel, RotationCurve};
pub use profiles::{
    invert_monotone, ComponentKind, ComponentSpec, DISK_CUT, DISK_Z_CUT, HERNQUIST_CUT, NFW_CUT,
    PLUMMER_CUT,
};

/// Toomre Q floor used when a disk is sampled without an explicit one.
pub const DEFAULT_Q_MIN: f64 = 1.8;

/// Independent random stream for component `stream` of a model seeded by `seed`.
pub fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn isotropic(rng: &mut ChaCha8Rng) -> Vec3 {
    let cos_t: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
}

fn gaussian3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

fn sample_radius(spec: &ComponentSpec, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    spec.radius_at_fraction(u)
}

/// Plummer speeds from the exact isotropic distribution function
/// (rejection sampling of `q^2 (1 - q^2)^{7/2}`).
fn plummer_velocity(spec: &ComponentSpec, model: &MassModel, r: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    let a = spec.scale_length;
    let m_untruncated = spec.mass / spec_shape_fraction(spec);
    let v_esc = (2.0 * model.g * m_untruncated / (r * r + a * a).sqrt()).sqrt();
    let q = loop {
        let q: f64 = rng.random();
        let y: f64 = rng.random_range(0.0..0.1);
        if y < q * q * (1.0 - q * q).powf(3.5) {
            break q;
        }
    };
    isotropic(rng) * (q * v_esc)
}

/// Fraction of the untruncated Plummer mass that lies inside the cut.
fn spec_shape_fraction(spec: &ComponentSpec) -> f64 {
    let x = spec.r_cut / spec.scale_length;
    x * x * x / (x * x + 1.0).powf(1.5)
}

fn jeans_velocity(table: &JeansTable, r: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    let sigma = table.sigma2(r).sqrt();
    let v_esc2 = table.escape_speed2(r);
    for _ in 0..1000 {
        let v = gaussian3(rng) * sigma;
        if v.norm2() < v_esc2 {
            return v;
        }
    }
    Vec3::ZERO
}

/// Samples `n` particles of a spherical component moving in `model`.
fn sample_spherical_into(
    spec: &ComponentSpec,
    n: usize,
    model: &MassModel,
    rng: &mut ChaCha8Rng,
    pos: &mut Vec<Vec3>,
    vel: &mut Vec<Vec3>,
) {
    let table = (spec.kind != ComponentKind::Plummer).then(|| JeansTable::new(spec, model));
    for _ in 0..n {
        let r = sample_radius(spec, rng);
        let x = isotropic(rng) * r;
        let v = match &table {
            Some(t) => jeans_velocity(t, r, rng),
            None => plummer_velocity(spec, model, r, rng),
        };
        pos.push(x);
        vel.push(v);
    }
}

/// Disk kinematics: mean rotation at the circular speed, radial dispersion
/// `sigma_0 exp(-R / 2R_d)` scaled so Toomre Q never drops below `q_min`,
/// epicyclic azimuthal dispersion and the isothermal-sheet vertical one.
struct DiskKinematics<'a> {
    spec: ComponentSpec,
    curve: &'a dyn RotationCurve,
    sigma0: f64,
    g: f64,
}

impl<'a> DiskKinematics<'a> {
    fn new(spec: ComponentSpec, curve: &'a dyn RotationCurve, g: f64) -> Self {
        let mut k = Self { spec, curve, sigma0: 0.0, g };
        let r_d = spec.scale_length;
        let steps = 2000;
        let (lo, hi) = ((0.05 * r_d).ln(), spec.r_cut.ln());
        let min_ratio = (0..=steps)
            .map(|i| {
                let r = (lo + (hi - lo) * i as f64 / steps as f64).exp();
                (-r / (2.0 * r_d)).exp() * k.kappa(r) / (3.36 * g * k.surface_density(r))
            })
            .fold(f64::INFINITY, f64::min);
        k.sigma0 = spec.q_min / min_ratio;
        k
    }

    fn surface_density(&self, r: f64) -> f64 {
        let r_d = self.spec.scale_length;
        let x_cut = self.spec.r_cut / r_d;
        let norm = 1.0 - (1.0 + x_cut) * (-x_cut).exp();
        self.spec.mass / (2.0 * PI * r_d * r_d * norm) * (-r / r_d).exp()
    }

    fn omega2(&self, r: f64) -> f64 {
        self.curve.vc2(r) / (r * r)
    }

    fn kappa(&self, r: f64) -> f64 {
        let h = 1e-4 * r;
        let d_omega2 = (self.omega2(r + h) - self.omega2(r - h)) / (2.0 * h);
        (r * d_omega2 + 4.0 * self.omega2(r)).max(0.0).sqrt()
    }

    fn sigma_r(&self, r: f64) -> f64 {
        self.sigma0 * (-r / (2.0 * self.spec.scale_length)).exp()
    }

    fn toomre_q(&self, r: f64) -> f64 {
        self.sigma_r(r) * self.kappa(r) / (3.36 * self.g * self.surface_density(r))
    }

    fn velocity(&self, r: f64, phi: f64, rng: &mut ChaCha8Rng) -> Vec3 {
        let vc = self.curve.vc2(r).max(0.0).sqrt();
        let omega = self.omega2(r).sqrt();
        let sr = self.sigma_r(r);
        let sphi = if omega > 0.0 { sr * self.kappa(r) / (2.0 * omega) } else { sr };
        let sz = (PI * self.g * self.surface_density(r) * self.spec.scale_height).sqrt();
        let n = gaussian3(rng);
        let v_r = sr * n.x;
        let v_phi = vc + sphi * n.y;
        let v_z = sz * n.z;
        let (s, c) = phi.sin_cos();
        Vec3::new(v_r * c - v_phi * s, v_r * s + v_phi * c, v_z)
    }
}

fn sample_disk_into(
    spec: &ComponentSpec,
    n: usize,
    curve: &dyn RotationCurve,
    g: f64,
    rng: &mut ChaCha8Rng,
    pos: &mut Vec<Vec3>,
    vel: &mut Vec<Vec3>,
) {
    let kin = DiskKinematics::new(*spec, curve, g);
    let zc = DISK_Z_CUT.tanh();
    for _ in 0..n {
        let r = sample_radius(spec, rng);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let u: f64 = rng.random();
        let z = spec.scale_height * ((2.0 * u - 1.0) * zc).atanh();
        pos.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
        vel.push(kin.velocity(r, phi, rng));
    }
}

fn finish(n: usize, total_mass: f64, pos: Vec<Vec3>, mut vel: Vec<Vec3>) -> Result<ParticleSystem> {
    // remove net momentum; positions stay centred on the analytic origin
    let mean_v = vel.iter().copied().sum::<Vec3>() / n as f64;
    for v in &mut vel {
        *v -= mean_v;
    }
    ParticleSystem::new(vec![total_mass / n as f64; n], pos, vel)
}

/// Samples a single component in its own gravitational field.
pub fn sample_component(spec: &ComponentSpec, n: usize, seed: u64) -> Result<ParticleSystem> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    let model = MassModel::new(vec![*spec]);
    let mut rng = component_rng(seed, 0);
    let (mut pos, mut vel) = (Vec::with_capacity(n), Vec::with_capacity(n));
    if spec.is_spherical() {
        sample_spherical_into(spec, n, &model, &mut rng, &mut pos, &mut vel);
    } else {
        sample_disk_into(spec, n, &model, model.g, &mut rng, &mut pos, &mut vel);
    }
    finish(n, spec.mass, pos, vel)
}

pub fn sample_plummer(n: usize, mass: f64, a: f64, seed: u64) -> Result<ParticleSystem> {
    sample_component(&ComponentSpec::plummer(mass, a), n, seed)
}

pub fn sample_hernquist(n: usize, mass: f64, a: f64, seed: u64) -> Result<ParticleSystem> {
    sample_component(&ComponentSpec::hernquist(mass, a), n, seed)
}

pub fn sample_nfw(n: usize, mass: f64, r_s: f64, r_cut: f64, seed: u64) -> Result<ParticleSystem> {
    sample_component(&ComponentSpec::nfw(mass, r_s).with_cut(r_cut), n, seed)
}

/// Exponential disk whose rotation comes from `curve` (e.g. a composite
/// [`MassModel`]); Q floor [`DEFAULT_Q_MIN`].
pub fn sample_exponential_disk(
    n: usize,
    mass: f64,
    r_d: f64,
    z_d: f64,
    seed: u64,
    curve: &dyn RotationCurve,
) -> Result<ParticleSystem> {
    let spec = ComponentSpec::exponential_disk(mass, r_d, z_d, DEFAULT_Q_MIN);
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    let mut rng = component_rng(seed, 0);
    let (mut pos, mut vel) = (Vec::with_capacity(n), Vec::with_capacity(n));
    sample_disk_into(&spec, n, curve, 1.0, &mut rng, &mut pos, &mut vel);
    finish(n, mass, pos, vel)
}

/// Minimum Toomre Q of a disk on a radial grid; exposed for checks.
pub fn disk_min_toomre_q(spec: &ComponentSpec, curve: &dyn RotationCurve) -> f64 {
    let kin = DiskKinematics::new(*spec, curve, 1.0);
    let r_d = spec.scale_length;
    (1..=400)
        .map(|i| kin.toomre_q(0.05 * r_d + (spec.r_cut - 0.05 * r_d) * i as f64 / 400.0))
        .fold(f64::INFINITY, f64::min)
}

/// The M31-like composite: NFW dark halo, stellar halo, Hernquist bulge and
/// exponential disk, in code units.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCatalog {
    pub dark_halo: ComponentSpec,
    pub stellar_halo: ComponentSpec,
    pub bulge: ComponentSpec,
    pub disk: ComponentSpec,
}

impl ModelCatalog {
    pub fn m31() -> Self {
        let dark_halo = ComponentSpec::nfw(81.1, 7.63);
        // Sersic n = 2.2 stellar halo represented by a Hernquist sphere of the
        // same scale, truncated with the dark halo
        let stellar_halo = ComponentSpec {
            sersic_index: Some(2.2),
            ..ComponentSpec::hernquist(0.8, 9.0).with_cut(dark_halo.r_cut)
        };
        let bulge = ComponentSpec::hernquist(3.24, 0.61);
        let disk = ComponentSpec::exponential_disk(3.66, 5.4, 0.6, 1.8);
        Self { dark_halo, stellar_halo, bulge, disk }
    }

    pub fn components(&self) -> [ComponentSpec; 4] {
        [self.dark_halo, self.stellar_halo, self.bulge, self.disk]
    }

    pub fn total_mass(&self) -> f64 {
        self.components().iter().map(|c| c.mass).sum()
    }
}

/// Splits `n` particles across `masses` by largest remainder, so every count
/// is within one particle of exact proportionality.
pub fn apportion(n: usize, masses: &[f64]) -> Vec<usize> {
    let total: f64 = masses.iter().sum();
    let exact: Vec<f64> = masses.iter().map(|m| n as f64 * m / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Generates the M31-like composite with `n_total` equal-mass particles.
pub fn build_m31(n_total: usize, seed: u64) -> Result<ParticleSystem> {
    let catalog = ModelCatalog::m31();
    let comps = catalog.components();
    let masses: Vec<f64> = comps.iter().map(|c| c.mass).collect();
    let counts = apportion(n_total, &masses);
    if n_total < 4 || counts.contains(&0) {
        return Err(Error::invalid(format!(
            "{n_total} particles cannot give every M31 component at least one particle"
        )));
    }
    let model = MassModel::new(comps.to_vec());
    let (mut pos, mut vel) = (Vec::with_capacity(n_total), Vec::with_capacity(n_total));
    for (stream, (spec, &count)) in comps.iter().zip(&counts).enumerate() {
        let mut rng = component_rng(seed, stream as u64);
        if spec.is_spherical() {
            sample_spherical_into(spec, count, &model, &mut rng, &mut pos, &mut vel);
        } else {
            sample_disk_into(spec, count, &model, model.g, &mut rng, &mut pos, &mut vel);
        }
    }
    finish(n_total, catalog.total_mass(), pos, vel)
}

/// Per-component particle counts of [`build_m31`].
pub fn m31_counts(n_total: usize) -> Vec<usize> {
    let masses: Vec<f64> = ModelCatalog::m31().components().iter().map(|c| c.mass).collect();
    apportion(n_total, &masses)
}

/// Largest gap between the empirical radial CDF of `radii` and `cdf`.
pub fn cdf_sup_distance(radii: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut r = radii.to_vec();
    r.sort_by(f64::total_cmp);
    let n = r.len() as f64;
    r.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m31_catalog_values() {
        let c = ModelCatalog::m31();
        assert_eq!((c.dark_halo.mass, c.dark_halo.scale_length), (81.1, 7.63));
        assert_eq!((c.stellar_halo.mass, c.stellar_halo.scale_length), (0.8, 9.0));
        assert_eq!(c.stellar_halo.sersic_index, Some(2.2));
        assert_eq!((c.bulge.mass, c.bulge.scale_length), (3.24, 0.61));
        assert_eq!(
            (c.disk.mass, c.disk.scale_length, c.disk.scale_height, c.disk.q_min),
            (3.66, 5.4, 0.6, 1.8)
        );
        for s in c.components() {
            s.validate().unwrap();
        }
    }

    #[test]
    fn apportion_within_one() {
        let masses = [81.1, 0.8, 3.24, 3.66];
        for n in [4usize, 111, 1000, 12345, 1 << 20] {
            let c = apportion(n, &masses);
            assert_eq!(c.iter().sum::<usize>(), n);
            let tot: f64 = masses.iter().sum();
            for (ci, m) in c.iter().zip(masses) {
                assert!((*ci as f64 - n as f64 * m / tot).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn m31_rejects_tiny_n() {
        assert!(build_m31(4, 1).is_err());
        assert!(build_m31(3, 1).is_err());
    }

    #[test]
    fn determinism() {
        let a = sample_plummer(500, 1.0, 1.0, 42).unwrap();
        let b = sample_plummer(500, 1.0, 1.0, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_plummer(500, 1.0, 1.0, 43).unwrap();
        assert_ne!(a.pos, c.pos);
        let m1 = build_m31(2000, 5).unwrap();
        let m2 = build_m31(2000, 5).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn truncation_respected() {
        let s = sample_nfw(4000, 1.0, 1.0, 20.0, 3).unwrap();
        assert!(s.pos.iter().all(|p| p.norm() <= 20.0));
        let h = sample_hernquist(4000, 1.0, 1.0, 3).unwrap();
        assert!(h.pos.iter().all(|p| p.norm() <= HERNQUIST_CUT));
    }

    #[test]
    fn disk_rotates_about_plus_z() {
        let model = MassModel::new(vec![ComponentSpec::exponential_disk(1.0, 1.0, 0.1, 1.8)]);
        let d = sample_exponential_disk(4000, 1.0, 1.0, 0.1, 9, &model).unwrap();
        let lz: f64 = d.pos.iter().zip(&d.vel).map(|(p, v)| p.cross(*v).z).sum();
        assert!(lz > 0.0);
        assert!(d.pos.iter().all(|p| p.x.hypot(p.y) <= 10.0 && p.z.abs() <= 1.0));
    }

    #[test]
    fn disk_q_floor_holds() {
        let c = ModelCatalog::m31();
        let model = MassModel::new(c.components().to_vec());
        let q = disk_min_toomre_q(&c.disk, &model);
        assert!(q >= 1.8 * (1.0 - 1e-3), "{q}");
    }

    #[test]
    fn equal_masses() {
        let m = build_m31(5000, 2).unwrap();
        let m0 = m.mass[0];
        assert!(m.mass.iter().all(|&x| ((x - m0) / m0).abs() <= 1e-15));
        assert!(m.pos.iter().chain(&m.vel).all(|v| v.is_finite()));
    }
}
