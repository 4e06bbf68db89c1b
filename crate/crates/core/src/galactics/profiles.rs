//! Analytic spherical profiles, truncated at `r_cut` and normalized so that
//! the quoted mass is the mass inside the cut.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Plummer,
    Hernquist,
    Nfw,
    ExponentialDisk,
}

impl ComponentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ComponentKind::Plummer => "plummer",
            ComponentKind::Hernquist => "hernquist",
            ComponentKind::Nfw => "nfw",
            ComponentKind::ExponentialDisk => "exponential_disk",
        }
    }
}

/// One mass component of a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentSpec {
    pub kind: ComponentKind,
    pub mass: f64,
    pub scale_length: f64,
    /// Recorded for provenance only; the profile used is `kind`.
    pub sersic_index: Option<f64>,
    /// Disk only.
    pub scale_height: f64,
    /// Spherical truncation radius, or cylindrical for the disk.
    pub r_cut: f64,
    /// Disk only: Toomre Q floor.
    pub q_min: f64,
}

pub const PLUMMER_CUT: f64 = 100.0;
pub const HERNQUIST_CUT: f64 = 100.0;
pub const NFW_CUT: f64 = 20.0;
pub const DISK_CUT: f64 = 10.0;
/// Vertical truncation of the disk, in scale heights.
pub const DISK_Z_CUT: f64 = 10.0;

impl ComponentSpec {
    pub fn plummer(mass: f64, a: f64) -> Self {
        Self::spherical(ComponentKind::Plummer, mass, a, PLUMMER_CUT * a)
    }

    pub fn hernquist(mass: f64, a: f64) -> Self {
        Self::spherical(ComponentKind::Hernquist, mass, a, HERNQUIST_CUT * a)
    }

    pub fn nfw(mass: f64, r_s: f64) -> Self {
        Self::spherical(ComponentKind::Nfw, mass, r_s, NFW_CUT * r_s)
    }

    pub fn exponential_disk(mass: f64, r_d: f64, z_d: f64, q_min: f64) -> Self {
        Self {
            kind: ComponentKind::ExponentialDisk,
            mass,
            scale_length: r_d,
            sersic_index: None,
            scale_height: z_d,
            r_cut: DISK_CUT * r_d,
            q_min,
        }
    }

    fn spherical(kind: ComponentKind, mass: f64, scale: f64, r_cut: f64) -> Self {
        Self {
            kind,
            mass,
            scale_length: scale,
            sersic_index: None,
            scale_height: 0.0,
            r_cut,
            q_min: 0.0,
        }
    }

    pub fn with_cut(mut self, r_cut: f64) -> Self {
        self.r_cut = r_cut;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!("{}: mass must be > 0", self.kind.name())));
        }
        if !(self.scale_length > 0.0 && self.scale_length.is_finite()) {
            return Err(Error::invalid(format!("{}: scale length must be > 0", self.kind.name())));
        }
        if !(self.r_cut >= 5.0 * self.scale_length) {
            return Err(Error::invalid(format!(
                "{}: truncation radius {} is below 5 scale lengths",
                self.kind.name(),
                self.r_cut
            )));
        }
        if self.kind == ComponentKind::ExponentialDisk && !(self.scale_height > 0.0) {
            return Err(Error::invalid("exponential disk: scale height must be > 0"));
        }
        Ok(())
    }

    pub fn is_spherical(&self) -> bool {
        self.kind != ComponentKind::ExponentialDisk
    }

    /// Untruncated cumulative mass shape `F(x)` in units of the scale length,
    /// where `F` tends to the total for the finite profiles.
    fn shape(&self, x: f64) -> f64 {
        match self.kind {
            ComponentKind::Plummer => x * x * x / (x * x + 1.0).powf(1.5),
            ComponentKind::Hernquist => (x / (1.0 + x)).powi(2),
            ComponentKind::Nfw => (1.0 + x).ln() - x / (1.0 + x),
            ComponentKind::ExponentialDisk => 1.0 - (1.0 + x) * (-x).exp(),
        }
    }

    fn x_cut(&self) -> f64 {
        self.r_cut / self.scale_length
    }

    /// Fraction of the component's mass inside radius `r` (cylindrical for
    /// the disk); 1 beyond the cut.
    pub fn mass_fraction_within(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.r_cut {
            return 1.0;
        }
        self.shape(r / self.scale_length) / self.shape(self.x_cut())
    }

    pub fn enclosed_mass(&self, r: f64) -> f64 {
        self.mass * self.mass_fraction_within(r)
    }

    /// Spherical density inside the cut (0 outside). Not defined for the disk.
    pub fn density(&self, r: f64) -> f64 {
        if r > self.r_cut {
            return 0.0;
        }
        let a = self.scale_length;
        let x = r / a;
        let norm = self.mass / self.shape(self.x_cut());
        match self.kind {
            ComponentKind::Plummer => 3.0 * norm / (4.0 * PI * a.powi(3)) * (1.0 + x * x).powf(-2.5),
            ComponentKind::Hernquist => norm / (2.0 * PI * a.powi(3)) / (x * (1.0 + x).powi(3)),
            ComponentKind::Nfw => norm / (4.0 * PI * a.powi(3)) / (x * (1.0 + x).powi(2)),
            ComponentKind::ExponentialDisk => f64::NAN,
        }
    }

    /// Radius enclosing the mass fraction `u` of the truncated profile.
    pub fn radius_at_fraction(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.shape(self.x_cut());
        let x = match self.kind {
            ComponentKind::Plummer => {
                // x^3 / (x^2+1)^{3/2} = t  <=>  x = 1 / sqrt(t^{-2/3} - 1)
                if target <= 0.0 {
                    0.0
                } else {
                    1.0 / (target.powf(-2.0 / 3.0) - 1.0).sqrt()
                }
            }
            ComponentKind::Hernquist => {
                let s = target.sqrt();
                s / (1.0 - s)
            }
            ComponentKind::Nfw | ComponentKind::ExponentialDisk => {
                invert_monotone(|x| self.shape(x), target, 0.0, self.x_cut())
            }
        };
        (x * self.scale_length).min(self.r_cut)
    }
}

/// Bisection for a monotone increasing `f` on `[lo, hi]`.
pub fn invert_monotone(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plummer_fraction_at_scale_radius() {
        let s = ComponentSpec::plummer(1.0, 1.0).with_cut(1e9);
        assert!((s.mass_fraction_within(1.0) - 2f64.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn hernquist_closed_forms() {
        let s = ComponentSpec::hernquist(1.0, 2.0).with_cut(1e12);
        assert!((s.mass_fraction_within(2.0) - 0.25).abs() < 1e-10);
        let rh = s.radius_at_fraction(0.5);
        assert!((rh / 2.0 - 1.0 / (2f64.sqrt() - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn nfw_mass_ratio() {
        let s = ComponentSpec::nfw(1.0, 1.0);
        let expect = (2f64.ln() - 0.5) / (21f64.ln() - 20.0 / 21.0);
        assert!((s.mass_fraction_within(1.0) - expect).abs() < 1e-14);
        assert!((expect - 0.092_320_324).abs() < 1e-9);
    }

    #[test]
    fn inverse_round_trips() {
        for s in [
            ComponentSpec::plummer(2.0, 0.7),
            ComponentSpec::hernquist(1.0, 1.3),
            ComponentSpec::nfw(5.0, 3.0),
            ComponentSpec::exponential_disk(1.0, 2.0, 0.2, 1.5),
        ] {
            for u in [0.01, 0.2, 0.5, 0.9, 0.999] {
                let r = s.radius_at_fraction(u);
                assert!((s.mass_fraction_within(r) - u).abs() < 1e-9, "{:?} {u}", s.kind);
            }
        }
    }

    #[test]
    fn density_integrates_to_enclosed_mass() {
        // midpoint rule in ln r as an independent check of the density normalization
        for s in [
            ComponentSpec::plummer(2.0, 0.7),
            ComponentSpec::hernquist(1.0, 1.3),
            ComponentSpec::nfw(5.0, 3.0),
        ] {
            let r_max = 2.0 * s.scale_length;
            let (lo, hi) = ((1e-6 * s.scale_length).ln(), r_max.ln());
            let steps = 20000;
            let h = (hi - lo) / steps as f64;
            let m: f64 = (0..steps)
                .map(|k| {
                    let r = (lo + (k as f64 + 0.5) * h).exp();
                    4.0 * PI * r.powi(3) * s.density(r) * h
                })
                .sum();
            let expect = s.enclosed_mass(r_max) - s.enclosed_mass(1e-6 * s.scale_length);
            assert!((m - expect).abs() < 1e-6 * expect, "{:?}: {m} vs {expect}", s.kind);
        }
    }

    #[test]
    fn validation() {
        assert!(ComponentSpec::plummer(1.0, 1.0).with_cut(4.0).validate().is_err());
        assert!(ComponentSpec::plummer(-1.0, 1.0).validate().is_err());
        assert!(ComponentSpec::nfw(1.0, 1.0).validate().is_ok());
    }
}
