//! Particle state and gravity parameters.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Gravity parameters shared by the force engines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GravParams {
    /// Gravitational constant in code units.
    pub g: f64,
    /// Plummer softening length.
    pub eps: f64,
    /// Accuracy parameter of the acceleration MAC.
    pub dacc: f64,
}

impl Default for GravParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            eps: 1.0 / 64.0,
            dacc: 1.0 / 512.0,
        }
    }
}

impl GravParams {
    pub fn new(g: f64, eps: f64, dacc: f64) -> Result<Self> {
        let p = Self { g, eps, dacc };
        p.validate()?;
        Ok(p)
    }

    pub fn with_dacc(mut self, dacc: f64) -> Self {
        self.dacc = dacc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::invalid(format!("G must be positive, got {}", self.g)));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::invalid(format!("softening must be >= 0, got {}", self.eps)));
        }
        if !(self.dacc.is_finite() && self.dacc > 0.0) {
            return Err(Error::invalid(format!("dacc must be > 0, got {}", self.dacc)));
        }
        Ok(())
    }
}

/// Structure-of-arrays particle state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleSystem {
    pub mass: Vec<f64>,
    pub pos: Vec<Vec3>,
    pub vel: Vec<Vec3>,
    pub acc: Vec<Vec3>,
    /// |a| from the previous accepted force evaluation; feeds the MAC.
    pub acc_old_mag: Vec<f64>,
    /// Block time-step level; dt = dt_max * 2^-level.
    pub level: Vec<u8>,
    pub time: f64,
}

impl ParticleSystem {
    /// Builds a system at rest in the force sense: zero accelerations, level 0.
    pub fn new(mass: Vec<f64>, pos: Vec<Vec3>, vel: Vec<Vec3>) -> Result<Self> {
        let n = mass.len();
        if pos.len() != n || vel.len() != n {
            return Err(Error::invalid(format!(
                "array length mismatch: mass {}, pos {}, vel {}",
                n,
                pos.len(),
                vel.len()
            )));
        }
        let sys = Self {
            mass,
            pos,
            vel,
            acc: vec![Vec3::ZERO; n],
            acc_old_mag: vec![0.0; n],
            level: vec![0; n],
            time: 0.0,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if [self.pos.len(), self.vel.len(), self.acc.len(), self.acc_old_mag.len(), self.level.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::invalid("particle arrays have inconsistent lengths"));
        }
        for i in 0..n {
            let m = self.mass[i];
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid(format!("particle {i}: mass {m} is not positive")));
            }
            if !self.pos[i].is_finite() || !self.vel[i].is_finite() {
                return Err(Error::invalid(format!("particle {i}: non-finite phase-space coordinate")));
            }
            if !(self.acc_old_mag[i] >= 0.0) {
                return Err(Error::invalid(format!("particle {i}: negative |a_old|")));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn center_of_mass(&self) -> Vec3 {
        let m = self.total_mass();
        self.mass
            .iter()
            .zip(&self.pos)
            .map(|(&mi, &p)| p * mi)
            .sum::<Vec3>()
            / m
    }

    pub fn momentum(&self) -> Vec3 {
        self.mass.iter().zip(&self.vel).map(|(&m, &v)| v * m).sum()
    }

    /// Shifts positions and velocities into the centre-of-mass frame.
    pub fn to_com_frame(&mut self) {
        let m = self.total_mass();
        let com = self.center_of_mass();
        let vcom = self.momentum() / m;
        for p in &mut self.pos {
            *p -= com;
        }
        for v in &mut self.vel {
            *v -= vcom;
        }
    }

    /// Stores accelerations and records their magnitudes as the next MAC reference.
    pub fn set_accelerations(&mut self, acc: Vec<Vec3>) {
        debug_assert_eq!(acc.len(), self.len());
        self.acc_old_mag = acc.iter().map(|a| a.norm()).collect();
        self.acc = acc;
    }

    /// Concatenates several systems; time is taken from `self`.
    pub fn append(&mut self, other: ParticleSystem) {
        self.mass.extend(other.mass);
        self.pos.extend(other.pos);
        self.vel.extend(other.vel);
        self.acc.extend(other.acc);
        self.acc_old_mag.extend(other.acc_old_mag);
        self.level.extend(other.level);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_mass() {
        let err = ParticleSystem::new(vec![0.0], vec![Vec3::ZERO], vec![Vec3::ZERO]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_nan_position() {
        let err = ParticleSystem::new(vec![1.0], vec![Vec3::splat(f64::NAN)], vec![Vec3::ZERO]);
        assert!(err.is_err());
    }

    #[test]
    fn params_validation() {
        assert!(GravParams::new(1.0, -1.0, 0.1).is_err());
        assert!(GravParams::new(1.0, 0.0, 0.0).is_err());
        assert!(GravParams::new(1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn com_frame_zeroes_momentum() {
        let mut s = ParticleSystem::new(
            vec![1.0, 3.0],
            vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 0.0)],
            vec![Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)],
        )
        .unwrap();
        s.to_com_frame();
        assert!(s.momentum().norm() < 1e-15);
        assert!(s.center_of_mass().norm() < 1e-15);
    }
}
