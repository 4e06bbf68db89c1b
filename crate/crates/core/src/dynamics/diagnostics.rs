use crate::error::Result;
use crate::system::{GravParams, ParticleSystem};
use crate::tree::{direct_potential, Opening, TreeConfig, TreeGravity};
use crate::vec3::Vec3;

/// Largest system whose potential energy is summed directly.
pub const DIRECT_POTENTIAL_MAX: usize = 1 << 17;
/// MAC tolerance used for the potential of larger systems.
pub const DIAGNOSTIC_DACC: f64 = 1.0 / (1u64 << 20) as f64;

/// Conserved quantities of a synchronized snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub momentum: Vec3,
    /// `-2K / W`; NaN when `W = 0`.
    pub virial_ratio: f64,
}

pub fn kinetic_energy(sys: &ParticleSystem) -> f64 {
    sys.mass.iter().zip(&sys.vel).map(|(&m, v)| 0.5 * m * v.norm2()).sum()
}

/// `W = sum_i m_i phi_i / 2`, directly for small systems and through a
/// tight-tolerance tree walk otherwise.
pub fn potential_energy(sys: &ParticleSystem, params: &GravParams) -> Result<f64> {
    let phi = if sys.len() <= DIRECT_POTENTIAL_MAX {
        direct_potential(sys, params)?
    } else {
        let tight = params.with_dacc(DIAGNOSTIC_DACC);
        let mut engine = TreeGravity::new(TreeConfig::default())?;
        let a_old: Vec<f64> = if sys.acc_old_mag.iter().all(|&a| a > 0.0) {
            sys.acc_old_mag.clone()
        } else {
            engine.rebuild(&sys.mass, &sys.pos)?;
            let geo = engine.evaluate(None, &sys.acc_old_mag, &tight, Opening::Geometric { theta: 0.5 })?;
            geo.acc.iter().map(|a| a.norm()).collect()
        };
        engine.rebuild(&sys.mass, &sys.pos)?;
        engine.evaluate(None, &a_old, &tight, Opening::Acceleration)?.pot
    };
    Ok(0.5 * sys.mass.iter().zip(&phi).map(|(&m, &p)| m * p).sum::<f64>())
}

pub fn diagnostics(sys: &ParticleSystem, params: &GravParams) -> Result<Diagnostics> {
    let kinetic = kinetic_energy(sys);
    let potential = potential_energy(sys, params)?;
    let virial_ratio = if potential == 0.0 { f64::NAN } else { -2.0 * kinetic / potential };
    Ok(Diagnostics {
        kinetic,
        potential,
        total: kinetic + potential,
        momentum: sys.momentum(),
        virial_ratio,
    })
}
