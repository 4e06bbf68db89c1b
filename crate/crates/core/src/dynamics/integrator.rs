//! Second-order predict/correct pair: a kick-free drift with the old
//! acceleration, then a trapezoidal velocity update once the new force is known.

use crate::system::ParticleSystem;
use crate::vec3::Vec3;

/// Drifted phase-space state used for the force evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Predicted {
    pub pos: Vec<Vec3>,
    pub vel: Vec<Vec3>,
}

/// `pos + vel dt + a dt^2 / 2` and `vel + a dt`, with a per-particle `dt`.
pub fn predict(sys: &ParticleSystem, dt: &[f64]) -> Predicted {
    let mut out = Predicted::default();
    predict_into(sys, dt, &mut out);
    out
}

pub fn predict_into(sys: &ParticleSystem, dt: &[f64], out: &mut Predicted) {
    out.pos.clear();
    out.vel.clear();
    for i in 0..sys.len() {
        let h = dt[i];
        let a = sys.acc[i];
        out.pos.push(sys.pos[i] + sys.vel[i] * h + a * (0.5 * h * h));
        out.vel.push(sys.vel[i] + a * h);
    }
}

/// Completes the step of every `active` particle (all when `None`):
/// `vel += (a_old + a_new) dt / 2`, position taken from the prediction, and
/// `|a_new|` stored as the next MAC reference.
pub fn correct(
    sys: &mut ParticleSystem,
    predicted_pos: &[Vec3],
    new_acc: &[Vec3],
    dt: &[f64],
    active: Option<&[bool]>,
) {
    for i in 0..sys.len() {
        if active.is_some_and(|m| !m[i]) {
            continue;
        }
        sys.vel[i] += (sys.acc[i] + new_acc[i]) * (0.5 * dt[i]);
        sys.pos[i] = predicted_pos[i];
        sys.acc[i] = new_acc[i];
        sys.acc_old_mag[i] = new_acc[i].norm();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: Vec3, a: Vec3) -> ParticleSystem {
        let mut s = ParticleSystem::new(vec![1.0], vec![Vec3::new(1.0, 2.0, 3.0)], vec![v]).unwrap();
        s.acc[0] = a;
        s
    }

    #[test]
    fn free_drift_is_linear() {
        let s = single(Vec3::new(0.5, -1.0, 2.0), Vec3::ZERO);
        let p = predict(&s, &[0.25]);
        assert_eq!(p.pos[0], s.pos[0] + s.vel[0] * 0.25);
        assert_eq!(p.vel[0], s.vel[0]);
    }

    #[test]
    fn constant_field_closed_form() {
        let a = Vec3::new(0.0, 0.0, -2.0);
        let v = Vec3::new(1.0, 0.0, 1.0);
        let mut s = single(v, a);
        let dt = 0.5;
        let p = predict(&s, &[dt]);
        assert_eq!(p.pos[0], Vec3::new(1.0, 2.0, 3.0) + v * dt + a * (0.5 * dt * dt));
        correct(&mut s, &p.pos, &[a], &[dt], None);
        assert_eq!(s.vel[0], v + a * dt);
        assert_eq!(s.acc_old_mag[0], 2.0);
    }

    #[test]
    fn zero_forces_leave_velocity() {
        let mut s = single(Vec3::new(0.1, 0.2, 0.3), Vec3::ZERO);
        let p = predict(&s, &[1.0]);
        correct(&mut s, &p.pos, &[Vec3::ZERO], &[1.0], None);
        assert_eq!(s.vel[0], Vec3::new(0.1, 0.2, 0.3));
    }

    #[test]
    fn inactive_particles_untouched() {
        let mut s = single(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let before = s.clone();
        let p = predict(&s, &[1.0]);
        correct(&mut s, &p.pos, &[Vec3::new(5.0, 0.0, 0.0)], &[1.0], Some(&[false]));
        assert_eq!(s, before);
    }
}
