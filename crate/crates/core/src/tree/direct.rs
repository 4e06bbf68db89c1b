use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perflab::{count_walk_ops, OpCounters, TraversalTrace};
use crate::system::{GravParams, ParticleSystem};
use crate::vec3::Vec3;

/// Softened acceleration exerted on a particle at `ri` by mass `mj` at `rj`:
/// `G mj (rj - ri) / (|rj - ri|^2 + eps^2)^(3/2)`.
pub fn pairwise_accel(ri: Vec3, rj: Vec3, mj: f64, params: &GravParams) -> Result<Vec3> {
    let d = rj - ri;
    let r2 = d.norm2() + params.eps * params.eps;
    if r2 == 0.0 {
        return Err(Error::Singularity { i: 0, j: 0 });
    }
    let inv = 1.0 / r2.sqrt();
    Ok(d * (params.g * mj * inv * inv * inv))
}

fn check_coincident(sys: &ParticleSystem, params: &GravParams, i: usize, j: usize) -> Result<()> {
    if params.eps == 0.0 && sys.pos[i] == sys.pos[j] {
        Err(Error::Singularity { i, j })
    } else {
        Ok(())
    }
}

/// O(N^2) accelerations; the reference every tree result is checked against.
pub fn direct_sum(sys: &ParticleSystem, params: &GravParams) -> Result<(Vec<Vec3>, OpCounters)> {
    let n = sys.len();
    if n == 0 {
        return Err(Error::invalid("direct sum over zero particles"));
    }
    let eps2 = params.eps * params.eps;
    let acc = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = sys.pos[i];
            let mut a = Vec3::ZERO;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = sys.pos[j] - ri;
                let r2 = d.norm2() + eps2;
                if r2 == 0.0 {
                    check_coincident(sys, params, i, j)?;
                }
                let inv = 1.0 / r2.sqrt();
                a += d * (sys.mass[j] * inv * inv * inv);
            }
            Ok(a * params.g)
        })
        .collect::<Result<Vec<_>>>()?;
    let trace = TraversalTrace {
        interactions: (n * (n - 1)) as u64,
        ..Default::default()
    };
    Ok((acc, count_walk_ops(&trace)))
}

/// Softened potential per particle, self term excluded.
pub fn direct_potential(sys: &ParticleSystem, params: &GravParams) -> Result<Vec<f64>> {
    let n = sys.len();
    let eps2 = params.eps * params.eps;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = sys.pos[i];
            let mut phi = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let r2 = (sys.pos[j] - ri).norm2() + eps2;
                if r2 == 0.0 {
                    check_coincident(sys, params, i, j)?;
                }
                phi -= sys.mass[j] / r2.sqrt();
            }
            Ok(phi * params.g)
        })
        .collect()
}
