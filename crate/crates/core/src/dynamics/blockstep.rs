use crate::error::{Error, Result};

/// Deepest block level; dt_max / 2^24 is the finest step.
pub const MAX_LEVEL: u8 = 24;
/// Integer time ticks per `dt_max`.
pub const TICKS_PER_DT_MAX: u64 = 1 << MAX_LEVEL;

/// Block time-step configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepScheme {
    /// Accuracy coefficient in `dt = eta sqrt(eps / |a|)`; infinite pins every
    /// particle to `dt_max`.
    pub eta: f64,
    pub dt_max: f64,
    /// Force all particles onto the finest level currently requested.
    pub shared: bool,
}

impl Default for StepScheme {
    fn default() -> Self {
        Self { eta: 0.5, dt_max: 1.0 / 64.0, shared: false }
    }
}

impl StepScheme {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::invalid(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        Ok(())
    }

    pub fn dt(&self, level: u8) -> f64 {
        self.dt_max * 0.5f64.powi(level as i32)
    }

    pub fn tick_seconds(&self) -> f64 {
        self.dt_max / TICKS_PER_DT_MAX as f64
    }
}

pub fn level_ticks(level: u8) -> u64 {
    TICKS_PER_DT_MAX >> level
}

/// Level whose step is the largest power-of-two fraction of `dt_max` not
/// exceeding `eta sqrt(eps / |a|)`. Zero acceleration gets `dt_max`.
pub fn desired_level(acc_mag: f64, eps: f64, scheme: &StepScheme) -> u8 {
    if acc_mag <= 0.0 || scheme.eta.is_infinite() {
        return 0;
    }
    let dt = scheme.eta * (eps / acc_mag).sqrt();
    if !(dt > 0.0) {
        return MAX_LEVEL;
    }
    if dt >= scheme.dt_max {
        return 0;
    }
    let mut level = (scheme.dt_max / dt).log2().ceil().max(0.0) as u32;
    // guard the rounding of log2 at exact powers of two
    while level > 0 && scheme.dt(level as u8 - 1) <= dt {
        level -= 1;
    }
    while (level as u8) < MAX_LEVEL && scheme.dt(level as u8) > dt {
        level += 1;
    }
    level.min(MAX_LEVEL as u32) as u8
}

/// Initial levels: the desired level for every particle, no rate limit.
pub fn initial_levels(acc_mag: &[f64], eps: f64, scheme: &StepScheme) -> Vec<u8> {
    let mut levels: Vec<u8> = acc_mag.iter().map(|&a| desired_level(a, eps, scheme)).collect();
    if scheme.shared {
        let deepest = levels.iter().copied().max().unwrap_or(0);
        levels.iter_mut().for_each(|l| *l = deepest);
    }
    levels
}

/// Updates levels of the particles that just completed a step.
///
/// A level moves at most one step per update. Refining is always allowed;
/// coarsening only when the particle's time `ticks[i]` sits on a boundary of
/// the coarser block.
pub fn assign_block_steps(
    levels: &mut [u8],
    acc_mag: &[f64],
    ticks: &[u64],
    active: &[bool],
    eps: f64,
    scheme: &StepScheme,
) {
    if scheme.shared {
        // everyone is active together; move the common level by the deepest request
        let cur = levels.iter().copied().max().unwrap_or(0);
        let want = acc_mag
            .iter()
            .map(|&a| desired_level(a, eps, scheme))
            .max()
            .unwrap_or(0);
        let t = ticks.first().copied().unwrap_or(0);
        let new = if want > cur {
            cur + 1
        } else if want < cur && t % level_ticks(cur - 1) == 0 {
            cur - 1
        } else {
            cur
        };
        levels.iter_mut().for_each(|l| *l = new);
        return;
    }
    for i in 0..levels.len() {
        if !active[i] {
            continue;
        }
        let cur = levels[i];
        let want = desired_level(acc_mag[i], eps, scheme);
        if want > cur {
            levels[i] = cur + 1;
        } else if want < cur && ticks[i] % level_ticks(cur - 1) == 0 {
            levels[i] = cur - 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme() -> StepScheme {
        StepScheme { eta: 0.5, dt_max: 1.0, shared: false }
    }

    #[test]
    fn equal_accelerations_share_a_level() {
        let l = initial_levels(&[3.0; 10], 0.01, &scheme());
        assert!(l.iter().all(|&x| x == l[0]));
    }

    #[test]
    fn four_times_acceleration_halves_dt() {
        let s = scheme();
        // choose |a| so that dt sits strictly between block sizes
        let a = 0.01 * (0.5f64 / 0.3).powi(2);
        let base = desired_level(a, 0.01, &s);
        let deep = desired_level(4.0 * a, 0.01, &s);
        assert_eq!(deep, base + 1);
    }

    #[test]
    fn quantization_rounds_down() {
        let s = scheme();
        for a in [0.013, 0.2, 1.0, 7.5, 1e3] {
            let l = desired_level(a, 0.01, &s);
            let dt = 0.5 * (0.01f64 / a).sqrt();
            assert!(s.dt(l) <= dt);
            if l > 0 {
                assert!(s.dt(l - 1) > dt);
            }
        }
    }

    #[test]
    fn zero_acceleration_gets_dt_max() {
        assert_eq!(desired_level(0.0, 0.01, &scheme()), 0);
    }

    #[test]
    fn rate_limited_and_aligned() {
        let s = scheme();
        let mut levels = vec![3u8, 3u8];
        // first wants level 0, second wants a deep level
        let acc = [1e-8, 1e6];
        // tick of a level-3 boundary that is not a level-2 boundary
        let t_odd = level_ticks(3);
        assign_block_steps(&mut levels, &acc, &[t_odd, t_odd], &[true, true], 0.01, &s);
        assert_eq!(levels, vec![3, 4]);
        let t_even = 2 * level_ticks(3);
        assign_block_steps(&mut levels, &acc, &[t_even, t_even], &[true, false], 0.01, &s);
        assert_eq!(levels, vec![2, 4]);
    }
}
