//! Plain-text `key = value` run configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::dynamics::{StepScheme, MAX_INTERVAL};
use crate::error::{Error, Result};
use crate::tree::{TreeConfig, DEFAULT_GROUP_SIZE, DEFAULT_LIST_CAPACITY};

/// Fiducial MAC tolerance, 2^-9.
pub const FIDUCIAL_DACC: f64 = 1.0 / 512.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClockKind {
    Modeled,
    Wall,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dacc: f64,
    /// Softening; `None` keeps the value stored in the input snapshot.
    pub eps: Option<f64>,
    pub eta: f64,
    pub dt_max: f64,
    pub steps: u64,
    pub group_size: usize,
    pub list_capacity: usize,
    pub leaf_cap: usize,
    pub rebuild_min: usize,
    pub rebuild_max: usize,
    pub seed: u64,
    pub counters: bool,
    pub diag_interval: u64,
    pub tuner_clock: ClockKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scheme = StepScheme::default();
        let tree = TreeConfig::default();
        Self {
            dacc: FIDUCIAL_DACC,
            eps: None,
            eta: scheme.eta,
            dt_max: scheme.dt_max,
            steps: 100,
            group_size: DEFAULT_GROUP_SIZE,
            list_capacity: DEFAULT_LIST_CAPACITY,
            leaf_cap: tree.leaf_cap,
            rebuild_min: 1,
            rebuild_max: MAX_INTERVAL,
            seed: 1,
            counters: false,
            diag_interval: 1,
            tuner_clock: ClockKind::Modeled,
        }
    }
}

fn parse_value<T: FromStr>(line: u64, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse { line, msg: format!("bad value {v:?} for {key}") })
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.dacc > 0.0 && self.dacc.is_finite()) {
            return bad(format!("dacc must be positive, got {}", self.dacc));
        }
        if let Some(e) = self.eps {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("eps must be non-negative, got {e}"));
            }
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if self.group_size == 0 || self.list_capacity == 0 || self.leaf_cap == 0 {
            return bad("group_size, list_capacity and leaf_cap must be at least 1".into());
        }
        if self.rebuild_min == 0 || self.rebuild_min > self.rebuild_max || self.rebuild_max > MAX_INTERVAL {
            return bad(format!(
                "rebuild bounds must satisfy 1 <= min <= max <= {MAX_INTERVAL}, got [{}, {}]",
                self.rebuild_min, self.rebuild_max
            ));
        }
        if self.diag_interval == 0 {
            return bad("diag_interval must be at least 1".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx as u64 + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse { line, msg: format!("expected key = value, got {body:?}") })?;
            match key {
                "dacc" => c.dacc = parse_value(line, key, value)?,
                "eps" => c.eps = Some(parse_value(line, key, value)?),
                "eta" => c.eta = parse_value(line, key, value)?,
                "dt_max" => c.dt_max = parse_value(line, key, value)?,
                "steps" => c.steps = parse_value(line, key, value)?,
                "group_size" => c.group_size = parse_value(line, key, value)?,
                "list_capacity" => c.list_capacity = parse_value(line, key, value)?,
                "leaf_cap" => c.leaf_cap = parse_value(line, key, value)?,
                "rebuild_min" => c.rebuild_min = parse_value(line, key, value)?,
                "rebuild_max" => c.rebuild_max = parse_value(line, key, value)?,
                "seed" => c.seed = parse_value(line, key, value)?,
                "counters" => c.counters = parse_value(line, key, value)?,
                "diag_interval" => c.diag_interval = parse_value(line, key, value)?,
                "tuner_clock" => {
                    c.tuner_clock = match value {
                        "modeled" => ClockKind::Modeled,
                        "wall" => ClockKind::Wall,
                        _ => return Err(Error::Parse { line, msg: format!("bad value {value:?} for tuner_clock") }),
                    }
                }
                _ => return Err(Error::Parse { line, msg: format!("unknown key {key:?}") }),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("dacc", self.dacc.to_string());
        if let Some(e) = self.eps {
            kv("eps", e.to_string());
        }
        kv("eta", self.eta.to_string());
        kv("dt_max", self.dt_max.to_string());
        kv("steps", self.steps.to_string());
        kv("group_size", self.group_size.to_string());
        kv("list_capacity", self.list_capacity.to_string());
        kv("leaf_cap", self.leaf_cap.to_string());
        kv("rebuild_min", self.rebuild_min.to_string());
        kv("rebuild_max", self.rebuild_max.to_string());
        kv("seed", self.seed.to_string());
        kv("counters", self.counters.to_string());
        kv("diag_interval", self.diag_interval.to_string());
        let clock = match self.tuner_clock {
            ClockKind::Modeled => "modeled",
            ClockKind::Wall => "wall",
        };
        kv("tuner_clock", clock.into());
        s
    }

    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            leaf_cap: self.leaf_cap,
            group_size: self.group_size,
            list_capacity: self.list_capacity,
            ..TreeConfig::default()
        }
    }

    pub fn step_scheme(&self) -> StepScheme {
        StepScheme { eta: self.eta, dt_max: self.dt_max, shared: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.dacc, 1.953125e-3);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse("# header\n\ndacc = 0.5  # loose\nsteps=3\n").unwrap();
        assert_eq!(c.dacc, 0.5);
        assert_eq!(c.steps, 3);
    }

    #[test]
    fn errors_name_the_line() {
        assert!(matches!(RunConfig::parse("dacc = 1\nbogus = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(RunConfig::parse("steps = -1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("just words"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("rebuild_max = 500"), Err(Error::InvalidInput(_))));
    }

    proptest! {
        #[test]
        fn text_round_trip(
            dacc in 1e-9f64..1.0,
            eps in prop::option::of(0.0f64..1.0),
            steps in 0u64..1_000_000,
            lo in 1usize..64,
            span in 0usize..64,
            seed: u64,
            counters: bool,
        ) {
            let c = RunConfig {
                dacc, eps, steps, seed, counters,
                rebuild_min: lo,
                rebuild_max: lo + span,
                ..RunConfig::default()
            };
            prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        }
    }
}
