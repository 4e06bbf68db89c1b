//! CSV schemas for run and benchmark output.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::snapshot::write_atomic;
use crate::perflab::OpCounters;

pub const PHASE_HEADER: [&str; 7] = ["step", "walkTree", "calcNode", "makeTree", "predict", "correct", "rebuild_interval"];
pub const DIAG_HEADER: [&str; 7] = ["step", "E", "K", "W", "Px", "Py", "Pz"];
pub const ACCURACY_HEADER: [&str; 11] = [
    "dacc",
    "t_step",
    "t_walk",
    "t_node",
    "t_build",
    "err_median",
    "err_p99",
    "interactions_per_particle",
    "int_ops",
    "fp_ops",
    "predicted_speedup",
];
pub const SCALING_HEADER: [&str; 9] =
    ["n", "walkTree", "calcNode", "makeTree", "predict", "correct", "total", "dominant", "calcNode_share"];
pub const COUNTER_HEADER: [&str; 10] = [
    "dacc",
    "integer",
    "fp_fma",
    "fp_add",
    "fp_mul",
    "fp_rsqrt",
    "interactions_per_particle",
    "predicted_speedup",
    "flops",
    "regime",
];
pub const SPEEDUP_HEADER: [&str; 4] = ["row", "int_ops", "fp_ops", "predicted_speedup"];
pub const BARRIER_HEADER: [&str; 6] =
    ["workers", "phases", "lockfree_ns_per_sync", "native_ns_per_sync", "ratio", "violations"];

/// An in-memory table with a fixed header, written atomically.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::invalid(format!("row has {} fields, header has {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column `name` parsed as floats.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name).ok_or_else(|| Error::invalid(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[c].parse::<f64>().map_err(|_| Error::Parse {
                    line: i as u64 + 2,
                    msg: format!("bad number {:?} in column {name}", r[c]),
                })
            })
            .collect()
    }
}

/// Formats with the shortest representation that round-trips.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Reads counter rows for speed-up prediction.
///
/// Accepts either the full split (`integer`, `fp_fma`, `fp_add`, `fp_mul`,
/// optional `fp_rsqrt`) or lumped `I`/`F` columns. Errors carry the 1-based
/// file line.
pub fn parse_counters_csv(text: &str) -> Result<Vec<OpCounters>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |names: &[&str]| header.iter().position(|h| names.contains(&h.as_str()));
    let int_col = col(&["integer", "I", "int_ops"])
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing integer (or I) column".into() })?;
    let lumped = col(&["F", "fp_ops"]);
    let split = [col(&["fp_fma"]), col(&["fp_add"]), col(&["fp_mul"]), col(&["fp_rsqrt"])];
    if lumped.is_none() && split[..3].iter().any(Option::is_none) {
        return Err(Error::Parse { line: 1, msg: "need fp_fma, fp_add, fp_mul columns or a lumped F column".into() });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |c: usize| -> Result<u64> {
            let v = rec.get(c).unwrap_or("");
            v.parse::<u64>()
                .or_else(|_| v.parse::<f64>().ok().filter(|x| *x >= 0.0 && x.is_finite()).map(|x| x.round() as u64).ok_or(()))
                .map_err(|_| Error::Parse { line, msg: format!("bad count {v:?}") })
        };
        let mut c = OpCounters { integer: get(int_col)?, ..OpCounters::default() };
        match lumped {
            Some(f) => c.fp_add = get(f)?,
            None => {
                c.fp_fma = get(split[0].unwrap())?;
                c.fp_add = get(split[1].unwrap())?;
                c.fp_mul = get(split[2].unwrap())?;
                if let Some(rs) = split[3] {
                    c.fp_rsqrt = get(rs)?;
                }
            }
        }
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_table() {
        let t = Table::new(&PHASE_HEADER);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "step,walkTree,calcNode,makeTree,predict,correct,rebuild_interval\n");
    }

    #[test]
    fn width_checked() {
        let mut t = Table::new(&DIAG_HEADER);
        assert!(t.push(vec!["1".into()]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = Table::new(&BARRIER_HEADER);
        t.push(["2", "10", "1.5", "2.5", "0.6", "0"].map(String::from).to_vec()).unwrap();
        t.write(&p).unwrap();
        let back = Table::read(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.floats("ratio").unwrap(), vec![0.6]);
    }

    #[test]
    fn lumped_and_split_counters() {
        let c = parse_counters_csv("I,F\n0,10\n5,5\n").unwrap();
        assert_eq!(c[0].integer, 0);
        assert_eq!(c[0].fp_total(), 10);
        let c = parse_counters_csv("integer,fp_fma,fp_add,fp_mul,fp_rsqrt\n1,2,3,4,5\n").unwrap();
        assert_eq!(c[0], OpCounters { integer: 1, fp_fma: 2, fp_add: 3, fp_mul: 4, fp_rsqrt: 5 });
    }

    #[test]
    fn malformed_counters_name_line() {
        match parse_counters_csv("I,F\n1,2\n3,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_counters_csv("a,b\n1,2\n"), Err(Error::Parse { line: 1, .. })));
        match parse_counters_csv("I,F\n1,2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
