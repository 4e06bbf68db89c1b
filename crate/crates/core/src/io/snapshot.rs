//! Little-endian binary snapshots.
//!
//! Layout: `"OCTF"`, u32 version, u64 n, f64 time, f64 G, f64 eps, then
//! f64 mass[n], f64 pos[3n] and f64 vel[3n] with xyz interleaved.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::system::ParticleSystem;
use crate::vec3::Vec3;

pub const MAGIC: [u8; 4] = *b"OCTF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub g: f64,
    pub eps: f64,
    pub mass: Vec<f64>,
    pub pos: Vec<Vec3>,
    pub vel: Vec<Vec3>,
}

impl Snapshot {
    pub fn from_system(sys: &ParticleSystem, g: f64, eps: f64) -> Self {
        Self {
            time: sys.time,
            g,
            eps,
            mass: sys.mass.clone(),
            pos: sys.pos.clone(),
            vel: sys.vel.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn to_system(&self) -> Result<ParticleSystem> {
        let mut s = ParticleSystem::new(self.mass.clone(), self.pos.clone(), self.vel.clone())?;
        s.time = self.time;
        Ok(s)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let n = self.len();
        if n == 0 || self.pos.len() != n || self.vel.len() != n {
            return Err(Error::invalid("snapshot arrays must be non-empty and of equal length"));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 56 * n);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for x in [self.time, self.g, self.eps] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for &m in &self.mass {
            out.extend_from_slice(&m.to_le_bytes());
        }
        for v in self.pos.iter().chain(&self.vel) {
            for c in v.to_array() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, off: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format { offset: 0, msg: "bad magic, expected \"OCTF\"".into() });
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format { offset: 4, msg: format!("unsupported version {version}") });
        }
        let n = r.u64()?;
        if n == 0 {
            return Err(Error::Format { offset: 8, msg: "particle count must be at least 1".into() });
        }
        let body = n
            .checked_mul(56)
            .and_then(|b| usize::try_from(b).ok())
            .ok_or_else(|| Error::Format { offset: 8, msg: format!("particle count {n} too large") })?;
        let (time, g, eps) = (r.f64()?, r.f64()?, r.f64()?);
        let n = n as usize;
        if bytes.len() < HEADER_LEN + body {
            // walk to the exact failing offset
            let mut probe = Reader { buf: bytes, off: HEADER_LEN };
            for _ in 0..7 * n {
                probe.f64()?;
            }
        }
        let mass = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let pos = (0..n).map(|_| r.vec3()).collect::<Result<Vec<_>>>()?;
        let vel = (0..n).map(|_| r.vec3()).collect::<Result<Vec<_>>>()?;
        if r.off != bytes.len() {
            return Err(Error::Format {
                offset: r.off as u64,
                msg: format!("{} trailing bytes", bytes.len() - r.off),
            });
        }
        Ok(Self { time, g, eps, mass, pos, vel })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    off: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.off + len;
        if end > self.buf.len() {
            return Err(Error::Format {
                offset: self.off as u64,
                msg: format!("truncated: need {len} bytes, {} left", self.buf.len() - self.off),
            });
        }
        let s = &self.buf[self.off..end];
        self.off = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
}

/// Writes `bytes` next to `path` and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_snapshot(path: &Path, sys: &ParticleSystem, g: f64, eps: f64) -> Result<()> {
    write_atomic(path, &Snapshot::from_system(sys, g, eps).encode()?)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::decode(&fs::read(path)?)
}
