//! GBDS snapshot files: a little-endian header followed by both fields.
//!
//! ```text
//! "GBDS" | u32 version = 1 | u32 n1 | u32 n2 | f64 L1 | f64 L2 | f64 t
//! n1*n2 f64 of theta+ (row-major) | n1*n2 f64 of theta-
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{Grid2D, RealField2D};

pub const MAGIC: &[u8; 4] = b"GBDS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 * 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub n1: u32,
    pub n2: u32,
    pub l1: f64,
    pub l2: f64,
    pub t: f64,
}

/// Decoded snapshot contents.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl Snapshot {
    pub fn from_fields(plus: &RealField2D, minus: &RealField2D, t: f64) -> Result<Self> {
        if plus.grid() != minus.grid() {
            return Err(Error::GridMismatch);
        }
        let g = plus.grid();
        Ok(Self {
            header: SnapshotHeader { n1: g.n1() as u32, n2: g.n2() as u32, l1: g.l1(), l2: g.l2(), t },
            plus: plus.values().to_vec(),
            minus: minus.values().to_vec(),
        })
    }

    pub fn grid(&self) -> Result<Grid2D> {
        let h = &self.header;
        Grid2D::new(h.n1 as usize, h.n2 as usize, h.l1, h.l2)
    }

    /// Fields on `grid`, which must match the header dimensions.
    pub fn fields_on(&self, grid: &Grid2D) -> Result<(RealField2D, RealField2D)> {
        let h = &self.header;
        if grid.n1() != h.n1 as usize || grid.n2() != h.n2 as usize || grid.l1() != h.l1 || grid.l2() != h.l2 {
            return Err(Error::Snapshot(format!(
                "snapshot grid {}x{} ({} x {}) does not match the requested grid",
                h.n1, h.n2, h.l1, h.l2
            )));
        }
        Ok((RealField2D::from_values(grid, self.plus.clone())?, RealField2D::from_values(grid, self.minus.clone())?))
    }

    pub fn encode(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.plus.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&h.n1.to_le_bytes());
        out.extend_from_slice(&h.n2.to_le_bytes());
        for v in [h.l1, h.l2, h.t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.plus.iter().chain(&self.minus) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot(format!("file too short: {} bytes", bytes.len())));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Snapshot("bad magic, expected GBDS".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let header = SnapshotHeader { n1: u32_at(8), n2: u32_at(12), l1: f64_at(16), l2: f64_at(24), t: f64_at(32) };
        let n = header.n1 as usize * header.n2 as usize;
        let expected = 2 * n * 8;
        if bytes.len() - HEADER_LEN != expected {
            return Err(Error::Snapshot(format!("payload is {} bytes, expected {expected}", bytes.len() - HEADER_LEN)));
        }
        let read = |start: usize| -> Vec<f64> { (0..n).map(|i| f64_at(start + 8 * i)).collect() };
        Ok(Self { header, plus: read(HEADER_LEN), minus: read(HEADER_LEN + 8 * n) })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::decode(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid2D::new(8, 10, 1.5, 2.5).unwrap();
        let p = RealField2D::from_fn(&g, |x, y| (x * 3.1).sin() * y.exp() + 1e-300);
        let m = RealField2D::from_fn(&g, |x, y| x - y * 0.1);
        let s = Snapshot::from_fields(&p, &m, 0.125).unwrap();
        let back = Snapshot::decode(&s.encode()).unwrap();
        assert_eq!(back.header, s.header);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.plus), bits(p.values()));
        assert_eq!(bits(&back.minus), bits(m.values()));
    }

    #[test]
    fn rejects_corruption() {
        let g = Grid2D::square(8, 1.0).unwrap();
        let f = RealField2D::zeros(&g);
        let bytes = Snapshot::from_fields(&f, &f, 0.0).unwrap().encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Snapshot::decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(Snapshot::decode(&bad).is_err());
        assert!(Snapshot::decode(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn header_layout() {
        let g = Grid2D::new(8, 12, 2.0, 3.0).unwrap();
        let f = RealField2D::zeros(&g);
        let bytes = Snapshot::from_fields(&f, &f, 0.5).unwrap().encode();
        assert_eq!(&bytes[0..4], b"GBDS");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 12);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.5);
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 96 * 8);
    }
}
