//! Portable binary field snapshots and CSV export.
//!
//! Layout (little-endian): a 32-byte header
//!
//! ```text
//! 0..4   magic "KWPH"
//! 4..6   version u16
//! 6      kind u8   (0 complex scalar / component field, 1 matrix field)
//! 7      dim u8    (components per node for kind 0, matrix size for kind 1)
//! 8..12  nq u32
//! 12..16 np u32
//! 16..24 hbar f64
//! 24..32 reserved, zero
//! ```
//!
//! followed by `(re, im)` float64 pairs, row-major over nodes (`q` outer). Kind 0
//! stores the `dim` components of each node contiguously; kind 1 stores each
//! node's `n x n` matrix row-major.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::{ComplexField, MatrixField, RealField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"KWPH";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    Complex = 0,
    Matrix = 1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub dim: u8,
    pub nq: u32,
    pub np: u32,
    pub hbar: f64,
    pub values: Vec<Complex64>,
}

impl Snapshot {
    pub fn from_complex(f: &ComplexField) -> Self {
        Snapshot {
            kind: SnapshotKind::Complex,
            dim: 1,
            nq: f.grid().nq() as u32,
            np: f.grid().np() as u32,
            hbar: f.grid().hbar(),
            values: f.data().to_vec(),
        }
    }

    pub fn from_real(f: &RealField) -> Self {
        Snapshot::from_complex(&f.to_complex())
    }

    /// Interleaves `components` node by node.
    pub fn from_components(components: &[ComplexField]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("no components".into()))?;
        let n = components.len();
        if n > u8::MAX as usize {
            return Err(Error::Format(format!("too many components: {n}")));
        }
        let len = first.grid().len();
        let mut values = Vec::with_capacity(len * n);
        for k in 0..len {
            for c in components {
                values.push(c.data()[k]);
            }
        }
        Ok(Snapshot {
            kind: SnapshotKind::Complex,
            dim: n as u8,
            nq: first.grid().nq() as u32,
            np: first.grid().np() as u32,
            hbar: first.grid().hbar(),
            values,
        })
    }

    pub fn from_matrix(f: &MatrixField) -> Result<Self> {
        if f.dim() > u8::MAX as usize {
            return Err(Error::Format(format!("matrix dimension {} too large", f.dim())));
        }
        Ok(Snapshot {
            kind: SnapshotKind::Matrix,
            dim: f.dim() as u8,
            nq: f.grid().nq() as u32,
            np: f.grid().np() as u32,
            hbar: f.grid().hbar(),
            values: f.data().to_vec(),
        })
    }

    fn values_per_node(&self) -> usize {
        match self.kind {
            SnapshotKind::Complex => self.dim as usize,
            SnapshotKind::Matrix => (self.dim as usize).pow(2),
        }
    }

    /// Component `c` of a kind-0 snapshot as flat node data.
    pub fn component(&self, c: usize) -> Vec<Complex64> {
        let s = self.values_per_node();
        self.values.iter().skip(c).step_by(s).copied().collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MAGIC);
        header[4..6].copy_from_slice(&VERSION.to_le_bytes());
        header[6] = self.kind as u8;
        header[7] = self.dim;
        header[8..12].copy_from_slice(&self.nq.to_le_bytes());
        header[12..16].copy_from_slice(&self.np.to_le_bytes());
        header[16..24].copy_from_slice(&self.hbar.to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.values.len() * 16);
        for z in &self.values {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let kind = match header[6] {
            0 => SnapshotKind::Complex,
            1 => SnapshotKind::Matrix,
            k => return Err(Error::Format(format!("unknown kind {k}"))),
        };
        let dim = header[7];
        let nq = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let np = u32::from_le_bytes(header[12..16].try_into().unwrap());
        let hbar = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let mut snap = Snapshot {
            kind,
            dim,
            nq,
            np,
            hbar,
            values: Vec::new(),
        };
        let count = nq as usize * np as usize * snap.values_per_node();
        let mut bytes = vec![0u8; count * 16];
        r.read_exact(&mut bytes)?;
        snap.values = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Ok(snap)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Snapshot::read_from(std::io::BufReader::new(file))
    }
}

/// Writes `q,p,re,im` rows for a scalar field.
pub fn write_csv(f: &ComplexField, mut w: impl Write) -> Result<()> {
    writeln!(w, "q,p,re,im")?;
    for ((q, p), z) in f.grid().nodes().zip(f.data()) {
        writeln!(w, "{q:.17e},{p:.17e},{:.17e},{:.17e}", z.re, z.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::grid::GridSpec;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = GridSpec::square(8, 1.0, 0.5).build().unwrap();
        let f = ComplexField::zeros(g);
        let mut bytes = Vec::new();
        Snapshot::from_complex(&f).write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 32 + 64 * 16);
        assert_eq!(&bytes[0..4], b"KWPH");
        assert_eq!(bytes[4..6], [1, 0]);
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 1);
        assert_eq!(bytes[8..12], 8u32.to_le_bytes());
        assert_eq!(bytes[16..24], 0.5f64.to_le_bytes());
        assert!(bytes[24..32].iter().all(|&b| b == 0));
    }

    #[test]
    fn rejects_bad_magic() {
        let bytes = vec![0u8; 64];
        assert!(matches!(Snapshot::read_from(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = GridSpec::square(8, 1.0, 1.0).build().unwrap();
        let f = ComplexField::from_fn(g, |q, p| Complex64::new(q, p));
        let mut out = Vec::new();
        write_csv(&f, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("q,p,re,im\n"));
    }

    proptest! {
        #[test]
        fn matrix_snapshot_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 8 * 8 * 4 * 2)) {
            let g = GridSpec::square(8, 2.0, 1.0).build().unwrap();
            let data: Vec<Complex64> = vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let m = MatrixField::new(g, 2, data).unwrap();
            let snap = Snapshot::from_matrix(&m).unwrap();
            let mut bytes = Vec::new();
            snap.write_to(&mut bytes).unwrap();
            let back = Snapshot::read_from(&bytes[..]).unwrap();
            prop_assert_eq!(back, snap);
        }
    }
}
