//! Binary feature store (`.dctf`).
//!
//! ```text
//! "DCTF" | version: u16 | stage: u8 | dim: u32 | count: u32
//! count x { subject: u32 | group: u16 | dim x f32 }
//! ```
//!
//! Little-endian throughout. Stage codes: 0 raw histogram, 1 tied-rank
//! normalized, 2 WPCA projected.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::tr_norm::Stage;
use crate::{Error, Result, Scalar};

pub const FEATURE_MAGIC: &[u8; 4] = b"DCTF";
pub const FEATURE_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub subject: u32,
    pub group: u16,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreHeader {
    pub version: u16,
    pub stage: Stage,
    pub dim: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    pub stage: Stage,
    pub dim: usize,
    pub records: Vec<FeatureRecord>,
}

fn format_err(message: String) -> Error {
    Error::Format {
        kind: "feature store",
        message,
    }
}

impl FeatureStore {
    pub fn new(stage: Stage, dim: usize) -> Self {
        Self {
            stage,
            dim,
            records: Vec::new(),
        }
    }

    /// Appends a record, narrowing values to `f32`.
    pub fn push<T: Scalar>(&mut self, subject: u32, group: u16, values: &[T]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        self.records.push(FeatureRecord {
            subject,
            group,
            values: values.iter().map(|v| v.as_f64() as f32).collect(),
        });
        Ok(())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = u32::try_from(self.dim).map_err(|_| format_err("dimension exceeds u32".into()))?;
        let count = u32::try_from(self.records.len()).map_err(|_| format_err("record count exceeds u32".into()))?;
        out.write_all(FEATURE_MAGIC)?;
        out.write_all(&FEATURE_VERSION.to_le_bytes())?;
        out.write_all(&[self.stage.code()])?;
        out.write_all(&dim.to_le_bytes())?;
        out.write_all(&count.to_le_bytes())?;
        for rec in &self.records {
            out.write_all(&rec.subject.to_le_bytes())?;
            out.write_all(&rec.group.to_le_bytes())?;
            for v in &rec.values {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let header = read_header(&mut input)?;
        let dim = header.dim as usize;
        let mut store = Self::new(header.stage, dim);
        let mut buf = vec![0u8; dim * 4];
        for _ in 0..header.count {
            let subject = u32::from_le_bytes(read_array(&mut input)?);
            let group = u16::from_le_bytes(read_array(&mut input)?);
            input
                .read_exact(&mut buf)
                .map_err(|e| format_err(format!("truncated record: {e}")))?;
            let values = buf
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            store.records.push(FeatureRecord { subject, group, values });
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(format_err("trailing bytes after records".into()));
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| format_err(format!("truncated input: {e}")))?;
    Ok(buf)
}

pub fn read_header<R: Read>(input: &mut R) -> Result<StoreHeader> {
    let magic: [u8; 4] = read_array(input)?;
    if &magic != FEATURE_MAGIC {
        return Err(format_err(format!("bad magic {magic:?}")));
    }
    let version = u16::from_le_bytes(read_array(input)?);
    if version != FEATURE_VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let [code] = read_array::<1, _>(input)?;
    let stage = Stage::from_code(code).ok_or_else(|| format_err(format!("unknown stage {code}")))?;
    let dim = u32::from_le_bytes(read_array(input)?);
    let count = u32::from_le_bytes(read_array(input)?);
    Ok(StoreHeader {
        version,
        stage,
        dim,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let mut store = FeatureStore::new(Stage::Wpca, 2);
        store.push(7u32, 3, &[1.5f64, -2.0]).unwrap();
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"DCTF");
        assert_eq!(&buf[4..7], &[1, 0, 2]);
        assert_eq!(&buf[7..11], &2u32.to_le_bytes());
        assert_eq!(&buf[11..15], &1u32.to_le_bytes());
        assert_eq!(&buf[15..19], &7u32.to_le_bytes());
        assert_eq!(&buf[19..21], &3u16.to_le_bytes());
        assert_eq!(&buf[21..25], &1.5f32.to_le_bytes());
        assert_eq!(buf.len(), 29);
        assert!(store.push(1, 1, &[0.0f64]).is_err());
    }

    #[test]
    fn rejects_damaged_files() {
        let mut store = FeatureStore::new(Stage::RawHist, 3);
        store.push(1, 0, &[1.0f32, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        assert!(FeatureStore::read(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[6] = 7;
        assert!(FeatureStore::read(bad.as_slice()).is_err());
        buf.extend_from_slice(&[0, 0]);
        assert!(FeatureStore::read(buf.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(dim in 0usize..6, rows in prop::collection::vec((any::<u32>(), any::<u16>(), prop::collection::vec(-1e6f32..1e6, 6)), 0..5)) {
            let mut store = FeatureStore::new(Stage::TrNormalized, dim);
            for (s, g, v) in &rows {
                store.push(*s, *g, &v[..dim]).unwrap();
            }
            let mut buf = Vec::new();
            store.write(&mut buf).unwrap();
            prop_assert_eq!(FeatureStore::read(buf.as_slice()).unwrap(), store);
        }
    }
}
