//! Binary container for filter banks (`.dctb`).
//!
//! ```text
//! "DCTB" | version: u16 | layers: u16
//! per layer: k: u16 | p: u16 | policy: u8
//! per layer, per filter: k*k row-major f64
//! ```
//!
//! All integers and floats are little-endian. Policy codes: 0 zig-zag,
//! 1 horizontal-major (columns first), 2 horizontal-major (rows first),
//! 3 learned.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dct_filters::{scan_order, Basis, BankPolicy, Filter, FilterBank, FrequencyAxis, ScanPolicy};
use crate::{Error, Result, Scalar};

pub const BANK_MAGIC: &[u8; 4] = b"DCTB";
pub const BANK_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerHeader {
    pub k: u16,
    pub p: u16,
    pub policy: BankPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankHeader {
    pub version: u16,
    pub layers: Vec<LayerHeader>,
}

fn policy_code(policy: BankPolicy) -> u8 {
    match policy {
        BankPolicy::Scan(ScanPolicy::ZigZag) => 0,
        BankPolicy::Scan(ScanPolicy::HorizontalMajor(FrequencyAxis::Columns)) => 1,
        BankPolicy::Scan(ScanPolicy::HorizontalMajor(FrequencyAxis::Rows)) => 2,
        BankPolicy::Learned => 3,
    }
}

fn policy_from_code(code: u8) -> Result<BankPolicy> {
    Ok(match code {
        0 => BankPolicy::Scan(ScanPolicy::ZigZag),
        1 => BankPolicy::Scan(ScanPolicy::HorizontalMajor(FrequencyAxis::Columns)),
        2 => BankPolicy::Scan(ScanPolicy::HorizontalMajor(FrequencyAxis::Rows)),
        3 => BankPolicy::Learned,
        other => return Err(format_err(format!("unknown policy code {other}"))),
    })
}

fn format_err(message: String) -> Error {
    Error::Format { kind: "filter bank", message }
}

fn to_u16(value: usize, what: &str) -> Result<u16> {
    u16::try_from(value).map_err(|_| format_err(format!("{what} {value} does not fit in u16")))
}

pub fn write_banks<T: Scalar, W: Write>(mut out: W, banks: &[FilterBank<T>]) -> Result<()> {
    out.write_all(BANK_MAGIC)?;
    out.write_all(&BANK_VERSION.to_le_bytes())?;
    out.write_all(&to_u16(banks.len(), "layer count")?.to_le_bytes())?;
    for bank in banks {
        out.write_all(&to_u16(bank.size(), "filter size")?.to_le_bytes())?;
        out.write_all(&to_u16(bank.len(), "filter count")?.to_le_bytes())?;
        out.write_all(&[policy_code(bank.policy())])?;
    }
    for bank in banks {
        for filter in bank.filters() {
            for &c in filter.coeffs() {
                out.write_all(&c.as_f64().to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_banks<T: Scalar>(path: &Path, banks: &[FilterBank<T>]) -> Result<()> {
    write_banks(BufWriter::new(File::create(path)?), banks)
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| format_err(format!("truncated input: {e}")))?;
    Ok(buf)
}

pub fn read_header<R: Read>(input: &mut R) -> Result<BankHeader> {
    let magic: [u8; 4] = read_array(input)?;
    if &magic != BANK_MAGIC {
        return Err(format_err(format!("bad magic {magic:?}")));
    }
    let version = u16::from_le_bytes(read_array(input)?);
    if version != BANK_VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let count = u16::from_le_bytes(read_array(input)?);
    let layers = (0..count)
        .map(|_| {
            let k = u16::from_le_bytes(read_array(input)?);
            let p = u16::from_le_bytes(read_array(input)?);
            let [code] = read_array::<1, _>(input)?;
            Ok(LayerHeader {
                k,
                p,
                policy: policy_from_code(code)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BankHeader { version, layers })
}

/// Reads every layer. Basis tags are rebuilt from the policy: scan banks
/// are assumed to hold the DC-omitting selection, learned banks are
/// ranked in file order.
pub fn read_banks<T: Scalar, R: Read>(mut input: R) -> Result<Vec<FilterBank<T>>> {
    let header = read_header(&mut input)?;
    let mut banks = Vec::with_capacity(header.layers.len());
    for (layer, info) in header.layers.iter().enumerate() {
        let k = usize::from(info.k);
        let p = usize::from(info.p);
        let tags: Vec<Basis> = match info.policy {
            BankPolicy::Scan(scan) => {
                let order = scan_order(k, scan);
                if p + 1 > order.len() {
                    return Err(format_err(format!("{p} filters do not fit a {k}x{k} scan")));
                }
                order[1..=p].iter().map(|&(u, v)| Basis::Dct { u, v }).collect()
            }
            BankPolicy::Learned => (0..p).map(|rank| Basis::Learned { rank }).collect(),
        };
        let mut filters = Vec::with_capacity(p);
        for basis in tags {
            let coeffs = (0..k * k)
                .map(|_| Ok(T::lit(f64::from_le_bytes(read_array(&mut input)?))))
                .collect::<Result<Vec<T>>>()?;
            filters.push(Filter::new(k, coeffs, layer, basis));
        }
        banks.push(FilterBank::new(filters, k, info.policy)?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(format_err("trailing bytes after coefficients".into()));
    }
    Ok(banks)
}

pub fn load_banks<T: Scalar>(path: &Path) -> Result<Vec<FilterBank<T>>> {
    read_banks(BufReader::new(File::open(path)?))
}
