//! 2D DCT filters and the basis-selection policy used to build DCTNet banks.

use std::fmt;

use crate::markov_klt::dct_limit_basis;
use crate::{Error, Result, Scalar};

/// Identifies what a filter was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// Separable DCT basis; `u` varies down the rows, `v` across the columns.
    Dct { u: usize, v: usize },
    /// PCA filter ranked by eigenvalue (0 = largest).
    Learned { rank: usize },
}

/// A `k`x`k` filter with row-major coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter<T> {
    coeffs: Vec<T>,
    k: usize,
    pub layer: usize,
    pub basis: Basis,
}

impl<T: Scalar> Filter<T> {
    /// Panics if `coeffs.len() != k * k`.
    pub fn new(k: usize, coeffs: Vec<T>, layer: usize, basis: Basis) -> Self {
        assert_eq!(coeffs.len(), k * k, "filter coefficient count");
        Self { coeffs, k, layer, basis }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.coeffs[row * self.k + col]
    }

    pub fn frobenius_norm(&self) -> T {
        crate::linalg::norm(&self.coeffs)
    }

    pub fn sum(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Which frequency index leads inside each antidiagonal of the
/// horizontal-frequency-major scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FrequencyAxis {
    /// Highest column frequency `v` first: `(0,1), (1,0), (0,2), (1,1), (2,0)`.
    #[default]
    Columns,
    /// Highest row frequency `u` first: `(1,0), (0,1), (2,0), (1,1), (0,2)`.
    Rows,
}

/// Order in which the `k^2` DCT bases are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanPolicy {
    /// Baseline JPEG zig-zag: direction alternates on every antidiagonal.
    ZigZag,
    /// Every antidiagonal traversed in the same direction, starting at the
    /// highest frequency along the given axis.
    HorizontalMajor(FrequencyAxis),
}

impl Default for ScanPolicy {
    fn default() -> Self {
        ScanPolicy::HorizontalMajor(FrequencyAxis::Columns)
    }
}

/// Where a bank's filters came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BankPolicy {
    Scan(ScanPolicy),
    Learned,
}

impl fmt::Display for BankPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankPolicy::Scan(ScanPolicy::ZigZag) => f.write_str("zigzag"),
            BankPolicy::Scan(ScanPolicy::HorizontalMajor(FrequencyAxis::Columns)) => f.write_str("horizontal-major"),
            BankPolicy::Scan(ScanPolicy::HorizontalMajor(FrequencyAxis::Rows)) => {
                f.write_str("horizontal-major (rows first)")
            }
            BankPolicy::Learned => f.write_str("learned"),
        }
    }
}

/// Ordered filters of one layer, all `k`x`k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T> {
    filters: Vec<Filter<T>>,
    k: usize,
    policy: BankPolicy,
}

impl<T: Scalar> FilterBank<T> {
    /// Checks that every filter is `k`x`k` with odd `k`, the bank is
    /// nonempty and no basis tag repeats.
    pub fn new(filters: Vec<Filter<T>>, k: usize, policy: BankPolicy) -> Result<Self> {
        if k.is_multiple_of(2) {
            return Err(Error::EvenFilterSize(k));
        }
        if filters.is_empty() {
            return Err(Error::InvalidInput("filter bank is empty".into()));
        }
        if let Some(bad) = filters.iter().find(|f| f.size() != k) {
            return Err(Error::InvalidInput(format!(
                "filter of size {} in a bank of size {k}",
                bad.size()
            )));
        }
        for (i, a) in filters.iter().enumerate() {
            if filters[..i].iter().any(|b| b.basis == a.basis) {
                return Err(Error::InvalidInput(format!("duplicate filter tag {:?}", a.basis)));
            }
        }
        Ok(Self { filters, k, policy })
    }

    pub fn filters(&self) -> &[Filter<T>] {
        &self.filters
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn policy(&self) -> BankPolicy {
        self.policy
    }

    /// Same bank relabelled as layer `layer`.
    pub fn with_layer(mut self, layer: usize) -> Self {
        self.filters.iter_mut().for_each(|f| f.layer = layer);
        self
    }
}

/// Separable 2D DCT basis: `coeffs[m1][m2] = phi_u[m1] * phi_v[m2]`.
pub fn dct2_basis<T: Scalar>(k: usize, u: usize, v: usize) -> Result<Filter<T>> {
    let rows = dct_limit_basis::<T>(k, u)?;
    let cols = dct_limit_basis::<T>(k, v)?;
    let coeffs = rows.iter().flat_map(|&a| cols.iter().map(move |&b| a * b)).collect();
    Ok(Filter::new(k, coeffs, 0, Basis::Dct { u, v }))
}

/// All `k^2` index pairs `(u, v)` ranked by antidiagonal `u + v`, with the
/// order inside each antidiagonal set by `policy`.
pub fn scan_order(k: usize, policy: ScanPolicy) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(k * k);
    if k == 0 {
        return order;
    }
    for s in 0..=2 * (k - 1) {
        let lo = s.saturating_sub(k - 1);
        let hi = s.min(k - 1);
        let ascending_u = match policy {
            ScanPolicy::ZigZag => s % 2 == 1,
            ScanPolicy::HorizontalMajor(FrequencyAxis::Columns) => true,
            ScanPolicy::HorizontalMajor(FrequencyAxis::Rows) => false,
        };
        if ascending_u {
            order.extend((lo..=hi).map(|u| (u, s - u)));
        } else {
            order.extend((lo..=hi).rev().map(|u| (u, s - u)));
        }
    }
    order
}

/// The DCTNet bank: scan positions `2..=p+1` (1-based), i.e. the `p`
/// highest-ranked bases after the DC term.
pub fn select_dctnet_filters<T: Scalar>(k: usize, p: usize, policy: ScanPolicy) -> Result<FilterBank<T>> {
    if k.is_multiple_of(2) {
        return Err(Error::EvenFilterSize(k));
    }
    let max = k * k - 1;
    if p == 0 || p > max {
        return Err(Error::TooManyFilters { requested: p, k, max });
    }
    let filters = scan_order(k, policy)
        .into_iter()
        .skip(1)
        .take(p)
        .map(|(u, v)| dct2_basis(k, u, v))
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(filters, k, BankPolicy::Scan(policy))
}

/// One DCTNet bank per entry of `per_layer`, labelled with its layer index.
pub fn dctnet_banks<T: Scalar>(k: usize, per_layer: &[usize], policy: ScanPolicy) -> Result<Vec<FilterBank<T>>> {
    per_layer
        .iter()
        .enumerate()
        .map(|(layer, &p)| select_dctnet_filters(k, p, policy).map(|b| b.with_layer(layer)))
        .collect()
}
