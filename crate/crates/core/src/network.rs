//! Forward pass: zero-padded filter-bank cascade, sign binarization into
//! integer codes, and block-wise code histograms.

use rayon::prelude::*;

use crate::dct_filters::{Filter, FilterBank};
use crate::{Error, Plane, Result, Scalar};

/// Largest number of final-layer filters whose bits fit a code.
pub const MAX_CODE_BITS: usize = 30;

/// Response maps of one input channel, one per filter of a bank.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseStack<T> {
    pub maps: Vec<Plane<T>>,
    /// Layer of the bank that produced the maps.
    pub layer: usize,
}

/// Per-pixel integers packing the signs of `bits` response maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeImage {
    pub codes: Plane<u32>,
    pub bits: u32,
}

impl CodeImage {
    pub fn bins(&self) -> usize {
        1usize << self.bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSize {
    pub height: usize,
    pub width: usize,
}

impl BlockSize {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }
}

/// Grid of non-overlapping blocks; edge blocks keep the remainder rows/cols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGeometry {
    pub block: BlockSize,
    pub grid_rows: usize,
    pub grid_cols: usize,
}

impl BlockGeometry {
    pub fn blocks(&self) -> usize {
        self.grid_rows * self.grid_cols
    }
}

/// `channels x blocks` histograms of `bins` counts each, stored flat in
/// channel-major, block, bin order. Blocks are numbered row-major over the
/// grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHistogramSet {
    counts: Vec<u32>,
    pub channels: usize,
    pub bins: usize,
    pub geometry: BlockGeometry,
}

impl BlockHistogramSet {
    pub fn blocks(&self) -> usize {
        self.geometry.blocks()
    }

    pub fn histogram(&self, channel: usize, block: usize) -> &[u32] {
        let start = (channel * self.blocks() + block) * self.bins;
        &self.counts[start..start + self.bins]
    }

    /// All histograms in channel-outer, block-inner order.
    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks(self.bins)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Stacks single-channel sets (same geometry and bins) into one set.
    pub fn stack(sets: Vec<BlockHistogramSet>) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidInput("no histogram sets to stack".into()))?;
        let (bins, geometry) = (first.bins, first.geometry);
        if sets.iter().any(|s| s.bins != bins || s.geometry != geometry) {
            return Err(Error::InvalidInput("histogram sets disagree on geometry".into()));
        }
        let channels = sets.iter().map(|s| s.channels).sum();
        let counts = sets.into_iter().flat_map(|s| s.counts).collect();
        Ok(Self {
            counts,
            channels,
            bins,
            geometry,
        })
    }
}

/// Cross-correlation of `input` with `filter` (no kernel flip) over a zero
/// border of `(k - 1)/2`, so the output has the input's size.
pub fn correlate_same<T: Scalar>(input: &Plane<T>, filter: &Filter<T>) -> Plane<T> {
    let k = filter.size();
    let pad = (k / 2) as isize;
    let (rows, cols) = input.dims();
    let mut out = Plane::filled(rows, cols, T::zero());
    for r in 0..rows {
        for a in 0..k {
            let src_r = r as isize + a as isize - pad;
            if src_r < 0 || src_r >= rows as isize {
                continue;
            }
            let src = input.row(src_r as usize);
            let w_row = &filter.coeffs()[a * k..(a + 1) * k];
            for c in 0..cols {
                // Valid kernel columns for this output column.
                let b_lo = (pad - c as isize).max(0) as usize;
                let b_hi = ((cols as isize - c as isize + pad).min(k as isize)) as usize;
                let mut acc = out[(r, c)];
                for b in b_lo..b_hi {
                    acc += w_row[b] * src[c + b - pad as usize];
                }
                out[(r, c)] = acc;
            }
        }
    }
    out
}

/// One same-size response map per filter of `bank`.
pub fn convolve_bank<T: Scalar>(input: &Plane<T>, bank: &FilterBank<T>) -> ResponseStack<T> {
    let maps = bank
        .filters()
        .par_iter()
        .map(|f| correlate_same(input, f))
        .collect();
    let layer = bank.filters().first().map_or(0, |f| f.layer);
    ResponseStack { maps, layer }
}

/// Runs `input` through every bank. Each map produced by a layer is fed as
/// a single-channel input to the next bank; there is no nonlinearity
/// between layers. Returns the `D = P_1 * ... * P_{L-1}` final stacks of
/// `P_L` maps, grouped by their parent map of the previous layer.
pub fn forward_cascade<T: Scalar>(input: &Plane<T>, banks: &[FilterBank<T>]) -> Result<Vec<ResponseStack<T>>> {
    let (last, hidden) = banks
        .split_last()
        .ok_or_else(|| Error::InvalidInput("cascade needs at least one filter bank".into()))?;
    let mut current = vec![input.clone()];
    for bank in hidden {
        current = current
            .iter()
            .flat_map(|map| convolve_bank(map, bank).maps)
            .collect();
    }
    Ok(current.iter().map(|map| convolve_bank(map, last)).collect())
}

/// Packs `sum_p 2^(p-1) [response_p > 0]` per pixel; exact zeros give bit 0.
pub fn binarize_encode<T: Scalar>(maps: &[Plane<T>]) -> Result<CodeImage> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidInput("no response maps to binarize".into()))?;
    if maps.len() > MAX_CODE_BITS {
        return Err(Error::InvalidInput(format!(
            "{} response maps exceed the {MAX_CODE_BITS}-bit code limit",
            maps.len()
        )));
    }
    let dims = first.dims();
    if let Some(bad) = maps.iter().find(|m| m.dims() != dims) {
        return Err(Error::InvalidInput(format!(
            "response map {:?} differs from {:?}",
            bad.dims(),
            dims
        )));
    }
    let mut codes = Plane::filled(dims.0, dims.1, 0u32);
    for (bit, map) in maps.iter().enumerate() {
        for (code, &v) in codes.as_mut_slice().iter_mut().zip(map.as_slice()) {
            if v > T::zero() {
                *code |= 1 << bit;
            }
        }
    }
    Ok(CodeImage {
        codes,
        bits: maps.len() as u32,
    })
}

/// Histograms of `code` over a grid of `ceil(rows/h) x ceil(cols/w)` blocks.
pub fn block_histogram(code: &CodeImage, block: BlockSize) -> Result<BlockHistogramSet> {
    let (rows, cols) = code.codes.dims();
    if block.height == 0 || block.width == 0 || block.height > rows || block.width > cols {
        return Err(Error::InvalidInput(format!(
            "block {}x{} does not fit a {rows}x{cols} code image",
            block.height, block.width
        )));
    }
    let geometry = BlockGeometry {
        block,
        grid_rows: rows.div_ceil(block.height),
        grid_cols: cols.div_ceil(block.width),
    };
    let bins = code.bins();
    let mut counts = vec![0u32; geometry.blocks() * bins];
    for r in 0..rows {
        let block_row = r / block.height;
        for (c, &value) in code.codes.row(r).iter().enumerate() {
            let b = block_row * geometry.grid_cols + c / block.width;
            counts[b * bins + value as usize] += 1;
        }
    }
    Ok(BlockHistogramSet {
        counts,
        channels: 1,
        bins,
        geometry,
    })
}

/// Full forward pass up to the stacked block histograms of all `D` channels.
pub fn extract_histograms<T: Scalar>(
    input: &Plane<T>,
    banks: &[FilterBank<T>],
    block: BlockSize,
) -> Result<BlockHistogramSet> {
    let sets = forward_cascade(input, banks)?
        .iter()
        .map(|stack| binarize_encode(&stack.maps).and_then(|code| block_histogram(&code, block)))
        .collect::<Result<Vec<_>>>()?;
    BlockHistogramSet::stack(sets)
}
