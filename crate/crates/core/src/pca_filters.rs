//! PCA filter learning from image patches, one bank per layer.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dct_filters::{Basis, BankPolicy, Filter, FilterBank};
use crate::linalg::symmetric_eigen_desc;
use crate::network::convolve_bank;
use crate::{Error, Plane, Result, Scalar};

/// Vectorized `k`x`k` patches stored as columns of length `k^2`.
///
/// Within a column, element `col * k + row` holds patch pixel `(row, col)`
/// (column-major vectorization).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix<T> {
    k: usize,
    data: Vec<T>,
    /// `(rows, cols)` of each source image, in order.
    pub sources: Vec<(usize, usize)>,
}

impl<T: Scalar> PatchMatrix<T> {
    /// Wraps already-vectorized columns as they are (no mean removal).
    pub fn from_columns(k: usize, data: Vec<T>) -> Result<Self> {
        if k == 0 || !data.len().is_multiple_of(k * k) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form columns of length {}",
                data.len(),
                k * k
            )));
        }
        Ok(Self {
            k,
            data,
            sources: Vec::new(),
        })
    }

    pub fn patch_size(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k * self.k
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn column(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.dim())
    }

    /// Appends every patch of another image.
    pub fn extend_from(&mut self, image: &Plane<T>) -> Result<()> {
        let more = extract_patches(image, self.k)?;
        self.data.extend(more.data);
        self.sources.extend(more.sources);
        Ok(())
    }
}

/// Visits every stride-1 `k`x`k` patch of `image` (valid region only),
/// column-major vectorized with its own mean subtracted.
fn for_each_patch<T: Scalar>(image: &Plane<T>, k: usize, mut visit: impl FnMut(&[T])) -> Result<()> {
    let (rows, cols) = image.dims();
    if k == 0 || rows < k || cols < k {
        return Err(Error::ImageTooSmall { rows, cols, k });
    }
    let inv = T::one() / T::from_count(k * k);
    let mut patch = vec![T::zero(); k * k];
    for top in 0..=rows - k {
        for left in 0..=cols - k {
            let mut mean = T::zero();
            for c in 0..k {
                for r in 0..k {
                    let v = image[(top + r, left + c)];
                    patch[c * k + r] = v;
                    mean += v;
                }
            }
            mean *= inv;
            patch.iter_mut().for_each(|v| *v -= mean);
            visit(&patch);
        }
    }
    Ok(())
}

/// All stride-1 patches of `image`, per-patch mean removed.
pub fn extract_patches<T: Scalar>(image: &Plane<T>, k: usize) -> Result<PatchMatrix<T>> {
    let mut data = Vec::new();
    for_each_patch(image, k, |p| data.extend_from_slice(p))?;
    Ok(PatchMatrix {
        k,
        data,
        sources: vec![image.dims()],
    })
}

/// Streaming accumulator of `sum x x^T` over patch vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchScatter<T> {
    k: usize,
    sum: DMatrix<T>,
    count: usize,
}

impl<T: Scalar> PatchScatter<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            sum: DMatrix::zeros(k * k, k * k),
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, x: &[T]) {
        let d = self.k * self.k;
        debug_assert_eq!(x.len(), d);
        for (j, &xj) in x.iter().enumerate().take(d) {
            if xj == T::zero() {
                continue;
            }
            // Upper triangle only; mirrored in `covariance`.
            for (i, &xi) in x[..=j].iter().enumerate() {
                self.sum[(i, j)] += xi * xj;
            }
        }
        self.count += 1;
    }

    /// Adds every mean-removed patch of `image` without materializing them.
    pub fn add_image(&mut self, image: &Plane<T>) -> Result<()> {
        let k = self.k;
        for_each_patch(image, k, |p| self.add(p))
    }

    pub fn add_patches(&mut self, patches: &PatchMatrix<T>) {
        patches.columns().for_each(|c| self.add(c));
    }

    /// Associative merge of two partial accumulators.
    pub fn merge(mut self, other: &Self) -> Self {
        self.sum += &other.sum;
        self.count += other.count;
        self
    }

    /// `(1/M) X X^T` over the accumulated patches.
    pub fn covariance(&self) -> DMatrix<T> {
        let d = self.k * self.k;
        let scale = T::one() / T::from_count(self.count.max(1));
        DMatrix::from_fn(d, d, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            self.sum[(a, b)] * scale
        })
    }

    /// Per-image scatters computed in parallel, then summed in input order
    /// so the result does not depend on thread scheduling.
    pub fn from_images(images: &[Plane<T>], k: usize) -> Result<Self> {
        let partial = images
            .par_iter()
            .map(|img| {
                let mut s = Self::new(k);
                s.add_image(img).map(|_| s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(partial.iter().fold(Self::new(k), |acc, s| acc.merge(s)))
    }
}

/// PCA bank of the `p` leading covariance eigenvectors with their eigenvalues.
#[derive(Debug, Clone)]
pub struct LearnedBank<T> {
    pub bank: FilterBank<T>,
    pub eigenvalues: Vec<T>,
}

/// Top-`p` eigenvectors of the patch covariance, reshaped to `k`x`k` filters.
pub fn learn_from_scatter<T: Scalar>(scatter: &PatchScatter<T>, p: usize, layer: usize) -> Result<LearnedBank<T>> {
    let k = scatter.k;
    let d = k * k;
    if scatter.count < d {
        return Err(Error::InvalidInput(format!(
            "{} patches are fewer than the patch dimension {d}",
            scatter.count
        )));
    }
    if p == 0 || p > d {
        return Err(Error::TooManyFilters { requested: p, k, max: d });
    }
    let (values, vectors) = symmetric_eigen_desc(scatter.covariance());
    let top = values.first().copied().unwrap_or_else(T::zero).max(T::zero());
    let cutoff = top * T::default_epsilon() * T::from_count(d) * T::lit(100.0);
    let rank = values.iter().filter(|&&v| v > cutoff).count();
    if p > rank {
        return Err(Error::RankDeficient { requested: p, rank });
    }
    let filters = vectors
        .iter()
        .take(p)
        .enumerate()
        .map(|(rank, v)| {
            // Undo the column-major vectorization into row-major coefficients.
            let coeffs = (0..d).map(|i| v[(i % k) * k + i / k]).collect();
            Filter::new(k, coeffs, layer, Basis::Learned { rank })
        })
        .collect();
    Ok(LearnedBank {
        bank: FilterBank::new(filters, k, BankPolicy::Learned)?,
        eigenvalues: values[..p].to_vec(),
    })
}

/// Learns one PCA bank from a patch matrix.
pub fn learn_pca_bank<T: Scalar>(patches: &PatchMatrix<T>, p: usize) -> Result<LearnedBank<T>> {
    let mut scatter = PatchScatter::new(patches.patch_size());
    scatter.add_patches(patches);
    learn_from_scatter(&scatter, p, 0)
}

/// Learns `per_layer.len()` PCA banks. Layer 1 uses the input images; each
/// later layer pools the patches of every response map that the previous
/// bank produces on the previous layer's inputs.
pub fn learn_layered_pca<T: Scalar>(images: &[Plane<T>], k: usize, per_layer: &[usize]) -> Result<Vec<LearnedBank<T>>> {
    if per_layer.is_empty() {
        return Err(Error::InvalidInput("need at least one layer".into()));
    }
    if images.is_empty() {
        return Err(Error::InvalidInput("no images to learn from".into()));
    }
    let mut inputs: Vec<Plane<T>> = images.to_vec();
    let mut learned = Vec::with_capacity(per_layer.len());
    for (layer, &p) in per_layer.iter().enumerate() {
        let scatter = PatchScatter::from_images(&inputs, k)?;
        let bank = learn_from_scatter(&scatter, p, layer)?;
        if layer + 1 < per_layer.len() {
            inputs = inputs
                .par_iter()
                .map(|img| convolve_bank(img, &bank.bank).maps)
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect();
        }
        learned.push(bank);
    }
    Ok(learned)
}
