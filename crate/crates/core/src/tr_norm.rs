//! Tied-rank histogram normalization and whitening PCA.

use std::fmt;

use nalgebra::DMatrix;

use crate::linalg::{fix_sign, symmetric_eigen_desc};
use crate::network::BlockHistogramSet;
use crate::{Error, Result, Scalar};

/// Processing stage of a [`FeatureVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    RawHist,
    TrNormalized,
    Wpca,
}

impl Stage {
    pub fn code(self) -> u8 {
        match self {
            Stage::RawHist => 0,
            Stage::TrNormalized => 1,
            Stage::Wpca => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Stage::RawHist),
            1 => Some(Stage::TrNormalized),
            2 => Some(Stage::Wpca),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::RawHist => "raw-hist",
            Stage::TrNormalized => "tr-normalized",
            Stage::Wpca => "wpca",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub values: Vec<T>,
    pub stage: Stage,
}

impl<T> FeatureVector<T> {
    pub fn new(values: Vec<T>, stage: Stage) -> Self {
        Self { values, stage }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Ascending ranks of the nonzero bins, ties sharing their average rank.
/// Zero bins are not ranked and stay 0.
///
/// `[0, 3, 3, 7, 0, 1]` ranks to `[0, 2.5, 2.5, 4, 0, 1]`.
pub fn tied_rank_nonzero<T: Scalar>(hist: &[u32]) -> Vec<T> {
    let mut order: Vec<usize> = (0..hist.len()).filter(|&i| hist[i] != 0).collect();
    order.sort_by_key(|&i| hist[i]);
    let mut ranks = vec![T::zero(); hist.len()];
    let mut start = 0;
    while start < order.len() {
        let value = hist[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| hist[i] == value).count();
        // Ranks start..end (0-based) become 1-based start+1..=end; average them.
        let avg = T::from_count(start + end + 1) * T::lit(0.5);
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Raw counts concatenated channel-outer, block-inner.
pub fn raw_feature<T: Scalar>(hists: &BlockHistogramSet) -> FeatureVector<T> {
    FeatureVector::new(hists.counts().iter().map(|&c| T::lit(f64::from(c))).collect(), Stage::RawHist)
}

/// Tied rank of the nonzero bins, elementwise square root, then L2
/// normalization. An all-zero histogram stays zero.
pub fn tr_normalize_segment<T: Scalar>(hist: &[u32]) -> Vec<T> {
    let mut seg: Vec<T> = tied_rank_nonzero::<T>(hist).into_iter().map(|r| r.sqrt()).collect();
    let n = crate::linalg::norm(&seg);
    if n > T::zero() {
        seg.iter_mut().for_each(|v| *v /= n);
    }
    seg
}

/// [`tr_normalize_segment`] applied per block, concatenated block-inner,
/// channel-outer.
pub fn tr_normalize<T: Scalar>(hists: &BlockHistogramSet) -> FeatureVector<T> {
    let mut values = Vec::with_capacity(hists.counts().len());
    for hist in hists.iter() {
        values.extend(tr_normalize_segment::<T>(hist));
    }
    FeatureVector::new(values, Stage::TrNormalized)
}

/// Fitted whitening PCA.
#[derive(Debug, Clone, PartialEq)]
pub struct WpcaModel<T> {
    pub mean: Vec<T>,
    /// `d_out x dim`; row `i` is eigenvector `i` divided by `sqrt(lambda_i + eps)`.
    pub projection: DMatrix<T>,
    /// Retained covariance eigenvalues, descending.
    pub eigenvalues: Vec<T>,
    /// Whitening floor added to every eigenvalue.
    pub epsilon: T,
    /// Stage of the features the model was fitted on.
    pub input_stage: Stage,
}

impl<T: Scalar> WpcaModel<T> {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.nrows()
    }

    /// Unscaled eigenvector rows (projection rows times `sqrt(lambda + eps)`).
    pub fn components(&self) -> DMatrix<T> {
        let mut c = self.projection.clone();
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = (lambda + self.epsilon).sqrt();
            c.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        c
    }

    pub fn project(&self, f: &FeatureVector<T>) -> Result<FeatureVector<T>> {
        project_wpca(self, f)
    }
}

/// Fits whitening PCA on gallery features with the unbiased covariance
/// `X^T X / (n - 1)` of the centred data. Works through the `n x n` Gram
/// matrix when the feature dimension exceeds the gallery size.
pub fn fit_wpca<T: Scalar>(gallery: &[FeatureVector<T>], d_out: usize) -> Result<WpcaModel<T>> {
    let n = gallery.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("WPCA needs at least 2 gallery features, got {n}")));
    }
    let dim = gallery[0].dim();
    let stage = gallery[0].stage;
    if let Some(bad) = gallery.iter().find(|f| f.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }
    if d_out == 0 {
        return Err(Error::InvalidInput("WPCA output dimension must be positive".into()));
    }

    let inv_n = T::one() / T::from_count(n);
    let mean: Vec<T> = (0..dim)
        .map(|j| gallery.iter().fold(T::zero(), |s, f| s + f.values[j]) * inv_n)
        .collect();
    let centred = DMatrix::from_fn(n, dim, |i, j| gallery[i].values[j] - mean[j]);
    let dof = T::from_count(n - 1);

    let (values, vectors): (Vec<T>, Vec<Vec<T>>) = if dim <= n {
        symmetric_eigen_desc(centred.tr_mul(&centred) / dof)
    } else {
        let (values, gram_vectors) = symmetric_eigen_desc(&centred * centred.transpose() / dof);
        let vectors = values
            .iter()
            .zip(gram_vectors)
            .map(|(&mu, a)| {
                // u = X^T a / sqrt((n-1) mu), unit norm when mu > 0.
                let a = nalgebra::DVector::from_vec(a);
                let scale = (dof * mu.max(T::zero())).sqrt();
                let mut u: Vec<T> = centred.tr_mul(&a).iter().copied().collect();
                if scale > T::zero() {
                    u.iter_mut().for_each(|x| *x /= scale);
                }
                fix_sign(&mut u);
                u
            })
            .collect();
        (values, vectors)
    };

    let top = values.first().copied().unwrap_or_else(T::zero).max(T::zero());
    let cutoff = top * T::default_epsilon() * T::from_count(n.max(dim).min(1 << 20)) * T::lit(10.0);
    let rank = values.iter().filter(|&&v| v > cutoff).count();
    if d_out > rank {
        return Err(Error::RankDeficient { requested: d_out, rank });
    }
    let epsilon = top * T::lit(1e-10);
    let mut projection = DMatrix::zeros(d_out, dim);
    for i in 0..d_out {
        let s = T::one() / (values[i] + epsilon).sqrt();
        for (j, &v) in vectors[i].iter().enumerate() {
            projection[(i, j)] = v * s;
        }
    }
    Ok(WpcaModel {
        mean,
        projection,
        eigenvalues: values[..d_out].to_vec(),
        epsilon,
        input_stage: stage,
    })
}

/// `projection * (f - mean)`.
pub fn project_wpca<T: Scalar>(model: &WpcaModel<T>, f: &FeatureVector<T>) -> Result<FeatureVector<T>> {
    if f.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: f.dim(),
        });
    }
    let centred = nalgebra::DVector::from_iterator(f.dim(), f.values.iter().zip(&model.mean).map(|(&v, &m)| v - m));
    let out = &model.projection * centred;
    Ok(FeatureVector::new(out.iter().copied().collect(), Stage::Wpca))
}
