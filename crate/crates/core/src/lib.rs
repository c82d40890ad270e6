//! Learning-free face features built from 2D DCT filter banks.
//!
//! An image is convolved with a cascade of DCT filter banks, the final
//! responses are binarized into integer code images, and block-wise
//! histograms of the codes form the descriptor. Histograms can be
//! tied-rank normalized and compressed with whitening PCA, and
//! identification is nearest-neighbour under cosine distance.

pub mod bankfile;
pub mod dct_filters;
pub mod error;
pub mod featstore;
pub mod linalg;
pub mod markov_klt;
pub mod matcher;
pub mod network;
pub mod pca_filters;
pub mod pipeline;
pub mod plane;
pub mod scalar;
pub mod synthetic;
pub mod tr_norm;

pub use error::{Error, Result};
pub use plane::Plane;
pub use scalar::Scalar;

pub type Plane64 = Plane<f64>;
pub type Plane32 = Plane<f32>;
pub type Filter64 = dct_filters::Filter<f64>;
pub type FilterBank64 = dct_filters::FilterBank<f64>;
pub type FilterBank32 = dct_filters::FilterBank<f32>;
pub type FeatureVector64 = tr_norm::FeatureVector<f64>;
pub type FeatureVector32 = tr_norm::FeatureVector<f32>;
pub type WpcaModel64 = tr_norm::WpcaModel<f64>;
pub type MarkovModel64 = markov_klt::MarkovModel<f64>;
pub type KltEigenSystem64 = markov_klt::KltEigenSystem<f64>;
