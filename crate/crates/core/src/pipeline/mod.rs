//! Configuration, dataset manifests, image I/O and end-to-end orchestration.

pub mod config;
pub mod imageio;
pub mod manifest;

use std::path::PathBuf;

use rayon::prelude::*;

use crate::bankfile::load_banks;
use crate::dct_filters::{dctnet_banks, FilterBank};
use crate::featstore::FeatureStore;
use crate::matcher::{rank1_report, EvalReport, GalleryEntry, GallerySet, Probe};
use crate::network::{extract_histograms, BlockHistogramSet};
use crate::pca_filters::learn_layered_pca;
use crate::tr_norm::{fit_wpca, raw_feature, tr_normalize, FeatureVector, Stage, WpcaModel};
use crate::{Error, Plane, Result, Scalar};

pub use config::{FilterConfig, FilterSource, PipelineConfig, ScanOrder};
pub use imageio::load_image_grayscale;
pub use manifest::{DatasetManifest, ManifestEntry, Role};

/// Filter banks plus the histogram and normalization settings of a config.
#[derive(Debug, Clone)]
pub struct FeatureExtractor<T> {
    config: PipelineConfig,
    banks: Vec<FilterBank<T>>,
}

impl<T: Scalar> FeatureExtractor<T> {
    /// Builds the banks; `pca-learn` configs learn them from `gallery`.
    pub fn new(config: &PipelineConfig, gallery: &[Plane<T>]) -> Result<Self> {
        config.validate()?;
        let f = &config.filters;
        let banks = match f.source {
            FilterSource::Dct => dctnet_banks(f.k, &f.p, f.scan_policy())?,
            FilterSource::PcaLearn => learn_layered_pca(gallery, f.k, &f.p)?
                .into_iter()
                .map(|l| l.bank)
                .collect(),
            FilterSource::File => {
                let path = f.bank.as_ref().expect("validated");
                load_banks(path)?
            }
        };
        Ok(Self {
            config: config.clone(),
            banks,
        })
    }

    pub fn with_banks(config: &PipelineConfig, banks: Vec<FilterBank<T>>) -> Self {
        Self {
            config: config.clone(),
            banks,
        }
    }

    pub fn banks(&self) -> &[FilterBank<T>] {
        &self.banks
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn histograms(&self, image: &Plane<T>) -> Result<BlockHistogramSet> {
        extract_histograms(image, &self.banks, self.config.block_size())
    }

    /// Raw or tied-rank-normalized histogram feature (no WPCA).
    pub fn feature(&self, image: &Plane<T>) -> Result<FeatureVector<T>> {
        let hists = self.histograms(image)?;
        Ok(if self.config.tr_norm {
            tr_normalize(&hists)
        } else {
            raw_feature(&hists)
        })
    }
}

/// Gallery and probe features produced under one configuration.
#[derive(Debug, Clone)]
pub struct ExtractedFeatures<T> {
    pub gallery: Vec<FeatureVector<T>>,
    pub probes: Vec<FeatureVector<T>>,
    pub wpca: Option<WpcaModel<T>>,
}

/// Extracts features for both sets. WPCA, when configured, is fitted on the
/// gallery features only and then applied to both sets.
pub fn extract_sets<T: Scalar>(config: &PipelineConfig, gallery: &[Plane<T>], probes: &[Plane<T>]) -> Result<ExtractedFeatures<T>> {
    let extractor = FeatureExtractor::new(config, gallery)?;
    let run = |images: &[Plane<T>]| -> Result<Vec<FeatureVector<T>>> {
        images.par_iter().map(|img| extractor.feature(img)).collect()
    };
    let mut g = run(gallery)?;
    let mut p = run(probes)?;
    let wpca = match config.wpca_dim {
        Some(d) => {
            let model = fit_wpca(&g, d)?;
            g = g.iter().map(|f| model.project(f)).collect::<Result<_>>()?;
            p = p.iter().map(|f| model.project(f)).collect::<Result<_>>()?;
            Some(model)
        }
        None => None,
    };
    Ok(ExtractedFeatures {
        gallery: g,
        probes: p,
        wpca,
    })
}

/// Rank-1 evaluation on in-memory images.
pub fn evaluate_images<T: Scalar>(
    config: &PipelineConfig,
    gallery: &[(u32, Plane<T>)],
    probes: &[(String, u32, Plane<T>)],
) -> Result<EvalReport> {
    let g_imgs: Vec<Plane<T>> = gallery.iter().map(|(_, p)| p.clone()).collect();
    let p_imgs: Vec<Plane<T>> = probes.iter().map(|(_, _, p)| p.clone()).collect();
    let feats = extract_sets(config, &g_imgs, &p_imgs)?;
    let set = GallerySet::new(
        gallery
            .iter()
            .zip(feats.gallery)
            .map(|(&(subject, _), feature)| GalleryEntry { subject, feature })
            .collect(),
    )?;
    let probes: Vec<Probe<T>> = probes
        .iter()
        .zip(feats.probes)
        .map(|((group, subject, _), feature)| Probe {
            group: group.clone(),
            subject: *subject,
            feature,
        })
        .collect();
    rank1_report(&set, &probes, &config.summary())
}

/// Outcome of a manifest evaluation: the report plus probes that could not
/// be read (excluded from the rates).
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub failures: Vec<(PathBuf, String)>,
}

fn load_entries<T: Scalar>(entries: &[&ManifestEntry], config: &PipelineConfig) -> Vec<Result<Plane<T>>> {
    let target = Some((config.crop[0], config.crop[1]));
    entries
        .par_iter()
        .map(|e| load_image_grayscale(&e.path, target))
        .collect()
}

fn gallery_failure(failures: Vec<String>) -> Error {
    Error::InvalidInput(format!(
        "{} gallery image(s) failed to load:\n  {}",
        failures.len(),
        failures.join("\n  ")
    ))
}

/// Loads the gallery images of `manifest`, failing if any cannot be read.
pub fn load_gallery<T: Scalar>(manifest: &DatasetManifest, config: &PipelineConfig) -> Result<Vec<Plane<T>>> {
    let entries: Vec<&ManifestEntry> = manifest.gallery().collect();
    let mut images = Vec::with_capacity(entries.len());
    let mut failures = Vec::new();
    for r in load_entries(&entries, config) {
        match r {
            Ok(img) => images.push(img),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if failures.is_empty() {
        Ok(images)
    } else {
        Err(gallery_failure(failures))
    }
}

/// Reads every image in the manifest and reports rank-1 rates per probe
/// group. Any unreadable gallery image aborts the run; unreadable probes
/// are listed in [`Evaluation::failures`].
pub fn evaluate_manifest<T: Scalar>(manifest: &DatasetManifest, config: &PipelineConfig) -> Result<Evaluation> {
    let gallery_entries: Vec<&ManifestEntry> = manifest.gallery().collect();
    let gallery_images = load_gallery::<T>(manifest, config)?;
    let probe_entries: Vec<&ManifestEntry> = manifest.probes().collect();
    let mut probes = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in probe_entries.iter().zip(load_entries::<T>(&probe_entries, config)) {
        match result {
            Ok(img) => probes.push((entry.group.clone(), entry.subject, img)),
            Err(e) => failures.push((entry.path.clone(), e.to_string())),
        }
    }
    let gallery: Vec<(u32, Plane<T>)> = gallery_entries.iter().map(|e| e.subject).zip(gallery_images).collect();
    let report = evaluate_images(config, &gallery, &probes)?;
    Ok(Evaluation { report, failures })
}

/// Features for every manifest row, in manifest order. WPCA (if configured)
/// is fitted on the gallery rows. Any unreadable image is an error.
pub fn extract_manifest<T: Scalar>(manifest: &DatasetManifest, config: &PipelineConfig) -> Result<FeatureStore> {
    let all: Vec<&ManifestEntry> = manifest.entries.iter().collect();
    let mut images = Vec::with_capacity(all.len());
    let mut failures = Vec::new();
    for (e, r) in all.iter().zip(load_entries::<T>(&all, config)) {
        match r {
            Ok(img) => images.push(img),
            Err(err) => failures.push(format!("{}: {err}", e.path.display())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} image(s) failed to load:\n  {}",
            failures.len(),
            failures.join("\n  ")
        )));
    }
    type Indexed<T> = Vec<(usize, Plane<T>)>;
    let (gallery, rest): (Indexed<T>, Indexed<T>) = images
        .into_iter()
        .enumerate()
        .partition(|(i, _)| all[*i].role == Role::Gallery);
    let g_imgs: Vec<Plane<T>> = gallery.iter().map(|(_, p)| p.clone()).collect();
    let r_imgs: Vec<Plane<T>> = rest.iter().map(|(_, p)| p.clone()).collect();
    let feats = extract_sets(config, &g_imgs, &r_imgs)?;

    let mut ordered: Vec<Option<FeatureVector<T>>> = vec![None; all.len()];
    for ((i, _), f) in gallery.iter().zip(feats.gallery) {
        ordered[*i] = Some(f);
    }
    for ((i, _), f) in rest.iter().zip(feats.probes) {
        ordered[*i] = Some(f);
    }
    let ordered: Vec<FeatureVector<T>> = ordered.into_iter().map(|f| f.expect("every row extracted")).collect();

    let stage = ordered.first().map_or(Stage::RawHist, |f| f.stage);
    let dim = ordered.first().map_or(0, |f| f.dim());
    let groups = manifest.group_ids();
    let mut store = FeatureStore::new(stage, dim);
    for (entry, f) in all.iter().zip(&ordered) {
        store.push(entry.subject, groups[&entry.group], &f.values)?;
    }
    Ok(store)
}
