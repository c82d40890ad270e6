//! Cosine nearest-neighbour identification and rank-1 evaluation reports.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::linalg::{dot, norm};
use crate::tr_norm::FeatureVector;
use crate::{Error, Result, Scalar};

/// `1 - a.b / (|a| |b|)`, clamped to `[0, 2]`.
///
/// Two zero vectors are an error; a single zero vector is treated as
/// orthogonal to everything (distance 1).
pub fn cosine_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    match (na == T::zero(), nb == T::zero()) {
        (true, true) => Err(Error::ZeroVectors),
        (true, false) | (false, true) => Ok(T::one()),
        _ => {
            let d = T::one() - dot(a, b) / (na * nb);
            Ok(d.max(T::zero()).min(T::lit(2.0)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry<T> {
    pub subject: u32,
    pub feature: FeatureVector<T>,
}

/// Enrolled features; nonempty, one stage and dimension throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct GallerySet<T> {
    entries: Vec<GalleryEntry<T>>,
}

impl<T: Scalar> GallerySet<T> {
    pub fn new(entries: Vec<GalleryEntry<T>>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::InvalidInput("gallery is empty".into()))?;
        let (dim, stage) = (first.feature.dim(), first.feature.stage);
        for e in &entries {
            if e.feature.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.feature.dim(),
                });
            }
            if e.feature.stage != stage {
                return Err(Error::InvalidInput(format!(
                    "gallery mixes {} and {} features",
                    stage, e.feature.stage
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[GalleryEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].feature.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match<T> {
    pub subject: u32,
    /// Index of the winning gallery entry.
    pub index: usize,
    pub distance: T,
}

/// Nearest gallery entry by cosine distance; ties go to the lowest index.
pub fn identify<T: Scalar>(probe: &FeatureVector<T>, gallery: &GallerySet<T>) -> Result<Match<T>> {
    let mut best: Option<Match<T>> = None;
    for (index, entry) in gallery.entries.iter().enumerate() {
        let distance = cosine_distance(&probe.values, &entry.feature.values)?;
        if best.is_none_or(|b| distance < b.distance) {
            best = Some(Match {
                subject: entry.subject,
                index,
                distance,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("gallery is empty".into()))
}

/// Rank-1 result of one probe group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRate {
    pub group: String,
    pub n_probes: usize,
    pub n_correct: usize,
    pub rate_percent: f64,
}

/// Per-group rank-1 rates; `average` is the mean of the group rates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub groups: Vec<GroupRate>,
    pub average: f64,
    /// Free-form description of the configuration that produced the report.
    pub config_echo: String,
}

/// A probe to identify, labelled with its group and true subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe<T> {
    pub group: String,
    pub subject: u32,
    pub feature: FeatureVector<T>,
}

/// Identifies every probe (in parallel) and tallies rank-1 rates per group.
/// Groups are reported in order of first appearance.
pub fn rank1_report<T: Scalar>(gallery: &GallerySet<T>, probes: &[Probe<T>], config_echo: &str) -> Result<EvalReport> {
    let hits = probes
        .par_iter()
        .map(|p| identify(&p.feature, gallery).map(|m| m.subject == p.subject))
        .collect::<Result<Vec<bool>>>()?;

    let mut groups: Vec<GroupRate> = Vec::new();
    for (probe, hit) in probes.iter().zip(hits) {
        let idx = match groups.iter().position(|g| g.group == probe.group) {
            Some(i) => i,
            None => {
                groups.push(GroupRate {
                    group: probe.group.clone(),
                    n_probes: 0,
                    n_correct: 0,
                    rate_percent: 0.0,
                });
                groups.len() - 1
            }
        };
        groups[idx].n_probes += 1;
        groups[idx].n_correct += usize::from(hit);
    }
    for g in &mut groups {
        g.rate_percent = 100.0 * g.n_correct as f64 / g.n_probes as f64;
    }
    let average = if groups.is_empty() {
        0.0
    } else {
        groups.iter().map(|g| g.rate_percent).sum::<f64>() / groups.len() as f64
    };
    Ok(EvalReport {
        groups,
        average,
        config_echo: config_echo.to_owned(),
    })
}

impl EvalReport {
    /// `group,rate_percent,n_probes` rows plus a final `Avg` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,rate_percent,n_probes\n");
        for g in &self.groups {
            let _ = writeln!(out, "{},{:.4},{}", g.group, g.rate_percent, g.n_probes);
        }
        let total: usize = self.groups.iter().map(|g| g.n_probes).sum();
        let _ = writeln!(out, "Avg,{:.4},{}", self.average, total);
        out
    }

    /// Aligned text table with one column per group and an `Avg` column.
    pub fn to_table(&self) -> String {
        let width = self
            .groups
            .iter()
            .map(|g| g.group.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut head = String::new();
        let mut rates = String::new();
        let mut counts = String::new();
        for g in &self.groups {
            let _ = write!(head, "{:>width$} ", g.group);
            let _ = write!(rates, "{:>width$.3} ", g.rate_percent);
            let _ = write!(counts, "{:>width$} ", g.n_probes);
        }
        let _ = write!(head, "{:>width$}", "Avg");
        let _ = write!(rates, "{:>width$.3}", self.average);
        let mut out = String::new();
        if !self.config_echo.is_empty() {
            let _ = writeln!(out, "# {}", self.config_echo.lines().collect::<Vec<_>>().join("\n# "));
        }
        let _ = writeln!(out, "{:<8}{}", "", head);
        let _ = writeln!(out, "{:<8}{}", "rate %", rates);
        let _ = writeln!(out, "{:<8}{}", "probes", counts.trim_end());
        out
    }
}
