use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Gallery,
    Probe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub subject: u32,
    pub role: Role,
    pub group: String,
}

/// Image list with identities, split into gallery and probe rows.
///
/// CSV layout: header `path,subject,role,group`, one image per row. Paths
/// must be unique and may not contain commas; every probe subject must
/// also appear in the gallery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

const HEADER: [&str; 4] = ["path", "subject", "role", "group"];

impl DatasetManifest {
    /// Parses manifest CSV; relative paths are joined onto `base`.
    pub fn from_reader<R: Read>(input: R, base: Option<&Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::None)
            .from_reader(input);
        let header = reader.headers().map_err(|e| Error::Manifest(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(Error::Manifest(format!(
                "header must be `path,subject,role,group`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::Manifest(format!("line {line}: {e}")))?;
            let path = &record[0];
            if path.is_empty() {
                return Err(Error::Manifest(format!("line {line}: empty path")));
            }
            if path.contains(',') {
                return Err(Error::Manifest(format!("line {line}: path contains a comma")));
            }
            let subject = record[1]
                .parse::<u32>()
                .map_err(|e| Error::Manifest(format!("line {line}: subject `{}`: {e}", &record[1])))?;
            let role = match &record[2] {
                "gallery" => Role::Gallery,
                "probe" => Role::Probe,
                other => return Err(Error::Manifest(format!("line {line}: unknown role `{other}`"))),
            };
            let path = PathBuf::from(path);
            let path = match base {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path,
            };
            entries.push(ManifestEntry {
                path,
                subject,
                role,
                group: record[3].to_string(),
            });
        }
        let manifest = Self { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.path) {
                return Err(Error::Manifest(format!("duplicate path {}", e.path.display())));
            }
        }
        let gallery: HashSet<u32> = self.gallery().map(|e| e.subject).collect();
        if gallery.is_empty() {
            return Err(Error::Manifest("no gallery rows".into()));
        }
        if let Some(p) = self.probes().find(|p| !gallery.contains(&p.subject)) {
            return Err(Error::Manifest(format!(
                "probe subject {} ({}) has no gallery image",
                p.subject,
                p.path.display()
            )));
        }
        Ok(())
    }

    pub fn gallery(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Gallery)
    }

    pub fn probes(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Probe)
    }

    /// Group labels numbered by first appearance in the manifest.
    pub fn group_ids(&self) -> HashMap<String, u16> {
        let mut ids = HashMap::new();
        for e in &self.entries {
            let next = ids.len() as u16;
            ids.entry(e.group.clone()).or_insert(next);
        }
        ids
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,subject,role,group\n");
        for e in &self.entries {
            let role = match e.role {
                Role::Gallery => "gallery",
                Role::Probe => "probe",
            };
            out.push_str(&format!("{},{},{},{}\n", e.path.display(), e.subject, role, e.group));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "path,subject,role,group\na.pgm,1,gallery,fa\nb.pgm,2,gallery,fa\nc.pgm,1,probe,fb\n";

    #[test]
    fn parses_and_resolves_paths() {
        let m = DatasetManifest::from_reader(GOOD.as_bytes(), Some(Path::new("/data"))).unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.entries[0].path, PathBuf::from("/data/a.pgm"));
        assert_eq!(m.gallery().count(), 2);
        assert_eq!(m.probes().next().unwrap().group, "fb");
        let ids = m.group_ids();
        assert_eq!((ids["fa"], ids["fb"]), (0, 1));
        let again = DatasetManifest::from_reader(m.to_csv().as_bytes(), None).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_invalid_manifests() {
        let cases = [
            "file,subject,role,group\na.pgm,1,gallery,fa\n",
            "path,subject,role,group\na.pgm,1,gallery,fa\na.pgm,1,probe,fb\n",
            "path,subject,role,group\na.pgm,1,gallery,fa\nb.pgm,9,probe,fb\n",
            "path,subject,role,group\na.pgm,x,gallery,fa\n",
            "path,subject,role,group\na.pgm,1,train,fa\n",
            "path,subject,role,group\n\"a,b.pgm\",1,gallery,fa\n",
            "path,subject,role,group\nb.pgm,1,probe,fb\n",
        ];
        for text in cases {
            assert!(DatasetManifest::from_reader(text.as_bytes(), None).is_err(), "{text}");
        }
    }
}
