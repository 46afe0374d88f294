//! Corpus manifest: content hashes for incremental re-ingestion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{content_hash, CorpusError, ToolTag};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub content_hash: String,
    pub chunk_count: u32,
    pub ingested_at: u64,
}

/// One entry per ingested document, keyed by path. Persisted as JSON
/// alongside the vector stores.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: BTreeMap<String, ManifestEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub added: Vec<PathBuf>,
    pub modified: Vec<PathBuf>,
    pub removed: Vec<PathBuf>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.modified.is_empty() && self.removed.is_empty()
    }
}

impl CorpusManifest {
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let data = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&data)?)
    }

    /// Loads the manifest, or returns an empty one if the file is absent.
    pub fn load_or_default(path: &Path) -> Result<Self, CorpusError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }

    /// Atomic replace: write to a sibling temp file, then rename.
    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let tmp = path.with_extension("json.tmp");
        let data = serde_json::to_string_pretty(self)?;
        std::fs::write(&tmp, data)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Classifies the given paths against this manifest by content hash.
    /// Missing or unreadable files listed in the manifest are removed.
    pub fn detect_changes(&self, paths: &[(PathBuf, ToolTag)]) -> ChangeSet {
        let mut set = ChangeSet::default();
        let mut seen = std::collections::BTreeSet::new();
        for (path, _) in paths {
            let key = path.to_string_lossy().into_owned();
            seen.insert(key.clone());
            match std::fs::read_to_string(path) {
                Ok(text) => match self.entries.get(&key) {
                    None => set.added.push(path.clone()),
                    Some(entry) if entry.content_hash != content_hash(&text) => {
                        set.modified.push(path.clone())
                    }
                    Some(_) => {}
                },
                Err(_) => {
                    if self.entries.contains_key(&key) {
                        set.removed.push(path.clone());
                    }
                }
            }
        }
        for key in self.entries.keys() {
            if !seen.contains(key) {
                set.removed.push(PathBuf::from(key));
            }
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn empty_manifest_classifies_all_as_added() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for i in 0..3 {
            let p = dir.path().join(format!("f{i}.txt"));
            fs::write(&p, format!("content {i}")).unwrap();
            paths.push((p, ToolTag::FFmpeg));
        }
        let set = CorpusManifest::default().detect_changes(&paths);
        assert_eq!(set.added.len(), 3);
        assert!(set.modified.is_empty() && set.removed.is_empty());
    }

    #[test]
    fn identical_state_yields_empty_change_set() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        fs::write(&p, "stable").unwrap();
        let mut manifest = CorpusManifest::default();
        manifest.entries.insert(
            p.to_string_lossy().into_owned(),
            ManifestEntry {
                content_hash: content_hash("stable"),
                chunk_count: 1,
                ingested_at: 0,
            },
        );
        let set = manifest.detect_changes(&[(p, ToolTag::FFmpeg)]);
        assert!(set.is_empty());
    }

    #[test]
    fn flipped_byte_classified_as_modified() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        fs::write(&p, "stable").unwrap();
        let mut manifest = CorpusManifest::default();
        manifest.entries.insert(
            p.to_string_lossy().into_owned(),
            ManifestEntry {
                content_hash: content_hash("stable"),
                chunk_count: 1,
                ingested_at: 0,
            },
        );
        fs::write(&p, "sta1le").unwrap();
        let set = manifest.detect_changes(&[(p.clone(), ToolTag::FFmpeg)]);
        assert_eq!(set.modified, vec![p]);
    }

    #[test]
    fn missing_file_classified_as_removed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gone.txt");
        let mut manifest = CorpusManifest::default();
        manifest.entries.insert(
            p.to_string_lossy().into_owned(),
            ManifestEntry {
                content_hash: content_hash("x"),
                chunk_count: 1,
                ingested_at: 0,
            },
        );
        let set = manifest.detect_changes(&[(p.clone(), ToolTag::FFmpeg)]);
        assert_eq!(set.removed, vec![p]);
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let mut manifest = CorpusManifest::default();
        manifest.entries.insert(
            "doc.txt".into(),
            ManifestEntry {
                content_hash: content_hash("doc"),
                chunk_count: 7,
                ingested_at: 1234,
            },
        );
        manifest.save(&path).unwrap();
        assert_eq!(CorpusManifest::load(&path).unwrap(), manifest);
    }
}
