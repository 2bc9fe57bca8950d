//! Canonical JSON annotation documents.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    normalize_path, AnnotationError, AnnotationKind, AnnotationStatus, AnnotationStore,
    SoftwareNote,
};
use crate::ingest::snapshot::{path_label, to_canonical_json, FORMAT_VERSION};
use crate::timefmt;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreDoc {
    format_version: u64,
    collection_root: String,
    #[serde(with = "timefmt")]
    modified_at: DateTime<Utc>,
    entries: Vec<EntryDoc>,
    software_notes: Vec<NoteDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    path: String,
    kind: KindDoc,
    contexts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Relevant,
    Excluded,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoteDoc {
    applies_to: String,
    software: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<serde_json::Value>,
}

impl From<KindDoc> for AnnotationKind {
    fn from(k: KindDoc) -> Self {
        match k {
            KindDoc::Relevant => AnnotationKind::Relevant,
            KindDoc::Excluded => AnnotationKind::Excluded,
        }
    }
}

impl From<AnnotationKind> for KindDoc {
    fn from(k: AnnotationKind) -> Self {
        match k {
            AnnotationKind::Relevant => KindDoc::Relevant,
            AnnotationKind::Excluded => KindDoc::Excluded,
        }
    }
}

fn parse_error(at: impl Into<String>, message: impl Into<String>) -> AnnotationError {
    AnnotationError::Parse {
        at: at.into(),
        message: message.into(),
    }
}

impl AnnotationStore {
    /// Canonical document text: entries by path, contexts sorted, notes by
    /// `(applies_to, software)`.
    pub fn to_json(&self) -> String {
        let doc = StoreDoc {
            format_version: FORMAT_VERSION,
            collection_root: self.collection_root.clone(),
            modified_at: self.modified_at,
            entries: self
                .entries
                .iter()
                .map(|(path, status)| EntryDoc {
                    path: path.clone(),
                    kind: status.kind.into(),
                    contexts: status.contexts.iter().cloned().collect(),
                    note: status.note.clone(),
                })
                .collect(),
            software_notes: self
                .software_notes
                .iter()
                .map(|n| NoteDoc {
                    applies_to: n.applies_to.clone(),
                    software: n.software.clone(),
                    note: n.note.clone(),
                })
                .collect(),
        };
        to_canonical_json(&doc)
    }

    /// Parses and validates an annotation document. Entry and note order in
    /// the input does not matter.
    pub fn from_json(text: &str) -> Result<AnnotationStore, AnnotationError> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| parse_error("<document>", e.to_string()))?;
        match probe.format_version.as_ref().map(|v| (v, v.as_u64())) {
            None => {
                return Err(parse_error(
                    "format_version",
                    "missing field `format_version`",
                ))
            }
            Some((_, Some(FORMAT_VERSION))) => {}
            Some((_, Some(other))) => return Err(AnnotationError::UnsupportedVersion(other)),
            Some((v, None)) => {
                return Err(parse_error(
                    "format_version",
                    format!("expected an unsigned integer, found {v}"),
                ))
            }
        }

        let mut de = serde_json::Deserializer::from_str(text);
        let doc: StoreDoc = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| parse_error(path_label(e.path()), e.inner().to_string()))?;
        de.end().map_err(|e| parse_error("<end>", e.to_string()))?;

        let mut entries = BTreeMap::new();
        for (i, entry) in doc.entries.into_iter().enumerate() {
            let at = format!("entries[{i}]");
            let path = normalize_path(&entry.path)
                .map_err(|e| parse_error(format!("{at}.path"), e.to_string()))?;
            if path != entry.path {
                return Err(parse_error(
                    format!("{at}.path"),
                    format!("path {:?} is not normalized", entry.path),
                ));
            }
            let status =
                AnnotationStatus::from_parts(entry.kind.into(), &entry.contexts, entry.note)
                    .map_err(|e| parse_error(format!("{at}.contexts"), e.to_string()))?;
            if entries.insert(path.clone(), status).is_some() {
                return Err(AnnotationError::DuplicateEntry(path));
            }
        }

        let mut notes = Vec::with_capacity(doc.software_notes.len());
        for (i, n) in doc.software_notes.into_iter().enumerate() {
            let note = SoftwareNote::new(n.applies_to, n.software, n.note)
                .map_err(|e| parse_error(format!("software_notes[{i}]"), e.to_string()))?;
            notes.push(note);
        }
        notes.sort_by(|a, b| a.key().cmp(&b.key()));
        if let Some(w) = notes.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(AnnotationError::DuplicateEntry(format!(
                "software note {}/{}",
                w[0].applies_to, w[0].software
            )));
        }

        Ok(AnnotationStore {
            collection_root: doc.collection_root,
            entries,
            software_notes: notes,
            modified_at: doc.modified_at,
        })
    }
}

/// Writes the canonical document atomically.
pub fn save_annotations(
    store: &AnnotationStore,
    dest: impl AsRef<Path>,
) -> Result<(), AnnotationError> {
    let dest = dest.as_ref();
    crate::ingest::write_atomic(dest, store.to_json().as_bytes()).map_err(|source| {
        AnnotationError::Io {
            path: dest.to_path_buf(),
            source,
        }
    })
}

pub fn load_annotations(src: impl AsRef<Path>) -> Result<AnnotationStore, AnnotationError> {
    let src = src.as_ref();
    let text = fs::read_to_string(src).map_err(|source| AnnotationError::Io {
        path: src.to_path_buf(),
        source,
    })?;
    AnnotationStore::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2022, 5, 1, 12, 0, 0).unwrap()
    }

    #[test]
    fn empty_store_document() {
        let text = AnnotationStore::new("Drive", at()).to_json();
        assert_eq!(
            text,
            "{\n  \"format_version\": 1,\n  \"collection_root\": \"Drive\",\n  \"modified_at\": \"2022-05-01T12:00:00Z\",\n  \"entries\": [],\n  \"software_notes\": []\n}\n"
        );
        assert_eq!(
            AnnotationStore::from_json(&text).unwrap(),
            AnnotationStore::new("Drive", at())
        );
    }

    const UNSORTED: &str = r#"{"format_version":1,"collection_root":"Drive","modified_at":"2022-05-01T12:00:00Z",
        "entries":[
          {"path":"Drive/b","kind":"relevant","contexts":["theme","family"],"note":"letters"},
          {"path":"Drive/a","kind":"excluded","contexts":[]}],
        "software_notes":[{"applies_to":"psd","software":"Photoshop"},{"applies_to":"cdr","software":"CorelDRAW"}]}"#;

    #[test]
    fn canonicalizes_order() {
        let store = AnnotationStore::from_json(UNSORTED).unwrap();
        let text = store.to_json();
        let a = text.find("Drive/a").unwrap();
        let b = text.find("Drive/b").unwrap();
        assert!(a < b);
        assert!(text.find("\"family\"").unwrap() < text.find("\"theme\"").unwrap());
        assert!(text.find("cdr").unwrap() < text.find("psd").unwrap());
        assert_eq!(AnnotationStore::from_json(&text).unwrap().to_json(), text);
    }

    #[test]
    fn rejects_contexts_on_excluded() {
        let bad = UNSORTED.replace(
            r#""kind":"excluded","contexts":[]"#,
            r#""kind":"excluded","contexts":["family"]"#,
        );
        assert!(matches!(
            AnnotationStore::from_json(&bad),
            Err(AnnotationError::Parse { .. })
        ));
    }

    #[test]
    fn rejects_duplicates() {
        let dup = UNSORTED.replace("Drive/b", "Drive/a");
        assert!(
            matches!(AnnotationStore::from_json(&dup), Err(AnnotationError::DuplicateEntry(p)) if p == "Drive/a")
        );
        let dup_note = UNSORTED.replace(
            "\"cdr\",\"software\":\"CorelDRAW\"",
            "\"psd\",\"software\":\"Photoshop\"",
        );
        assert!(matches!(
            AnnotationStore::from_json(&dup_note),
            Err(AnnotationError::DuplicateEntry(_))
        ));
    }

    #[test]
    fn rejects_version_and_schema_errors() {
        let v2 = UNSORTED.replace("\"format_version\":1", "\"format_version\":2");
        assert!(matches!(
            AnnotationStore::from_json(&v2),
            Err(AnnotationError::UnsupportedVersion(2))
        ));
        let kind = UNSORTED.replace("\"relevant\"", "\"maybe\"");
        match AnnotationStore::from_json(&kind) {
            Err(AnnotationError::Parse { at, .. }) => assert_eq!(at, "entries[0].kind"),
            other => panic!("unexpected {other:?}"),
        }
        let path = UNSORTED.replace("Drive/b", "/Drive/b");
        assert!(matches!(
            AnnotationStore::from_json(&path),
            Err(AnnotationError::Parse { .. })
        ));
        assert!(matches!(
            AnnotationStore::from_json("[]"),
            Err(AnnotationError::Parse { .. })
        ));
        assert!(matches!(
            AnnotationStore::from_json("{}"),
            Err(AnnotationError::Parse { .. })
        ));
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("notes.json");
        let store = AnnotationStore::from_json(UNSORTED).unwrap();
        save_annotations(&store, &dest).unwrap();
        assert_eq!(load_annotations(&dest).unwrap(), store);
        assert_eq!(fs::read_to_string(&dest).unwrap(), store.to_json());
    }
}
