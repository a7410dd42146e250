use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use super::{CorpusError, Dataset, RepoRecord};

/// Version tag written on every dataset line.
pub const DATASET_SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes one JSON object per line, each carrying `schema_version`.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), CorpusError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for record in &dataset.records {
        let mut value = serde_json::to_value(record).expect("records serialize");
        if let Value::Object(map) = &mut value {
            map.insert("schema_version".into(), Value::from(DATASET_SCHEMA_VERSION));
        }
        serde_json::to_writer(&mut w, &value).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a dataset written by [`save_dataset`]. Lines with another schema
/// version, or with fields this version does not know, are rejected.
pub fn load_dataset(path: &Path) -> Result<Dataset, CorpusError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let mismatch = |detail: String| CorpusError::SchemaMismatch {
            line: i + 1,
            expected: DATASET_SCHEMA_VERSION,
            detail,
        };
        let mut value: Value = serde_json::from_str(&line).map_err(|e| mismatch(format!("invalid JSON: {e}")))?;
        let Value::Object(map) = &mut value else {
            return Err(mismatch("line is not a JSON object".into()));
        };
        match map.remove("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == DATASET_SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(mismatch(format!("found {v}"))),
            None => return Err(mismatch("schema_version missing".into())),
        }
        let record: RepoRecord = serde_json::from_value(value).map_err(|e| mismatch(e.to_string()))?;
        records.push(record);
    }
    Ok(Dataset::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::record;
    use crate::corpus::DomainLabel;

    #[test]
    fn empty_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        save_dataset(&Dataset::default(), &p).unwrap();
        assert!(load_dataset(&p).unwrap().is_empty());
    }

    #[test]
    fn toy_roundtrip_preserves_absence() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let mut a = record("a", Some(DomainLabel::Documentation));
        a.description = Some("docs".into());
        a.languages.insert("HTML".into(), 3);
        let b = record("b", None);
        let mut c = record("c", Some(DomainLabel::SoftwareTools));
        c.licence_key = Some("mit".into());
        let ds = Dataset::new(vec![a, b, c]);
        save_dataset(&ds, &p).unwrap();
        let back = load_dataset(&p).unwrap();
        assert_eq!(back, ds);
        assert!(back.records[1].description.is_none());
    }

    #[test]
    fn bumped_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        save_dataset(&Dataset::new(vec![record("a", None)]), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replace("\"schema_version\":1", "\"schema_version\":2");
        fs::write(&p, text).unwrap();
        assert!(matches!(load_dataset(&p), Err(CorpusError::SchemaMismatch { line: 1, .. })));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        save_dataset(&Dataset::new(vec![record("a", None)]), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replacen('{', "{\"surprise\":true,", 1);
        fs::write(&p, text).unwrap();
        match load_dataset(&p) {
            Err(CorpusError::SchemaMismatch { detail, .. }) => assert!(detail.contains("surprise")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_dataset(Path::new("/nonexistent/x.jsonl")),
            Err(CorpusError::Io { .. })
        ));
    }
}
