//! Reading and writing manifests, AEMB files and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use zeroshot_core::{decode_aemb, encode_aemb, DatasetManifest, EmbeddingMatrix, ManifestDocument};

use crate::error::{CliError, Result};

const MANIFEST_KEYS: &[&str] = &["dataset_id", "task_type", "classes", "samples"];
const CLASS_KEYS: &[&str] = &["class_id", "raw_label", "descriptions"];
const SAMPLE_KEYS: &[&str] = &["sample_id", "truth", "row"];

/// Loads and validates a manifest.
///
/// Unknown keys are an error in strict mode and a warning otherwise.
pub fn load_manifest(path: &Path, strict: bool) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_manifest(&text, path, strict)
}

pub fn parse_manifest(text: &str, path: &Path, strict: bool) -> Result<DatasetManifest> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::json(path, e))?;
    let unknown = unknown_manifest_keys(&value);
    if !unknown.is_empty() {
        if strict {
            return Err(CliError::UnknownKeys {
                path: path.to_path_buf(),
                keys: unknown,
            });
        }
        log::warn!(
            "{}: ignoring unknown keys {}",
            path.display(),
            unknown.join(", ")
        );
    }
    let doc: ManifestDocument =
        serde_json::from_value(value).map_err(|e| CliError::json(path, e))?;
    DatasetManifest::try_from(doc).map_err(|source| CliError::Manifest {
        path: path.to_path_buf(),
        source,
    })
}

fn unknown_manifest_keys(value: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let Some(top) = value.as_object() else {
        return out;
    };
    collect_unknown(top, MANIFEST_KEYS, "", &mut out);
    for (list, allowed) in [("classes", CLASS_KEYS), ("samples", SAMPLE_KEYS)] {
        if let Some(items) = top.get(list).and_then(Value::as_array) {
            for (i, item) in items.iter().enumerate() {
                if let Some(obj) = item.as_object() {
                    collect_unknown(obj, allowed, &format!("{list}[{i}]."), &mut out);
                }
            }
        }
    }
    out
}

fn collect_unknown(
    obj: &serde_json::Map<String, Value>,
    allowed: &[&str],
    prefix: &str,
    out: &mut Vec<String>,
) {
    out.extend(
        obj.keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .map(|k| format!("{prefix}{k}")),
    );
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_aemb(&bytes).map_err(|source| CliError::Aemb {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let bytes = encode_aemb(matrix).map_err(|source| CliError::Aemb {
        path: path.to_path_buf(),
        source,
    })?;
    write_bytes(path, &bytes)
}

/// Writes a file, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::json(path, e))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// One compact JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut bytes = Vec::new();
    for r in records {
        serde_json::to_writer(&mut bytes, r).map_err(|e| CliError::json(path, e))?;
        bytes.push(b'\n');
    }
    write_bytes(path, &bytes)
}

/// Resolves `path` against `base` unless it is absolute.
pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset_id": "tiny",
        "task_type": "single_label",
        "classes": [
            {"class_id": "dog", "raw_label": "dog_barking", "descriptions": {"base": "Woof."}},
            {"class_id": "rain", "raw_label": "rain"}
        ],
        "samples": [{"sample_id": "a", "truth": [1], "row": 0}]
    }"#;

    #[test]
    fn parses_minimal_manifest() {
        let m = parse_manifest(MINIMAL, Path::new("m.json"), true).unwrap();
        assert_eq!((m.n_classes(), m.n_samples()), (2, 1));
    }

    #[test]
    fn unknown_keys_strict_vs_lenient() {
        let text = MINIMAL.replace("\"row\": 0}", "\"row\": 0, \"split\": \"test\"}");
        let err = parse_manifest(&text, Path::new("m.json"), true).unwrap_err();
        match err {
            CliError::UnknownKeys { keys, .. } => assert_eq!(keys, ["samples[0].split"]),
            other => panic!("{other}"),
        }
        assert!(parse_manifest(&text, Path::new("m.json"), false).is_ok());
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let dup = MINIMAL.replace("\"class_id\": \"rain\"", "\"class_id\": \"dog\"");
        let err = parse_manifest(&dup, Path::new("m.json"), false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`dog`"));
        let err = parse_manifest("{", Path::new("m.json"), false).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let bad_variant = MINIMAL.replace("\"base\"", "\"poetic\"");
        assert_eq!(
            parse_manifest(&bad_variant, Path::new("m.json"), false)
                .unwrap_err()
                .exit_code(),
            1
        );
    }
}
