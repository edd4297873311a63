use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageId, NodeRef, VocabError, Vocabulary};
use crate::fsutil::write_atomic;

pub const VOCAB_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    version: u32,
    tokenizer_id: String,
    source_graphs: Vec<String>,
    max_tokens: usize,
    entries: Vec<EntryRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    node_id: String,
    graph_id: String,
    tokens: Vec<String>,
}

fn to_json(vocab: &Vocabulary) -> String {
    let file = VocabFile {
        version: VOCAB_FORMAT_VERSION,
        tokenizer_id: vocab.tokenizer_id.clone(),
        source_graphs: vocab.source_graphs.clone(),
        max_tokens: vocab.max_tokens,
        entries: vocab
            .entries
            .iter()
            .map(|(k, v)| EntryRecord {
                node_id: k.node_id.clone(),
                graph_id: k.graph_id.clone(),
                tokens: v.tokens.clone(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("vocabulary serializes");
    text.push('\n');
    text
}

/// Write `vocab` as JSON, entries sorted by (graph_id, node_id).
pub fn serialize(vocab: &Vocabulary, path: &Path) -> Result<(), VocabError> {
    write_atomic(path, to_json(vocab).as_bytes())?;
    Ok(())
}

/// Read a vocabulary file. With `expected_tokenizer`, a file written with
/// another tokenizer is rejected.
pub fn deserialize(path: &Path, expected_tokenizer: Option<&str>) -> Result<Vocabulary, VocabError> {
    let text = std::fs::read_to_string(path)?;
    let file: VocabFile = serde_json::from_str(&text).map_err(|e| VocabError::CorruptFile(e.to_string()))?;
    if file.version != VOCAB_FORMAT_VERSION {
        return Err(VocabError::CorruptFile(format!("unsupported version {}", file.version)));
    }
    if let Some(expected) = expected_tokenizer {
        if expected != file.tokenizer_id {
            return Err(VocabError::TokenizerMismatch {
                expected: expected.to_owned(),
                found: file.tokenizer_id,
            });
        }
    }
    let mut entries = BTreeMap::new();
    for e in file.entries {
        let node = NodeRef::new(e.graph_id, e.node_id);
        let id = LanguageId::new(e.tokens)
            .ok_or_else(|| VocabError::CorruptFile(format!("entry {node} has an invalid ID")))?;
        if entries.insert(node.clone(), id).is_some() {
            return Err(VocabError::CorruptFile(format!("duplicate entry {node}")));
        }
    }
    Vocabulary::from_entries(file.tokenizer_id, file.source_graphs, file.max_tokens, entries).map_err(|e| match e {
        VocabError::EmptyRepresentation(n) => VocabError::CorruptFile(format!("entry {n} is empty")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::WordTokenizer;
    use crate::vocab::build_vocabulary;

    #[test]
    fn round_trip_is_byte_identical() {
        let reprs: BTreeMap<String, String> = (0..10_000)
            .map(|i| (format!("n{i:05}"), format!("topic {} item {}", i % 97, i % 13)))
            .collect();
        let v = build_vocabulary(&reprs, &WordTokenizer, 10, "big").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        serialize(&v, &p1).unwrap();
        let back = deserialize(&p1, Some("word-lower-v1")).unwrap();
        assert_eq!(back, v);
        serialize(&back, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.json");
        std::fs::write(&p, "{not json").unwrap();
        assert!(matches!(deserialize(&p, None), Err(VocabError::CorruptFile(_))));

        let dup = r#"{"version":1,"tokenizer_id":"t","source_graphs":["g"],"max_tokens":10,
            "entries":[{"node_id":"a","graph_id":"g","tokens":["x"]},{"node_id":"b","graph_id":"g","tokens":["x"]}]}"#;
        std::fs::write(&p, dup).unwrap();
        assert!(matches!(deserialize(&p, None), Err(VocabError::CorruptFile(_))));

        let ok = r#"{"version":1,"tokenizer_id":"t","source_graphs":["g"],"max_tokens":10,
            "entries":[{"node_id":"a","graph_id":"g","tokens":["x"]}]}"#;
        std::fs::write(&p, ok).unwrap();
        assert!(deserialize(&p, None).is_ok());
        assert!(matches!(
            deserialize(&p, Some("word-lower-v1")),
            Err(VocabError::TokenizerMismatch { .. })
        ));
    }
}
