use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{Corpus, RawMessage, UserDocument};
use crate::{csvutil, Error, Result};

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let reader = csvutil::open(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display(), i + 1, e.to_string()))?;
        out.push((i + 1, value));
    }
    Ok(out)
}

/// Reads `{"user_id": .., "text": .., "is_retweet"?: ..}` objects, one per line.
pub fn read_messages_jsonl(path: &Path) -> Result<Vec<RawMessage>> {
    read_jsonl::<RawMessage>(path)?
        .into_iter()
        .map(|(line, m)| {
            if m.user_id.is_empty() {
                Err(Error::parse(path.display(), line, "empty user_id"))
            } else {
                Ok(m)
            }
        })
        .collect()
}

/// Reads a `user_id,score` CSV.
pub fn read_scores_csv(path: &Path) -> Result<HashMap<String, f64>> {
    let mut rdr = csvutil::reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "user_id" || &headers[1] != "score" {
        return Err(Error::parse(
            path.display(),
            1,
            "expected header `user_id,score`",
        ));
    }
    let mut scores = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let score = csvutil::parse_f64(path, &rec, 1)?;
        scores.insert(rec[0].to_owned(), score);
    }
    Ok(scores)
}

pub fn write_corpus_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = csvutil::create(path)?;
    for d in &corpus.documents {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_corpus_jsonl(path: &Path) -> Result<Corpus> {
    let docs = read_jsonl::<UserDocument>(path)?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    Corpus::new(docs, format!("loaded from {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = Corpus::new(
            vec![
                UserDocument {
                    user_id: "a".into(),
                    tokens: vec!["中国".into(), "人民".into()],
                    raw_byte_length: 12,
                    score: Some(71.5),
                },
                UserDocument {
                    user_id: "b".into(),
                    tokens: vec![],
                    raw_byte_length: 0,
                    score: None,
                },
            ],
            "",
        )
        .unwrap();
        write_corpus_jsonl(&corpus, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.lines().nth(1).unwrap().contains("score"));
        assert_eq!(
            read_corpus_jsonl(&path).unwrap().documents,
            corpus.documents
        );
    }

    #[test]
    fn messages_and_scores() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.jsonl");
        std::fs::write(&m, "{\"user_id\":\"a\",\"text\":\"x y\"}\n\n{\"user_id\":\"b\",\"text\":\"z\",\"is_retweet\":true}\n").unwrap();
        let msgs = read_messages_jsonl(&m).unwrap();
        assert_eq!(msgs.len(), 2);
        assert!(msgs[1].is_retweet);

        std::fs::write(&m, "{\"user_id\":\"\",\"text\":\"x\"}\n").unwrap();
        assert!(matches!(
            read_messages_jsonl(&m),
            Err(Error::Parse { line: 1, .. })
        ));

        let s = dir.path().join("s.csv");
        std::fs::write(&s, "user_id,score\na,3.5\nb,70\n").unwrap();
        let scores = read_scores_csv(&s).unwrap();
        assert_eq!(scores["b"], 70.0);
        std::fs::write(&s, "user_id,score\na,abc\n").unwrap();
        assert!(read_scores_csv(&s).is_err());
        std::fs::write(&s, "id,value\na,1\n").unwrap();
        assert!(read_scores_csv(&s).is_err());
    }
}
