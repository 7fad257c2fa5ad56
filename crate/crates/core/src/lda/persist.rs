use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TopicModel, TrainingMeta, Vocabulary};
use crate::{csvutil, Error, Result};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u64,
    #[serde(rename = "K")]
    k: usize,
    alpha: f64,
    beta: f64,
    vocab: Vec<String>,
    n_kw: Vec<Vec<u32>>,
    meta: TrainingMeta,
}

pub fn save_model(model: &TopicModel, path: &Path) -> Result<()> {
    let v = model.vocabulary().len();
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        k: model.num_topics(),
        alpha: model.alpha(),
        beta: model.beta(),
        vocab: model.vocabulary().words().to_vec(),
        n_kw: (0..model.num_topics())
            .map(|t| model.n_kw[t * v..(t + 1) * v].to_vec())
            .collect(),
        meta: model.meta.clone(),
    };
    let mut w = csvutil::create(path)?;
    serde_json::to_writer(&mut w, &file)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TopicModel> {
    let mut text = String::new();
    csvutil::open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

pub(crate) fn model_from_json(text: &str) -> Result<TopicModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::ModelFormat("missing or non-integer `version`".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if file.n_kw.len() != file.k {
        return Err(Error::ModelFormat(format!(
            "n_kw has {} rows, expected K = {}",
            file.n_kw.len(),
            file.k
        )));
    }
    if let Some(row) = file.n_kw.iter().position(|r| r.len() != file.vocab.len()) {
        return Err(Error::ModelFormat(format!(
            "n_kw row {row} has {} columns, expected V = {}",
            file.n_kw[row].len(),
            file.vocab.len()
        )));
    }
    let vocabulary =
        Vocabulary::from_words(file.vocab).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let counts = file.n_kw.into_iter().flatten().collect();
    TopicModel::from_counts(file.k, file.alpha, file.beta, counts, vocabulary, file.meta)
        .map_err(|e| Error::ModelFormat(e.to_string()))
}
