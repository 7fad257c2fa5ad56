use std::collections::HashSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{csvutil, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterMode {
    /// Input is already segmented; tokens are separated by whitespace.
    #[default]
    PreSegmented,
    /// Forward maximum matching against a word list.
    MaxMatch,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmenterConfig {
    #[serde(default)]
    pub mode: SegmenterMode,
    #[serde(default)]
    pub dictionary_path: Option<PathBuf>,
    #[serde(default)]
    pub stopword_path: Option<PathBuf>,
}

/// Reads a one-entry-per-line UTF-8 word list. Blank lines and surrounding
/// whitespace are ignored.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let reader = csvutil::open(path)?;
    let mut words = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(path.display(), i + 1, "invalid UTF-8"),
            _ => Error::io(path, e),
        })?;
        let word = line.trim().trim_start_matches('\u{feff}');
        if !word.is_empty() {
            words.push(word.to_owned());
        }
    }
    Ok(words)
}

#[derive(Debug, Clone)]
pub enum Segmenter {
    PreSegmented,
    MaxMatch {
        words: HashSet<String>,
        /// Longest dictionary entry, in chars.
        max_chars: usize,
    },
}

impl Segmenter {
    pub fn from_config(config: &SegmenterConfig) -> Result<Self> {
        match config.mode {
            SegmenterMode::PreSegmented => Ok(Segmenter::PreSegmented),
            SegmenterMode::MaxMatch => {
                let path = config.dictionary_path.as_ref().ok_or_else(|| {
                    Error::Config("max_match segmentation requires a dictionary path".into())
                })?;
                Self::max_match(read_word_list(path)?)
            }
        }
    }

    pub fn max_match<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: HashSet<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::Config(
                "max_match segmentation requires a dictionary with at least one entry".into(),
            ));
        }
        let max_chars = words.iter().map(|w| w.chars().count()).max().unwrap_or(1);
        Ok(Segmenter::MaxMatch { words, max_chars })
    }

    /// Splits `text` into tokens. Whitespace always separates tokens; in
    /// max-match mode each whitespace-free run is further cut greedily at the
    /// longest dictionary word starting at the current position, falling back
    /// to a single character.
    pub fn segment(&self, text: &str) -> Vec<String> {
        match self {
            Segmenter::PreSegmented => text.split_whitespace().map(str::to_owned).collect(),
            Segmenter::MaxMatch { words, max_chars } => {
                let mut out = Vec::new();
                for chunk in text.split_whitespace() {
                    forward_max_match(chunk, words, *max_chars, &mut out);
                }
                out
            }
        }
    }
}

fn forward_max_match(
    chunk: &str,
    words: &HashSet<String>,
    max_chars: usize,
    out: &mut Vec<String>,
) {
    // byte offset of every char boundary, including the end
    let bounds: Vec<usize> = chunk
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(chunk.len()))
        .collect();
    let n_chars = bounds.len() - 1;
    let mut pos = 0;
    while pos < n_chars {
        let longest = max_chars.min(n_chars - pos);
        let len = (2..=longest)
            .rev()
            .find(|&len| words.contains(&chunk[bounds[pos]..bounds[pos + len]]))
            .unwrap_or(1);
        out.push(chunk[bounds[pos]..bounds[pos + len]].to_owned());
        pos += len;
    }
}
