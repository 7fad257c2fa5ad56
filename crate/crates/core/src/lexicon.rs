//! LIWC-style category dictionaries and normalised category frequencies.
//!
//! Dictionary layout (UTF-8):
//!
//! ```text
//! %
//! 1    posemo
//! 2    negemo
//! %
//! happ*    1
//! sad      2
//! ```
//!
//! Fields are separated by tabs (or by whitespace when a line has no tab).
//! A trailing `*` makes an entry a prefix pattern. ASCII letters match
//! case-insensitively; every other script matches exactly.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use crate::corpus::UserDocument;
use crate::{csvutil, Error, Result};

pub type CategoryId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: CategoryId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Exact(String),
    Prefix(String),
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    categories: Vec<Category>,
    index_of: HashMap<CategoryId, usize>,
    // normalised pattern -> (category positions, index into `entries`)
    exact: HashMap<String, (Vec<usize>, usize)>,
    prefix: HashMap<String, (Vec<usize>, usize)>,
    entries: Vec<(Pattern, BTreeSet<CategoryId>)>,
}

fn normalize(word: &str) -> String {
    word.to_ascii_lowercase()
}

impl Lexicon {
    /// Builds a lexicon from already-parsed parts. Duplicate patterns are
    /// merged into one entry carrying the union of their categories.
    pub fn new(
        categories: Vec<Category>,
        entries: Vec<(Pattern, Vec<CategoryId>)>,
    ) -> Result<Self> {
        let mut lex = Lexicon::default();
        for c in categories {
            lex.add_category(c)?;
        }
        for (pattern, cats) in entries {
            lex.add_entry(pattern, &cats)?;
        }
        Ok(lex)
    }

    fn add_category(&mut self, c: Category) -> Result<()> {
        if self.index_of.contains_key(&c.id) {
            return Err(Error::InvalidArgument(format!(
                "duplicate category id {}",
                c.id
            )));
        }
        if self.categories.iter().any(|o| o.name == c.name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate category name `{}`",
                c.name
            )));
        }
        self.index_of.insert(c.id, self.categories.len());
        self.categories.push(c);
        Ok(())
    }

    fn add_entry(&mut self, pattern: Pattern, cats: &[CategoryId]) -> Result<()> {
        let mut idx = Vec::with_capacity(cats.len());
        for id in cats {
            let i = *self
                .index_of
                .get(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown category id {id}")))?;
            idx.push(i);
        }
        let (map, key) = match &pattern {
            Pattern::Exact(w) => (&mut self.exact, normalize(w)),
            Pattern::Prefix(w) => (&mut self.prefix, normalize(w)),
        };
        if key.is_empty() {
            return Err(Error::InvalidArgument("empty pattern".into()));
        }
        let (slot, entry) = map
            .entry(key.clone())
            .or_insert_with(|| (Vec::new(), usize::MAX));
        if *entry == usize::MAX {
            *entry = self.entries.len();
            self.entries.push((pattern, BTreeSet::new()));
        } else {
            log::warn!("duplicate lexicon pattern `{key}`; categories merged");
        }
        for i in idx {
            if !slot.contains(&i) {
                slot.push(i);
            }
        }
        self.entries[*entry].1.extend(cats.iter().copied());
        Ok(())
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn entries(&self) -> &[(Pattern, BTreeSet<CategoryId>)] {
        &self.entries
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.name.as_str())
    }

    /// Positions (into [`Lexicon::categories`]) of every category matched by
    /// `token`, sorted and deduplicated.
    fn match_indices(&self, token: &str) -> Vec<usize> {
        let token = normalize(token);
        let mut hits: Vec<usize> = self
            .exact
            .get(&token)
            .map(|(cats, _)| cats.clone())
            .unwrap_or_default();
        for (i, c) in token.char_indices() {
            let end = i + c.len_utf8();
            if let Some((cats, _)) = self.prefix.get(&token[..end]) {
                hits.extend(cats);
            }
        }
        hits.sort_unstable();
        hits.dedup();
        hits
    }

    /// Union of the categories of every entry matching `token`.
    pub fn match_token(&self, token: &str) -> BTreeSet<CategoryId> {
        self.match_indices(token)
            .into_iter()
            .map(|i| self.categories[i].id)
            .collect()
    }

    /// Category frequencies of a document: per category, matching tokens
    /// divided by the document's token count.
    pub fn extract_features(&self, doc: &UserDocument) -> CategoryFeatureVector {
        let mut counts = vec![0usize; self.categories.len()];
        for t in &doc.tokens {
            for i in self.match_indices(t) {
                counts[i] += 1;
            }
        }
        let n = doc.tokens.len();
        let values = counts
            .into_iter()
            .map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect();
        CategoryFeatureVector {
            user_id: doc.user_id.clone(),
            values,
            doc_length: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryFeatureVector {
    pub user_id: String,
    /// Aligned with [`Lexicon::categories`].
    pub values: Vec<f64>,
    pub doc_length: usize,
}

impl CategoryFeatureVector {
    pub fn get(&self, lexicon: &Lexicon, name: &str) -> Option<f64> {
        lexicon
            .categories
            .iter()
            .position(|c| c.name == name)
            .map(|i| self.values[i])
    }
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let reader = csvutil::open(path)?;
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        lines.push(line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(path.display(), i + 1, "invalid UTF-8"),
            _ => Error::io(path, e),
        })?);
    }
    parse_lexicon(&lines.join("\n"), &path.display().to_string())
}

/// Parses dictionary text; `origin` names the source in error messages.
pub fn parse_lexicon(text: &str, origin: &str) -> Result<Lexicon> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            (
                i + 1,
                l.trim_start_matches('\u{feff}').trim_end_matches('\r'),
            )
        })
        .filter(|(_, l)| !l.trim().is_empty());

    match lines.next() {
        Some((_, l)) if l.trim() == "%" => {}
        Some((n, _)) => {
            return Err(Error::parse(
                origin,
                n,
                "expected `%` opening the category header",
            ))
        }
        None => return Err(Error::parse(origin, 1, "empty dictionary")),
    }

    let mut lex = Lexicon::default();
    let mut closed = false;
    for (n, line) in lines.by_ref() {
        let line = line.trim();
        if line == "%" {
            closed = true;
            break;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(
                origin,
                n,
                "malformed category line, expected `id<TAB>name`",
            ));
        };
        let id: CategoryId = id.parse().map_err(|_| {
            Error::parse(origin, n, format!("category id `{id}` is not an integer"))
        })?;
        lex.add_category(Category {
            id,
            name: name.to_owned(),
        })
        .map_err(|e| Error::parse(origin, n, e.to_string()))?;
    }
    if !closed {
        return Err(Error::parse(
            origin,
            0,
            "category header is not closed by `%`",
        ));
    }

    for (n, line) in lines {
        let mut fields = if line.contains('\t') {
            line.split('\t')
                .map(str::trim)
                .filter(|f| !f.is_empty())
                .collect::<Vec<_>>()
        } else {
            line.split_whitespace().collect()
        }
        .into_iter();
        let word = fields.next().expect("non-blank line");
        let pattern = match word.strip_suffix('*') {
            Some(stem) if !stem.is_empty() && !stem.contains('*') => {
                Pattern::Prefix(stem.to_owned())
            }
            None => Pattern::Exact(word.to_owned()),
            _ => {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("unsupported wildcard in `{word}`; only a trailing `*` is allowed"),
                ))
            }
        };
        if let Pattern::Exact(w) = &pattern {
            if w.contains('*') {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("unsupported wildcard in `{word}`; only a trailing `*` is allowed"),
                ));
            }
        }
        let mut cats = Vec::new();
        for f in fields {
            let id: CategoryId = f.parse().map_err(|_| {
                Error::parse(origin, n, format!("category id `{f}` is not an integer"))
            })?;
            if !lex.index_of.contains_key(&id) {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("entry `{word}` references undefined category {id}"),
                ));
            }
            cats.push(id);
        }
        if cats.is_empty() {
            return Err(Error::parse(
                origin,
                n,
                format!("entry `{word}` has no categories"),
            ));
        }
        lex.add_entry(pattern, &cats)
            .map_err(|e| Error::parse(origin, n, e.to_string()))?;
    }
    Ok(lex)
}

/// Writes `user_id,<category names...>`.
pub fn write_features_csv(
    lexicon: &Lexicon,
    rows: &[CategoryFeatureVector],
    path: &Path,
) -> Result<()> {
    let mut w = csvutil::writer(path)?;
    let mut header = vec!["user_id".to_owned()];
    header.extend(lexicon.category_names().map(str::to_owned));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.user_id.clone()];
        rec.extend(r.values.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
