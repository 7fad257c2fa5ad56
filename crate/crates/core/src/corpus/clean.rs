use std::sync::LazyLock;

use regex::Regex;

use super::RawMessage;

/// The "//@" convention marks the start of a quoted retweet chain.
const RETWEET_DELIMITER: &str = "//@";

static REPLY_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:回复|[Rr]eply)\s*@[^\s:：]+\s*[:：]").unwrap());
static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(?:https?|ftp)://\S+").unwrap());
static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@[^\s@:：,，.。!！?？;；#\[\]]+[:：]?").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#([^#\n]{1,64})#").unwrap());
static EMOTICON: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[[^\[\]\s]{1,8}\]").unwrap());
static WHITESPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").unwrap());

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanConfig {
    /// Keep the text between `#...#` hashtag markers instead of dropping the
    /// whole tag.
    pub keep_hashtag_text: bool,
}

/// Reduces a microblog message to the author's own words.
///
/// Messages flagged as retweets are dropped entirely. Otherwise the quoted
/// chain after `//@`, a leading reply marker, mentions, hashtags, URLs and
/// bracketed emoticon codes such as `[哈哈]` are removed, and whitespace runs
/// collapse to a single space.
pub fn clean_message(raw: &RawMessage, config: &CleanConfig) -> String {
    if raw.is_retweet {
        return String::new();
    }
    clean_text(&raw.text, config)
}

pub fn clean_text(text: &str, config: &CleanConfig) -> String {
    let own = match text.find(RETWEET_DELIMITER) {
        Some(pos) => &text[..pos],
        None => text,
    };
    let s = REPLY_PREFIX.replace(own, " ");
    let s = URL.replace_all(&s, " ");
    let s = if config.keep_hashtag_text {
        HASHTAG.replace_all(&s, " $1 ")
    } else {
        HASHTAG.replace_all(&s, " ")
    };
    let s = MENTION.replace_all(&s, " ");
    let s = EMOTICON.replace_all(&s, " ");
    WHITESPACE.replace_all(s.trim(), " ").into_owned()
}
