//! Ingestion and repair of archived tweet records.
//!
//! Input is line-delimited JSON with three fields: `timestamp` (RFC 3339),
//! `text`, and an optional `hashtags` list. Hashtags are re-extracted from
//! the text (the archive's own extraction is unreliable), normalized, and
//! merged with any supplied list. Records that end up with zero hashtags are
//! dropped by [`filter_corpus`].

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One retained post: timestamp, text, normalized hashtag list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub hashtags: Vec<String>,
}

/// Summary statistics accumulated over a filtered corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_tweets: u64,
    pub total_hashtags: u64,
    pub unique_hashtags: u64,
    pub min_per_tweet: u64,
    pub max_per_tweet: u64,
    pub mean_per_tweet: f64,
    /// True when the corpus was empty and `mean_per_tweet` is a placeholder 0.
    pub empty: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("missing field `{0}`")]
    Schema(&'static str),
    #[error("unparseable timestamp: {0}")]
    Timestamp(String),
}

fn is_word_char(c: char) -> bool {
    // Unicode Letter or Number category, plus underscore. Combining marks
    // are included so Indic-script tags like #दिल्ली stay intact.
    use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};
    c == '_'
        || c.is_alphanumeric()
        || c.general_category_group() == GeneralCategoryGroup::Mark
}

/// Remove spaces between a '#' and the tag body, so "# elections2019"
/// becomes "#elections2019". Everything else is left byte-identical.
pub fn repair_spaced_hashtags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(c);
        if c == '#' {
            // Skip spaces only when a word character follows them.
            let mut skipped = String::new();
            while let Some(&next) = chars.peek() {
                if next == ' ' {
                    skipped.push(next);
                    chars.next();
                } else {
                    break;
                }
            }
            if !skipped.is_empty() {
                match chars.peek() {
                    Some(&next) if is_word_char(next) => {}
                    _ => out.push_str(&skipped),
                }
            }
        }
    }
    out
}

/// Lowercase-fold a raw tag body, keeping only word characters.
/// Returns `None` when nothing survives.
pub fn normalize_tag(raw: &str) -> Option<String> {
    let body = raw.strip_prefix('#').unwrap_or(raw);
    let tag: String = body
        .chars()
        .take_while(|&c| is_word_char(c))
        .flat_map(char::to_lowercase)
        .collect();
    if tag.is_empty() {
        None
    } else {
        Some(tag)
    }
}

/// All '#'-prefixed word-character runs in textual order, lowercase-folded.
/// A '#' not followed by a word character yields nothing.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if c != '#' {
            continue;
        }
        let mut tag = String::new();
        while let Some(&(_, next)) = chars.peek() {
            if is_word_char(next) {
                tag.extend(next.to_lowercase());
                chars.next();
            } else {
                break;
            }
        }
        if !tag.is_empty() {
            tags.push(tag);
        }
    }
    tags
}

#[derive(Deserialize)]
struct RawRecord {
    timestamp: Option<serde_json::Value>,
    text: Option<String>,
    #[serde(default)]
    hashtags: Vec<String>,
}

/// Parse one JSON line into a record. Hashtags are re-extracted from the
/// repaired text, then any supplied tags not already present are appended
/// in their given order. Duplicate occurrences within the text all count.
pub fn parse_record(line: &str) -> Result<TweetRecord, ParseError> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| ParseError::Malformed(e.to_string()))?;
    let ts_value = raw.timestamp.ok_or(ParseError::Schema("timestamp"))?;
    let ts_str = ts_value.as_str().ok_or(ParseError::Schema("timestamp"))?;
    let text = raw.text.ok_or(ParseError::Schema("text"))?;
    let timestamp = DateTime::parse_from_rfc3339(ts_str)
        .map_err(|_| ParseError::Timestamp(ts_str.to_string()))?
        .with_timezone(&Utc);

    let repaired = repair_spaced_hashtags(&text);
    let mut hashtags = extract_hashtags(&repaired);
    for supplied in &raw.hashtags {
        if let Some(tag) = normalize_tag(supplied) {
            if !hashtags.contains(&tag) {
                hashtags.push(tag);
            }
        }
    }
    Ok(TweetRecord {
        timestamp,
        text,
        hashtags,
    })
}

impl CorpusStats {
    pub fn observe(&mut self, n_hashtags: u64) {
        if self.total_tweets == 0 {
            self.min_per_tweet = n_hashtags;
            self.max_per_tweet = n_hashtags;
        } else {
            self.min_per_tweet = self.min_per_tweet.min(n_hashtags);
            self.max_per_tweet = self.max_per_tweet.max(n_hashtags);
        }
        self.total_tweets += 1;
        self.total_hashtags += n_hashtags;
    }

    /// Associative merge of stats from disjoint shards.
    pub fn merge(mut self, other: &CorpusStats) -> CorpusStats {
        if other.total_tweets == 0 {
            return self;
        }
        if self.total_tweets == 0 {
            self.min_per_tweet = other.min_per_tweet;
            self.max_per_tweet = other.max_per_tweet;
        } else {
            self.min_per_tweet = self.min_per_tweet.min(other.min_per_tweet);
            self.max_per_tweet = self.max_per_tweet.max(other.max_per_tweet);
        }
        self.total_tweets += other.total_tweets;
        self.total_hashtags += other.total_hashtags;
        self
    }

    fn finalize(&mut self, unique: u64) {
        self.unique_hashtags = unique;
        if self.total_tweets > 0 {
            self.mean_per_tweet = self.total_hashtags as f64 / self.total_tweets as f64;
            self.empty = false;
        } else {
            self.mean_per_tweet = 0.0;
            self.empty = true;
        }
    }
}

/// Drop records with zero hashtags and accumulate [`CorpusStats`] over the
/// survivors in one pass.
pub fn filter_corpus<I>(records: I) -> (Vec<TweetRecord>, CorpusStats)
where
    I: IntoIterator<Item = TweetRecord>,
{
    let mut stats = CorpusStats::default();
    let mut unique = std::collections::HashSet::new();
    let survivors: Vec<TweetRecord> = records
        .into_iter()
        .filter(|r| !r.hashtags.is_empty())
        .inspect(|r| {
            stats.observe(r.hashtags.len() as u64);
            for t in &r.hashtags {
                unique.insert(t.clone());
            }
        })
        .collect();
    stats.finalize(unique.len() as u64);
    (survivors, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(ts: &str, text: &str) -> TweetRecord {
        parse_record(&format!(r#"{{"timestamp":"{ts}","text":"{text}"}}"#)).unwrap()
    }

    #[test]
    fn parse_single_tag() {
        let r = record("2019-04-11T08:00:00Z", "go vote #VoteKar");
        assert_eq!(r.hashtags, vec!["votekar"]);
    }

    #[test]
    fn parse_no_tags() {
        let r = record("2019-04-11T08:00:00Z", "no tags here");
        assert!(r.hashtags.is_empty());
    }

    #[test]
    fn parse_malformed_json() {
        assert!(matches!(
            parse_record("not json at all"),
            Err(ParseError::Malformed(_))
        ));
    }

    #[test]
    fn parse_missing_fields() {
        assert_eq!(
            parse_record(r#"{"text":"x"}"#),
            Err(ParseError::Schema("timestamp"))
        );
        assert_eq!(
            parse_record(r#"{"timestamp":"2019-04-11T08:00:00Z"}"#),
            Err(ParseError::Schema("text"))
        );
    }

    #[test]
    fn parse_bad_timestamp() {
        assert!(matches!(
            parse_record(r#"{"timestamp":"April 11","text":"x"}"#),
            Err(ParseError::Timestamp(_))
        ));
    }

    #[test]
    fn supplied_tags_merged_after_extracted() {
        let r = parse_record(
            r##"{"timestamp":"2019-04-11T08:00:00Z","text":"#a hello","hashtags":["#B","a","c"]}"##,
        )
        .unwrap();
        assert_eq!(r.hashtags, vec!["a", "b", "c"]);
    }

    #[test]
    fn repair_basic() {
        assert_eq!(
            repair_spaced_hashtags("I vote # elections2019 today"),
            "I vote #elections2019 today"
        );
    }

    #[test]
    fn repair_digit_start_token() {
        assert_eq!(repair_spaced_hashtags("price is 5 # 3"), "price is 5 #3");
    }

    #[test]
    fn repair_identity_on_well_formed() {
        assert_eq!(repair_spaced_hashtags("#already fine"), "#already fine");
    }

    #[test]
    fn repair_keeps_dangling_hash() {
        assert_eq!(repair_spaced_hashtags("just # ."), "just # .");
        assert_eq!(repair_spaced_hashtags("trailing # "), "trailing # ");
    }

    #[test]
    fn extract_in_text_order() {
        assert_eq!(
            extract_hashtags("Ban the #ModiBiopic now #Vote4India #VoteKar"),
            vec!["modibiopic", "vote4india", "votekar"]
        );
    }

    #[test]
    fn extract_seven_tags() {
        assert_eq!(extract_hashtags("#a #b #c #d #e #f #g").len(), 7);
    }

    #[test]
    fn extract_dangling_hash() {
        assert!(extract_hashtags("no tags, just # ").is_empty());
    }

    #[test]
    fn extract_unicode_scripts() {
        assert_eq!(extract_hashtags("vote #दिल्ली now"), vec!["दिल्ली"]);
    }

    #[test]
    fn extract_duplicates_kept() {
        assert_eq!(extract_hashtags("#x and #x"), vec!["x", "x"]);
    }

    #[test]
    fn filter_and_stats() {
        let ts = "2019-04-11T08:00:00Z";
        let recs = vec![
            record(ts, "#a #b"),
            record(ts, "nothing"),
            record(ts, "#a #c #d #e"),
        ];
        let (out, stats) = filter_corpus(recs);
        assert_eq!(out.len(), 2);
        assert_eq!(stats.total_tweets, 2);
        assert_eq!(stats.total_hashtags, 6);
        assert_eq!(stats.unique_hashtags, 5);
        assert_eq!(stats.min_per_tweet, 2);
        assert_eq!(stats.max_per_tweet, 4);
        assert!((stats.mean_per_tweet - 3.0).abs() < 1e-12);
    }

    #[test]
    fn filter_empty_stream() {
        let (out, stats) = filter_corpus(Vec::new());
        assert!(out.is_empty());
        assert!(stats.empty);
        assert_eq!(stats.total_tweets, 0);
        assert_eq!(stats.mean_per_tweet, 0.0);
    }

    #[test]
    fn stats_merge_matches_single_pass() {
        let ts = "2019-04-11T08:00:00Z";
        let recs: Vec<_> = (1..=9).map(|n| record(ts, &"#t ".repeat(n))).collect();
        let (_, whole) = filter_corpus(recs.clone());
        let (_, left) = filter_corpus(recs[..4].to_vec());
        let (_, right) = filter_corpus(recs[4..].to_vec());
        let merged = left.merge(&right);
        assert_eq!(merged.total_tweets, whole.total_tweets);
        assert_eq!(merged.total_hashtags, whole.total_hashtags);
        assert_eq!(merged.min_per_tweet, whole.min_per_tweet);
        assert_eq!(merged.max_per_tweet, whole.max_per_tweet);
    }

    proptest! {
        #[test]
        fn repair_is_idempotent(t in "\\PC*") {
            let once = repair_spaced_hashtags(&t);
            prop_assert_eq!(repair_spaced_hashtags(&once), once);
        }

        #[test]
        fn repair_composes_with_extraction(y in "[a-z0-9_]{1,12}") {
            let spaced = format!("x # {y}");
            let tight = format!("x #{y}");
            prop_assert_eq!(
                extract_hashtags(&repair_spaced_hashtags(&spaced)),
                extract_hashtags(&tight)
            );
        }

        #[test]
        fn extracted_tags_are_normalized(t in "\\PC*") {
            for tag in extract_hashtags(&t) {
                prop_assert!(!tag.is_empty());
                prop_assert!(!tag.contains('#'));
                prop_assert!(!tag.chars().any(|c| c.is_uppercase()));
            }
        }
    }
}
