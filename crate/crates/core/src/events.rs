//! Event picking: a seeded uniform choice of an illustrative tweet for a
//! trending hashtag, restricted to tweets with at least two sentences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TweetRecord;
use crate::rng::SplitMix64;
use crate::stats::FrequencyTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPick {
    pub hashtag: String,
    pub tweet: TweetRecord,
    pub candidate_pool_size: usize,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum EventError {
    #[error("no eligible tweet contains hashtag `{0}` with at least two sentences")]
    NoEligibleTweet(String),
}

/// Number of maximal segments with at least one non-whitespace character,
/// terminated by '.', '!', '?', or end of text.
pub fn sentence_count(text: &str) -> usize {
    let mut count = 0;
    let mut has_content = false;
    for c in text.chars() {
        match c {
            '.' | '!' | '?' => {
                if has_content {
                    count += 1;
                    has_content = false;
                }
            }
            c if !c.is_whitespace() => has_content = true,
            _ => {}
        }
    }
    if has_content {
        count += 1;
    }
    count
}

/// Hashtags shared strictly more than `threshold` times, count-descending.
pub fn eligible_hashtags(table: &FrequencyTable, threshold: u64) -> Vec<String> {
    table
        .sorted()
        .into_iter()
        .filter(|&(_, n)| n > threshold)
        .map(|(tag, _)| tag.to_string())
        .collect()
}

/// Uniform seeded pick among tweets that contain `hashtag` (in the
/// normalized list) and have at least two sentences. The pool keeps the
/// input stream order, so sharded collection cannot change the pick.
pub fn pick_event<'a, I>(hashtag: &str, records: I, seed: u64) -> Result<EventPick, EventError>
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let pool: Vec<&TweetRecord> = records
        .into_iter()
        .filter(|r| r.hashtags.iter().any(|t| t == hashtag) && sentence_count(&r.text) >= 2)
        .collect();
    if pool.is_empty() {
        return Err(EventError::NoEligibleTweet(hashtag.to_string()));
    }
    let mut rng = SplitMix64::new(seed);
    let index = rng.next_below(pool.len() as u64) as usize;
    Ok(EventPick {
        hashtag: hashtag.to_string(),
        tweet: pool[index].clone(),
        candidate_pool_size: pool.len(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn rec(text: &str, tags: &[&str]) -> TweetRecord {
        TweetRecord {
            timestamp: Utc.with_ymd_and_hms(2019, 4, 12, 8, 0, 0).unwrap(),
            text: text.to_string(),
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn sentence_counts() {
        assert_eq!(sentence_count("Go vote. It matters!"), 2);
        assert_eq!(sentence_count("one sentence only"), 1);
        assert_eq!(sentence_count("A? B. C!"), 3);
        assert_eq!(sentence_count(""), 0);
        assert_eq!(sentence_count("..."), 0);
        assert_eq!(sentence_count("Wait... what?"), 2);
    }

    #[test]
    fn eligible_strictly_greater() {
        let mut t = FrequencyTable::default();
        for (tag, n) in [("a", 9000u64), ("b", 8000), ("c", 100)] {
            for _ in 0..n {
                t.add(tag);
            }
        }
        assert_eq!(eligible_hashtags(&t, 8000), vec!["a"]);
        assert_eq!(eligible_hashtags(&t, 0).len(), 3);
        assert!(eligible_hashtags(&FrequencyTable::default(), 1).is_empty());
    }

    #[test]
    fn single_candidate_pool() {
        let recs = vec![rec("Only one. Eligible here.", &["x"])];
        for seed in [0u64, 1, 99] {
            let pick = pick_event("x", &recs, seed).unwrap();
            assert_eq!(pick.candidate_pool_size, 1);
            assert_eq!(pick.tweet.text, "Only one. Eligible here.");
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let recs: Vec<_> = (0..100)
            .map(|i| rec(&format!("Tweet {i}. More text!"), &["x"]))
            .collect();
        let a = pick_event("x", &recs, 42).unwrap();
        let b = pick_event("x", &recs, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.candidate_pool_size, 100);
    }

    #[test]
    fn containment_and_sentence_floor() {
        let recs = vec![
            rec("Has tag. Two sentences!", &["x", "y"]),
            rec("Single sentence with tag", &["x"]),
            rec("Two sentences. No tag though.", &["z"]),
        ];
        for seed in 0..50u64 {
            let pick = pick_event("x", &recs, seed).unwrap();
            assert!(pick.tweet.hashtags.contains(&"x".to_string()));
            assert!(sentence_count(&pick.tweet.text) >= 2);
            assert_eq!(pick.candidate_pool_size, 1);
        }
    }

    #[test]
    fn empty_pool_errors() {
        let recs = vec![rec("short", &["x"])];
        assert_eq!(
            pick_event("x", &recs, 0),
            Err(EventError::NoEligibleTweet("x".to_string()))
        );
    }

    #[test]
    fn picks_uniform_over_seeds() {
        // 3 eligible tweets, 10k seeds: chi-squared (2 df) below the
        // p=0.01 critical value 9.21.
        let recs = vec![
            rec("A one. A two.", &["x"]),
            rec("B one. B two.", &["x"]),
            rec("C one. C two.", &["x"]),
            rec("no tag here. really.", &["y"]),
        ];
        let mut counts = [0u64; 3];
        for seed in 0..10_000u64 {
            let pick = pick_event("x", &recs, seed).unwrap();
            let idx = match pick.tweet.text.chars().next().unwrap() {
                'A' => 0,
                'B' => 1,
                _ => 2,
            };
            counts[idx] += 1;
        }
        let expected = 10_000.0 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 9.21, "chi2 = {chi2}, counts = {counts:?}");
    }
}
