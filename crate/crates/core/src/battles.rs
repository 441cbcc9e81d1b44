//! Battle hashtags ("<a>vs<b>"), per-candidate similar-hashtag sets, and
//! the popularity and influence scores derived from them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{most_similar, EmbeddingError, EmbeddingMatrix};
use crate::scalar::Real;
use crate::stats::FrequencyTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battle {
    pub battle_hashtag: String,
    pub candidate_a: String,
    pub candidate_b: String,
    /// True when both sides matched the candidate roster.
    pub confirmed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

/// Manual hashtag sentiment labels. Tokens queried at scoring time must be
/// labeled; anything missing is a hard error, never silently neutral.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    labels: std::collections::HashMap<String, Sentiment>,
}

#[derive(Debug, Error, PartialEq)]
pub enum BattleError {
    #[error("unlabeled hashtags in lexicon: {0:?}")]
    Unlabeled(Vec<String>),
    #[error("no anchor hashtag for battle `{0}` is in the embedding vocabulary")]
    OovBattle(String),
    #[error("bad lexicon line {line}: {text}")]
    BadLexiconLine { line: usize, text: String },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

impl SentimentLexicon {
    pub fn insert(&mut self, token: &str, label: Sentiment) {
        self.labels.insert(token.to_string(), label);
    }

    pub fn get(&self, token: &str) -> Option<Sentiment> {
        self.labels.get(token).copied()
    }

    /// Parse `token TAB label` lines; labels are positive/negative/neutral.
    pub fn parse_tsv(text: &str) -> Result<SentimentLexicon, BattleError> {
        let mut lex = SentimentLexicon::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || BattleError::BadLexiconLine {
                line: i + 1,
                text: raw.to_string(),
            };
            let (token, label) = line.split_once('\t').ok_or_else(bad)?;
            let label = match label.trim() {
                "positive" => Sentiment::Positive,
                "negative" => Sentiment::Negative,
                "neutral" => Sentiment::Neutral,
                _ => return Err(bad()),
            };
            lex.insert(token.trim(), label);
        }
        Ok(lex)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHashtag {
    pub token: String,
    pub count: u64,
    pub label: Sentiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub candidate: String,
    pub similar_hashtags: Vec<ScoredHashtag>,
    pub n: usize,
    pub positives: usize,
    pub negatives: usize,
    pub popularity: u64,
    pub influence: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattleReport {
    pub battle_hashtag: String,
    pub a: CandidateReport,
    pub b: CandidateReport,
    pub predicted_winner: Winner,
}

fn squash(name: &str) -> String {
    name.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Split a hashtag at "vs"/"versus". Returns both sides or `None` when the
/// separator is absent or leaves an empty side.
fn split_versus(tag: &str) -> Option<(String, String)> {
    for sep in ["versus", "vs"] {
        if let Some(pos) = tag.find(sep) {
            let (left, right) = (&tag[..pos], &tag[pos + sep.len()..]);
            if !left.is_empty() && !right.is_empty() {
                return Some((left.to_string(), right.to_string()));
            }
        }
    }
    None
}

/// Hashtags containing "vs"/"versus" split into candidate pairs. A battle
/// is confirmed when both sides match roster names (case-insensitive,
/// space-stripped containment); other splits are flagged for review.
/// With an empty roster all splits are emitted unconfirmed.
pub fn find_battle_hashtags(table: &FrequencyTable, roster: &[String]) -> Vec<Battle> {
    let squashed: Vec<(String, &str)> = roster.iter().map(|n| (squash(n), n.as_str())).collect();
    let resolve = |side: &str| -> Option<String> {
        squashed
            .iter()
            .find(|(sq, _)| sq.contains(side) || side.contains(sq.as_str()))
            .map(|(_, full)| full.to_string())
    };
    let mut battles = Vec::new();
    for (tag, _) in table.sorted() {
        let Some((left, right)) = split_versus(tag) else {
            continue;
        };
        let (name_a, name_b) = (resolve(&left), resolve(&right));
        let confirmed = !roster.is_empty() && name_a.is_some() && name_b.is_some();
        battles.push(Battle {
            battle_hashtag: tag.to_string(),
            candidate_a: name_a.unwrap_or(left),
            candidate_b: name_b.unwrap_or(right),
            confirmed,
        });
    }
    battles
}

fn name_parts(key: &str) -> Vec<String> {
    vec![key.to_string()]
}

/// Per-candidate similar-hashtag lists for one battle.
///
/// Each candidate's anchor is their own name hashtag when it is in the
/// vocabulary; the top-k neighbors of that anchor are the candidate's raw
/// list. When a candidate has no name hashtag the shared battle hashtag is
/// queried instead, and those neighbors are attributed to the candidate by
/// name containment. Tokens appearing in both raw lists are then removed
/// from both, so the retained sets are disjoint.
pub fn candidate_similar_set<F: Real>(
    matrix: &EmbeddingMatrix<F>,
    battle: &Battle,
    k: usize,
) -> Result<(Vec<String>, Vec<String>), BattleError> {
    let key_a = squash(&battle.candidate_a);
    let key_b = squash(&battle.candidate_b);
    let has_name_a = matrix.id(&key_a).is_some();
    let has_name_b = matrix.id(&key_b).is_some();
    let has_battle = matrix.id(&battle.battle_hashtag).is_some();
    if !has_name_a && !has_name_b && !has_battle {
        return Err(BattleError::OovBattle(battle.battle_hashtag.clone()));
    }

    let exclude: HashSet<String> = [battle.battle_hashtag.clone(), key_a.clone(), key_b.clone()]
        .into_iter()
        .collect();
    let neighbors = |anchor: &str| -> Result<Vec<String>, BattleError> {
        Ok(most_similar(matrix, anchor, k, &exclude)?
            .into_iter()
            .map(|(t, _)| t)
            .collect())
    };
    let side = |has_name: bool, key: &str| -> Result<Vec<String>, BattleError> {
        if has_name {
            neighbors(key)
        } else if has_battle {
            let parts = name_parts(key);
            Ok(neighbors(&battle.battle_hashtag)?
                .into_iter()
                .filter(|t| parts.iter().any(|p| t.contains(p.as_str())))
                .collect())
        } else {
            Ok(Vec::new())
        }
    };
    let mut list_a = side(has_name_a, &key_a)?;
    let mut list_b = side(has_name_b, &key_b)?;
    let common: HashSet<String> = list_a
        .iter()
        .filter(|t| list_b.contains(t))
        .cloned()
        .collect();
    list_a.retain(|t| !common.contains(t));
    list_b.retain(|t| !common.contains(t));
    Ok((list_a, list_b))
}

/// Sum of corpus occurrence counts over the similar set.
pub fn popularity(similar: &[String], table: &FrequencyTable) -> u64 {
    similar.iter().map(|t| table.get(t)).sum()
}

/// Sum of positive counts minus sum of negative counts; neutrals
/// contribute nothing. Every token must be labeled.
pub fn influence(
    similar: &[String],
    table: &FrequencyTable,
    lexicon: &SentimentLexicon,
) -> Result<i64, BattleError> {
    let unlabeled: Vec<String> = similar
        .iter()
        .filter(|t| lexicon.get(t).is_none())
        .cloned()
        .collect();
    if !unlabeled.is_empty() {
        return Err(BattleError::Unlabeled(unlabeled));
    }
    let mut score = 0i64;
    for token in similar {
        let count = table.get(token) as i64;
        match lexicon.get(token).unwrap() {
            Sentiment::Positive => score += count,
            Sentiment::Negative => score -= count,
            Sentiment::Neutral => {}
        }
    }
    Ok(score)
}

pub fn predict_winner(a: &CandidateReport, b: &CandidateReport) -> Winner {
    match a.influence.cmp(&b.influence) {
        std::cmp::Ordering::Greater => Winner::A,
        std::cmp::Ordering::Less => Winner::B,
        std::cmp::Ordering::Equal => Winner::Tie,
    }
}

/// Score one candidate's similar set.
pub fn candidate_report(
    candidate: &str,
    similar: &[String],
    table: &FrequencyTable,
    lexicon: &SentimentLexicon,
) -> Result<CandidateReport, BattleError> {
    let score = influence(similar, table, lexicon)?;
    let scored: Vec<ScoredHashtag> = similar
        .iter()
        .map(|t| ScoredHashtag {
            token: t.clone(),
            count: table.get(t),
            label: lexicon.get(t).unwrap(),
        })
        .collect();
    let positives = scored
        .iter()
        .filter(|s| s.label == Sentiment::Positive)
        .count();
    let negatives = scored
        .iter()
        .filter(|s| s.label == Sentiment::Negative)
        .count();
    Ok(CandidateReport {
        candidate: candidate.to_string(),
        n: scored.len(),
        positives,
        negatives,
        popularity: popularity(similar, table),
        influence: score,
        similar_hashtags: scored,
    })
}

/// Full report for one battle: similar sets, scores, predicted winner.
pub fn score_battle<F: Real>(
    matrix: &EmbeddingMatrix<F>,
    battle: &Battle,
    table: &FrequencyTable,
    lexicon: &SentimentLexicon,
    k: usize,
) -> Result<BattleReport, BattleError> {
    let (similar_a, similar_b) = candidate_similar_set(matrix, battle, k)?;
    let a = candidate_report(&battle.candidate_a, &similar_a, table, lexicon)?;
    let b = candidate_report(&battle.candidate_b, &similar_b, table, lexicon)?;
    let predicted_winner = predict_winner(&a, &b);
    Ok(BattleReport {
        battle_hashtag: battle.battle_hashtag.clone(),
        a,
        b,
        predicted_winner,
    })
}
