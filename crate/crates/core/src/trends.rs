//! Overall and per-phase top-hashtag lists with overlap removal.
//!
//! Phase lists exclude every hashtag appearing in the overall list, before
//! truncation, so a phase's trend list shows only what was distinctive
//! about that phase.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::phases::PhaseId;
use crate::stats::FrequencyTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEntry {
    pub hashtag: String,
    pub count: u64,
    /// count / max count in this list, for word-cloud sizing.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendList {
    pub scope: Option<PhaseId>,
    pub entries: Vec<TrendEntry>,
}

impl TrendList {
    pub fn hashtags(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.hashtag.as_str())
    }
}

fn build_list(
    table: &FrequencyTable,
    n: usize,
    exclude: &HashSet<&str>,
    scope: Option<PhaseId>,
) -> TrendList {
    let ranked: Vec<(&str, u64)> = table
        .sorted()
        .into_iter()
        .filter(|(tag, _)| !exclude.contains(tag))
        .take(n)
        .collect();
    let max = ranked.first().map(|&(_, c)| c).unwrap_or(0);
    let entries = ranked
        .into_iter()
        .map(|(tag, count)| TrendEntry {
            hashtag: tag.to_string(),
            count,
            weight: if max > 0 { count as f64 / max as f64 } else { 0.0 },
        })
        .collect();
    TrendList { scope, entries }
}

/// The `n` highest-count hashtags; ties break lexicographically.
pub fn top_hashtags(table: &FrequencyTable, n: usize) -> TrendList {
    assert!(n >= 1, "n must be at least 1");
    build_list(table, n, &HashSet::new(), None)
}

/// Per-phase top-`n` lists computed after excluding every hashtag in the
/// overall list.
pub fn phase_trends(
    per_phase: &BTreeMap<PhaseId, FrequencyTable>,
    overall: &TrendList,
    n: usize,
) -> BTreeMap<PhaseId, TrendList> {
    let exclude: HashSet<&str> = overall.hashtags().collect();
    per_phase
        .iter()
        .map(|(&phase, table)| (phase, build_list(table, n, &exclude, Some(phase))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(pairs: &[(&str, u64)]) -> FrequencyTable {
        let mut t = FrequencyTable::default();
        for &(tag, n) in pairs {
            for _ in 0..n {
                t.add(tag);
            }
        }
        t
    }

    #[test]
    fn lexicographic_tie_break() {
        let t = table(&[("b", 5), ("a", 5), ("c", 1)]);
        let tl = top_hashtags(&t, 2);
        let tags: Vec<&str> = tl.hashtags().collect();
        assert_eq!(tags, vec!["a", "b"]);
    }

    #[test]
    fn n_larger_than_table() {
        let t = table(&[("a", 3), ("b", 1)]);
        let tl = top_hashtags(&t, 50);
        assert_eq!(tl.entries.len(), 2);
        assert_eq!(tl.entries[0].weight, 1.0);
        assert!((tl.entries[1].weight - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn phase_exclusion_before_truncation() {
        let overall = top_hashtags(&table(&[("a", 100)]), 1);
        let mut per_phase = BTreeMap::new();
        per_phase.insert(PhaseId::Phase(1), table(&[("a", 9), ("b", 2), ("c", 1)]));
        let out = phase_trends(&per_phase, &overall, 2);
        let tags: Vec<&str> = out[&PhaseId::Phase(1)].hashtags().collect();
        assert_eq!(tags, vec!["b", "c"]);
    }

    #[test]
    fn phase_subset_of_overall_is_empty() {
        let overall = top_hashtags(&table(&[("a", 10), ("b", 8)]), 2);
        let mut per_phase = BTreeMap::new();
        per_phase.insert(PhaseId::Phase(2), table(&[("a", 3), ("b", 1)]));
        let out = phase_trends(&per_phase, &overall, 5);
        assert!(out[&PhaseId::Phase(2)].entries.is_empty());
    }

    #[test]
    fn disjointness_invariant() {
        let overall = top_hashtags(&table(&[("a", 10), ("b", 9), ("c", 8)]), 3);
        let mut per_phase = BTreeMap::new();
        for p in 1..=3 {
            per_phase.insert(
                PhaseId::Phase(p),
                table(&[("a", 50), ("b", 40), ("d", 30), ("e", 20)]),
            );
        }
        let out = phase_trends(&per_phase, &overall, 3);
        let overall_set: HashSet<&str> = overall.hashtags().collect();
        for tl in out.values() {
            for tag in tl.hashtags() {
                assert!(!overall_set.contains(tag));
            }
        }
    }

    #[test]
    fn monotone_under_unlisted_removal() {
        let full = table(&[("a", 10), ("b", 5), ("z", 1)]);
        let without = table(&[("a", 10), ("b", 5)]);
        assert_eq!(top_hashtags(&full, 2).entries, top_hashtags(&without, 2).entries);
    }

    #[test]
    fn determinism() {
        let t = table(&[("x", 4), ("y", 4), ("z", 4), ("w", 2)]);
        assert_eq!(top_hashtags(&t, 3), top_hashtags(&t, 3));
    }
}
