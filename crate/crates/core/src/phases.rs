//! Phase bucketing: map each timestamp to one of the seven voting windows,
//! or to the pre/post-election periods around them.

use chrono::{DateTime, FixedOffset, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Indian Standard Time, the civil timezone used for date bucketing.
pub const IST_OFFSET_SECONDS: i32 = 5 * 3600 + 1800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhaseId {
    Pre,
    Phase(u8),
    Post,
}

impl std::fmt::Display for PhaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseId::Pre => write!(f, "pre"),
            PhaseId::Phase(n) => write!(f, "phase{n}"),
            PhaseId::Post => write!(f, "post"),
        }
    }
}

/// Ordered, disjoint voting windows with inclusive date bounds, bucketed in
/// a fixed civil timezone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSchedule {
    phases: Vec<(u8, NaiveDate, NaiveDate)>,
    offset: FixedOffset,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("phase {0}: start date after end date")]
    ReversedRange(u8),
    #[error("phases overlap or are out of order at phase {0}")]
    Overlap(u8),
    #[error("invalid schedule line: {0}")]
    BadLine(String),
}

impl PhaseSchedule {
    pub fn new(
        phases: Vec<(u8, NaiveDate, NaiveDate)>,
        offset_seconds: i32,
    ) -> Result<Self, ScheduleError> {
        for &(id, start, end) in &phases {
            if start > end {
                return Err(ScheduleError::ReversedRange(id));
            }
        }
        for w in phases.windows(2) {
            if w[0].2 >= w[1].1 {
                return Err(ScheduleError::Overlap(w[1].0));
            }
        }
        let offset = FixedOffset::east_opt(offset_seconds).expect("valid offset");
        Ok(PhaseSchedule { phases, offset })
    }

    /// The seven 2019 voting windows.
    pub fn default_2019() -> Self {
        let d = |m: u32, day: u32| NaiveDate::from_ymd_opt(2019, m, day).unwrap();
        PhaseSchedule::new(
            vec![
                (1, d(4, 11), d(4, 17)),
                (2, d(4, 18), d(4, 23)),
                (3, d(4, 24), d(4, 28)),
                (4, d(4, 29), d(5, 5)),
                (5, d(5, 6), d(5, 11)),
                (6, d(5, 12), d(5, 18)),
                (7, d(5, 19), d(5, 22)),
            ],
            IST_OFFSET_SECONDS,
        )
        .unwrap()
    }

    pub fn phases(&self) -> &[(u8, NaiveDate, NaiveDate)] {
        &self.phases
    }

    pub fn phase_ids(&self) -> impl Iterator<Item = PhaseId> + '_ {
        self.phases.iter().map(|&(id, _, _)| PhaseId::Phase(id))
    }

    /// All bucket ids in order: pre, each phase, post.
    pub fn all_ids(&self) -> Vec<PhaseId> {
        let mut ids = vec![PhaseId::Pre];
        ids.extend(self.phase_ids());
        ids.push(PhaseId::Post);
        ids
    }

    /// Parse `phase.N = YYYY-MM-DD..YYYY-MM-DD` lines. Blank lines and
    /// `#`-comments are skipped; other keys are ignored (they belong to the
    /// wider pipeline config).
    pub fn parse_config(text: &str, offset_seconds: i32) -> Result<Self, ScheduleError> {
        let mut phases = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                continue;
            };
            let key = key.trim();
            let Some(n) = key.strip_prefix("phase.") else {
                continue;
            };
            let id: u8 = n
                .trim()
                .parse()
                .map_err(|_| ScheduleError::BadLine(line.to_string()))?;
            let value = value.trim();
            let (start, end) = value
                .split_once("..")
                .ok_or_else(|| ScheduleError::BadLine(line.to_string()))?;
            let parse = |s: &str| {
                NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
                    .map_err(|_| ScheduleError::BadLine(line.to_string()))
            };
            phases.push((id, parse(start)?, parse(end)?));
        }
        phases.sort_by_key(|&(id, _, _)| id);
        PhaseSchedule::new(phases, offset_seconds)
    }
}

/// The phase whose date window contains the civil date of `ts`, or
/// `Pre`/`Post` outside all windows.
pub fn assign_phase(ts: DateTime<Utc>, schedule: &PhaseSchedule) -> PhaseId {
    let date = ts.with_timezone(&schedule.offset).date_naive();
    if schedule.phases.is_empty() || date < schedule.phases[0].1 {
        return PhaseId::Pre;
    }
    for &(id, start, end) in &schedule.phases {
        if date >= start && date <= end {
            return PhaseId::Phase(id);
        }
    }
    if date > schedule.phases.last().unwrap().2 {
        PhaseId::Post
    } else {
        // Date falls in a gap between phases; attach it to the phase it
        // precedes, matching the "talk continues until the next phase"
        // bucketing. The default 2019 schedule has no gaps.
        for &(id, start, _) in schedule.phases.iter().rev() {
            if date < start {
                continue;
            }
            return PhaseId::Phase(id);
        }
        PhaseId::Pre
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ist(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> DateTime<Utc> {
        FixedOffset::east_opt(IST_OFFSET_SECONDS)
            .unwrap()
            .with_ymd_and_hms(y, mo, d, h, mi, s)
            .unwrap()
            .with_timezone(&Utc)
    }

    #[test]
    fn phase_one_start() {
        let s = PhaseSchedule::default_2019();
        assert_eq!(assign_phase(ist(2019, 4, 11, 0, 0, 0), &s), PhaseId::Phase(1));
    }

    #[test]
    fn phase_seven_end() {
        let s = PhaseSchedule::default_2019();
        assert_eq!(
            assign_phase(ist(2019, 5, 22, 23, 59, 59), &s),
            PhaseId::Phase(7)
        );
    }

    #[test]
    fn pre_and_post() {
        let s = PhaseSchedule::default_2019();
        assert_eq!(assign_phase(ist(2019, 2, 5, 12, 0, 0), &s), PhaseId::Pre);
        assert_eq!(assign_phase(ist(2019, 5, 23, 0, 0, 0), &s), PhaseId::Post);
        assert_eq!(assign_phase(ist(2019, 6, 25, 0, 0, 0), &s), PhaseId::Post);
    }

    #[test]
    fn boundaries_flip_phase() {
        let s = PhaseSchedule::default_2019();
        // One second before each phase start vs. the start itself.
        for &(id, start, _) in s.phases() {
            let start_instant = ist(
                2019,
                chrono::Datelike::month(&start),
                chrono::Datelike::day(&start),
                0,
                0,
                0,
            );
            let before = start_instant - chrono::Duration::seconds(1);
            assert_eq!(assign_phase(start_instant, &s), PhaseId::Phase(id));
            assert_ne!(assign_phase(before, &s), PhaseId::Phase(id));
        }
    }

    #[test]
    fn partition_over_collection_window() {
        // Every day from Feb 5 to Jun 25 maps to exactly one bucket.
        let s = PhaseSchedule::default_2019();
        let mut day = NaiveDate::from_ymd_opt(2019, 2, 5).unwrap();
        let end = NaiveDate::from_ymd_opt(2019, 6, 25).unwrap();
        while day <= end {
            let ts = ist(
                2019,
                chrono::Datelike::month(&day),
                chrono::Datelike::day(&day),
                12,
                0,
                0,
            );
            let id = assign_phase(ts, &s);
            let matches = s
                .all_ids()
                .into_iter()
                .filter(|&candidate| candidate == id)
                .count();
            assert_eq!(matches, 1);
            day = day.succ_opt().unwrap();
        }
    }

    #[test]
    fn config_roundtrip() {
        let text = "\
# schedule override
phase.1 = 2019-04-11..2019-04-17
phase.2 = 2019-04-18..2019-04-23
phase.3 = 2019-04-24..2019-04-28
phase.4 = 2019-04-29..2019-05-05
phase.5 = 2019-05-06..2019-05-11
phase.6 = 2019-05-12..2019-05-18
phase.7 = 2019-05-19..2019-05-22
";
        let parsed = PhaseSchedule::parse_config(text, IST_OFFSET_SECONDS).unwrap();
        assert_eq!(parsed, PhaseSchedule::default_2019());
    }

    #[test]
    fn config_rejects_overlap() {
        let text = "phase.1 = 2019-04-11..2019-04-20\nphase.2 = 2019-04-18..2019-04-23\n";
        assert_eq!(
            PhaseSchedule::parse_config(text, IST_OFFSET_SECONDS),
            Err(ScheduleError::Overlap(2))
        );
    }

    #[test]
    fn config_rejects_reversed_range() {
        let text = "phase.1 = 2019-04-17..2019-04-11\n";
        assert_eq!(
            PhaseSchedule::parse_config(text, IST_OFFSET_SECONDS),
            Err(ScheduleError::ReversedRange(1))
        );
    }
}
