//! Core data model for temporal knowledge graphs: vocab-indexed facts in
//! two forms (single-timestamp and validity-interval), plus the `Dataset`
//! container holding vocabularies, annotations and chronological splits.

use serde::{Deserialize, Serialize};

/// Index into the entity vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

/// Index into the relation vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

/// Position in the chronologically ordered timestamp vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeIndex(pub u32);

impl TimeIndex {
    /// Absolute distance between two time indices, in vocabulary steps.
    pub fn abs_diff(self, other: TimeIndex) -> u32 {
        self.0.abs_diff(other.0)
    }
}

/// Precision of the time annotations of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Year,
    Month,
    Day,
    Minute15,
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Granularity::Year => write!(f, "year"),
            Granularity::Month => write!(f, "month"),
            Granularity::Day => write!(f, "day"),
            Granularity::Minute15 => write!(f, "minute15"),
        }
    }
}

/// A fact valid at a single point in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimestampFact {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
    pub time: TimeIndex,
}

/// A fact valid over an inclusive time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntervalFact {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
    pub start: TimeIndex,
    pub end: TimeIndex,
}

/// Label plus optional short description for an entity or relation.
///
/// The vocabulary position of the annotation is the id, so the struct
/// itself carries no id field.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TextAnnotation {
    pub label: String,
    /// Concise descriptive phrase; empty when unknown. Expected to be free
    /// of temporal expressions (see `construct::scrub_temporal_text`).
    pub short_description: String,
}

impl TextAnnotation {
    pub fn new(label: impl Into<String>, short_description: impl Into<String>) -> Self {
        TextAnnotation {
            label: label.into(),
            short_description: short_description.into(),
        }
    }

    /// The text used for length statistics: the short description when
    /// present, otherwise the label.
    pub fn display_text(&self) -> &str {
        if self.short_description.is_empty() {
            &self.label
        } else {
            &self.short_description
        }
    }
}

/// Facts of one chronological split, both knowledge forms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitFacts {
    pub stamps: Vec<TimestampFact>,
    pub intervals: Vec<IntervalFact>,
}

impl SplitFacts {
    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty() && self.intervals.is_empty()
    }
}

/// An in-memory temporal knowledge graph dataset.
///
/// Vocabulary indices are dense: `EntityId(i)` names `entities[i]`, and
/// likewise for relations and times. The time vocabulary is strictly
/// increasing in calendar order, so `TimeIndex` comparisons are
/// chronological comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub granularity: Granularity,
    pub entities: Vec<TextAnnotation>,
    pub relations: Vec<TextAnnotation>,
    /// Calendar strings, strictly increasing.
    pub times: Vec<String>,
    pub train: SplitFacts,
    pub valid: SplitFacts,
    pub test: SplitFacts,
    /// Calendar strings marking the start of the valid and test ranges,
    /// when the dataset was split chronologically.
    pub split_boundaries: Option<(String, String)>,
}

impl Dataset {
    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_times(&self) -> usize {
        self.times.len()
    }

    /// The final TimeIndex of the dataset, used as the clamping target for
    /// facts never predicted obsolete.
    pub fn last_time(&self) -> Option<TimeIndex> {
        if self.times.is_empty() {
            None
        } else {
            Some(TimeIndex(self.times.len() as u32 - 1))
        }
    }

    pub fn splits(&self) -> [&SplitFacts; 3] {
        [&self.train, &self.valid, &self.test]
    }

    /// All timestamp facts across splits, train first.
    pub fn all_stamps(&self) -> impl Iterator<Item = &TimestampFact> {
        self.train
            .stamps
            .iter()
            .chain(self.valid.stamps.iter())
            .chain(self.test.stamps.iter())
    }

    /// All interval facts across splits, train first.
    pub fn all_intervals(&self) -> impl Iterator<Item = &IntervalFact> {
        self.train
            .intervals
            .iter()
            .chain(self.valid.intervals.iter())
            .chain(self.test.intervals.iter())
    }

    /// Checks every id against the vocabularies, interval ordering, and the
    /// strict chronological order of the time vocabulary.
    pub fn validate(&self) -> Result<(), String> {
        for w in self.times.windows(2) {
            if w[0] >= w[1] {
                return Err(format!(
                    "time vocabulary not strictly increasing: {:?} then {:?}",
                    w[0], w[1]
                ));
            }
        }
        let (ne, nr, nt) = (
            self.entities.len() as u32,
            self.relations.len() as u32,
            self.times.len() as u32,
        );
        let check_ids = |s: EntityId, r: RelationId, o: EntityId| -> Result<(), String> {
            if s.0 >= ne || o.0 >= ne {
                return Err(format!("entity id out of range: s={} o={}", s.0, o.0));
            }
            if r.0 >= nr {
                return Err(format!("relation id out of range: r={}", r.0));
            }
            Ok(())
        };
        for split in self.splits() {
            for f in &split.stamps {
                check_ids(f.subject, f.relation, f.object)?;
                if f.time.0 >= nt {
                    return Err(format!("time id out of range: t={}", f.time.0));
                }
            }
            for f in &split.intervals {
                check_ids(f.subject, f.relation, f.object)?;
                if f.start.0 >= nt || f.end.0 >= nt {
                    return Err(format!(
                        "interval time out of range: [{}, {}]",
                        f.start.0, f.end.0
                    ));
                }
                if f.end < f.start {
                    return Err(format!(
                        "interval end before start: [{}, {}]",
                        f.start.0, f.end.0
                    ));
                }
            }
        }
        Ok(())
    }

    /// Returns a copy with reciprocal facts added: for each fact (s, r, o)
    /// a mirrored fact (o, r⁻¹, s) with a fresh inverse relation id offset
    /// by the original relation count. The relation vocabulary doubles.
    ///
    /// The loader never adds these; callers opt in.
    pub fn with_reciprocals(&self) -> Dataset {
        let n = self.relations.len() as u32;
        let mut relations = self.relations.clone();
        for ann in &self.relations {
            relations.push(TextAnnotation::new(
                format!("{}_inverse", ann.label),
                ann.short_description.clone(),
            ));
        }
        let mirror_split = |split: &SplitFacts| -> SplitFacts {
            let mut out = split.clone();
            for f in &split.stamps {
                out.stamps.push(TimestampFact {
                    subject: f.object,
                    relation: RelationId(f.relation.0 + n),
                    object: f.subject,
                    time: f.time,
                });
            }
            for f in &split.intervals {
                out.intervals.push(IntervalFact {
                    subject: f.object,
                    relation: RelationId(f.relation.0 + n),
                    object: f.subject,
                    start: f.start,
                    end: f.end,
                });
            }
            out
        };
        Dataset {
            granularity: self.granularity,
            entities: self.entities.clone(),
            relations,
            times: self.times.clone(),
            train: mirror_split(&self.train),
            valid: mirror_split(&self.valid),
            test: mirror_split(&self.test),
            split_boundaries: self.split_boundaries.clone(),
        }
    }
}

/// Expands interval facts into one timestamp fact per covered time index,
/// inclusive on both ends. Output length is exactly Σ(end − start + 1).
pub fn expand_intervals(facts: &[IntervalFact]) -> Vec<TimestampFact> {
    let total: u64 = facts
        .iter()
        .map(|f| (f.end.0 - f.start.0) as u64 + 1)
        .sum();
    let mut out = Vec::with_capacity(total as usize);
    for f in facts {
        for t in f.start.0..=f.end.0 {
            out.push(TimestampFact {
                subject: f.subject,
                relation: f.relation,
                object: f.object,
                time: TimeIndex(t),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ifact(s: u32, r: u32, o: u32, a: u32, b: u32) -> IntervalFact {
        IntervalFact {
            subject: EntityId(s),
            relation: RelationId(r),
            object: EntityId(o),
            start: TimeIndex(a),
            end: TimeIndex(b),
        }
    }

    #[test]
    fn expand_inclusive_both_ends() {
        let out = expand_intervals(&[ifact(0, 0, 1, 3, 5)]);
        let times: Vec<u32> = out.iter().map(|f| f.time.0).collect();
        assert_eq!(times, vec![3, 4, 5]);
    }

    #[test]
    fn expand_degenerate_interval() {
        let out = expand_intervals(&[ifact(0, 0, 1, 7, 7)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].time, TimeIndex(7));
    }

    #[test]
    fn expand_sum_of_lengths() {
        // Lengths 2 and 4 (inclusive), checked by explicit enumeration.
        let facts = vec![ifact(0, 0, 1, 0, 1), ifact(1, 0, 2, 2, 5)];
        let out = expand_intervals(&facts);
        let mut expected = Vec::new();
        for f in &facts {
            let mut t = f.start.0;
            loop {
                expected.push((f.subject, f.relation, f.object, t));
                if t == f.end.0 {
                    break;
                }
                t += 1;
            }
        }
        assert_eq!(out.len(), 6);
        assert_eq!(expected.len(), out.len());
        for (got, want) in out.iter().zip(expected.iter()) {
            assert_eq!(
                (got.subject, got.relation, got.object, got.time.0),
                *want
            );
        }
    }

    #[test]
    fn reciprocals_double_relations_and_facts() {
        let d = Dataset {
            granularity: Granularity::Day,
            entities: vec![TextAnnotation::new("a", ""), TextAnnotation::new("b", "")],
            relations: vec![TextAnnotation::new("p", "")],
            times: vec!["0".into(), "1".into()],
            train: SplitFacts {
                stamps: vec![TimestampFact {
                    subject: EntityId(0),
                    relation: RelationId(0),
                    object: EntityId(1),
                    time: TimeIndex(0),
                }],
                intervals: vec![],
            },
            valid: SplitFacts::default(),
            test: SplitFacts::default(),
            split_boundaries: None,
        };
        let r = d.with_reciprocals();
        assert_eq!(r.relations.len(), 2);
        assert_eq!(r.train.stamps.len(), 2);
        let inv = &r.train.stamps[1];
        assert_eq!(inv.subject, EntityId(1));
        assert_eq!(inv.relation, RelationId(1));
        assert_eq!(inv.object, EntityId(0));
        assert!(r.validate().is_ok());
    }

    #[test]
    fn validate_rejects_bad_interval() {
        let mut d = Dataset {
            granularity: Granularity::Day,
            entities: vec![TextAnnotation::new("a", ""), TextAnnotation::new("b", "")],
            relations: vec![TextAnnotation::new("p", "")],
            times: vec!["0".into(), "1".into()],
            train: SplitFacts::default(),
            valid: SplitFacts::default(),
            test: SplitFacts::default(),
            split_boundaries: None,
        };
        d.train.intervals.push(ifact(0, 0, 1, 1, 0));
        assert!(d.validate().is_err());
    }
}
