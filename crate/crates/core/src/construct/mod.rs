//! Dataset construction pipeline: popularity selection, date and
//! relation-frequency filtering, k-core entity selection, temporal text
//! scrubbing, and chronological splitting, ending in the on-disk dataset
//! format.
//!
//! All calendar values are strings whose lexicographic order is
//! chronological order (zero-padded, fixed-format), so the pipeline never
//! parses dates.

pub mod graph;
pub mod scrub;

pub use graph::{
    collapse_to_static, kcore_decompose, select_by_core, CoreSelection, GraphError, StaticGraph,
};
pub use scrub::{scrub_temporal_text, temporal_patterns};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    Dataset, EntityId, Granularity, IntervalFact, RelationId, SplitFacts, TextAnnotation,
    TimeIndex, TimestampFact,
};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("config: {0}")]
    Config(String),
    #[error("{file}:{line}: malformed row: {msg}")]
    MalformedRow {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("fact has end date {end} before start date {start}")]
    ReversedInterval { start: String, end: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no facts survive filtering")]
    EmptyAfterFilters,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A fact before vocabulary assignment: labels and calendar strings as
/// they arrive from the source. A present `end` makes it an interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFact {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub start: String,
    pub end: Option<String>,
}

/// Raw input corpus: facts plus optional entity descriptions and daily
/// pageview counts.
#[derive(Debug, Clone, Default)]
pub struct RawCorpus {
    pub facts: Vec<RawFact>,
    /// entity label → unscrubbed description
    pub descriptions: BTreeMap<String, String>,
    /// (entity label, day) → view count; None disables popularity selection
    pub pageviews: Option<BTreeMap<(String, String), u64>>,
}

/// Pipeline configuration, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructConfig {
    /// Minimum number of entities to select from the core hierarchy.
    pub entity_target: usize,
    /// Relations appearing in fewer facts than this are dropped whole.
    pub min_relation_freq: usize,
    /// Facts with any calendar date beyond this are dropped.
    pub max_calendar_date: String,
    /// Start of the validation range and start of the test range.
    pub split_boundaries: (String, String),
    /// Per-day entity count for popularity selection (used only when
    /// pageviews are supplied).
    pub top_n_per_day: usize,
    pub granularity: Granularity,
}

impl ConstructConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConstructError> {
        let cfg: ConstructConfig =
            toml::from_str(text).map_err(|e| ConstructError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConstructError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConstructError> {
        if self.entity_target < 1 {
            return Err(ConstructError::Config("entity_target must be ≥ 1".into()));
        }
        if self.min_relation_freq < 1 {
            return Err(ConstructError::Config(
                "min_relation_freq must be ≥ 1".into(),
            ));
        }
        if self.top_n_per_day < 1 {
            return Err(ConstructError::Config("top_n_per_day must be ≥ 1".into()));
        }
        if self.split_boundaries.1 < self.split_boundaries.0 {
            return Err(ConstructError::Config(format!(
                "split boundaries out of order: {:?} then {:?}",
                self.split_boundaries.0, self.split_boundaries.1
            )));
        }
        Ok(())
    }
}

/// Per-stage input/output counts, written next to a constructed dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_facts: usize,
    /// Entities surviving popularity selection; None when no pageview
    /// table was supplied.
    pub popularity_selected_entities: Option<usize>,
    pub after_date_filter: usize,
    pub after_entity_restriction: usize,
    pub relations_dropped: usize,
    pub after_relation_filter: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub min_core_included: u32,
    pub core_selected_entities: usize,
    pub after_core_restriction: usize,
    pub final_entities: usize,
    pub final_relations: usize,
    pub final_times: usize,
    pub train_facts: usize,
    pub valid_facts: usize,
    pub test_facts: usize,
}

/// Union over days of each day's `top_n` most-viewed entities; ties go to
/// the ascending entity key.
pub fn select_popular<E: Ord + Clone>(
    views: &BTreeMap<(E, String), u64>,
    top_n: usize,
) -> BTreeSet<E> {
    let mut by_day: BTreeMap<&String, Vec<(&E, u64)>> = BTreeMap::new();
    for ((entity, day), count) in views {
        by_day.entry(day).or_default().push((entity, *count));
    }
    let mut selected = BTreeSet::new();
    for (_, mut entries) in by_day {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        for (entity, _) in entries.into_iter().take(top_n) {
            selected.insert(entity.clone());
        }
    }
    selected
}

fn date_ok(f: &RawFact, max: &str) -> bool {
    f.start.as_str() <= max && f.end.as_deref().is_none_or(|e| e <= max)
}

fn endpoints_in(f: &RawFact, selected: &BTreeSet<String>) -> bool {
    selected.contains(&f.subject) && selected.contains(&f.object)
}

fn drop_rare_relations(facts: Vec<RawFact>, min_freq: usize) -> (Vec<RawFact>, usize) {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for f in &facts {
        *freq.entry(f.relation.as_str()).or_insert(0) += 1;
    }
    let keep: BTreeSet<String> = freq
        .iter()
        .filter(|(_, c)| **c >= min_freq)
        .map(|(r, _)| r.to_string())
        .collect();
    let dropped = freq.len() - keep.len();
    (
        facts
            .into_iter()
            .filter(|f| keep.contains(&f.relation))
            .collect(),
        dropped,
    )
}

/// Date filter, optional entity restriction, then a single-pass
/// relation-frequency filter measured on what survives the first two.
/// Dropping a whole relation never changes surviving relations' counts,
/// so the function is idempotent.
pub fn filter_facts(
    facts: &[RawFact],
    cfg: &ConstructConfig,
    selected: Option<&BTreeSet<String>>,
) -> Vec<RawFact> {
    let dated: Vec<RawFact> = facts
        .iter()
        .filter(|f| date_ok(f, &cfg.max_calendar_date))
        .filter(|f| selected.is_none_or(|s| endpoints_in(f, s)))
        .cloned()
        .collect();
    drop_rare_relations(dated, cfg.min_relation_freq).0
}

/// Train, valid, and test portions of a raw fact list.
pub type RawSplits = (Vec<RawFact>, Vec<RawFact>, Vec<RawFact>);

/// Splits facts by calendar time: start < b1 → train, start < b2 → valid,
/// rest → test. Interval facts go by their start date. The three outputs
/// partition the input; any of them may be empty.
pub fn chronological_split(
    facts: &[RawFact],
    boundaries: &(String, String),
) -> Result<RawSplits, ConstructError> {
    if boundaries.1 < boundaries.0 {
        return Err(ConstructError::Config(format!(
            "split boundaries out of order: {:?} then {:?}",
            boundaries.0, boundaries.1
        )));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for f in facts {
        if f.start < boundaries.0 {
            train.push(f.clone());
        } else if f.start < boundaries.1 {
            valid.push(f.clone());
        } else {
            test.push(f.clone());
        }
    }
    Ok((train, valid, test))
}

fn to_split_facts(
    facts: &[RawFact],
    entity_ids: &BTreeMap<&str, u32>,
    relation_ids: &BTreeMap<&str, u32>,
    time_ids: &BTreeMap<&str, u32>,
) -> Result<SplitFacts, ConstructError> {
    let mut out = SplitFacts::default();
    for f in facts {
        let s = EntityId(entity_ids[f.subject.as_str()]);
        let r = RelationId(relation_ids[f.relation.as_str()]);
        let o = EntityId(entity_ids[f.object.as_str()]);
        let start = TimeIndex(time_ids[f.start.as_str()]);
        match &f.end {
            None => out.stamps.push(TimestampFact {
                subject: s,
                relation: r,
                object: o,
                time: start,
            }),
            Some(end) => {
                if end < &f.start {
                    return Err(ConstructError::ReversedInterval {
                        start: f.start.clone(),
                        end: end.clone(),
                    });
                }
                out.intervals.push(IntervalFact {
                    subject: s,
                    relation: r,
                    object: o,
                    start,
                    end: TimeIndex(time_ids[end.as_str()]),
                });
            }
        }
    }
    Ok(out)
}

/// Runs the full pipeline: popularity selection (when pageviews exist),
/// date/entity/relation filtering, static collapse, k-core selection,
/// description scrubbing, vocabulary assignment, and the chronological
/// split. Returns the dataset and the per-stage counts.
pub fn build_dataset(
    corpus: &RawCorpus,
    cfg: &ConstructConfig,
) -> Result<(Dataset, Provenance), ConstructError> {
    cfg.validate()?;
    let input_facts = corpus.facts.len();

    let popular: Option<BTreeSet<String>> = corpus
        .pageviews
        .as_ref()
        .map(|pv| select_popular(pv, cfg.top_n_per_day));

    let dated: Vec<RawFact> = corpus
        .facts
        .iter()
        .filter(|f| date_ok(f, &cfg.max_calendar_date))
        .cloned()
        .collect();
    let after_date_filter = dated.len();

    let restricted: Vec<RawFact> = match &popular {
        Some(sel) => dated.into_iter().filter(|f| endpoints_in(f, sel)).collect(),
        None => dated,
    };
    let after_entity_restriction = restricted.len();

    let (surviving, relations_dropped) =
        drop_rare_relations(restricted, cfg.min_relation_freq);
    let after_relation_filter = surviving.len();
    if surviving.is_empty() {
        return Err(ConstructError::EmptyAfterFilters);
    }

    // Provisional ids over surviving labels, sorted for determinism.
    let labels: BTreeSet<&str> = surviving
        .iter()
        .flat_map(|f| [f.subject.as_str(), f.object.as_str()])
        .collect();
    let pid: BTreeMap<&str, u32> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, i as u32))
        .collect();
    let by_pid: Vec<&str> = labels.iter().copied().collect();

    let g = StaticGraph::from_edges(
        surviving
            .iter()
            .map(|f| (EntityId(pid[f.subject.as_str()]), EntityId(pid[f.object.as_str()]))),
    );
    let selection = select_by_core(&g, cfg.entity_target)?;
    let selected_labels: BTreeSet<&str> = selection
        .entities
        .iter()
        .map(|e| by_pid[e.0 as usize])
        .collect();

    let core_facts: Vec<RawFact> = surviving
        .iter()
        .filter(|f| {
            selected_labels.contains(f.subject.as_str())
                && selected_labels.contains(f.object.as_str())
        })
        .cloned()
        .collect();
    let after_core_restriction = core_facts.len();
    if core_facts.is_empty() {
        return Err(ConstructError::EmptyAfterFilters);
    }

    // Final vocabularies from the facts that made it through.
    let final_labels: BTreeSet<&str> = core_facts
        .iter()
        .flat_map(|f| [f.subject.as_str(), f.object.as_str()])
        .collect();
    let relation_labels: BTreeSet<&str> =
        core_facts.iter().map(|f| f.relation.as_str()).collect();
    let dates: BTreeSet<&str> = core_facts
        .iter()
        .flat_map(|f| {
            std::iter::once(f.start.as_str()).chain(f.end.as_deref())
        })
        .collect();
    let entity_ids: BTreeMap<&str, u32> = final_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, i as u32))
        .collect();
    let relation_ids: BTreeMap<&str, u32> = relation_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, i as u32))
        .collect();
    let time_ids: BTreeMap<&str, u32> = dates
        .iter()
        .enumerate()
        .map(|(i, d)| (*d, i as u32))
        .collect();

    let entities: Vec<TextAnnotation> = final_labels
        .iter()
        .map(|l| {
            let desc = corpus
                .descriptions
                .get(*l)
                .map(|d| scrub_temporal_text(d))
                .unwrap_or_default();
            TextAnnotation::new(*l, desc)
        })
        .collect();
    let relations: Vec<TextAnnotation> = relation_labels
        .iter()
        .map(|l| TextAnnotation::new(*l, ""))
        .collect();
    let times: Vec<String> = dates.iter().map(|d| d.to_string()).collect();

    let (train_raw, valid_raw, test_raw) =
        chronological_split(&core_facts, &cfg.split_boundaries)?;
    let train = to_split_facts(&train_raw, &entity_ids, &relation_ids, &time_ids)?;
    let valid = to_split_facts(&valid_raw, &entity_ids, &relation_ids, &time_ids)?;
    let test = to_split_facts(&test_raw, &entity_ids, &relation_ids, &time_ids)?;

    let provenance = Provenance {
        input_facts,
        popularity_selected_entities: popular.as_ref().map(|s| s.len()),
        after_date_filter,
        after_entity_restriction,
        relations_dropped,
        after_relation_filter,
        graph_nodes: g.num_nodes(),
        graph_edges: g.num_edges(),
        min_core_included: selection.min_core_included,
        core_selected_entities: selection.entities.len(),
        after_core_restriction,
        final_entities: entities.len(),
        final_relations: relations.len(),
        final_times: times.len(),
        train_facts: train_raw.len(),
        valid_facts: valid_raw.len(),
        test_facts: test_raw.len(),
    };
    let dataset = Dataset {
        granularity: cfg.granularity,
        entities,
        relations,
        times,
        train,
        valid,
        test,
        split_boundaries: Some(cfg.split_boundaries.clone()),
    };
    debug_assert!(dataset.validate().is_ok());
    Ok((dataset, provenance))
}

fn read_tsv(path: &Path) -> Result<Vec<(usize, Vec<String>)>, ConstructError> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l.split('\t').map(str::to_string).collect()))
        .collect())
}

/// Loads a raw corpus directory: `facts.tsv` (subject, relation, object,
/// start[, end]), optional `descriptions.tsv` (label, description), and
/// optional `pageviews.tsv` (label, day, count).
pub fn load_raw_corpus(dir: &Path) -> Result<RawCorpus, ConstructError> {
    let facts_path = dir.join("facts.tsv");
    let mut facts = Vec::new();
    for (line, fields) in read_tsv(&facts_path)? {
        if fields.len() != 4 && fields.len() != 5 {
            return Err(ConstructError::MalformedRow {
                file: "facts.tsv".into(),
                line,
                msg: format!("expected 4 or 5 tab-separated fields, got {}", fields.len()),
            });
        }
        let end = fields.get(4).cloned();
        if let Some(e) = &end {
            if e < &fields[3] {
                return Err(ConstructError::MalformedRow {
                    file: "facts.tsv".into(),
                    line,
                    msg: format!("end date {:?} before start date {:?}", e, fields[3]),
                });
            }
        }
        facts.push(RawFact {
            subject: fields[0].clone(),
            relation: fields[1].clone(),
            object: fields[2].clone(),
            start: fields[3].clone(),
            end,
        });
    }

    let mut descriptions = BTreeMap::new();
    let desc_path = dir.join("descriptions.tsv");
    if desc_path.exists() {
        for (line, fields) in read_tsv(&desc_path)? {
            if fields.len() != 2 {
                return Err(ConstructError::MalformedRow {
                    file: "descriptions.tsv".into(),
                    line,
                    msg: format!("expected 2 tab-separated fields, got {}", fields.len()),
                });
            }
            descriptions.insert(fields[0].clone(), fields[1].clone());
        }
    }

    let pv_path = dir.join("pageviews.tsv");
    let pageviews = if pv_path.exists() {
        let mut pv = BTreeMap::new();
        for (line, fields) in read_tsv(&pv_path)? {
            if fields.len() != 3 {
                return Err(ConstructError::MalformedRow {
                    file: "pageviews.tsv".into(),
                    line,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let count: u64 = fields[2].parse().map_err(|_| ConstructError::MalformedRow {
                file: "pageviews.tsv".into(),
                line,
                msg: format!("count is not an integer: {:?}", fields[2]),
            })?;
            pv.insert((fields[0].clone(), fields[1].clone()), count);
        }
        Some(pv)
    } else {
        None
    };

    Ok(RawCorpus {
        facts,
        descriptions,
        pageviews,
    })
}
