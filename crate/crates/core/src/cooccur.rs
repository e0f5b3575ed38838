//! Directed co-occurrence counts over training facts.
//!
//! Three views of the same corpus, all time-blind (the timestamp field is
//! ignored entirely):
//! - subject → object counts
//! - relation → object counts
//! - (subject, relation) → object counts
//!
//! The pair-keyed view is the source of truth; the other two are its
//! marginals and are kept materialized for lookup speed. A small binary
//! cache keyed by the training file's content hash avoids rebuilding the
//! index across runs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::types::{EntityId, RelationId, TimestampFact};

const CACHE_MAGIC: &[u8; 8] = b"TKGCIDX1";

#[derive(Debug, Clone, Default)]
pub struct CooccurrenceIndex {
    /// subject → relation → object → count. BTreeMap at the relation level
    /// keeps per-subject relation enumeration deterministic.
    pair: HashMap<EntityId, BTreeMap<RelationId, HashMap<EntityId, u32>>>,
    /// subject → object → count (marginal over relations).
    subj: HashMap<EntityId, HashMap<EntityId, u32>>,
    /// relation → object → count (marginal over subjects).
    rel: HashMap<RelationId, HashMap<EntityId, u32>>,
    num_facts: u64,
}

impl CooccurrenceIndex {
    /// Builds the index from training facts. Duplicate facts accumulate;
    /// timestamps are ignored.
    pub fn build(facts: &[TimestampFact]) -> Self {
        let mut idx = CooccurrenceIndex::default();
        for f in facts {
            idx.add(f.subject, f.relation, f.object);
        }
        idx
    }

    fn add(&mut self, s: EntityId, r: RelationId, o: EntityId) {
        *self
            .pair
            .entry(s)
            .or_default()
            .entry(r)
            .or_default()
            .entry(o)
            .or_insert(0) += 1;
        *self.subj.entry(s).or_default().entry(o).or_insert(0) += 1;
        *self.rel.entry(r).or_default().entry(o).or_insert(0) += 1;
        self.num_facts += 1;
    }

    pub fn num_facts(&self) -> u64 {
        self.num_facts
    }

    /// Number of distinct (subject, relation) keys.
    pub fn num_pair_keys(&self) -> usize {
        self.pair.values().map(|by_r| by_r.len()).sum()
    }

    /// Number of distinct subjects appearing in training facts.
    pub fn num_subjects(&self) -> usize {
        self.subj.len()
    }

    /// Number of distinct relations appearing in training facts.
    pub fn num_relations(&self) -> usize {
        self.rel.len()
    }

    pub fn pair_object_count(&self, s: EntityId, r: RelationId, o: EntityId) -> u32 {
        self.pair
            .get(&s)
            .and_then(|by_r| by_r.get(&r))
            .and_then(|by_o| by_o.get(&o))
            .copied()
            .unwrap_or(0)
    }

    pub fn subject_object_count(&self, s: EntityId, o: EntityId) -> u32 {
        self.subj
            .get(&s)
            .and_then(|by_o| by_o.get(&o))
            .copied()
            .unwrap_or(0)
    }

    pub fn relation_object_count(&self, r: RelationId, o: EntityId) -> u32 {
        self.rel
            .get(&r)
            .and_then(|by_o| by_o.get(&o))
            .copied()
            .unwrap_or(0)
    }

    /// True when the triple (s, r, o) occurs at least once in training.
    pub fn contains_triple(&self, s: EntityId, r: RelationId, o: EntityId) -> bool {
        self.pair_object_count(s, r, o) > 0
    }

    /// Relations the subject was observed with, ascending by id.
    pub fn relations_of_subject(&self, s: EntityId) -> impl Iterator<Item = RelationId> + '_ {
        self.pair
            .get(&s)
            .into_iter()
            .flat_map(|by_r| by_r.keys().copied())
    }

    /// All relations appearing in training facts, ascending by id.
    pub fn relations_sorted(&self) -> Vec<RelationId> {
        let mut v: Vec<RelationId> = self.rel.keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Distinct objects recorded for a (subject, relation) key.
    pub fn num_objects_for_pair(&self, s: EntityId, r: RelationId) -> usize {
        self.pair
            .get(&s)
            .and_then(|by_r| by_r.get(&r))
            .map(|by_o| by_o.len())
            .unwrap_or(0)
    }

    fn sorted_desc(by_o: Option<&HashMap<EntityId, u32>>) -> Vec<(EntityId, u32)> {
        let mut v: Vec<(EntityId, u32)> = by_o
            .map(|m| m.iter().map(|(o, c)| (*o, *c)).collect())
            .unwrap_or_default();
        // Count descending, entity id ascending on ties.
        v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Objects for (s, r), count descending, id ascending on ties.
    pub fn sorted_objects_for_pair(&self, s: EntityId, r: RelationId) -> Vec<(EntityId, u32)> {
        Self::sorted_desc(self.pair.get(&s).and_then(|by_r| by_r.get(&r)))
    }

    /// Objects for subject s across all relations, count descending,
    /// id ascending on ties.
    pub fn sorted_objects_for_subject(&self, s: EntityId) -> Vec<(EntityId, u32)> {
        Self::sorted_desc(self.subj.get(&s))
    }

    /// Objects for relation r across all subjects, count descending,
    /// id ascending on ties.
    pub fn sorted_objects_for_relation(&self, r: RelationId) -> Vec<(EntityId, u32)> {
        Self::sorted_desc(self.rel.get(&r))
    }

    /// All (s, r, o, count) triples in ascending key order.
    fn sorted_triples(&self) -> Vec<(u32, u32, u32, u32)> {
        let mut out = Vec::new();
        for (s, by_r) in &self.pair {
            for (r, by_o) in by_r {
                for (o, c) in by_o {
                    out.push((s.0, r.0, o.0, *c));
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn from_triples(triples: impl IntoIterator<Item = (u32, u32, u32, u32)>) -> Self {
        let mut idx = CooccurrenceIndex::default();
        for (s, r, o, c) in triples {
            let (s, r, o) = (EntityId(s), RelationId(r), EntityId(o));
            *idx.pair
                .entry(s)
                .or_default()
                .entry(r)
                .or_default()
                .entry(o)
                .or_insert(0) += c;
            *idx.subj.entry(s).or_default().entry(o).or_insert(0) += c;
            *idx.rel.entry(r).or_default().entry(o).or_insert(0) += c;
            idx.num_facts += c as u64;
        }
        idx
    }

    /// Writes a binary cache of the index, keyed by the content hash of the
    /// training data (hex string). Only pair-level triples are stored; the
    /// marginals are rebuilt on load.
    pub fn write_cache(&self, path: &Path, train_hash_hex: &str) -> std::io::Result<()> {
        let triples = self.sorted_triples();
        let mut buf = Vec::with_capacity(8 + 64 + 8 + triples.len() * 16);
        buf.extend_from_slice(CACHE_MAGIC);
        let mut hash_bytes = [0u8; 64];
        let src = train_hash_hex.as_bytes();
        let n = src.len().min(64);
        hash_bytes[..n].copy_from_slice(&src[..n]);
        buf.extend_from_slice(&hash_bytes);
        buf.extend_from_slice(&(triples.len() as u64).to_le_bytes());
        for (s, r, o, c) in &triples {
            buf.extend_from_slice(&s.to_le_bytes());
            buf.extend_from_slice(&r.to_le_bytes());
            buf.extend_from_slice(&o.to_le_bytes());
            buf.extend_from_slice(&c.to_le_bytes());
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }

    /// Loads a cached index if the file exists, parses, and carries the
    /// expected training-data hash. Any mismatch or corruption is treated
    /// as a cache miss, never an error.
    pub fn read_cache(path: &Path, train_hash_hex: &str) -> std::io::Result<Option<Self>> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        if bytes.len() < 8 + 64 + 8 || &bytes[..8] != CACHE_MAGIC {
            return Ok(None);
        }
        let mut expected = [0u8; 64];
        let src = train_hash_hex.as_bytes();
        let n = src.len().min(64);
        expected[..n].copy_from_slice(&src[..n]);
        if bytes[8..72] != expected {
            return Ok(None);
        }
        let count = u64::from_le_bytes(bytes[72..80].try_into().unwrap()) as usize;
        let body = &bytes[80..];
        if body.len() != count * 16 {
            return Ok(None);
        }
        let triples = (0..count).map(|i| {
            let at = |j: usize| -> u32 {
                u32::from_le_bytes(body[i * 16 + j * 4..i * 16 + j * 4 + 4].try_into().unwrap())
            };
            (at(0), at(1), at(2), at(3))
        });
        Ok(Some(Self::from_triples(triples)))
    }
}

impl PartialEq for CooccurrenceIndex {
    fn eq(&self, other: &Self) -> bool {
        self.num_facts == other.num_facts && self.sorted_triples() == other.sorted_triples()
    }
}
