//! Corpus alignment: label → entity code, or an explicit unresolved mark.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::text::{clean_label, labels_match_exactly, Verifier};
use crate::{WikidataClient, WikidataError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AlignmentOutcome {
    Matched {
        wikidata_id: String,
        /// True when the exact-label shortcut fired and no verifier ran.
        via_exact: bool,
    },
    Unresolved,
}

fn align_one<V: Verifier + ?Sized>(
    client: &WikidataClient,
    label: &str,
    verifier: &V,
) -> Result<AlignmentOutcome, WikidataError> {
    let cleaned = clean_label(label);
    if cleaned.is_empty() {
        return Ok(AlignmentOutcome::Unresolved);
    }
    let candidates = client.search_entity(&cleaned)?;
    if candidates.len() == 1 && labels_match_exactly(&candidates[0].label, &cleaned) {
        return Ok(AlignmentOutcome::Matched {
            wikidata_id: candidates[0].wikidata_id.clone(),
            via_exact: true,
        });
    }
    for c in &candidates {
        if verifier.accept(&cleaned, c) {
            return Ok(AlignmentOutcome::Matched {
                wikidata_id: c.wikidata_id.clone(),
                via_exact: false,
            });
        }
    }
    Ok(AlignmentOutcome::Unresolved)
}

/// Aligns every label: clean, search, take an exact match directly, and
/// otherwise accept the first candidate (in rank order) the verifier
/// approves. Labels are processed by up to `max_inflight` workers; the
/// result map and any error are independent of scheduling. A failed run
/// leaves all completed lookups cached, so a rerun resumes cheaply.
pub fn align_corpus<V: Verifier + Sync>(
    client: &WikidataClient,
    labels: &[String],
    verifier: &V,
) -> Result<BTreeMap<String, AlignmentOutcome>, WikidataError> {
    let n = labels.len();
    let results: Mutex<Vec<Option<Result<AlignmentOutcome, WikidataError>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = client.config().max_inflight.clamp(1, n.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = align_one(client, &labels[i], verifier);
                results.lock().expect("result lock poisoned")[i] = Some(r);
            });
        }
    });

    let mut out = BTreeMap::new();
    for (label, slot) in labels.iter().zip(results.into_inner().expect("lock poisoned")) {
        let outcome = slot.expect("every index was processed")?;
        out.insert(label.clone(), outcome);
    }
    Ok(out)
}
