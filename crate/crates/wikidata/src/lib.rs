//! Client for entity alignment against Wikidata: entity search, label and
//! description retrieval, and Wikipedia pageview counts.
//!
//! Every response is cached to a content-addressed file (sha256 of the
//! request URL), so a warm cache makes every operation a pure function of
//! its inputs. Offline mode never constructs an HTTP client at all —
//! cache misses become errors instead of requests. Tests run exclusively
//! from committed fixture files installed into a cache directory.

pub mod align;
pub mod text;

pub use align::{align_corpus, AlignmentOutcome};
pub use text::{clean_label, labels_match_exactly, AlignmentCandidate, SimilarityVerifier, Verifier};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tkgbench_core::construct::scrub_temporal_text;
use tkgbench_core::hash::sha256_hex;
use tkgbench_core::types::TextAnnotation;
use url::Url;

#[derive(Debug, Error)]
pub enum WikidataError {
    #[error("label is empty after cleaning")]
    EmptyLabel,
    #[error("malformed entity code: {0:?} (expected Q or P followed by digits)")]
    BadCode(String),
    #[error("unknown entity code: {0}")]
    UnknownCode(String),
    #[error("invalid date range {start}..{end} (need 8-digit YYYYMMDD, start ≤ end)")]
    InvalidRange { start: String, end: String },
    #[error("offline and not cached: {url}")]
    OfflineMiss { url: String },
    #[error("request failed after {attempts} attempts: {url}: {msg}")]
    Network {
        url: String,
        attempts: u32,
        msg: String,
    },
    #[error("unexpected response for {url}: {msg}")]
    Malformed { url: String, msg: String },
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub cache_dir: PathBuf,
    /// Serve exclusively from the cache; a miss is an error, never a request.
    pub offline: bool,
    /// Upper bound on concurrently issued requests (workers in align_corpus).
    pub max_inflight: usize,
    /// Retries per request on transport errors and 429/5xx, with
    /// exponential backoff between attempts.
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub user_agent: String,
}

impl ClientConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        ClientConfig {
            cache_dir: cache_dir.into(),
            offline: false,
            max_inflight: 4,
            max_retries: 3,
            backoff_base: Duration::from_millis(250),
            user_agent: concat!("tkgbench/", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }

    pub fn offline(mut self, yes: bool) -> Self {
        self.offline = yes;
        self
    }

    pub fn max_inflight(mut self, n: usize) -> Self {
        self.max_inflight = n.max(1);
        self
    }
}

/// One cached exchange; also the entry shape inside fixture files.
#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    url: String,
    body: String,
}

pub struct WikidataClient {
    cfg: ClientConfig,
    http: Option<reqwest::blocking::Client>,
    cache_write: Mutex<()>,
}

pub fn search_url(label: &str) -> String {
    Url::parse_with_params(
        "https://www.wikidata.org/w/api.php",
        [
            ("action", "wbsearchentities"),
            ("format", "json"),
            ("language", "en"),
            ("limit", "5"),
            ("search", label),
        ],
    )
    .expect("static base url parses")
    .into()
}

pub fn entity_url(code: &str) -> String {
    Url::parse_with_params(
        "https://www.wikidata.org/w/api.php",
        [
            ("action", "wbgetentities"),
            ("format", "json"),
            ("languages", "en"),
            ("props", "labels|descriptions"),
            ("ids", code),
        ],
    )
    .expect("static base url parses")
    .into()
}

pub fn pageviews_url(title: &str, start: &str, end: &str) -> String {
    let mut url = Url::parse("https://wikimedia.org/api/rest_v1/metrics/pageviews/per-article")
        .expect("static base url parses");
    url.path_segments_mut()
        .expect("https urls have path segments")
        .extend([
            "en.wikipedia",
            "all-access",
            "all-agents",
            title,
            "daily",
            start,
            end,
        ]);
    url.into()
}

fn code_is_well_formed(code: &str) -> bool {
    let mut chars = code.chars();
    matches!(chars.next(), Some('Q' | 'P')) && {
        let rest = &code[1..];
        !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())
    }
}

fn valid_day(s: &str) -> bool {
    s.len() == 8 && s.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Deserialize)]
struct SearchResponse {
    #[serde(default)]
    search: Vec<SearchHit>,
}

#[derive(Deserialize)]
struct SearchHit {
    id: String,
    #[serde(default)]
    label: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct EntitiesResponse {
    #[serde(default)]
    entities: BTreeMap<String, EntityRecord>,
}

#[derive(Deserialize)]
struct EntityRecord {
    missing: Option<String>,
    #[serde(default)]
    labels: BTreeMap<String, LangValue>,
    #[serde(default)]
    descriptions: BTreeMap<String, LangValue>,
}

#[derive(Deserialize)]
struct LangValue {
    value: String,
}

#[derive(Deserialize)]
struct PageviewsResponse {
    #[serde(default)]
    items: Vec<PageviewItem>,
}

#[derive(Deserialize)]
struct PageviewItem {
    timestamp: String,
    views: u64,
}

impl WikidataClient {
    pub fn new(cfg: ClientConfig) -> Result<Self, WikidataError> {
        fs::create_dir_all(&cfg.cache_dir)?;
        let http = if cfg.offline {
            None
        } else {
            Some(
                reqwest::blocking::Client::builder()
                    .user_agent(cfg.user_agent.clone())
                    .timeout(Duration::from_secs(30))
                    .build()
                    .map_err(|e| WikidataError::Network {
                        url: String::new(),
                        attempts: 0,
                        msg: e.to_string(),
                    })?,
            )
        };
        Ok(WikidataClient {
            cfg,
            http,
            cache_write: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn cache_path(&self, url: &str) -> PathBuf {
        self.cfg
            .cache_dir
            .join(format!("{}.json", sha256_hex(url.as_bytes())))
    }

    /// Cache first; in offline mode a miss is an error, otherwise the
    /// request is retried with exponential backoff on 429/5xx and
    /// transport failures, then cached atomically.
    fn fetch(&self, url: &str) -> Result<String, WikidataError> {
        let path = self.cache_path(url);
        if let Ok(raw) = fs::read_to_string(&path) {
            if let Ok(entry) = serde_json::from_str::<CacheEntry>(&raw) {
                if entry.url == url {
                    return Ok(entry.body);
                }
            }
            // Corrupt or colliding entry: fall through and refetch.
        }
        let Some(http) = &self.http else {
            return Err(WikidataError::OfflineMiss { url: url.into() });
        };

        let mut last_msg = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.cfg.backoff_base * 2u32.pow(attempt - 1));
            }
            match http.get(url).send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let body = resp.text().map_err(|e| WikidataError::Network {
                            url: url.into(),
                            attempts: attempt + 1,
                            msg: e.to_string(),
                        })?;
                        self.store(url, &path, &body)?;
                        return Ok(body);
                    }
                    last_msg = format!("HTTP {status}");
                    let retryable = status.as_u16() == 429 || status.is_server_error();
                    if !retryable {
                        break;
                    }
                }
                Err(e) => last_msg = e.to_string(),
            }
        }
        Err(WikidataError::Network {
            url: url.into(),
            attempts: self.cfg.max_retries + 1,
            msg: last_msg,
        })
    }

    fn store(&self, url: &str, path: &Path, body: &str) -> Result<(), WikidataError> {
        let entry = CacheEntry {
            url: url.into(),
            body: body.into(),
        };
        let _guard = self.cache_write.lock().expect("cache lock poisoned");
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_string(&entry).expect("cache entry serializes"))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    fn parse<T: serde::de::DeserializeOwned>(url: &str, body: &str) -> Result<T, WikidataError> {
        serde_json::from_str(body).map_err(|e| WikidataError::Malformed {
            url: url.into(),
            msg: e.to_string(),
        })
    }

    /// Searches for entities matching a label. A hit whose label matches
    /// the query exactly (case- and diacritic-insensitive) is returned
    /// alone; otherwise up to five candidates arrive in rank order.
    /// No results is an empty list, not an error.
    pub fn search_entity(&self, label: &str) -> Result<Vec<AlignmentCandidate>, WikidataError> {
        if label.trim().is_empty() {
            return Err(WikidataError::EmptyLabel);
        }
        let url = search_url(label);
        let body = self.fetch(&url)?;
        let parsed: SearchResponse = Self::parse(&url, &body)?;
        let mut out: Vec<AlignmentCandidate> = parsed
            .search
            .into_iter()
            .take(5)
            .enumerate()
            .map(|(i, hit)| AlignmentCandidate {
                wikidata_id: hit.id,
                label: hit.label,
                short_description: hit.description,
                rank: (i + 1) as u8,
            })
            .collect();
        if let Some(exact) = out.iter().position(|c| labels_match_exactly(&c.label, label)) {
            let mut only = out.swap_remove(exact);
            only.rank = 1;
            return Ok(vec![only]);
        }
        Ok(out)
    }

    /// Fetches the English label and description for a Q/P code. The
    /// description is scrubbed of temporal phrasing before it is returned.
    pub fn fetch_annotation(&self, code: &str) -> Result<TextAnnotation, WikidataError> {
        if !code_is_well_formed(code) {
            return Err(WikidataError::BadCode(code.into()));
        }
        let url = entity_url(code);
        let body = self.fetch(&url)?;
        let parsed: EntitiesResponse = Self::parse(&url, &body)?;
        let record = parsed
            .entities
            .get(code)
            .ok_or_else(|| WikidataError::UnknownCode(code.into()))?;
        if record.missing.is_some() {
            return Err(WikidataError::UnknownCode(code.into()));
        }
        let label = record.labels.get("en").map(|v| v.value.clone()).unwrap_or_default();
        let desc = record
            .descriptions
            .get("en")
            .map(|v| scrub_temporal_text(&v.value))
            .unwrap_or_default();
        Ok(TextAnnotation::new(label, desc))
    }

    /// Daily pageview counts for a Wikipedia article title over an
    /// inclusive YYYYMMDD range. Days without data are absent from the
    /// map, never zero-filled.
    pub fn fetch_pageviews(
        &self,
        title: &str,
        start: &str,
        end: &str,
    ) -> Result<BTreeMap<String, u64>, WikidataError> {
        if !valid_day(start) || !valid_day(end) || start > end {
            return Err(WikidataError::InvalidRange {
                start: start.into(),
                end: end.into(),
            });
        }
        let url = pageviews_url(title, start, end);
        let body = self.fetch(&url)?;
        let parsed: PageviewsResponse = Self::parse(&url, &body)?;
        Ok(parsed
            .items
            .into_iter()
            .map(|item| {
                let day = item.timestamp.get(..8).unwrap_or(&item.timestamp).to_string();
                (day, item.views)
            })
            .collect())
    }
}

/// One recorded exchange in a fixture file: the exact request URL and its
/// response body (either a JSON value or a pre-encoded string).
#[derive(Deserialize)]
struct FixtureEntry {
    url: String,
    body: serde_json::Value,
}

/// Installs committed fixtures into a cache directory so an offline client
/// can serve them. Returns the number of entries written.
pub fn install_fixtures(fixture_file: &Path, cache_dir: &Path) -> Result<usize, WikidataError> {
    let raw = fs::read_to_string(fixture_file)?;
    let entries: Vec<FixtureEntry> =
        serde_json::from_str(&raw).map_err(|e| WikidataError::Malformed {
            url: fixture_file.display().to_string(),
            msg: e.to_string(),
        })?;
    fs::create_dir_all(cache_dir)?;
    let n = entries.len();
    for entry in entries {
        let body = match entry.body {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        let cache_entry = CacheEntry {
            url: entry.url.clone(),
            body,
        };
        let path = cache_dir.join(format!("{}.json", sha256_hex(entry.url.as_bytes())));
        fs::write(&path, serde_json::to_string(&cache_entry).expect("entry serializes"))?;
    }
    Ok(n)
}
