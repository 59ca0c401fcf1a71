//! ConceptNet REST client with a write-through disk cache.
//!
//! Responses are stored verbatim as `<cache_dir>/<term>.json`. A cache hit
//! never touches the network, so a warm cache replays offline.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

use super::{normalize_term, ConceptEdge, NeighborSet};

pub const DEFAULT_ENDPOINT: &str = "http://api.conceptnet.io";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("term {0:?} cannot be used as a cache key")]
    InvalidTerm(String),
    #[error("fetching {word:?}: {message}")]
    Network { word: String, message: String },
    #[error("fetching {word:?}: HTTP status {status}")]
    Status { word: String, status: u16 },
    #[error("response for {word:?} is not valid ConceptNet JSON: {message}")]
    MalformedJson { word: String, message: String },
    #[error("no cached response for {0:?} and network access is disabled")]
    Offline(String),
    #[error("cache I/O for {word:?}: {source}")]
    Cache {
        word: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Deserialize)]
struct ApiResponse {
    edges: Vec<ApiEdge>,
}

#[derive(Deserialize)]
struct ApiEdge {
    start: Option<ApiNode>,
    end: Option<ApiNode>,
    rel: Option<ApiRel>,
    weight: Option<f64>,
}

#[derive(Deserialize)]
struct ApiNode {
    label: Option<String>,
    language: Option<String>,
    term: Option<String>,
}

#[derive(Deserialize)]
struct ApiRel {
    label: Option<String>,
}

impl ApiNode {
    /// Normalized English term, or `None` for foreign / unusable nodes.
    fn english_term(&self) -> Option<String> {
        if self.language.as_deref() != Some("en") {
            return None;
        }
        let from_uri = self.term.as_deref().and_then(|uri| {
            let rest = uri.strip_prefix("/c/en/")?;
            rest.split('/').next().filter(|t| !t.is_empty())
        });
        match from_uri {
            Some(t) => normalize_term(t).ok(),
            None => self.label.as_deref().and_then(|l| normalize_term(l).ok()),
        }
    }
}

/// Builds a [`NeighborSet`] from a `/c/en/<word>` response body.
///
/// Only edges whose two endpoints are English count; edges lacking a
/// relation label or weight are ignored.
pub fn parse_api_response(
    word: &str,
    body: &str,
    cap: usize,
    relation_filter: Option<&BTreeSet<String>>,
) -> Result<NeighborSet, FetchError> {
    let response: ApiResponse =
        serde_json::from_str(body).map_err(|e| FetchError::MalformedJson {
            word: word.to_owned(),
            message: e.to_string(),
        })?;
    let edges: Vec<ConceptEdge> = response
        .edges
        .iter()
        .filter_map(|e| {
            let start_term = e.start.as_ref()?.english_term()?;
            let end_term = e.end.as_ref()?.english_term()?;
            let relation = e.rel.as_ref()?.label.clone().filter(|l| !l.is_empty())?;
            let weight = e.weight.filter(|w| w.is_finite() && *w >= 0.0)?;
            Some(ConceptEdge {
                relation,
                start_term,
                end_term,
                weight,
            })
        })
        .collect();
    Ok(NeighborSet::from_edges(word, &edges, cap, relation_filter))
}

pub struct ApiClientBuilder {
    endpoint: String,
    cache_dir: PathBuf,
    min_interval: Duration,
    timeout: Duration,
    offline: bool,
}

impl ApiClientBuilder {
    pub fn endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }

    /// Minimum spacing between network requests (default one second).
    pub fn min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = interval;
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// With `offline` set, cache misses fail instead of hitting the network.
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn build(self) -> ApiClient {
        ApiClient {
            endpoint: self.endpoint.trim_end_matches('/').to_owned(),
            cache_dir: self.cache_dir,
            min_interval: self.min_interval,
            offline: self.offline,
            agent: ureq::AgentBuilder::new().timeout(self.timeout).build(),
            last_request: Mutex::new(None),
        }
    }
}

pub struct ApiClient {
    endpoint: String,
    cache_dir: PathBuf,
    min_interval: Duration,
    offline: bool,
    agent: ureq::Agent,
    last_request: Mutex<Option<Instant>>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ApiClient {
    pub fn builder(cache_dir: impl Into<PathBuf>) -> ApiClientBuilder {
        ApiClientBuilder {
            endpoint: DEFAULT_ENDPOINT.to_owned(),
            cache_dir: cache_dir.into(),
            min_interval: Duration::from_secs(1),
            timeout: Duration::from_secs(30),
            offline: false,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn cache_dir(&self) -> &Path {
        &self.cache_dir
    }

    pub fn cache_path(&self, word: &str) -> Result<PathBuf, FetchError> {
        if word.is_empty()
            || word.starts_with('.')
            || word.contains(['/', '\\'])
            || word.chars().any(char::is_control)
        {
            return Err(FetchError::InvalidTerm(word.to_owned()));
        }
        Ok(self.cache_dir.join(format!("{word}.json")))
    }

    /// Neighbors of `word` (already normalized), from cache or network.
    pub fn fetch_neighbors(
        &self,
        word: &str,
        cap: usize,
        relation_filter: Option<&BTreeSet<String>>,
    ) -> Result<NeighborSet, FetchError> {
        let body = self.fetch_body(word, cap)?;
        parse_api_response(word, &body, cap, relation_filter)
    }

    /// Raw response body for `word`; fresh responses are cached once they parse.
    pub fn fetch_body(&self, word: &str, cap: usize) -> Result<String, FetchError> {
        let path = self.cache_path(word)?;
        match fs::read_to_string(&path) {
            Ok(body) => return Ok(body),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(FetchError::Cache {
                    word: word.to_owned(),
                    source,
                })
            }
        }
        if self.offline {
            return Err(FetchError::Offline(word.to_owned()));
        }

        let body = self.request(word, cap)?;
        // Validate before caching so a bad body is never replayed.
        serde_json::from_str::<ApiResponse>(&body).map_err(|e| FetchError::MalformedJson {
            word: word.to_owned(),
            message: e.to_string(),
        })?;
        self.store(word, &path, &body)?;
        Ok(body)
    }

    fn throttle(&self) {
        let mut last = self.last_request.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn request(&self, word: &str, cap: usize) -> Result<String, FetchError> {
        self.throttle();
        let url = format!("{}/c/en/{}", self.endpoint, word);
        let response = self
            .agent
            .get(&url)
            .query("limit", &cap.to_string())
            .call()
            .map_err(|e| match e {
                ureq::Error::Status(status, _) => FetchError::Status {
                    word: word.to_owned(),
                    status,
                },
                ureq::Error::Transport(t) => FetchError::Network {
                    word: word.to_owned(),
                    message: t.to_string(),
                },
            })?;
        if response.status() != 200 {
            return Err(FetchError::Status {
                word: word.to_owned(),
                status: response.status(),
            });
        }
        response.into_string().map_err(|e| FetchError::Network {
            word: word.to_owned(),
            message: e.to_string(),
        })
    }

    /// Write-temp-then-rename, so readers never see a partial file.
    fn store(&self, word: &str, path: &Path, body: &str) -> Result<(), FetchError> {
        let cache_err = |source| FetchError::Cache {
            word: word.to_owned(),
            source,
        };
        fs::create_dir_all(&self.cache_dir).map_err(cache_err)?;
        let tmp = self.cache_dir.join(format!(
            ".{word}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, body).map_err(cache_err)?;
        fs::rename(&tmp, path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            cache_err(e)
        })
    }
}
