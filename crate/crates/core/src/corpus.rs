//! PubMed Central hit counts via the NCBI E-Utilities `esearch` endpoint.
//!
//! Every live answer is appended to a JSON-lines cache keyed by the exact
//! query string, so reruns and offline runs replay without network access.
//! Live requests go through one [`Throttle`].

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::curie::Curie;
use crate::http::{HttpTransport, RetryPolicy, Throttle, TransportError};
use crate::jsonl::{self, Appender};

pub const ESEARCH_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi";
pub const API_KEY_ENV: &str = "NCBI_API_KEY";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus query")]
    EmptyQuery,
    #[error("offline mode: no cached count for {0}")]
    Offline(String),
    #[error("request for {query} failed after {attempts} attempts: {source}")]
    Http {
        query: String,
        attempts: u32,
        source: TransportError,
    },
    #[error("unexpected esearch response for {query}: {message}")]
    Protocol { query: String, message: String },
    #[error("corpus cache: {0}")]
    Io(#[from] io::Error),
}

/// Phrase query for a term label.
pub fn term_query(label: &str) -> String {
    format!("\"{label}\"")
}

/// Phrase query for an identifier in canonical form.
pub fn identifier_query(id: &Curie) -> String {
    format!("\"{id}\"")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CountSource {
    Live,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusCount {
    pub query: String,
    pub count: u64,
    pub retrieved_at: DateTime<Utc>,
    pub source: CountSource,
}

/// Anything that can answer "how many PMC hits for this query".
pub trait CorpusLookup {
    fn lookup(&mut self, query: &str) -> Result<u64, CorpusError>;
}

/// Fixed in-memory counts; unknown queries behave like offline cache misses.
#[derive(Debug, Clone, Default)]
pub struct MapCorpus(pub HashMap<String, u64>);

impl<const N: usize> From<[(&str, u64); N]> for MapCorpus {
    fn from(pairs: [(&str, u64); N]) -> Self {
        MapCorpus(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

impl CorpusLookup for MapCorpus {
    fn lookup(&mut self, query: &str) -> Result<u64, CorpusError> {
        self.0
            .get(query)
            .copied()
            .ok_or_else(|| CorpusError::Offline(query.to_string()))
    }
}

/// Extracts `esearchresult.count` from an esearch JSON body.
pub fn parse_esearch_count(body: &str) -> Result<u64, String> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let count = v
        .get("esearchresult")
        .and_then(|r| r.get("count"))
        .ok_or("missing esearchresult.count")?;
    match count {
        serde_json::Value::String(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("count `{s}`: {e}")),
        serde_json::Value::Number(n) => n.as_u64().ok_or_else(|| format!("count `{n}`")),
        other => Err(format!("count has unexpected type: {other}")),
    }
}

pub fn esearch_url(base: &str, query: &str, api_key: Option<&str>) -> Result<Url, url::ParseError> {
    let mut url = Url::parse(base)?;
    {
        let mut q = url.query_pairs_mut();
        q.append_pair("db", "pmc")
            .append_pair("retmode", "json")
            .append_pair("term", query);
        if let Some(k) = api_key {
            q.append_pair("api_key", k);
        }
    }
    Ok(url)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CacheRecord {
    query: String,
    count: u64,
    retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Serialize)]
struct FailureRecord<'a> {
    query: &'a str,
    error: String,
    at: DateTime<Utc>,
}

/// Query → count cache backed by an append-only JSON-lines file.
#[derive(Debug)]
pub struct CorpusCache {
    entries: HashMap<String, CacheRecord>,
    appender: Option<Appender>,
}

impl CorpusCache {
    pub fn in_memory() -> Self {
        CorpusCache {
            entries: HashMap::new(),
            appender: None,
        }
    }

    /// Loads `path` (later lines win) and appends new entries to it.
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut entries = HashMap::new();
        for rec in jsonl::read_records::<CacheRecord>(path)? {
            entries.insert(rec.query.clone(), rec);
        }
        Ok(CorpusCache {
            entries,
            appender: Some(Appender::open(path)?),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, query: &str) -> Option<CorpusCount> {
        self.entries.get(query).map(|r| CorpusCount {
            query: r.query.clone(),
            count: r.count,
            retrieved_at: r.retrieved_at,
            source: CountSource::Cache,
        })
    }

    fn put(&mut self, rec: CacheRecord) -> io::Result<()> {
        if let Some(a) = self.appender.as_mut() {
            a.append(&rec)?;
        }
        self.entries.insert(rec.query.clone(), rec);
        Ok(())
    }
}

pub struct PmcClientConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub min_interval: Duration,
    pub retry: RetryPolicy,
    pub failure_log: Option<PathBuf>,
}

impl Default for PmcClientConfig {
    fn default() -> Self {
        PmcClientConfig {
            base_url: ESEARCH_URL.to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            min_interval: Duration::from_secs(1),
            retry: RetryPolicy::default(),
            failure_log: None,
        }
    }
}

/// Cached, throttled PMC counter. Without a transport it runs offline and
/// cache misses are errors.
pub struct PmcClient {
    cache: CorpusCache,
    transport: Option<Box<dyn HttpTransport>>,
    config: PmcClientConfig,
    throttle: Throttle,
    failures: Option<Appender>,
    live_requests: usize,
}

impl PmcClient {
    pub fn new(
        cache: CorpusCache,
        transport: Option<Box<dyn HttpTransport>>,
        config: PmcClientConfig,
    ) -> io::Result<Self> {
        let failures = config
            .failure_log
            .as_deref()
            .map(Appender::open)
            .transpose()?;
        Ok(PmcClient {
            cache,
            transport,
            throttle: Throttle::new(config.min_interval),
            config,
            failures,
            live_requests: 0,
        })
    }

    pub fn offline(cache: CorpusCache) -> Self {
        Self::new(cache, None, PmcClientConfig::default()).expect("no files opened")
    }

    pub fn cache(&self) -> &CorpusCache {
        &self.cache
    }

    /// HTTP requests issued so far, retries included.
    pub fn live_requests(&self) -> usize {
        self.live_requests
    }

    pub fn pmc_count(&mut self, query: &str) -> Result<CorpusCount, CorpusError> {
        if query.trim().is_empty() {
            return Err(CorpusError::EmptyQuery);
        }
        if let Some(hit) = self.cache.get(query) {
            return Ok(hit);
        }
        let Some(transport) = self.transport.as_deref() else {
            return Err(CorpusError::Offline(query.to_string()));
        };
        let url = esearch_url(&self.config.base_url, query, self.config.api_key.as_deref())
            .map_err(|e| CorpusError::Protocol {
                query: query.to_string(),
                message: format!("bad endpoint: {e}"),
            })?;

        let throttle = &self.throttle;
        let live = &mut self.live_requests;
        let body = self
            .config
            .retry
            .run(|| {
                throttle.wait();
                *live += 1;
                transport.get(url.as_str())
            })
            .map_err(|(source, attempts)| CorpusError::Http {
                query: query.to_string(),
                attempts,
                source,
            });
        let result = body.and_then(|b| {
            parse_esearch_count(&b).map_err(|message| CorpusError::Protocol {
                query: query.to_string(),
                message,
            })
        });
        match result {
            Ok(count) => {
                let rec = CacheRecord {
                    query: query.to_string(),
                    count,
                    retrieved_at: Utc::now(),
                };
                let out = CorpusCount {
                    query: rec.query.clone(),
                    count,
                    retrieved_at: rec.retrieved_at,
                    source: CountSource::Live,
                };
                self.cache.put(rec)?;
                Ok(out)
            }
            Err(e) => {
                if let Some(log) = self.failures.as_mut() {
                    log.append(&FailureRecord {
                        query,
                        error: e.to_string(),
                        at: Utc::now(),
                    })?;
                }
                Err(e)
            }
        }
    }
}

impl CorpusLookup for PmcClient {
    fn lookup(&mut self, query: &str) -> Result<u64, CorpusError> {
        self.pmc_count(query).map(|c| c.count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};
    use std::time::Instant;

    /// Replays canned bodies and records request times.
    #[derive(Clone, Default)]
    struct Scripted {
        replies: Arc<Mutex<Vec<Result<String, TransportError>>>>,
        calls: Arc<Mutex<Vec<(String, Instant)>>>,
    }

    impl Scripted {
        fn new(replies: Vec<Result<&str, TransportError>>) -> Self {
            let s = Scripted::default();
            *s.replies.lock().unwrap() = replies
                .into_iter()
                .rev()
                .map(|r| r.map(str::to_string))
                .collect();
            s
        }
    }

    impl HttpTransport for Scripted {
        fn get(&self, url: &str) -> Result<String, TransportError> {
            self.calls
                .lock()
                .unwrap()
                .push((url.to_string(), Instant::now()));
            self.replies
                .lock()
                .unwrap()
                .pop()
                .unwrap_or(Err(TransportError::Connection("script exhausted".into())))
        }

        fn post_json(
            &self,
            _: &str,
            _: Option<&str>,
            _: &serde_json::Value,
        ) -> Result<String, TransportError> {
            unreachable!()
        }
    }

    fn fast_config() -> PmcClientConfig {
        PmcClientConfig {
            api_key: None,
            min_interval: Duration::from_millis(20),
            retry: RetryPolicy::no_delay(3),
            ..PmcClientConfig::default()
        }
    }

    #[test]
    fn parses_count_fixture() {
        assert_eq!(
            parse_esearch_count(r#"{"esearchresult":{"count":"42"}}"#),
            Ok(42)
        );
        assert_eq!(
            parse_esearch_count(r#"{"esearchresult":{"count":"0"}}"#),
            Ok(0)
        );
        assert!(parse_esearch_count(r#"{"esearchresult":{}}"#).is_err());
        assert!(parse_esearch_count(r#"{"esearchresult":{"count":"many"}}"#).is_err());
        assert!(parse_esearch_count("<html>").is_err());
    }

    #[test]
    fn query_phrasing() {
        assert_eq!(term_query("Ataxia"), "\"Ataxia\"");
        assert_eq!(
            term_query("abnormal cell morphology"),
            "\"abnormal cell morphology\""
        );
        assert_eq!(
            identifier_query(&"HP:0001251".parse().unwrap()),
            "\"HP:0001251\""
        );
    }

    #[test]
    fn url_encodes_parameters() {
        let url = esearch_url(ESEARCH_URL, "\"HP:0001251\"", Some("k3y")).unwrap();
        assert_eq!(
            url.as_str(),
            "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi?db=pmc&retmode=json&term=%22HP%3A0001251%22&api_key=k3y"
        );
    }

    #[test]
    fn cache_hit_avoids_network() {
        let t = Scripted::new(vec![Ok(r#"{"esearchresult":{"count":"42"}}"#)]);
        let mut client = PmcClient::new(
            CorpusCache::in_memory(),
            Some(Box::new(t.clone())),
            fast_config(),
        )
        .unwrap();
        let a = client.pmc_count("\"Ataxia\"").unwrap();
        let b = client.pmc_count("\"Ataxia\"").unwrap();
        assert_eq!(a.count, 42);
        assert_eq!(a.source, CountSource::Live);
        assert_eq!(b.count, 42);
        assert_eq!(b.source, CountSource::Cache);
        assert_eq!(t.calls.lock().unwrap().len(), 1);
    }

    #[test]
    fn retries_then_records_failure() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("failures.jsonl");
        let t = Scripted::new(vec![
            Err(TransportError::Status(503)),
            Err(TransportError::Status(503)),
            Err(TransportError::Status(503)),
        ]);
        let cfg = PmcClientConfig {
            failure_log: Some(log.clone()),
            ..fast_config()
        };
        let mut client =
            PmcClient::new(CorpusCache::in_memory(), Some(Box::new(t.clone())), cfg).unwrap();
        let err = client.pmc_count("\"x\"").unwrap_err();
        assert!(matches!(err, CorpusError::Http { attempts: 3, .. }));
        assert_eq!(t.calls.lock().unwrap().len(), 3);
        let logged = std::fs::read_to_string(&log).unwrap();
        assert_eq!(logged.lines().count(), 1);
        assert!(logged.contains("\\\"x\\\""));
    }

    #[test]
    fn recovers_after_transient_failure() {
        let t = Scripted::new(vec![
            Err(TransportError::Connection("reset".into())),
            Ok(r#"{"esearchresult":{"count":"7"}}"#),
        ]);
        let mut client =
            PmcClient::new(CorpusCache::in_memory(), Some(Box::new(t)), fast_config()).unwrap();
        assert_eq!(client.pmc_count("\"y\"").unwrap().count, 7);
        assert_eq!(client.live_requests(), 2);
    }

    #[test]
    fn protocol_error_not_cached() {
        let t = Scripted::new(vec![Ok(r#"{"error":"bad"}"#)]);
        let mut client =
            PmcClient::new(CorpusCache::in_memory(), Some(Box::new(t)), fast_config()).unwrap();
        assert!(matches!(
            client.pmc_count("\"z\""),
            Err(CorpusError::Protocol { .. })
        ));
        assert!(client.cache().is_empty());
    }

    #[test]
    fn offline_miss_is_error() {
        let mut client = PmcClient::offline(CorpusCache::in_memory());
        assert!(matches!(
            client.pmc_count("\"q\""),
            Err(CorpusError::Offline(_))
        ));
        assert!(matches!(
            client.pmc_count("  "),
            Err(CorpusError::EmptyQuery)
        ));
    }

    #[test]
    fn persisted_cache_replays_offline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pmc.jsonl");
        {
            let t = Scripted::new(vec![
                Ok(r#"{"esearchresult":{"count":"5"}}"#),
                Ok(r#"{"esearchresult":{"count":"9"}}"#),
            ]);
            let cache = CorpusCache::open(&path).unwrap();
            let mut client = PmcClient::new(cache, Some(Box::new(t)), fast_config()).unwrap();
            client.pmc_count("\"a\"").unwrap();
            client.pmc_count("\"b\"").unwrap();
        }
        let mut offline = PmcClient::offline(CorpusCache::open(&path).unwrap());
        assert_eq!(offline.lookup("\"a\"").unwrap(), 5);
        assert_eq!(offline.lookup("\"b\"").unwrap(), 9);
    }

    #[test]
    fn later_cache_lines_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pmc.jsonl");
        std::fs::write(
            &path,
            "{\"query\":\"q\",\"count\":1,\"retrieved_at\":\"2025-01-01T00:00:00Z\"}\n\
             {\"query\":\"q\",\"count\":2,\"retrieved_at\":\"2025-02-01T00:00:00Z\"}\n",
        )
        .unwrap();
        let cache = CorpusCache::open(&path).unwrap();
        assert_eq!(cache.get("q").unwrap().count, 2);
    }

    #[test]
    fn live_requests_are_throttled() {
        let replies = (0..4)
            .map(|i| Ok(format!(r#"{{"esearchresult":{{"count":"{i}"}}}}"#)))
            .collect::<Vec<_>>();
        let t = Scripted::default();
        *t.replies.lock().unwrap() = replies.into_iter().rev().collect();
        let cfg = PmcClientConfig {
            min_interval: Duration::from_millis(60),
            ..fast_config()
        };
        let mut client =
            PmcClient::new(CorpusCache::in_memory(), Some(Box::new(t.clone())), cfg).unwrap();
        for q in ["\"a\"", "\"b\"", "\"a\"", "\"c\"", "\"d\""] {
            client.pmc_count(q).unwrap();
        }
        let calls = t.calls.lock().unwrap();
        assert_eq!(calls.len(), 4);
        for w in calls.windows(2) {
            assert!(w[1].1.duration_since(w[0].1) >= Duration::from_millis(60));
        }
    }
}
