//! Asking a chat model for each term's identifier and scoring the answer.
//!
//! Every exchange lands in a JSON-lines cache, so a run with network
//! disabled replays the same answers and produces identical results.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curie::Curie;
use crate::http::{HttpTransport, RetryPolicy, TransportError};
use crate::jsonl::{self, Appender};
use crate::ontology::TermRecord;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("term label is empty")]
    EmptyLabel,
    #[error("credential environment variable {0} is not set")]
    MissingCredential(String),
    #[error("chat request failed: {0}")]
    Transport(#[from] TransportError),
    #[error("malformed chat response: {0}")]
    Protocol(String),
    #[error("probe cache: {0}")]
    Io(#[from] io::Error),
}

/// The term-to-identifier question for one label.
pub fn build_prompt(label: &str, prefix: &str) -> Result<String, ProbeError> {
    if label.trim().is_empty() {
        return Err(ProbeError::EmptyLabel);
    }
    let vocabulary = if prefix == "HP" { "HPO" } else { prefix };
    Ok(format!(
        "What is the {vocabulary} ID for '{label}'? Return only the code in format {prefix}:1234567"
    ))
}

/// Pulls the first `PREFIX:ddddddd` identifier out of model output.
#[derive(Debug, Clone)]
pub struct ResponseParser {
    re: Regex,
}

impl ResponseParser {
    pub fn new(prefix: &str) -> Self {
        // digits must not run on; the prefix must not be glued to a word
        let pattern = format!(
            r"(?:^|[^A-Za-z0-9_])({}:[0-9]{{7}})(?:[^0-9]|$)",
            regex::escape(prefix)
        );
        ResponseParser {
            re: Regex::new(&pattern).expect("static pattern"),
        }
    }

    pub fn parse(&self, text: &str) -> Option<Curie> {
        self.re
            .captures(text)
            .and_then(|c| c.get(1))
            .and_then(|m| m.as_str().parse().ok())
    }
}

pub fn parse_response(text: &str, prefix: &str) -> Option<Curie> {
    ResponseParser::new(prefix).parse(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Ground-truth identifier.
    pub term_id: Curie,
    pub term_label: String,
    pub raw_response: String,
    pub predicted: Option<Curie>,
    pub correct: bool,
    pub model_name: String,
}

impl ProbeResult {
    pub fn score(
        term: &TermRecord,
        raw_response: String,
        model_name: &str,
        parser: &ResponseParser,
    ) -> Self {
        let predicted = parser.parse(&raw_response);
        ProbeResult {
            correct: predicted.as_ref() == Some(&term.id),
            term_id: term.id.clone(),
            term_label: term.name.clone(),
            raw_response,
            predicted,
            model_name: model_name.to_string(),
        }
    }
}

/// An OpenAI-style chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    /// Maximum requests in flight at once.
    pub concurrency: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.0,
            max_tokens: Some(32),
            concurrency: 1,
        }
    }
}

/// Something that turns a prompt into a model reply.
pub trait Completer: Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProbeError>;
}

pub struct ChatClient {
    provider: ProviderConfig,
    api_key: String,
    transport: Box<dyn HttpTransport>,
}

impl ChatClient {
    /// Reads the credential from the provider's environment variable.
    pub fn from_env(
        provider: ProviderConfig,
        transport: Box<dyn HttpTransport>,
    ) -> Result<Self, ProbeError> {
        let api_key = std::env::var(&provider.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProbeError::MissingCredential(provider.api_key_env.clone()))?;
        Ok(ChatClient {
            provider,
            api_key,
            transport,
        })
    }

    pub fn request_body(provider: &ProviderConfig, prompt: &str) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": provider.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": provider.temperature,
            "n": 1,
        });
        if let Some(m) = provider.max_tokens {
            body["max_tokens"] = m.into();
        }
        body
    }
}

/// `choices[0].message.content` of a chat-completion response.
pub fn parse_chat_content(body: &str) -> Result<String, ProbeError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| ProbeError::Protocol(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProbeError::Protocol("missing choices[0].message.content".into()))
}

impl Completer for ChatClient {
    fn complete(&self, prompt: &str) -> Result<String, ProbeError> {
        let body = Self::request_body(&self.provider, prompt);
        let reply =
            self.transport
                .post_json(&self.provider.endpoint, Some(&self.api_key), &body)?;
        parse_chat_content(&reply)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCacheRecord {
    pub term_id: Curie,
    pub prompt: String,
    pub raw_response: String,
    pub model_name: String,
    pub timestamp: DateTime<Utc>,
}

type ProbeKey = (String, Curie, String);

/// Exchange log keyed by (model, term, prompt); later lines win.
#[derive(Debug)]
pub struct ProbeCache {
    entries: HashMap<ProbeKey, ProbeCacheRecord>,
    appender: Option<Appender>,
}

impl ProbeCache {
    pub fn in_memory() -> Self {
        ProbeCache {
            entries: HashMap::new(),
            appender: None,
        }
    }

    pub fn open(path: &Path) -> io::Result<Self> {
        let mut cache = ProbeCache {
            entries: HashMap::new(),
            appender: None,
        };
        for rec in jsonl::read_records::<ProbeCacheRecord>(path)? {
            cache.insert(rec);
        }
        cache.appender = Some(Appender::open(path)?);
        Ok(cache)
    }

    fn insert(&mut self, rec: ProbeCacheRecord) {
        let key = (
            rec.model_name.clone(),
            rec.term_id.clone(),
            rec.prompt.clone(),
        );
        self.entries.insert(key, rec);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, model: &str, term: &Curie, prompt: &str) -> Option<&ProbeCacheRecord> {
        self.entries
            .get(&(model.to_string(), term.clone(), prompt.to_string()))
    }

    pub fn put(&mut self, rec: ProbeCacheRecord) -> io::Result<()> {
        if let Some(a) = self.appender.as_mut() {
            a.append(&rec)?;
        }
        self.insert(rec);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeOptions {
    pub retry: RetryPolicy,
    pub concurrency: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            retry: RetryPolicy::default(),
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unresolved {
    pub term_id: Curie,
    pub reason: String,
}

/// Outcome of probing a term list. Results keep the input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeRun {
    pub results: Vec<ProbeResult>,
    pub unresolved: Vec<Unresolved>,
}

impl ProbeRun {
    /// Fraction of terms linked correctly. Unresolved terms count as
    /// failures unless the run is `partial`, in which case they are left
    /// out of the denominator.
    pub fn accuracy(&self, partial: bool) -> Option<f64> {
        let correct = self.results.iter().filter(|r| r.correct).count();
        let denom = self.results.len() + if partial { 0 } else { self.unresolved.len() };
        (denom > 0).then(|| correct as f64 / denom as f64)
    }

    /// `term_id,label,predicted,correct` CSV.
    pub fn results_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["term_id", "label", "predicted", "correct"])?;
        for r in &self.results {
            w.write_record([
                r.term_id.as_str(),
                r.term_label.as_str(),
                r.predicted.as_ref().map_or("", Curie::as_str),
                if r.correct { "1" } else { "0" },
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn unresolved_report(&self) -> String {
        let mut out = String::new();
        for u in &self.unresolved {
            let _ = writeln!(out, "{}\t{}", u.term_id, u.reason);
        }
        out
    }
}

/// Probes every non-obsolete term. Cached exchanges are replayed; misses go
/// to `completer`, or are reported unresolved when it is `None`.
pub fn run_probe(
    terms: &[TermRecord],
    model_name: &str,
    cache: &mut ProbeCache,
    completer: Option<&dyn Completer>,
    options: ProbeOptions,
) -> Result<ProbeRun, ProbeError> {
    let live: Vec<&TermRecord> = terms.iter().filter(|t| !t.obsolete).collect();
    let mut slots: Vec<Option<Result<ProbeResult, Unresolved>>> = vec![None; live.len()];
    let mut pending = Vec::new();
    let mut prompts = Vec::with_capacity(live.len());
    let mut parsers: HashMap<&str, ResponseParser> = HashMap::new();

    for (i, t) in live.iter().enumerate() {
        let prompt = build_prompt(&t.name, t.id.prefix())?;
        let parser = parsers
            .entry(t.id.prefix())
            .or_insert_with(|| ResponseParser::new(t.id.prefix()));
        if let Some(hit) = cache.get(model_name, &t.id, &prompt) {
            slots[i] = Some(Ok(ProbeResult::score(
                t,
                hit.raw_response.clone(),
                model_name,
                parser,
            )));
        } else {
            pending.push(i);
        }
        prompts.push(prompt);
    }

    if let Some(completer) = completer {
        let next = AtomicUsize::new(0);
        let shared = Mutex::new((cache, &mut slots, None::<io::Error>));
        let workers = options.concurrency.clamp(1, pending.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&i) = pending.get(k) else { break };
                    let term = live[i];
                    let prompt = &prompts[i];
                    let reply = options.retry.run(|| completer.complete(prompt));
                    let mut guard = shared.lock().unwrap();
                    let (cache, slots, io_err) = &mut *guard;
                    slots[i] = Some(match reply {
                        Ok(raw) => {
                            let rec = ProbeCacheRecord {
                                term_id: term.id.clone(),
                                prompt: prompt.clone(),
                                raw_response: raw.clone(),
                                model_name: model_name.to_string(),
                                timestamp: Utc::now(),
                            };
                            if let Err(e) = cache.put(rec) {
                                io_err.get_or_insert(e);
                            }
                            let parser = ResponseParser::new(term.id.prefix());
                            Ok(ProbeResult::score(term, raw, model_name, &parser))
                        }
                        Err((e, attempts)) => Err(Unresolved {
                            term_id: term.id.clone(),
                            reason: format!("{e} (after {attempts} attempts)"),
                        }),
                    });
                });
            }
        });
        if let (_, _, Some(e)) = shared.into_inner().unwrap() {
            return Err(e.into());
        }
    }

    let mut run = ProbeRun::default();
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(Ok(r)) => run.results.push(r),
            Some(Err(u)) => run.unresolved.push(u),
            None => run.unresolved.push(Unresolved {
                term_id: live[i].id.clone(),
                reason: "not in probe cache (offline)".into(),
            }),
        }
    }
    Ok(run)
}
