use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use super::protocol::{decode, encode, MaskedQuery, MaskedRequest, PrefixQuery, PrefixRequest, ScoreResponse, TokenLogprob};
use super::{MaskedScorer, PrefixScorer, ScoredDistribution, ScorerDescriptor};
use crate::error::{Error, Result};
use crate::masking::DEFAULT_MASK_TOKEN;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteLimits {
    /// Maximum concurrent HTTP requests.
    pub max_in_flight: usize,
    /// Per-request deadline.
    pub timeout: Duration,
    /// Queries per HTTP request.
    pub max_batch: usize,
    /// Extra attempts after a timeout, connection failure or 5xx.
    pub retries: u32,
}

impl Default for RemoteLimits {
    fn default() -> Self {
        RemoteLimits {
            max_in_flight: 4,
            timeout: Duration::from_secs(30),
            max_batch: 32,
            retries: 2,
        }
    }
}

struct Client {
    agent: ureq::Agent,
    base: String,
    bearer: Option<String>,
    retries: u32,
}

impl Client {
    fn new(endpoint: &str, limits: &RemoteLimits, bearer: Option<&str>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(limits.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            agent,
            base: endpoint.trim_end_matches('/').to_string(),
            bearer: bearer.map(String::from),
            retries: limits.retries,
        }
    }

    /// POST `body`; returns the response body of a 2xx reply.
    fn post(&self, path: &str, body: &[u8]) -> std::result::Result<Vec<u8>, String> {
        let url = format!("{}{path}", self.base);
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                log::debug!("retrying {url} (attempt {})", attempt + 1);
            }
            let mut req = self.agent.post(&url).header("Content-Type", "application/json");
            if let Some(token) = &self.bearer {
                req = req.header("Authorization", format!("Bearer {token}"));
            }
            match req.send(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status >= 500 {
                        last = format!("http-status-{status}");
                        continue;
                    }
                    if status >= 400 {
                        return Err(format!("http-status-{status}"));
                    }
                    return resp
                        .body_mut()
                        .with_config()
                        .limit(1 << 30)
                        .read_to_vec()
                        .map_err(|e| format!("read-error: {e}"));
                }
                Err(ureq::Error::Timeout(_)) => last = "timeout".into(),
                Err(e @ (ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                    last = format!("connection-error: {e}")
                }
                Err(e) => return Err(format!("request-error: {e}")),
            }
        }
        Err(last)
    }
}

/// Run `work` over `chunks` on at most `max_in_flight` threads; results keep chunk order.
fn dispatch<T: Sync, R: Send>(chunks: &[&[T]], max_in_flight: usize, work: impl Fn(&[T]) -> R + Sync) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = chunks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..max_in_flight.clamp(1, chunks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(chunk) = chunks.get(i) else { break };
                let r = work(chunk);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every chunk is processed"))
        .collect()
}

fn check_batch<'a>(ids: impl Iterator<Item = &'a str>, limits: &RemoteLimits) -> Result<()> {
    if limits.max_batch == 0 || limits.max_in_flight == 0 {
        return Err(Error::Config("remote limits must be positive".into()));
    }
    let mut seen = HashSet::new();
    let mut n = 0;
    for id in ids {
        n += 1;
        if !seen.insert(id) {
            return Err(Error::InvalidInput(format!("duplicate query id {id:?}")));
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    Ok(())
}

fn to_distribution(position: usize, entries: Vec<TokenLogprob>) -> std::result::Result<ScoredDistribution, String> {
    if entries.is_empty() {
        return Err("malformed-response: empty distribution".into());
    }
    if let Some(e) = entries.iter().find(|e| e.logprob.is_nan() || e.logprob > 1e-9) {
        return Err(format!("malformed-response: logprob {} for {:?}", e.logprob, e.token));
    }
    let mut d = ScoredDistribution::from_logprobs(position, entries.into_iter().map(|e| (e.token, e.logprob)));
    d.truncated = true;
    Ok(d)
}

/// Match results to queries by id. `positions(q)` lists the expected distribution positions.
fn resequence<Q>(
    queries: &[Q],
    id: impl Fn(&Q) -> &str,
    positions: impl Fn(&Q) -> Vec<usize>,
    body: std::result::Result<Vec<u8>, String>,
) -> Vec<Result<Vec<ScoredDistribution>>> {
    let fail = |msg: &str| queries.iter().map(|_| Err(Error::Scorer(msg.to_string()))).collect();
    let bytes = match body {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    let response: ScoreResponse = match decode(&bytes) {
        Ok(r) => r,
        Err(e) => return fail(&format!("malformed-response: {e}")),
    };
    let mut by_id: HashMap<String, Vec<Vec<TokenLogprob>>> =
        response.results.into_iter().map(|r| (r.id, r.distributions)).collect();
    queries
        .iter()
        .map(|q| {
            let dists = by_id
                .remove(id(q))
                .ok_or_else(|| Error::Scorer("missing-response".into()))?;
            let pos = positions(q);
            if dists.len() != pos.len() {
                return Err(Error::Scorer(format!(
                    "malformed-response: {} distributions for {} positions",
                    dists.len(),
                    pos.len()
                )));
            }
            pos.into_iter()
                .zip(dists)
                .map(|(p, e)| to_distribution(p, e).map_err(Error::Scorer))
                .collect()
        })
        .collect()
}

/// Score a batch of masked queries against `endpoint`.
///
/// The outer error is a precondition failure; transport and schema failures
/// are reported per query.
pub fn remote_score(
    endpoint: &str,
    batch: &[MaskedQuery],
    top_m: usize,
    limits: &RemoteLimits,
    bearer: Option<&str>,
) -> Result<Vec<Result<Vec<ScoredDistribution>>>> {
    check_batch(batch.iter().map(|q| q.id.as_str()), limits)?;
    let client = Client::new(endpoint, limits, bearer);
    let chunks: Vec<&[MaskedQuery]> = batch.chunks(limits.max_batch).collect();
    let results = dispatch(&chunks, limits.max_in_flight, |chunk| {
        let body = encode(&MaskedRequest {
            queries: chunk.to_vec(),
            top_m,
        });
        let reply = client.post("/v1/score_masked", &body);
        resequence(chunk, |q| &q.id, |q| q.mask_positions.clone(), reply)
    });
    Ok(results.into_iter().flatten().collect())
}

/// Next-token distributions for a batch of prefixes.
pub fn remote_score_prefix(
    endpoint: &str,
    batch: &[PrefixQuery],
    top_m: usize,
    limits: &RemoteLimits,
    bearer: Option<&str>,
) -> Result<Vec<Result<ScoredDistribution>>> {
    check_batch(batch.iter().map(|q| q.id.as_str()), limits)?;
    let client = Client::new(endpoint, limits, bearer);
    let chunks: Vec<&[PrefixQuery]> = batch.chunks(limits.max_batch).collect();
    let results = dispatch(&chunks, limits.max_in_flight, |chunk| {
        let body = encode(&PrefixRequest {
            queries: chunk.to_vec(),
            top_m,
        });
        let reply = client.post("/v1/score_prefix", &body);
        resequence(chunk, |q| &q.id, |q| vec![q.prefix_tokens.len()], reply)
    });
    Ok(results
        .into_iter()
        .flatten()
        .map(|r| r.map(|mut d| d.remove(0)))
        .collect())
}

/// A scorer behind the HTTP protocol.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    descriptor: ScorerDescriptor,
    limits: RemoteLimits,
    top_m: usize,
    bearer: Option<String>,
}

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>, top_m: usize) -> Self {
        let endpoint = endpoint.into();
        RemoteScorer {
            descriptor: ScorerDescriptor {
                name: endpoint.clone(),
                vocab_size: 0,
                mask_token: DEFAULT_MASK_TOKEN.into(),
                max_len: 512,
                unk_token: None,
            },
            endpoint,
            limits: RemoteLimits::default(),
            top_m: top_m.max(1),
            bearer: None,
        }
    }

    pub fn with_limits(mut self, limits: RemoteLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_mask_token(mut self, mask: impl Into<String>) -> Self {
        self.descriptor.mask_token = mask.into();
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.descriptor.max_len = max_len;
        self
    }

    /// Entry the server uses for out-of-vocabulary tokens.
    pub fn with_unk_token(mut self, unk: impl Into<String>) -> Self {
        self.descriptor.unk_token = Some(unk.into());
        self
    }

    pub fn with_bearer(mut self, token: impl Into<String>) -> Self {
        self.bearer = Some(token.into());
        self
    }
}

impl MaskedScorer for RemoteScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn score_positions(&self, tokens: &[String], positions: &[usize]) -> Result<Vec<ScoredDistribution>> {
        let query = MaskedQuery {
            id: "0".into(),
            tokens: tokens.to_vec(),
            mask_positions: positions.to_vec(),
        };
        remote_score(&self.endpoint, &[query], self.top_m, &self.limits, self.bearer.as_deref())?.remove(0)
    }

    fn score_batch(&self, queries: &[MaskedQuery]) -> Vec<Result<Vec<ScoredDistribution>>> {
        if queries.is_empty() {
            return Vec::new();
        }
        match remote_score(&self.endpoint, queries, self.top_m, &self.limits, self.bearer.as_deref()) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.to_string();
                queries.iter().map(|_| Err(Error::Scorer(msg.clone()))).collect()
            }
        }
    }
}

impl PrefixScorer for RemoteScorer {
    fn descriptor(&self) -> &ScorerDescriptor {
        &self.descriptor
    }

    fn score_next(&self, prefix: &[String]) -> Result<ScoredDistribution> {
        let query = PrefixQuery {
            id: "0".into(),
            prefix_tokens: prefix.to_vec(),
        };
        remote_score_prefix(&self.endpoint, &[query], self.top_m, &self.limits, self.bearer.as_deref())?.remove(0)
    }

    fn score_prefix_batch(&self, queries: &[PrefixQuery]) -> Vec<Result<ScoredDistribution>> {
        if queries.is_empty() {
            return Vec::new();
        }
        match remote_score_prefix(&self.endpoint, queries, self.top_m, &self.limits, self.bearer.as_deref()) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.to_string();
                queries.iter().map(|_| Err(Error::Scorer(msg.clone()))).collect()
            }
        }
    }
}
