//! Minimal blocking HTTP/1.1 endpoint speaking the scoring protocol.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::protocol::{decode, encode, MaskedRequest, PrefixRequest, QueryResult, ScoreResponse, TokenLogprob};
use super::{score_masked, MaskedScorer, PrefixScorer, ScoredDistribution};

fn wire(d: ScoredDistribution, top_m: usize) -> Vec<TokenLogprob> {
    d.truncate(top_m.max(1))
        .entries
        .into_iter()
        .map(|(token, logprob)| TokenLogprob { token, logprob })
        .collect()
}

/// Queries the scorer rejects are left out of the response.
pub fn answer_masked_request<S: MaskedScorer + ?Sized>(scorer: &S, request: &MaskedRequest) -> ScoreResponse {
    let results = request
        .queries
        .iter()
        .filter_map(|q| {
            let dists = score_masked(scorer, &q.tokens, &q.mask_positions).ok()?;
            Some(QueryResult {
                id: q.id.clone(),
                distributions: dists.into_iter().map(|d| wire(d, request.top_m)).collect(),
            })
        })
        .collect();
    ScoreResponse { results }
}

pub fn answer_prefix_request<S: PrefixScorer + ?Sized>(scorer: &S, request: &PrefixRequest) -> ScoreResponse {
    let results = request
        .queries
        .iter()
        .filter_map(|q| {
            let d = scorer.score_next(&q.prefix_tokens).ok()?;
            Some(QueryResult {
                id: q.id.clone(),
                distributions: vec![wire(d, request.top_m)],
            })
        })
        .collect();
    ScoreResponse { results }
}

/// `(path, body) -> (status, body)`.
pub type Handler = dyn Fn(&str, &[u8]) -> (u16, Vec<u8>) + Send + Sync;

/// Route both protocol endpoints to `scorer`.
pub fn scorer_handler<S>(scorer: Arc<S>) -> Arc<Handler>
where
    S: MaskedScorer + PrefixScorer + Send + Sync + 'static,
{
    Arc::new(move |path: &str, body: &[u8]| match path {
        "/v1/score_masked" => match decode::<MaskedRequest>(body) {
            Ok(req) => (200, encode(&answer_masked_request(scorer.as_ref(), &req))),
            Err(e) => (400, e.to_string().into_bytes()),
        },
        "/v1/score_prefix" => match decode::<PrefixRequest>(body) {
            Ok(req) => (200, encode(&answer_prefix_request(scorer.as_ref(), &req))),
            Err(e) => (400, e.to_string().into_bytes()),
        },
        _ => (404, b"not found".to_vec()),
    })
}

/// A running server; stops when dropped.
pub struct Server {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Server {
    /// Bind `addr` (use port 0 for an ephemeral port) and serve each
    /// connection on its own thread.
    pub fn spawn(addr: &str, handler: Arc<Handler>) -> io::Result<Server> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let handler = Arc::clone(&handler);
                std::thread::spawn(move || {
                    if let Err(e) = handle(stream, handler.as_ref()) {
                        log::debug!("connection error: {e}");
                    }
                });
            }
        });
        Ok(Server {
            addr,
            stop,
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn handle(stream: TcpStream, handler: &Handler) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;
    let (status, reply) = if method == "POST" {
        handler(&path, &body)
    } else {
        (405, b"method not allowed".to_vec())
    };
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        s if s >= 500 => "Server Error",
        _ => "Status",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        reply.len()
    )?;
    out.write_all(&reply)?;
    out.flush()
}
