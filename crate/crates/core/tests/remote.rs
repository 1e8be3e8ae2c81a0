use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use kidlm_forge::probes::pseudo_perplexity;
use kidlm_forge::scoring::server::{scorer_handler, Handler, Server};
use kidlm_forge::scoring::{
    decode, encode, remote_score, remote_score_prefix, MaskedQuery, MaskedRequest, MaskedScorer, PrefixQuery,
    PrefixScorer, ReferenceConfig, ReferenceScorer, RemoteLimits, RemoteScorer, ScoreResponse,
};

const REQUEST: &[u8] = include_bytes!("fixtures/protocol_request.json");
const RESPONSE: &[u8] = include_bytes!("fixtures/protocol_response.json");

fn limits() -> RemoteLimits {
    RemoteLimits {
        max_in_flight: 2,
        timeout: Duration::from_secs(5),
        max_batch: 8,
        retries: 2,
    }
}

fn serve(handler: impl Fn(&str, &[u8]) -> (u16, Vec<u8>) + Send + Sync + 'static) -> Server {
    let handler: Arc<Handler> = Arc::new(handler);
    Server::spawn("127.0.0.1:0", handler).unwrap()
}

fn golden_queries() -> Vec<MaskedQuery> {
    decode::<MaskedRequest>(REQUEST).unwrap().queries
}

fn error_text<T: std::fmt::Debug>(r: &kidlm_forge::Result<T>) -> String {
    r.as_ref().unwrap_err().to_string()
}

#[test]
fn golden_pair_round_trips_byte_exact() {
    let req: MaskedRequest = decode(REQUEST).unwrap();
    assert_eq!(encode(&req), REQUEST);
    let resp: ScoreResponse = decode(RESPONSE).unwrap();
    assert_eq!(encode(&resp), RESPONSE);
}

#[test]
fn client_sends_golden_request_and_parses_golden_response() {
    let server = serve(|path, body| {
        assert_eq!(path, "/v1/score_masked");
        if body == REQUEST {
            (200, RESPONSE.to_vec())
        } else {
            (400, b"unexpected body".to_vec())
        }
    });
    let mut l = limits();
    l.max_batch = 2;
    let out = remote_score(&server.url(), &golden_queries(), 3, &l, None).unwrap();
    assert_eq!(out.len(), 2);
    let q0 = out[0].as_ref().unwrap();
    assert_eq!(q0.len(), 1);
    assert_eq!(q0[0].position, 1);
    assert!(q0[0].truncated);
    assert_eq!(q0[0].entries[0].0, "cat");
    assert_eq!(q0[0].logprob("dog"), Some(0.3f64.ln()));
    let q1 = out[1].as_ref().unwrap();
    assert_eq!(q1.iter().map(|d| d.position).collect::<Vec<_>>(), vec![0, 3]);
    assert_eq!(q1[1].logprob("happy"), Some(-0.1));
}

#[test]
fn missing_id_is_a_per_query_error() {
    let server = serve(|_, _| {
        let mut resp: ScoreResponse = decode(RESPONSE).unwrap();
        resp.results.retain(|r| r.id == "q0");
        (200, encode(&resp))
    });
    let out = remote_score(&server.url(), &golden_queries(), 3, &limits(), None).unwrap();
    assert!(out[0].is_ok());
    assert!(error_text(&out[1]).contains("missing-response"));
}

#[test]
fn malformed_body_fails_every_query_in_chunk() {
    let server = serve(|_, _| (200, b"{\"results\": 7}".to_vec()));
    let out = remote_score(&server.url(), &golden_queries(), 3, &limits(), None).unwrap();
    assert!(out.iter().all(|r| error_text(r).contains("malformed-response")));
}

#[test]
fn wrong_distribution_count_is_malformed() {
    let server = serve(|_, _| {
        let mut resp: ScoreResponse = decode(RESPONSE).unwrap();
        resp.results[1].distributions.pop();
        (200, encode(&resp))
    });
    let out = remote_score(&server.url(), &golden_queries(), 3, &limits(), None).unwrap();
    assert!(out[0].is_ok());
    assert!(error_text(&out[1]).contains("malformed-response"));
}

#[test]
fn server_errors_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&calls);
    let server = serve(move |_, _| {
        if seen.fetch_add(1, Ordering::SeqCst) == 0 {
            (503, b"busy".to_vec())
        } else {
            (200, RESPONSE.to_vec())
        }
    });
    let out = remote_score(&server.url(), &golden_queries(), 3, &limits(), None).unwrap();
    assert!(out.iter().all(|r| r.is_ok()));
    assert_eq!(calls.load(Ordering::SeqCst), 2);
}

#[test]
fn retries_are_bounded() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&calls);
    let server = serve(move |_, _| {
        seen.fetch_add(1, Ordering::SeqCst);
        (500, Vec::new())
    });
    let out = remote_score(&server.url(), &golden_queries(), 3, &limits(), None).unwrap();
    assert!(out.iter().all(|r| error_text(r).contains("http-status-500")));
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&calls);
    let server = serve(move |_, _| {
        seen.fetch_add(1, Ordering::SeqCst);
        (422, Vec::new())
    });
    let out = remote_score(&server.url(), &golden_queries(), 3, &limits(), None).unwrap();
    assert!(out.iter().all(|r| error_text(r).contains("http-status-422")));
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_endpoint_reports_per_query() {
    let url = {
        let server = serve(|_, _| (200, Vec::new()));
        server.url()
    };
    let mut l = limits();
    l.retries = 0;
    let out = remote_score(&url, &golden_queries(), 3, &l, None).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|r| r.is_err()));
}

#[test]
fn empty_batch_and_duplicate_ids_are_rejected() {
    assert!(remote_score("http://127.0.0.1:9", &[], 3, &limits(), None).is_err());
    let q = golden_queries()[0].clone();
    assert!(remote_score("http://127.0.0.1:9", &[q.clone(), q], 3, &limits(), None).is_err());
}

fn reference() -> ReferenceScorer {
    let corpus: Vec<Vec<String>> = ["the cat sat on the mat", "the dog sat on the log", "a cat and a dog"]
        .iter()
        .map(|s| s.split(' ').map(String::from).collect())
        .collect();
    ReferenceScorer::fit(&corpus, ReferenceConfig::default()).unwrap()
}

#[test]
fn remote_scorer_matches_local_scorer() {
    let local = reference();
    let server = Server::spawn("127.0.0.1:0", scorer_handler(Arc::new(reference()))).unwrap();
    let mut l = limits();
    l.max_batch = 1;
    l.max_in_flight = 3;
    let remote = RemoteScorer::new(server.url(), 1000).with_limits(l);
    let tokens: Vec<String> = "the cat sat on the log".split(' ').map(String::from).collect();
    let a = pseudo_perplexity(&tokens, &local).unwrap();
    let b = pseudo_perplexity(&tokens, &remote).unwrap();
    assert_eq!(a.ppl.to_bits(), b.ppl.to_bits());
    assert_eq!(a.unknown, b.unknown);

    let prefix: Vec<String> = vec!["the".into()];
    let d_local = local.score_next(&prefix).unwrap();
    let d_remote = remote.score_next(&prefix).unwrap();
    assert_eq!(d_local.entries, d_remote.entries);
}

#[test]
fn batch_results_keep_query_order() {
    let server = Server::spawn("127.0.0.1:0", scorer_handler(Arc::new(reference()))).unwrap();
    let queries: Vec<MaskedQuery> = (0..25)
        .map(|i| {
            let mut tokens: Vec<String> = "the cat sat on the mat".split(' ').map(String::from).collect();
            let p = i % tokens.len();
            tokens[p] = "[MASK]".into();
            MaskedQuery {
                id: format!("q{i}"),
                tokens,
                mask_positions: vec![p],
            }
        })
        .collect();
    let mut l = limits();
    l.max_batch = 4;
    l.max_in_flight = 3;
    let out = remote_score(&server.url(), &queries, 5, &l, None).unwrap();
    let local = reference();
    for (q, r) in queries.iter().zip(&out) {
        let d = &r.as_ref().unwrap()[0];
        assert_eq!(d.position, q.mask_positions[0]);
        assert_eq!(d.entries.len(), 5);
        let full = local.score_positions(&q.tokens, &q.mask_positions).unwrap();
        assert_eq!(d.entries[..], full[0].entries[..5]);
    }

    let prefixes: Vec<PrefixQuery> = (0..3)
        .map(|i| PrefixQuery {
            id: format!("p{i}"),
            prefix_tokens: vec!["the".into(); i + 1],
        })
        .collect();
    let out = remote_score_prefix(&server.url(), &prefixes, 2, &l, None).unwrap();
    for (i, r) in out.iter().enumerate() {
        assert_eq!(r.as_ref().unwrap().position, i + 1);
    }
}
