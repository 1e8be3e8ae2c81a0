use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedQuery {
    pub id: String,
    pub tokens: Vec<String>,
    pub mask_positions: Vec<usize>,
}

/// Body of `POST /v1/score_masked`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedRequest {
    pub queries: Vec<MaskedQuery>,
    pub top_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixQuery {
    pub id: String,
    pub prefix_tokens: Vec<String>,
}

/// Body of `POST /v1/score_prefix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixRequest {
    pub queries: Vec<PrefixQuery>,
    pub top_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
}

/// One distribution per mask position; prefix queries carry exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub id: String,
    pub distributions: Vec<Vec<TokenLogprob>>,
}

/// Response body for both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub results: Vec<QueryResult>,
}

pub fn encode<T: Serialize>(message: &T) -> Vec<u8> {
    serde_json::to_vec(message).expect("protocol messages always serialize")
}

pub fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(bytes)?)
}
