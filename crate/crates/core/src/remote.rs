//! HTTP client for an external guidance model.
//!
//! `POST {base}/infer` with `{"points": [[x, y, z], ...], "features": [[s, g], ...]}`
//! in the network frame; the reply must be status 200 with
//! `{"probabilities": [...]}` of matching length.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{GuidanceProvider, GuidanceQuery};

/// Environment variable that overrides the provider address.
pub const PROVIDER_URL_ENV: &str = "NIRRT_PROVIDER_URL";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct InferRequest {
    pub points: Vec<[f64; 3]>,
    pub features: Vec<[u8; 2]>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct InferResponse {
    pub probabilities: Vec<f64>,
}

#[derive(Debug)]
pub struct RemoteProvider {
    base: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(base: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            agent,
        }
    }

    /// Uses `NIRRT_PROVIDER_URL` when set, otherwise `fallback`.
    pub fn from_env_or(fallback: &str) -> Self {
        let url = std::env::var(PROVIDER_URL_ENV).unwrap_or_else(|_| fallback.to_string());
        Self::new(url, DEFAULT_TIMEOUT)
    }

    pub fn endpoint(&self) -> String {
        format!("{}/infer", self.base)
    }

    pub fn request(&self, req: &InferRequest) -> Result<Vec<f64>> {
        let unavailable = |m: String| Error::GuidanceUnavailable(m);
        let mut resp = self
            .agent
            .post(&self.endpoint())
            .send_json(req)
            .map_err(|e| unavailable(e.to_string()))?;
        if resp.status().as_u16() != 200 {
            return Err(unavailable(format!("provider answered status {}", resp.status())));
        }
        let body: InferResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| unavailable(format!("bad provider reply: {e}")))?;
        if body.probabilities.len() != req.points.len() {
            return Err(unavailable(format!(
                "provider returned {} probabilities for {} points",
                body.probabilities.len(),
                req.points.len()
            )));
        }
        Ok(body.probabilities)
    }
}

impl GuidanceProvider for RemoteProvider {
    fn infer(&self, query: &GuidanceQuery<'_>) -> Result<Vec<f64>> {
        self.request(&InferRequest {
            points: query.normalized.points.clone(),
            features: query.normalized.features.clone(),
        })
    }
}
