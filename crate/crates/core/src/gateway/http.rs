use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{GatewayError, Result};

const MAX_BODY_BYTES: u64 = 256 << 20;

#[derive(Serialize)]
struct CompleteRequest<'a> {
    prompt: &'a str,
    image_b64: Option<String>,
}

#[derive(Deserialize)]
struct CompleteResponse {
    text: String,
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    duration_s: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct HttpTransport {
    agent: ureq::Agent,
    base: String,
}

fn map_ureq(err: ureq::Error) -> GatewayError {
    match err {
        ureq::Error::Timeout(_) => GatewayError::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => GatewayError::Timeout,
        other => GatewayError::Transport(other.to_string()),
    }
}

impl HttpTransport {
    pub(crate) fn new(endpoint: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Self {
            agent,
            base: endpoint.trim_end_matches('/').to_string(),
        }
    }

    fn post(
        &self,
        path: &str,
        body: impl Serialize,
        api_key: Option<&str>,
        timeout: Duration,
    ) -> Result<(Option<String>, Vec<u8>)> {
        let mut req = self
            .agent
            .post(format!("{}{path}", self.base))
            .config()
            .timeout_global(Some(timeout))
            .build();
        if let Some(key) = api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(map_ureq)?;
        let status = resp.status().as_u16();
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(str::to_ascii_lowercase);
        let bytes = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY_BYTES)
            .read_to_vec()
            .map_err(map_ureq)?;
        match status {
            200..=299 => Ok((content_type, bytes)),
            401 | 403 => Err(GatewayError::AuthError(status)),
            _ => Err(GatewayError::HttpError {
                status,
                body: String::from_utf8_lossy(&bytes).chars().take(512).collect(),
            }),
        }
    }

    pub(crate) fn complete(
        &self,
        prompt: &str,
        image: Option<&[u8]>,
        api_key: Option<&str>,
        timeout: Duration,
    ) -> Result<String> {
        let body = CompleteRequest {
            prompt,
            image_b64: image.map(|i| base64::engine::general_purpose::STANDARD.encode(i)),
        };
        let (_, bytes) = self.post("/v1/complete", body, api_key, timeout)?;
        let reply: CompleteResponse =
            serde_json::from_slice(&bytes).map_err(|e| GatewayError::MalformedReply(e.to_string()))?;
        Ok(reply.text)
    }

    pub(crate) fn generate(
        &self,
        prompt: &str,
        duration_s: f64,
        api_key: Option<&str>,
        timeout: Duration,
    ) -> Result<Vec<u8>> {
        let (content_type, bytes) =
            self.post("/v1/generate", GenerateRequest { prompt, duration_s }, api_key, timeout)?;
        if let Some(ct) = content_type {
            if !(ct.starts_with("audio/wav") || ct.starts_with("audio/x-wav") || ct.starts_with("audio/wave")) {
                return Err(GatewayError::BadAudioPayload(format!("unexpected content type {ct}")));
            }
        }
        if bytes.is_empty() {
            return Err(GatewayError::BadAudioPayload("empty body".into()));
        }
        Ok(bytes)
    }
}
