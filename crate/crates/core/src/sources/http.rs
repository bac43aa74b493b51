use std::time::{Duration, SystemTime, UNIX_EPOCH};

use super::FetchError;

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

/// One blocking GET. Implementations report non-2xx statuses in the
/// response rather than as errors.
pub trait HttpClient: Send + Sync {
    fn get(&self, url: &str, timeout: Duration, header: Option<(&str, &str)>) -> Result<HttpResponse, FetchError>;
}

/// Time source for politeness delays and cache freshness.
pub trait Clock: Send + Sync {
    /// Milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;
    fn sleep_ms(&self, ms: u64);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

#[derive(Debug, Clone)]
pub struct UreqClient {
    agent: ureq::Agent,
}

impl Default for UreqClient {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .user_agent(concat!("scholarlens/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        Self { agent }
    }
}

const MAX_BODY: u64 = 16 * 1024 * 1024;

impl HttpClient for UreqClient {
    fn get(&self, url: &str, timeout: Duration, header: Option<(&str, &str)>) -> Result<HttpResponse, FetchError> {
        let mut req = self.agent.get(url);
        if let Some((k, v)) = header {
            req = req.header(k, v);
        }
        let result = req.config().timeout_global(Some(timeout)).build().call();
        let mut resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(FetchError::Timeout(timeout.as_millis() as u64)),
            Err(e) => return Err(FetchError::Transport(e.to_string())),
        };
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY)
            .read_to_vec()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => FetchError::Timeout(timeout.as_millis() as u64),
                e => FetchError::Transport(e.to_string()),
            })?;
        Ok(HttpResponse {
            status: resp.status().as_u16(),
            content_type,
            body,
        })
    }
}
