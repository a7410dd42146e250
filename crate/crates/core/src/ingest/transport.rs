use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

/// A minimal HTTP response: status, lower-cased headers and the body text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

impl HttpResponse {
    pub fn new(status: u16, body: impl Into<String>) -> Self {
        Self {
            status,
            headers: BTreeMap::new(),
            body: body.into(),
        }
    }

    pub fn with_header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.insert(name.to_ascii_lowercase(), value.into());
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }
}

/// A failure below the HTTP layer (DNS, TLS, connection reset, timeout).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportFailure(pub String);

/// Issues GET requests. Implementations must be shareable across threads.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, TransportFailure>;
}

/// Live transport backed by a blocking `reqwest` client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, TransportFailure> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("repodomain/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| TransportFailure(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, TransportFailure> {
        let mut req = self
            .client
            .get(url)
            .header("Accept", "application/vnd.github+json")
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(token) = token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| TransportFailure(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let body = resp.text().map_err(|e| TransportFailure(e.to_string()))?;
        Ok(HttpResponse { status, headers, body })
    }
}

/// In-memory transport serving canned responses keyed by URL.
///
/// A URL may be given a queue of responses; each request pops the next one
/// and the last response is repeated once the queue is down to one. Unknown
/// URLs answer 404. Every request is counted so tests can assert on traffic.
#[derive(Default)]
pub struct FixtureTransport {
    routes: Mutex<HashMap<String, Vec<Result<HttpResponse, TransportFailure>>>>,
    requests: AtomicUsize,
    log: Mutex<Vec<String>>,
}

impl FixtureTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn route(&self, url: &str, response: HttpResponse) -> &Self {
        self.routes
            .lock()
            .unwrap()
            .entry(url.to_string())
            .or_default()
            .push(Ok(response));
        self
    }

    pub fn route_failure(&self, url: &str, message: &str) -> &Self {
        self.routes
            .lock()
            .unwrap()
            .entry(url.to_string())
            .or_default()
            .push(Err(TransportFailure(message.to_string())));
        self
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn requested_urls(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str, _token: Option<&str>) -> Result<HttpResponse, TransportFailure> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap().push(url.to_string());
        let mut routes = self.routes.lock().unwrap();
        match routes.get_mut(url) {
            Some(queue) if queue.len() > 1 => queue.remove(0),
            Some(queue) if queue.len() == 1 => queue[0].clone(),
            _ => Ok(HttpResponse::new(404, r#"{"message":"Not Found"}"#)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_pops_queue_then_repeats_last() {
        let t = FixtureTransport::new();
        t.route("u", HttpResponse::new(500, "a"));
        t.route("u", HttpResponse::new(200, "b"));
        assert_eq!(t.get("u", None).unwrap().status, 500);
        assert_eq!(t.get("u", None).unwrap().status, 200);
        assert_eq!(t.get("u", None).unwrap().status, 200);
        assert_eq!(t.get("other", None).unwrap().status, 404);
        assert_eq!(t.request_count(), 4);
    }

    #[test]
    fn headers_are_case_insensitive() {
        let r = HttpResponse::new(200, "").with_header("X-RateLimit-Remaining", "5");
        assert_eq!(r.header("x-ratelimit-remaining"), Some("5"));
    }
}
