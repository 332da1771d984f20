use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_response, GatewayError, ModelResponse, PromptKind};

/// Wire dialect spoken by an endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provider {
    /// `POST .../chat/completions`, reply text at `choices[0].message.content`.
    OpenAi,
    /// `POST .../api/chat` with `stream: false`, reply text at `message.content`.
    Ollama,
    /// `POST ...:generateContent`, reply text in `candidates[0].content.parts[*].text`.
    Gemini,
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OpenAi => "openai",
            Self::Ollama => "ollama",
            Self::Gemini => "gemini",
        })
    }
}

impl FromStr for Provider {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "openai" | "openai-compatible" => Ok(Self::OpenAi),
            "ollama" => Ok(Self::Ollama),
            "gemini" => Ok(Self::Gemini),
            other => Err(GatewayError::BadConfig(format!("unknown provider {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub provider: Provider,
    /// Full request URL.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub request_timeout_secs: f64,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    /// Left unset unless explicitly configured.
    pub max_tokens: Option<u32>,
    /// Minimum spacing between request starts against this endpoint.
    pub min_interval_secs: f64,
    pub max_in_flight: usize,
}

impl ModelConfig {
    /// Locally hosted open-weight model: temperature 0.4.
    pub fn local(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            provider: Provider::Ollama,
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 0.4,
            max_retries: 0,
            backoff_base_secs: 1.0,
            request_timeout_secs: 600.0,
            api_key_env: None,
            max_tokens: None,
            min_interval_secs: 0.0,
            max_in_flight: 1,
        }
    }

    /// Hosted proprietary model: temperature 0.2, three retries, backoff base 1 s.
    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>, api_key_env: impl Into<String>) -> Self {
        Self {
            provider: Provider::OpenAi,
            temperature: 0.2,
            max_retries: 3,
            backoff_base_secs: 1.0,
            request_timeout_secs: 120.0,
            api_key_env: Some(api_key_env.into()),
            ..Self::local(endpoint, model)
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::BadConfig(format!("temperature {} outside [0,2]", self.temperature)));
        }
        if self.endpoint.trim().is_empty() {
            return Err(GatewayError::BadConfig("empty endpoint".into()));
        }
        if self.backoff_base_secs < 0.0 || self.request_timeout_secs <= 0.0 || self.min_interval_secs < 0.0 {
            return Err(GatewayError::BadConfig("negative durations are not allowed".into()));
        }
        Ok(())
    }

    /// Delay before retry number `attempt` (0-based): `base · 2^attempt`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_base_secs * 2f64.powi(attempt as i32))
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| GatewayError::MissingApiKey(var.clone())),
        }
    }

    fn request_body(&self, prompt: &str) -> Value {
        let messages = json!([{ "role": "user", "content": prompt }]);
        match self.provider {
            Provider::OpenAi => {
                let mut body = json!({ "model": self.model, "messages": messages, "temperature": self.temperature });
                if let Some(n) = self.max_tokens {
                    body["max_tokens"] = json!(n);
                }
                body
            }
            Provider::Ollama => {
                let mut options = json!({ "temperature": self.temperature });
                if let Some(n) = self.max_tokens {
                    options["num_predict"] = json!(n);
                }
                json!({ "model": self.model, "messages": messages, "stream": false, "options": options })
            }
            Provider::Gemini => {
                let mut generation = json!({ "temperature": self.temperature });
                if let Some(n) = self.max_tokens {
                    generation["maxOutputTokens"] = json!(n);
                }
                json!({ "contents": [{ "role": "user", "parts": [{ "text": prompt }] }], "generationConfig": generation })
            }
        }
    }

    fn headers(&self, key: Option<&str>) -> Vec<(String, String)> {
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = key {
            match self.provider {
                Provider::Gemini => headers.push(("x-goog-api-key".into(), key.into())),
                _ => headers.push(("Authorization".into(), format!("Bearer {key}"))),
            }
        }
        headers
    }

    /// Reply text from a provider response. A reply without content parts
    /// yields empty text rather than an error.
    fn extract_content(&self, body: &Value) -> Option<String> {
        match self.provider {
            Provider::OpenAi => {
                let message = body.get("choices")?.get(0)?.get("message")?;
                Some(message.get("content").and_then(Value::as_str).unwrap_or_default().to_string())
            }
            Provider::Ollama => {
                let message = body.get("message")?;
                Some(message.get("content").and_then(Value::as_str).unwrap_or_default().to_string())
            }
            Provider::Gemini => {
                let candidate = body.get("candidates")?.get(0)?;
                let parts = candidate.get("content").and_then(|c| c.get("parts")).and_then(Value::as_array);
                Some(parts.map_or_else(String::new, |parts| {
                    parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect()
                }))
            }
        }
    }
}

/// Outcome of one HTTP exchange that did not produce a usable body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Connection(String),
    Status { code: u16, body: String },
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Connection(msg) => write!(f, "connection failed: {msg}"),
            Self::Status { code, body } => write!(f, "HTTP {code}: {body}"),
        }
    }
}

/// A single POST of a JSON body returning the response body text.
pub trait ChatTransport: Send + Sync {
    fn post(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &str,
        timeout: Duration,
    ) -> Result<String, TransportError>;
}

/// Blocking HTTP transport.
#[derive(Debug, Default, Clone)]
pub struct HttpTransport;

impl ChatTransport for HttpTransport {
    fn post(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &str,
        timeout: Duration,
    ) -> Result<String, TransportError> {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        let mut request = agent.post(url);
        for (name, value) in headers {
            request = request.set(name, value);
        }
        match request.send_string(body) {
            Ok(resp) => resp.into_string().map_err(|e| TransportError::Connection(e.to_string())),
            Err(ureq::Error::Status(code, resp)) => {
                Err(TransportError::Status { code, body: resp.into_string().unwrap_or_default() })
            }
            Err(e) => Err(TransportError::Connection(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureTag {
    Malformed,
    Truncated,
    Transport,
}

/// Everything observed for one (system, attempt) request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub system_id: String,
    pub attempt: u32,
    pub kind: PromptKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ModelResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// HTTP exchanges made, retries included.
    pub http_attempts: u32,
    pub latency_secs: f64,
    #[serde(default)]
    pub request_body: String,
    #[serde(default)]
    pub response_body: String,
}

impl RunRecord {
    /// Whether the record carries an error claim. Unusable replies count as no claim.
    pub fn predicts_error(&self) -> bool {
        self.response.as_ref().is_some_and(ModelResponse::predicts_error)
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

struct InFlight {
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut busy = self.busy.lock().unwrap();
        while *busy >= self.limit {
            busy = self.freed.wait(busy).unwrap();
        }
        *busy += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.busy.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Issues model requests with retry, rate limiting and a bounded in-flight count.
pub struct Gateway {
    config: ModelConfig,
    transport: Box<dyn ChatTransport>,
    sleeper: Sleeper,
    last_start: Mutex<Option<Instant>>,
    in_flight: InFlight,
}

impl Gateway {
    pub fn new(config: ModelConfig) -> Result<Self, GatewayError> {
        Self::with_transport(config, Box::new(HttpTransport))
    }

    pub fn with_transport(config: ModelConfig, transport: Box<dyn ChatTransport>) -> Result<Self, GatewayError> {
        config.validate()?;
        let limit = config.max_in_flight.max(1);
        Ok(Self {
            config,
            transport,
            sleeper: Arc::new(std::thread::sleep),
            last_start: Mutex::new(None),
            in_flight: InFlight { limit, busy: Mutex::new(0), freed: Condvar::new() },
        })
    }

    /// Replaces the function used for backoff and rate-limit waits.
    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn pace(&self) {
        let interval = Duration::from_secs_f64(self.config.min_interval_secs);
        if interval.is_zero() {
            return;
        }
        let mut last = self.last_start.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < interval {
                (self.sleeper)(interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    /// Sends `prompt` in a fresh single-message conversation. Failures of any
    /// kind end up in the returned record.
    pub fn request(&self, system_id: &str, attempt: u32, kind: PromptKind, prompt: &str) -> RunRecord {
        let started = Instant::now();
        let mut record = RunRecord {
            system_id: system_id.to_string(),
            attempt,
            kind,
            response: None,
            failure: None,
            error: None,
            http_attempts: 0,
            latency_secs: 0.0,
            request_body: String::new(),
            response_body: String::new(),
        };
        let key = match self.config.api_key() {
            Ok(key) => key,
            Err(e) => {
                record.failure = Some(FailureTag::Transport);
                record.error = Some(e.to_string());
                return record;
            }
        };
        let redact = |text: &str| match key.as_deref() {
            Some(k) if !k.is_empty() => text.replace(k, "[REDACTED]"),
            _ => text.to_string(),
        };
        let body = self.config.request_body(prompt).to_string();
        record.request_body = redact(&body);
        let headers = self.config.headers(key.as_deref());
        let timeout = Duration::from_secs_f64(self.config.request_timeout_secs);

        let _slot = self.in_flight.acquire();
        for retry in 0..=self.config.max_retries {
            if retry > 0 {
                (self.sleeper)(self.config.backoff(retry - 1));
            }
            self.pace();
            record.http_attempts += 1;
            let outcome = self.transport.post(&self.config.endpoint, &headers, &body, timeout).and_then(|text| {
                let content = serde_json::from_str::<Value>(&text).ok().and_then(|v| self.config.extract_content(&v));
                match content {
                    Some(content) => Ok((text, content)),
                    None => {
                        Err(TransportError::Connection(format!("unexpected response shape: {}", truncate(&text, 200))))
                    }
                }
            });
            match outcome {
                Ok((text, content)) => {
                    record.response_body = redact(&text);
                    let parsed = parse_response(&content, kind);
                    record.failure = if parsed.truncated {
                        Some(FailureTag::Truncated)
                    } else if !parsed.wellformed {
                        Some(FailureTag::Malformed)
                    } else {
                        None
                    };
                    record.error = None;
                    record.response = Some(parsed);
                    break;
                }
                Err(e) => {
                    record.failure = Some(FailureTag::Transport);
                    record.error = Some(redact(&e.to_string()));
                }
            }
        }
        record.latency_secs = started.elapsed().as_secs_f64();
        record
    }
}

fn truncate(text: &str, max: usize) -> &str {
    match text.char_indices().nth(max) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}
